#pragma once

// End-to-end training of one method on one split: preprocessing, view
// construction, SSL wrapper, prediction and model serialization.

#include "fluidlab/core.hpp"
#include "fluidlab/features.hpp"
#include "fluidlab/linear.hpp"
#include "fluidlab/records.hpp"
#include "fluidlab/ssl.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace fluidlab {

enum class Method { sl, self_training, cotrain_split, cotrain_fused };

inline const std::vector<std::string>& method_names()
{
    static const std::vector<std::string> names{"sl", "self_training", "cotrain_split", "cotrain_fused"};
    return names;
}

inline std::string to_string(Method m) { return method_names()[static_cast<std::size_t>(m)]; }

/// Accepts canonical names and the short CLI aliases.
inline Method parse_method(const std::string& s)
{
    if (s == "sl")
        return Method::sl;
    if (s == "self_training" || s == "self")
        return Method::self_training;
    if (s == "cotrain_split" || s == "cotrain-split")
        return Method::cotrain_split;
    if (s == "cotrain_fused" || s == "cotrain-fused")
        return Method::cotrain_fused;
    throw ValidationError("unknown method '" + s + "' (expected sl, self, cotrain-split, cotrain-fused)");
}

struct MethodParams {
    RetainedVariance pca = 0.9;
    SgdConfig base;
    SslOptions ssl;
};

/// Column subset of a modality combination, e.g. {audio, face}.
inline std::vector<std::size_t> modality_columns(const FeatureTable& t, const std::vector<Modality>& mods)
{
    std::vector<std::size_t> cols;
    for (Modality m : mods) {
        const auto c = t.block_columns(m);
        cols.insert(cols.end(), c.begin(), c.end());
    }
    std::sort(cols.begin(), cols.end());
    return cols;
}

/// Audio block versus face + text blocks of the fused layout.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_views_modality(const FeatureTable& t)
{
    auto a = t.block_columns(Modality::audio);
    auto b = modality_columns(t, {Modality::face, Modality::text});
    require(!a.empty(), "split_views_modality: audio block absent");
    require(!b.empty(), "split_views_modality: face+text block absent");
    return {a, b};
}

/// Preprocessing for one view: raw column subset, then standardize + PCA,
/// then an optional column subset of the projected space.
struct ViewTransform {
    std::vector<std::size_t> input_columns;
    Preprocessor pre;
    std::vector<std::size_t> output_columns; // empty = all

    Matrix apply(const Matrix& raw) const
    {
        Matrix z = pre.apply(take_cols(raw, input_columns));
        return output_columns.empty() ? z : take_cols(z, output_columns);
    }
};

struct TrainedPipeline {
    Method method = Method::sl;
    MethodParams params;
    std::vector<ViewTransform> views; // 1 for sl / self-training, 2 for co-training
    std::vector<LinearModel> models;
    PseudoLabelTrace trace;
    std::vector<std::string> pseudo_labeled_ids;

    Vector predict_proba(const Matrix& raw) const
    {
        if (models.size() == 1)
            return models[0].predict_proba(views[0].apply(raw));
        return 0.5 * (models[0].predict_proba(views[0].apply(raw)) + models[1].predict_proba(views[1].apply(raw)));
    }
};

/// Training inputs in raw feature space. `unlabeled_ids` align with the rows
/// of `unlabeled` and feed the leakage trace.
struct SplitData {
    Matrix labeled;
    Labels y;
    Matrix unlabeled;
    std::vector<std::string> unlabeled_ids;
};

/// SL fits its preprocessor on the labeled rows only; the SSL methods fit on
/// labeled plus unlabeled rows (features only). With no unlabeled rows the
/// two coincide.
inline TrainedPipeline train_pipeline(Method method, const FeatureTable& layout, const std::vector<std::size_t>& columns,
                                      const SplitData& data, const MethodParams& params, std::uint64_t seed)
{
    require(static_cast<std::size_t>(data.labeled.rows()) == data.y.size(), "train: labeled rows != labels");
    require(data.unlabeled.rows() == 0 || data.unlabeled.cols() == data.labeled.cols(), "train: column mismatch");
    TrainedPipeline tp;
    tp.method = method;
    tp.params = params;
    tp.params.base.seed = seed;
    const SgdConfig& base = tp.params.base;
    const Matrix unlabeled = data.unlabeled.rows() > 0 ? data.unlabeled : Matrix(0, data.labeled.cols());
    const Matrix pool = method == Method::sl ? data.labeled : vstack(data.labeled, unlabeled);

    auto make_view = [&](const std::vector<std::size_t>& cols, std::size_t min_components) {
        ViewTransform v;
        v.input_columns = cols;
        v.pre = fit_preprocessor(take_cols(pool, cols), params.pca, min_components);
        return v;
    };

    switch (method) {
    case Method::sl: {
        tp.views.push_back(make_view(columns, 1));
        tp.models.push_back(fit_linear(tp.views[0].apply(data.labeled), data.y, base));
        break;
    }
    case Method::self_training: {
        tp.views.push_back(make_view(columns, 1));
        auto r = self_train(tp.views[0].apply(data.labeled), data.y, tp.views[0].apply(unlabeled), base,
                            params.ssl);
        tp.models.push_back(std::move(r.model));
        tp.trace = std::move(r.trace);
        break;
    }
    case Method::cotrain_split:
    case Method::cotrain_fused: {
        if (method == Method::cotrain_split) {
            FeatureTable sub;
            for (std::size_t c : columns)
                sub.columns.push_back(layout.columns[c]);
            auto [a, b] = split_views_modality(sub);
            for (auto& i : a)
                i = columns[i];
            for (auto& i : b)
                i = columns[i];
            tp.views.push_back(make_view(a, 1));
            tp.views.push_back(make_view(b, 1));
        } else {
            const ViewTransform all = make_view(columns, 2);
            auto [a, b] = split_views_fused(all.pre.output_dim(), seed);
            tp.views.push_back(all);
            tp.views.back().output_columns = a;
            tp.views.push_back(all);
            tp.views.back().output_columns = b;
        }
        auto r = co_train(tp.views[0].apply(data.labeled), tp.views[0].apply(unlabeled),
                          tp.views[1].apply(data.labeled), tp.views[1].apply(unlabeled), data.y, base, params.ssl);
        tp.models.push_back(std::move(r.a));
        tp.models.push_back(std::move(r.b));
        tp.trace = std::move(r.trace);
        break;
    }
    }
    for (const auto& it : tp.trace.iterations)
        for (const auto& p : it.adopted)
            if (p.index < data.unlabeled_ids.size())
                tp.pseudo_labeled_ids.push_back(data.unlabeled_ids[p.index]);
    return tp;
}

// ---------------------------------------------------------------- params json

inline nlohmann::ordered_json params_to_json(const MethodParams& p)
{
    nlohmann::ordered_json j;
    j["pca"] = p.pca ? nlohmann::ordered_json(*p.pca) : nlohmann::ordered_json("off");
    j["loss"] = to_string(p.base.loss);
    j["penalty"] = to_string(p.base.penalty);
    j["alpha"] = p.base.alpha;
    j["max_epochs"] = p.base.max_epochs;
    j["tol"] = p.base.tol;
    j["criterion"] = to_string(p.ssl.criterion);
    j["threshold"] = p.ssl.threshold;
    j["k_best"] = p.ssl.k_best;
    j["max_iters"] = p.ssl.max_iters;
    return j;
}

inline MethodParams params_from_json(const nlohmann::json& j)
{
    MethodParams p;
    try {
        if (j.contains("pca")) {
            if (j["pca"].is_string()) {
                require(j["pca"] == "off", "params: pca must be \"off\" or a number");
                p.pca.reset();
            } else {
                p.pca = j["pca"].get<double>();
            }
        }
        if (j.contains("loss"))
            p.base.loss = parse_loss(j["loss"].get<std::string>());
        if (j.contains("penalty"))
            p.base.penalty = parse_penalty(j["penalty"].get<std::string>());
        p.base.alpha = j.value("alpha", p.base.alpha);
        p.base.max_epochs = j.value("max_epochs", p.base.max_epochs);
        p.base.tol = j.value("tol", p.base.tol);
        if (j.contains("criterion"))
            p.ssl.criterion = parse_criterion(j["criterion"].get<std::string>());
        p.ssl.threshold = j.value("threshold", p.ssl.threshold);
        p.ssl.k_best = j.value("k_best", p.ssl.k_best);
        p.ssl.max_iters = j.value("max_iters", p.ssl.max_iters);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("params: ") + e.what());
    }
    if (p.pca)
        require(*p.pca >= 0.2 && *p.pca <= 1.0, "params: pca must be in [0.2, 1.0] or \"off\"");
    p.base.validate();
    p.ssl.validate();
    return p;
}

// ---------------------------------------------------------------- model json

namespace detail {

inline nlohmann::ordered_json vec_json(const Eigen::Ref<const Eigen::RowVectorXd>& v)
{
    return std::vector<double>(v.data(), v.data() + v.size());
}

inline Eigen::RowVectorXd json_rowvec(const nlohmann::json& j)
{
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace detail

inline nlohmann::ordered_json to_json(const TrainedPipeline& tp)
{
    nlohmann::ordered_json j;
    j["format"] = "fluidlab-model 1";
    j["method"] = to_string(tp.method);
    j["params"] = params_to_json(tp.params);
    j["seed"] = tp.params.base.seed;
    j["views"] = nlohmann::ordered_json::array();
    for (const auto& v : tp.views) {
        nlohmann::ordered_json jv;
        jv["input_columns"] = v.input_columns;
        jv["output_columns"] = v.output_columns;
        jv["means"] = detail::vec_json(v.pre.standardizer.means);
        jv["scales"] = detail::vec_json(v.pre.standardizer.scales);
        if (v.pre.pca) {
            const Pca& p = *v.pre.pca;
            jv["pca_mean"] = detail::vec_json(p.mean);
            std::vector<std::vector<double>> basis;
            for (Eigen::Index c = 0; c < p.basis.cols(); ++c) {
                const Eigen::VectorXd col = p.basis.col(c);
                basis.emplace_back(col.data(), col.data() + col.size());
            }
            jv["pca_components"] = basis;
            jv["explained_ratio"] = std::vector<double>(p.explained_ratio.data(),
                                                        p.explained_ratio.data() + p.explained_ratio.size());
        }
        j["views"].push_back(jv);
    }
    j["models"] = nlohmann::ordered_json::array();
    for (const auto& m : tp.models)
        j["models"].push_back(to_text(m));
    return j;
}

inline TrainedPipeline pipeline_from_json(const nlohmann::json& j)
{
    try {
        require(j.at("format") == "fluidlab-model 1", "model: unknown format");
        TrainedPipeline tp;
        tp.method = parse_method(j.at("method").get<std::string>());
        tp.params = params_from_json(j.at("params"));
        tp.params.base.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& jv : j.at("views")) {
            ViewTransform v;
            v.input_columns = jv.at("input_columns").get<std::vector<std::size_t>>();
            v.output_columns = jv.at("output_columns").get<std::vector<std::size_t>>();
            v.pre.standardizer.means = detail::json_rowvec(jv.at("means"));
            v.pre.standardizer.scales = detail::json_rowvec(jv.at("scales"));
            if (jv.contains("pca_mean")) {
                Pca p;
                p.mean = detail::json_rowvec(jv.at("pca_mean"));
                const auto basis = jv.at("pca_components").get<std::vector<std::vector<double>>>();
                p.basis = Matrix(p.mean.size(), static_cast<Eigen::Index>(basis.size()));
                for (std::size_t c = 0; c < basis.size(); ++c)
                    for (std::size_t r = 0; r < basis[c].size(); ++r)
                        p.basis(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = basis[c][r];
                const auto ratio = jv.at("explained_ratio").get<std::vector<double>>();
                p.explained_ratio = Eigen::Map<const Eigen::VectorXd>(ratio.data(), static_cast<Eigen::Index>(ratio.size()));
                v.pre.pca = std::move(p);
            }
            tp.views.push_back(std::move(v));
        }
        for (const auto& jm : j.at("models"))
            tp.models.push_back(linear_model_from_text(jm.get<std::string>()));
        require(!tp.models.empty() && tp.models.size() == tp.views.size(), "model: view/model count mismatch");
        return tp;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("model: ") + e.what());
    }
}

inline nlohmann::ordered_json trace_to_json(const TrainedPipeline& tp)
{
    nlohmann::ordered_json j;
    j["method"] = to_string(tp.method);
    j["terminal"] = to_string(tp.trace.terminal);
    j["iterations"] = nlohmann::ordered_json::array();
    for (const auto& it : tp.trace.iterations) {
        nlohmann::ordered_json ji;
        ji["adopted"] = nlohmann::ordered_json::array();
        for (const auto& p : it.adopted)
            ji["adopted"].push_back({p.index, p.label, p.confidence, p.source});
        ji["conflicts"] = it.conflicts;
        j["iterations"].push_back(ji);
    }
    j["pseudo_labeled_ids"] = tp.pseudo_labeled_ids;
    return j;
}

} // namespace fluidlab

#pragma once

// Cross-validation experiments: assembling labeled / unlabeled / holdout rows
// for a fold combination, the parallel sweep runner and per-cell tuning.

#include "fluidlab/core.hpp"
#include "fluidlab/dataio.hpp"
#include "fluidlab/evaluation.hpp"
#include "fluidlab/hpo.hpp"
#include "fluidlab/pipeline.hpp"
#include "fluidlab/records.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <numeric>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

namespace fluidlab {

/// A feature table joined with labels for one target scale, with folds
/// assigned over the labeled clips.
struct Experiment {
    const FeatureTable* table = nullptr;
    Target target = Target::fluidity;
    std::vector<std::size_t> labeled_rows; // targeted clips with a label
    Labels y;                              // aligned with labeled_rows
    std::vector<std::size_t> other_rows;   // never labeled: non-targeted or unrated clips
    FoldAssignment folds;                  // over labeled_rows
    int n_folds = 10;
};

inline Experiment make_experiment(const FeatureTable& table, const std::vector<LabeledClip>& labels, Target target,
                                  int n_folds, std::uint64_t seed)
{
    std::unordered_map<std::string, const LabeledClip*> by_id;
    for (const auto& l : labels)
        by_id[l.clip_id] = &l;
    Experiment ex;
    ex.table = &table;
    ex.target = target;
    ex.n_folds = n_folds;
    std::vector<std::string> groups;
    for (std::size_t i = 0; i < table.rows(); ++i) {
        auto it = by_id.find(table.clip_ids[i]);
        if (is_targeted(table.kinds[i]) && it != by_id.end()) {
            ex.labeled_rows.push_back(i);
            ex.y.push_back(label_of(*it->second, target));
            groups.push_back(table.session_ids[i]);
        } else {
            ex.other_rows.push_back(i);
        }
    }
    require(!ex.labeled_rows.empty(), "experiment: no labeled targeted clips (check clip ids in labels vs features)");
    ex.folds = stratified_group_kfold(ex.y, groups, n_folds, seed);
    return ex;
}

/// Row sets of one combination. Unlabeled = labeled clips of the training
/// folds that are not labeled folds, plus every never-labeled clip
/// (non-targeted or unrated), whatever its session.
struct ComboRows {
    std::vector<std::size_t> labeled;
    Labels y;
    std::vector<std::size_t> unlabeled;
    std::vector<std::size_t> test;
    Labels y_test;
};

inline ComboRows combo_rows(const Experiment& ex, const Combo& c)
{
    auto in = [](const std::vector<int>& v, int f) { return std::find(v.begin(), v.end(), f) != v.end(); };
    ComboRows r;
    for (std::size_t k = 0; k < ex.labeled_rows.size(); ++k) {
        const int f = ex.folds.fold_of_sample[k];
        const std::size_t row = ex.labeled_rows[k];
        if (in(c.test_folds, f)) {
            r.test.push_back(row);
            r.y_test.push_back(ex.y[k]);
        } else if (in(c.labeled_folds, f)) {
            r.labeled.push_back(row);
            r.y.push_back(ex.y[k]);
        } else {
            r.unlabeled.push_back(row);
        }
    }
    r.unlabeled.insert(r.unlabeled.end(), ex.other_rows.begin(), ex.other_rows.end());
    return r;
}

inline SplitData split_data(const FeatureTable& t, const std::vector<std::size_t>& labeled, const Labels& y,
                            const std::vector<std::size_t>& unlabeled)
{
    SplitData d;
    d.labeled = take_rows(t.values, labeled);
    d.y = y;
    d.unlabeled = take_rows(t.values, unlabeled);
    for (std::size_t i : unlabeled)
        d.unlabeled_ids.push_back(t.clip_ids[i]);
    return d;
}

inline bool has_both_classes(const Labels& y)
{
    return std::find(y.begin(), y.end(), 0) != y.end() && std::find(y.begin(), y.end(), 1) != y.end();
}

// ---------------------------------------------------------------- arms & params

/// One algorithm under evaluation: a method restricted to a column subset.
struct Arm {
    std::string name;
    Method method = Method::sl;
    std::vector<std::size_t> columns;
};

inline std::vector<std::size_t> all_columns(const FeatureTable& t)
{
    std::vector<std::size_t> c(t.columns.size());
    std::iota(c.begin(), c.end(), 0);
    return c;
}

inline Arm method_arm(const FeatureTable& t, Method m) { return {to_string(m), m, all_columns(t)}; }

/// The seven modality combinations under self-training.
inline std::vector<Arm> ablation_arms(const FeatureTable& t)
{
    const std::vector<std::pair<std::string, std::vector<Modality>>> sets{
        {"A", {Modality::audio}},
        {"F", {Modality::face}},
        {"T", {Modality::text}},
        {"A+F", {Modality::audio, Modality::face}},
        {"A+T", {Modality::audio, Modality::text}},
        {"F+T", {Modality::face, Modality::text}},
        {"A+F+T", {Modality::audio, Modality::face, Modality::text}},
    };
    std::vector<Arm> arms;
    for (const auto& [label, mods] : sets) {
        auto cols = modality_columns(t, mods);
        require(!cols.empty(), "ablation: no columns for modality set " + label);
        arms.push_back({"self_training[" + label + "]", Method::self_training, std::move(cols)});
    }
    return arms;
}

/// Tuned parameters keyed by (algorithm, target, number of labeled folds).
struct ParamsBook {
    struct Entry {
        std::string algorithm;
        std::string target;
        int labeled_folds = 0;
        MethodParams params;
        double objective = 0.0;
    };
    std::vector<Entry> entries;
    MethodParams fallback;

    const MethodParams& lookup(const std::string& algorithm, const std::string& target, int k) const
    {
        for (const auto& e : entries)
            if (e.algorithm == algorithm && e.target == target && e.labeled_folds == k)
                return e.params;
        return fallback;
    }
};

inline nlohmann::ordered_json to_json(const ParamsBook& book)
{
    nlohmann::ordered_json j;
    j["format"] = "fluidlab-params 1";
    j["cells"] = nlohmann::ordered_json::array();
    for (const auto& e : book.entries) {
        nlohmann::ordered_json c;
        c["algorithm"] = e.algorithm;
        c["target"] = e.target;
        c["labeled_folds"] = e.labeled_folds;
        c["objective"] = e.objective;
        c["params"] = params_to_json(e.params);
        j["cells"].push_back(c);
    }
    return j;
}

inline ParamsBook params_book_from_json(const nlohmann::json& j, const MethodParams& fallback)
{
    ParamsBook book;
    book.fallback = fallback;
    try {
        require(j.at("format") == "fluidlab-params 1", "params file: unknown format");
        for (const auto& c : j.at("cells")) {
            ParamsBook::Entry e;
            e.algorithm = c.at("algorithm").get<std::string>();
            e.target = c.at("target").get<std::string>();
            e.labeled_folds = c.at("labeled_folds").get<int>();
            e.objective = c.value("objective", 0.0);
            e.params = params_from_json(c.at("params"));
            book.entries.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("params file: ") + ex.what());
    }
    return book;
}

/// Overlays a search-space assignment onto base parameters.
inline MethodParams apply_params(const Params& p, MethodParams base)
{
    auto str = [&](const char* k) -> const std::string* {
        auto it = p.find(k);
        return it == p.end() ? nullptr : std::get_if<std::string>(&it->second);
    };
    auto num = [&](const char* k) -> const double* {
        auto it = p.find(k);
        return it == p.end() ? nullptr : std::get_if<double>(&it->second);
    };
    if (const auto* mode = str("pca_mode")) {
        if (*mode == "off")
            base.pca.reset();
        else if (const auto* v = num("pca_variance"))
            base.pca = *v;
    }
    if (const auto* v = str("loss"))
        base.base.loss = parse_loss(*v);
    if (const auto* v = str("penalty"))
        base.base.penalty = parse_penalty(*v);
    if (const auto* v = num("alpha"))
        base.base.alpha = *v;
    if (const auto* v = str("criterion"))
        base.ssl.criterion = parse_criterion(*v);
    if (const auto* v = num("threshold"))
        base.ssl.threshold = *v;
    return base;
}

// ---------------------------------------------------------------- sweep

struct SweepConfig {
    std::vector<Arm> arms;
    std::vector<Target> targets{Target::fluidity};
    int n_test = 2;
    std::vector<int> labeled_fold_counts; // empty = all
    std::size_t max_combos = 0;           // 0 = all
    std::uint64_t seed = 0;
    int jobs = 1;
};

struct SweepOutcome {
    std::vector<ResultRow> rows;
    std::size_t runs = 0;
    std::size_t skipped = 0;
    std::vector<std::string> skip_reasons;
};

/// Combos after the labeled-fold-count filter and seeded subsampling, with
/// their ids in the full enumeration. Ascending id order.
inline std::vector<std::pair<std::size_t, Combo>> select_combos(int n_folds, int n_test,
                                                                const std::vector<int>& labeled_counts,
                                                                std::size_t max_combos, std::uint64_t seed)
{
    const auto all = enumerate_combos(n_folds, n_test);
    std::vector<std::pair<std::size_t, Combo>> picked;
    for (std::size_t i = 0; i < all.size(); ++i) {
        const int k = static_cast<int>(all[i].labeled_folds.size());
        if (labeled_counts.empty() || std::find(labeled_counts.begin(), labeled_counts.end(), k) != labeled_counts.end())
            picked.emplace_back(i, all[i]);
    }
    if (max_combos > 0 && picked.size() > max_combos) {
        Rng rng(mix_seed(seed, 0x636f6d62));
        shuffle(picked, rng);
        picked.resize(max_combos);
        std::sort(picked.begin(), picked.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    }
    return picked;
}

/// Runs every (combo, target, arm). Output order is independent of `jobs`.
/// `experiments` must hold one Experiment per entry of cfg.targets.
inline SweepOutcome run_sweep(const std::vector<Experiment>& experiments, const SweepConfig& cfg, const ParamsBook& book)
{
    require(!cfg.arms.empty(), "sweep: no algorithms");
    require(experiments.size() == cfg.targets.size(), "sweep: one experiment per target required");
    require(cfg.jobs >= 1, "sweep: jobs must be >= 1");
    const int n_folds = experiments.front().n_folds;
    const auto combos = select_combos(n_folds, cfg.n_test, cfg.labeled_fold_counts, cfg.max_combos, cfg.seed);

    struct Task {
        std::size_t combo;
        std::size_t target;
        std::size_t arm;
    };
    std::vector<Task> tasks;
    for (std::size_t c = 0; c < combos.size(); ++c)
        for (std::size_t t = 0; t < cfg.targets.size(); ++t)
            for (std::size_t a = 0; a < cfg.arms.size(); ++a)
                tasks.push_back({c, t, a});

    struct Slot {
        std::vector<ResultRow> rows;
        std::string skip;
    };
    std::vector<Slot> slots(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;

    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size())
                return;
            const Task& task = tasks[i];
            const auto& [combo_id, combo] = combos[task.combo];
            const Experiment& ex = experiments[task.target];
            const Arm& arm = cfg.arms[task.arm];
            const std::uint64_t run_seed = mix_seed(cfg.seed, combo_id);
            try {
                const ComboRows rows = combo_rows(ex, combo);
                if (!has_both_classes(rows.y) || !has_both_classes(rows.y_test)) {
                    slots[i].skip = "combo " + std::to_string(combo_id) + " " + to_string(cfg.targets[task.target]) +
                                    ": single-class labeled or test set";
                    continue;
                }
                const int k = static_cast<int>(combo.labeled_folds.size());
                const MethodParams& params = book.lookup(arm.name, to_string(cfg.targets[task.target]), k);
                const auto tp = train_pipeline(arm.method, *ex.table, arm.columns,
                                               split_data(*ex.table, rows.labeled, rows.y, rows.unlabeled), params,
                                               run_seed);
                const Vector proba = tp.predict_proba(take_rows(ex.table->values, rows.test));
                const std::vector<double> p(proba.data(), proba.data() + proba.size());
                ResultRow base;
                base.combo_id = combo_id;
                base.test_folds = join_folds(combo.test_folds);
                base.labeled_folds = join_folds(combo.labeled_folds);
                base.labeled_fraction = static_cast<double>(k) / n_folds;
                base.algorithm = arm.name;
                base.target = to_string(cfg.targets[task.target]);
                base.seed = run_seed;
                ResultRow auc = base, f1 = base;
                auc.metric = "roc_auc";
                auc.value = roc_auc(p, rows.y_test);
                f1.metric = "macro_f1";
                f1.value = macro_f1(threshold_predictions(p), rows.y_test);
                slots[i].rows = {auc, f1};
            } catch (...) {
                std::lock_guard lock(err_mu);
                if (!first_error)
                    first_error = std::current_exception();
            }
        }
    };
    const int n_threads = std::min<int>(cfg.jobs, static_cast<int>(std::max<std::size_t>(tasks.size(), 1)));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < n_threads; ++t)
            pool.emplace_back(worker);
    }
    if (first_error)
        std::rethrow_exception(first_error);

    SweepOutcome out;
    for (auto& s : slots) {
        if (!s.skip.empty()) {
            ++out.skipped;
            out.skip_reasons.push_back(std::move(s.skip));
        } else {
            ++out.runs;
            out.rows.insert(out.rows.end(), s.rows.begin(), s.rows.end());
        }
    }
    return out;
}

// ---------------------------------------------------------------- tuning

/// Validation objective for one (arm, labeled-fold-count) cell. Uses the
/// first combo of the cell in enumeration order; test folds are dropped
/// entirely. With >= 2 labeled folds the last labeled fold validates;
/// with one, the mean over five seeded 80/20 clip splits of that fold
/// (stratified, so each side keeps both classes when a class has >= 2 clips).
inline Objective cell_objective(const Experiment& ex, const Arm& arm, int labeled_count, MethodParams base,
                                std::uint64_t seed)
{
    const auto cell = select_combos(ex.n_folds, 2, {labeled_count}, 0, seed);
    require(!cell.empty(), "tune: no combos with " + std::to_string(labeled_count) + " labeled folds");
    Combo combo = cell.front().second;
    const ComboRows rows = combo_rows(ex, combo);

    struct Split {
        std::vector<std::size_t> lab, val;
        Labels y, y_val;
    };
    std::vector<Split> splits;
    if (labeled_count >= 2) {
        const int val_fold = combo.labeled_folds.back();
        Split s;
        for (std::size_t k = 0; k < ex.labeled_rows.size(); ++k) {
            const int f = ex.folds.fold_of_sample[k];
            if (f == val_fold) {
                s.val.push_back(ex.labeled_rows[k]);
                s.y_val.push_back(ex.y[k]);
            } else if (std::find(combo.labeled_folds.begin(), combo.labeled_folds.end(), f) !=
                       combo.labeled_folds.end()) {
                s.lab.push_back(ex.labeled_rows[k]);
                s.y.push_back(ex.y[k]);
            }
        }
        splits.push_back(std::move(s));
    } else {
        Rng rng(mix_seed(seed, 0x7475));
        std::array<std::vector<std::size_t>, 2> by_class;
        for (std::size_t i = 0; i < rows.labeled.size(); ++i)
            by_class[static_cast<std::size_t>(rows.y[i])].push_back(i);
        for (int rep = 0; rep < 5; ++rep) {
            Split s;
            for (auto members : by_class) {
                shuffle(members, rng);
                const std::size_t n_val =
                    members.size() >= 2 ? std::max<std::size_t>(1, (members.size() + 2) / 5) : 0;
                for (std::size_t i = 0; i < members.size(); ++i) {
                    auto& dst = i < n_val ? s.val : s.lab;
                    auto& dy = i < n_val ? s.y_val : s.y;
                    dst.push_back(rows.labeled[members[i]]);
                    dy.push_back(rows.y[members[i]]);
                }
            }
            splits.push_back(std::move(s));
        }
    }
    const FeatureTable* table = ex.table;
    const auto unlabeled = rows.unlabeled;
    return [=](const Params& p) {
        const MethodParams mp = apply_params(p, base);
        double sum = 0;
        int used = 0;
        for (const auto& s : splits) {
            if (!has_both_classes(s.y) || !has_both_classes(s.y_val))
                continue;
            const auto tp = train_pipeline(arm.method, *table, arm.columns, split_data(*table, s.lab, s.y, unlabeled),
                                           mp, seed);
            const Vector proba = tp.predict_proba(take_rows(table->values, s.val));
            sum += roc_auc(std::span<const double>(proba.data(), static_cast<std::size_t>(proba.size())), s.y_val);
            ++used;
        }
        if (used == 0)
            throw Error("no validation split has both classes");
        return sum / used;
    };
}

} // namespace fluidlab

#pragma once

// Wrapper semi-supervised learners over the linear base classifier:
// self-training and two-view co-training.

#include "fluidlab/core.hpp"
#include "fluidlab/linear.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace fluidlab {

enum class Criterion { threshold, k_best };

inline std::string to_string(Criterion c) { return c == Criterion::threshold ? "threshold" : "k_best"; }

inline Criterion parse_criterion(const std::string& s)
{
    if (s == "threshold")
        return Criterion::threshold;
    if (s == "k_best")
        return Criterion::k_best;
    throw ValidationError("unknown criterion '" + s + "' (expected threshold, k_best)");
}

struct SslOptions {
    Criterion criterion = Criterion::threshold;
    double threshold = 0.75;
    int k_best = 10;
    int max_iters = 10;

    void validate() const
    {
        require(threshold >= 0.0 && threshold <= 1.0, "threshold must be in [0, 1]");
        require(k_best >= 1, "k_best must be >= 1");
        require(max_iters >= 1, "max_iters must be >= 1");
    }
};

enum class Terminal { exhausted_unlabeled, no_confident, max_iters };

inline std::string to_string(Terminal t)
{
    switch (t) {
    case Terminal::exhausted_unlabeled:
        return "exhausted_unlabeled";
    case Terminal::no_confident:
        return "no_confident";
    case Terminal::max_iters:
        return "max_iters";
    }
    return "?";
}

/// `index` is a row of the unlabeled matrix. For co-training, `source` is
/// the nominating view (0 = A, 1 = B, 2 = both agreed).
struct PseudoLabel {
    std::size_t index = 0;
    int label = 0;
    double confidence = 0.0;
    int source = 0;
};

struct SslIteration {
    std::vector<PseudoLabel> adopted;
    std::vector<std::size_t> conflicts;
};

struct PseudoLabelTrace {
    std::vector<SslIteration> iterations;
    Terminal terminal = Terminal::max_iters;

    std::size_t total_adopted() const
    {
        std::size_t n = 0;
        for (const auto& it : iterations)
            n += it.adopted.size();
        return n;
    }
};

namespace detail {

/// Confident candidates among `remaining` (unlabeled row indices) given the
/// class-1 probability of each unlabeled row.
inline std::vector<PseudoLabel> select_confident(const Vector& proba, const std::vector<std::size_t>& remaining,
                                                 const SslOptions& opt)
{
    std::vector<PseudoLabel> cand;
    cand.reserve(remaining.size());
    for (std::size_t idx : remaining) {
        const double p = proba(static_cast<Eigen::Index>(idx));
        cand.push_back({idx, p > 0.5 ? 1 : 0, std::max(p, 1.0 - p), 0});
    }
    if (opt.criterion == Criterion::threshold) {
        std::erase_if(cand, [&](const PseudoLabel& c) { return c.confidence < opt.threshold; });
        return cand;
    }
    std::stable_sort(cand.begin(), cand.end(),
                     [](const PseudoLabel& a, const PseudoLabel& b) { return a.confidence > b.confidence; });
    if (cand.size() > static_cast<std::size_t>(opt.k_best))
        cand.resize(static_cast<std::size_t>(opt.k_best));
    std::sort(cand.begin(), cand.end(), [](const PseudoLabel& a, const PseudoLabel& b) { return a.index < b.index; });
    return cand;
}

/// Labeled rows followed by the selected unlabeled rows.
struct Pool {
    std::vector<std::size_t> unlabeled_rows;
    Labels y;

    Matrix build(const Matrix& lab, const Matrix& unlab) const
    {
        Matrix out(lab.rows() + static_cast<Eigen::Index>(unlabeled_rows.size()), lab.cols());
        out.topRows(lab.rows()) = lab;
        for (std::size_t i = 0; i < unlabeled_rows.size(); ++i)
            out.row(lab.rows() + static_cast<Eigen::Index>(i)) = unlab.row(static_cast<Eigen::Index>(unlabeled_rows[i]));
        return out;
    }
};

} // namespace detail

struct SelfTrainResult {
    LinearModel model;
    PseudoLabelTrace trace;
};

/// Fit on the labeled pool, adopt confident unlabeled rows with their
/// predicted labels, repeat; a final fit is made on the expanded pool.
/// Class weights are recomputed on every fit.
inline SelfTrainResult self_train(const Matrix& x_lab, const Labels& y_lab, const Matrix& x_unlab, const SgdConfig& base,
                                  const SslOptions& opt)
{
    opt.validate();
    require(x_unlab.rows() == 0 || x_unlab.cols() == x_lab.cols(), "self_train: column mismatch");
    detail::Pool pool{{}, y_lab};
    std::vector<std::size_t> remaining(static_cast<std::size_t>(x_unlab.rows()));
    std::iota(remaining.begin(), remaining.end(), 0);

    SelfTrainResult res;
    res.trace.terminal = Terminal::max_iters;
    for (int it = 0; it < opt.max_iters; ++it) {
        if (remaining.empty()) {
            res.trace.terminal = Terminal::exhausted_unlabeled;
            break;
        }
        const LinearModel m = fit_linear(pool.build(x_lab, x_unlab), pool.y, base);
        const Vector proba = m.predict_proba(x_unlab);
        auto chosen = detail::select_confident(proba, remaining, opt);
        if (chosen.empty()) {
            res.trace.terminal = Terminal::no_confident;
            break;
        }
        std::vector<bool> taken(static_cast<std::size_t>(x_unlab.rows()), false);
        for (const auto& c : chosen) {
            pool.unlabeled_rows.push_back(c.index);
            pool.y.push_back(c.label);
            taken[c.index] = true;
        }
        std::erase_if(remaining, [&](std::size_t i) { return taken[i]; });
        res.trace.iterations.push_back({std::move(chosen), {}});
    }
    if (res.trace.terminal == Terminal::max_iters && remaining.empty())
        res.trace.terminal = Terminal::exhausted_unlabeled;
    res.model = fit_linear(pool.build(x_lab, x_unlab), pool.y, base);
    return res;
}

/// Two disjoint column sets covering 0..n_columns-1, from a seeded
/// permutation. View A receives the extra column when the count is odd.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_views_fused(std::size_t n_columns,
                                                                                       std::uint64_t seed)
{
    require(n_columns >= 2, "split_views_fused: need at least 2 columns");
    std::vector<std::size_t> perm(n_columns);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(mix_seed(seed, 0x7669));
    shuffle(perm, rng);
    const std::size_t half = (n_columns + 1) / 2;
    std::vector<std::size_t> a(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(half));
    std::vector<std::size_t> b(perm.begin() + static_cast<std::ptrdiff_t>(half), perm.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return {a, b};
}

struct CoTrainResult {
    LinearModel a;
    LinearModel b;
    PseudoLabelTrace trace;

    /// Mean of the two views' class-1 probabilities.
    Vector predict_proba(const Matrix& view_a, const Matrix& view_b) const
    {
        require(view_a.rows() == view_b.rows(), "co-train predict: view row misalignment");
        return 0.5 * (a.predict_proba(view_a) + b.predict_proba(view_b));
    }
};

/// Each view's classifier nominates confident unlabeled rows; a nomination
/// goes to the other view's pool with the nominator's label. Rows nominated
/// by both views with different labels stay unlabeled for that iteration.
inline CoTrainResult co_train(const Matrix& a_lab, const Matrix& a_unlab, const Matrix& b_lab, const Matrix& b_unlab,
                              const Labels& y_lab, const SgdConfig& base, const SslOptions& opt)
{
    opt.validate();
    require(a_lab.rows() == b_lab.rows() && a_unlab.rows() == b_unlab.rows(), "co_train: view row misalignment");
    require(static_cast<std::size_t>(a_lab.rows()) == y_lab.size(), "co_train: label count mismatch");

    detail::Pool pool_a{{}, y_lab}; // trains view A; receives B's nominations
    detail::Pool pool_b{{}, y_lab};
    std::vector<std::size_t> remaining(static_cast<std::size_t>(a_unlab.rows()));
    std::iota(remaining.begin(), remaining.end(), 0);

    CoTrainResult res;
    res.trace.terminal = Terminal::max_iters;
    for (int it = 0; it < opt.max_iters; ++it) {
        if (remaining.empty()) {
            res.trace.terminal = Terminal::exhausted_unlabeled;
            break;
        }
        const LinearModel ha = fit_linear(pool_a.build(a_lab, a_unlab), pool_a.y, base);
        const LinearModel hb = fit_linear(pool_b.build(b_lab, b_unlab), pool_b.y, base);
        const auto nom_a = detail::select_confident(ha.predict_proba(a_unlab), remaining, opt);
        const auto nom_b = detail::select_confident(hb.predict_proba(b_unlab), remaining, opt);

        std::vector<int> label_a(static_cast<std::size_t>(a_unlab.rows()), -1), label_b(label_a);
        for (const auto& c : nom_a)
            label_a[c.index] = c.label;
        for (const auto& c : nom_b)
            label_b[c.index] = c.label;

        SslIteration rec;
        std::vector<bool> taken(label_a.size(), false);
        auto adopt = [&](const PseudoLabel& c, int from, int other_label) {
            if (other_label >= 0 && other_label != c.label) {
                if (from == 0)
                    rec.conflicts.push_back(c.index);
                return;
            }
            detail::Pool& target = from == 0 ? pool_b : pool_a;
            target.unlabeled_rows.push_back(c.index);
            target.y.push_back(c.label);
            taken[c.index] = true;
            PseudoLabel p = c;
            p.source = other_label >= 0 ? 2 : from;
            if (from == 0 || other_label < 0)
                rec.adopted.push_back(p);
        };
        for (const auto& c : nom_a)
            adopt(c, 0, label_b[c.index]);
        for (const auto& c : nom_b)
            adopt(c, 1, label_a[c.index]);
        std::sort(rec.adopted.begin(), rec.adopted.end(),
                  [](const PseudoLabel& x, const PseudoLabel& y) { return x.index < y.index; });

        if (rec.adopted.empty()) {
            res.trace.terminal = Terminal::no_confident;
            if (!rec.conflicts.empty())
                res.trace.iterations.push_back(std::move(rec));
            break;
        }
        std::erase_if(remaining, [&](std::size_t i) { return taken[i]; });
        res.trace.iterations.push_back(std::move(rec));
    }
    if (res.trace.terminal == Terminal::max_iters && remaining.empty())
        res.trace.terminal = Terminal::exhausted_unlabeled;
    res.a = fit_linear(pool_a.build(a_lab, a_unlab), pool_a.y, base);
    res.b = fit_linear(pool_b.build(b_lab, b_unlab), pool_b.y, base);
    return res;
}

} // namespace fluidlab

#pragma once

// Grouped stratified folds, split enumeration, metrics and aggregation.

#include "fluidlab/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace fluidlab {

// ---------------------------------------------------------------- folds

struct FoldAssignment {
    int n_folds = 0;
    std::vector<int> fold_of_sample;
    std::map<std::string, int> fold_of_group;
};

/// Greedy grouped stratification. Groups are visited in order of decreasing
/// spread of their class counts (seeded shuffle first, so equal keys tie
/// randomly) and each is placed in the fold that keeps every fold's share of
/// each class closest to 1/n_folds (sum of squared deviations); ties go to
/// the smaller fold, then to a seeded random choice.
inline FoldAssignment stratified_group_kfold(std::span<const int> labels, std::span<const std::string> groups,
                                             int n_folds, std::uint64_t seed)
{
    require(labels.size() == groups.size(), "stratified_group_kfold: labels/groups length mismatch");
    require(n_folds >= 2, "stratified_group_kfold: need at least 2 folds");

    std::vector<std::string> names;
    std::unordered_map<std::string, std::size_t> gid;
    std::vector<std::array<double, 2>> counts;
    std::vector<std::size_t> group_of(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        require(labels[i] == 0 || labels[i] == 1, "stratified_group_kfold: labels must be 0 or 1");
        auto [it, fresh] = gid.try_emplace(groups[i], names.size());
        if (fresh) {
            names.push_back(groups[i]);
            counts.push_back({0, 0});
        }
        group_of[i] = it->second;
        counts[it->second][static_cast<std::size_t>(labels[i])] += 1;
    }
    require(names.size() >= static_cast<std::size_t>(n_folds),
            "stratified_group_kfold: fewer groups (" + std::to_string(names.size()) + ") than folds (" +
                std::to_string(n_folds) + ")");

    std::array<double, 2> class_total{0, 0};
    for (const auto& c : counts) {
        class_total[0] += c[0];
        class_total[1] += c[1];
    }

    Rng rng(mix_seed(seed, 0x666f6c64));
    std::vector<std::size_t> order(names.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(counts[a][0] - counts[a][1]) > std::abs(counts[b][0] - counts[b][1]);
    });

    const auto k = static_cast<std::size_t>(n_folds);
    std::vector<std::array<double, 2>> fold_counts(k, {0, 0});
    std::vector<double> fold_size(k, 0);
    std::vector<int> group_fold(names.size(), -1);
    const double target = 1.0 / n_folds;

    auto share_cost = [&](std::size_t f, const std::array<double, 2>& add) {
        double cost = 0.0;
        for (std::size_t g = 0; g < k; ++g)
            for (std::size_t c = 0; c < 2; ++c) {
                if (class_total[c] <= 0)
                    continue;
                const double n = fold_counts[g][c] + (g == f ? add[c] : 0.0);
                const double d = n / class_total[c] - target;
                cost += d * d;
            }
        return cost;
    };

    for (std::size_t g : order) {
        double best_cost = 0, best_size = 0;
        std::vector<std::size_t> best;
        for (std::size_t f = 0; f < k; ++f) {
            const double c = share_cost(f, counts[g]);
            const double sz = fold_size[f];
            constexpr double eps = 1e-12;
            if (best.empty() || c < best_cost - eps || (std::abs(c - best_cost) <= eps && sz < best_size)) {
                best = {f};
                best_cost = c;
                best_size = sz;
            } else if (std::abs(c - best_cost) <= eps && sz == best_size) {
                best.push_back(f);
            }
        }
        const std::size_t f = best[uniform_index(rng, best.size())];
        group_fold[g] = static_cast<int>(f);
        fold_counts[f][0] += counts[g][0];
        fold_counts[f][1] += counts[g][1];
        fold_size[f] += counts[g][0] + counts[g][1];
    }

    FoldAssignment out;
    out.n_folds = n_folds;
    out.fold_of_sample.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        out.fold_of_sample[i] = group_fold[group_of[i]];
    for (std::size_t g = 0; g < names.size(); ++g)
        out.fold_of_group[names[g]] = group_fold[g];
    return out;
}

// ---------------------------------------------------------------- combos

struct Combo {
    std::vector<int> test_folds;
    std::vector<int> labeled_folds;
};

/// Every choice of `n_test` test folds times every nonempty subset of the
/// remaining folds as labeled folds. Order: test subsets lexicographic, then
/// labeled subsets by bitmask over the remaining folds.
inline std::vector<Combo> enumerate_combos(int n_folds = 10, int n_test = 2)
{
    require(n_test >= 1 && n_test < n_folds, "enumerate_combos: need 1 <= n_test < n_folds");
    require(n_folds - n_test < 31, "enumerate_combos: too many folds");
    std::vector<Combo> out;
    std::vector<int> pick(static_cast<std::size_t>(n_test));
    std::iota(pick.begin(), pick.end(), 0);
    while (true) {
        std::vector<int> rest;
        for (int f = 0; f < n_folds; ++f)
            if (std::find(pick.begin(), pick.end(), f) == pick.end())
                rest.push_back(f);
        const std::uint32_t n_masks = 1u << rest.size();
        for (std::uint32_t mask = 1; mask < n_masks; ++mask) {
            Combo c;
            c.test_folds = pick;
            for (std::size_t b = 0; b < rest.size(); ++b)
                if (mask & (1u << b))
                    c.labeled_folds.push_back(rest[b]);
            out.push_back(std::move(c));
        }
        // next n_test-subset in lexicographic order
        int i = n_test - 1;
        while (i >= 0 && pick[static_cast<std::size_t>(i)] == n_folds - n_test + i)
            --i;
        if (i < 0)
            break;
        ++pick[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < n_test; ++j)
            pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

// ---------------------------------------------------------------- metrics

/// Twice the Mann-Whitney U of the positive class (concordant pairs count 2,
/// tied pairs count 1), plus class counts. AUC = twice_u / (2 n_pos n_neg).
struct AucCounts {
    std::uint64_t twice_u = 0;
    std::uint64_t n_pos = 0;
    std::uint64_t n_neg = 0;
};

inline AucCounts auc_counts(std::span<const double> scores, std::span<const int> labels)
{
    require(scores.size() == labels.size(), "roc_auc: length mismatch");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    AucCounts c;
    // twice the 1-based midrank: (first + last) where ranks are first..last
    std::uint64_t rank_sum2 = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]])
            ++j;
        const std::uint64_t mid2 = (i + 1) + (j + 1);
        for (std::size_t k = i; k <= j; ++k)
            if (labels[order[k]] == 1)
                rank_sum2 += mid2;
        i = j + 1;
    }
    for (int y : labels) {
        require(y == 0 || y == 1, "roc_auc: labels must be 0 or 1");
        (y ? c.n_pos : c.n_neg) += 1;
    }
    require(c.n_pos > 0 && c.n_neg > 0, "roc_auc: both classes must be present");
    c.twice_u = rank_sum2 - c.n_pos * (c.n_pos + 1);
    return c;
}

inline double roc_auc(std::span<const double> scores, std::span<const int> labels)
{
    const auto c = auc_counts(scores, labels);
    return static_cast<double>(c.twice_u) / (2.0 * static_cast<double>(c.n_pos) * static_cast<double>(c.n_neg));
}

/// Unweighted mean of the two per-class F1 scores; a class with no true and
/// no predicted members scores 0.
inline double macro_f1(std::span<const int> predictions, std::span<const int> labels)
{
    require(predictions.size() == labels.size(), "macro_f1: length mismatch");
    double f1_sum = 0.0;
    for (int cls = 0; cls < 2; ++cls) {
        double tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const bool p = predictions[i] == cls, t = labels[i] == cls;
            tp += p && t;
            fp += p && !t;
            fn += !p && t;
        }
        const double denom = 2 * tp + fp + fn;
        f1_sum += denom > 0 ? 2 * tp / denom : 0.0;
    }
    return f1_sum / 2.0;
}

inline std::vector<int> threshold_predictions(std::span<const double> proba, double threshold = 0.5)
{
    std::vector<int> out(proba.size());
    for (std::size_t i = 0; i < proba.size(); ++i)
        out[i] = proba[i] >= threshold ? 1 : 0;
    return out;
}

// ---------------------------------------------------------------- aggregation

struct CellKey {
    std::string algorithm;
    std::string target;
    std::string metric;
    double labeled_fraction = 0.0;

    auto tie() const { return std::tie(algorithm, target, metric, labeled_fraction); }
    bool operator<(const CellKey& o) const { return tie() < o.tie(); }
    bool operator==(const CellKey& o) const { return tie() == o.tie(); }
};

struct CellStats {
    std::size_t n = 0;
    double mean = 0.0;
    double se = 0.0;
    /// False when n < 2; se is then reported as 0.
    bool se_defined = false;
};

/// Mean and standard error (sample std with n - 1, over sqrt(n)).
inline CellStats summarize(std::span<const double> values)
{
    require(!values.empty(), "aggregate: empty cell");
    CellStats s;
    s.n = values.size();
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
    if (s.n >= 2) {
        double ss = 0.0;
        for (double v : values)
            ss += (v - s.mean) * (v - s.mean);
        s.se = std::sqrt(ss / static_cast<double>(s.n - 1)) / std::sqrt(static_cast<double>(s.n));
        s.se_defined = true;
    }
    return s;
}

template <typename Row>
std::map<CellKey, CellStats> aggregate(const std::vector<Row>& rows)
{
    std::map<CellKey, std::vector<double>> cells;
    for (const auto& r : rows)
        cells[{r.algorithm, r.target, r.metric, r.labeled_fraction}].push_back(r.value);
    std::map<CellKey, CellStats> out;
    for (const auto& [k, v] : cells)
        out[k] = summarize(v);
    return out;
}

} // namespace fluidlab

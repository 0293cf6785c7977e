#pragma once

// Random grouped datasets for comparing stratified folds with a plain
// shuffled group assignment.

#include "fluidlab/evaluation.hpp"

#include <random>

namespace splitcheck {

struct GroupedData {
    std::vector<int> labels;
    std::vector<std::string> groups;
};

// 20-40 sessions of 10-80 clips; per-session positive rate varies around 0.08
inline GroupedData random_grouped(std::uint32_t seed)
{
    std::mt19937 g(seed);
    std::uniform_int_distribution<int> n_groups(20, 40), size(10, 80);
    std::uniform_real_distribution<double> rate(0.0, 0.16), u(0, 1);
    GroupedData d;
    const int ng = n_groups(g);
    for (int s = 0; s < ng; ++s) {
        const int n = size(g);
        const double p = rate(g);
        for (int i = 0; i < n; ++i) {
            d.labels.push_back(u(g) < p ? 1 : 0);
            d.groups.push_back("s" + std::to_string(s));
        }
    }
    if (std::find(d.labels.begin(), d.labels.end(), 1) == d.labels.end())
        d.labels[0] = 1;
    return d;
}

// shuffled groups dealt round-robin into folds
inline std::vector<int> random_group_folds(const GroupedData& d, int n_folds, std::uint32_t seed)
{
    std::vector<std::string> names;
    for (const auto& s : d.groups)
        if (names.empty() || names.back() != s)
            names.push_back(s);
    std::mt19937 g(seed);
    std::shuffle(names.begin(), names.end(), g);
    std::map<std::string, int> fold;
    for (std::size_t i = 0; i < names.size(); ++i)
        fold[names[i]] = static_cast<int>(i % static_cast<std::size_t>(n_folds));
    std::vector<int> out;
    for (const auto& s : d.groups)
        out.push_back(fold[s]);
    return out;
}

// mean over folds of |fold positive rate - global positive rate|
inline double rate_deviation(const std::vector<int>& labels, const std::vector<int>& fold_of, int n_folds)
{
    double pos = 0;
    for (int y : labels)
        pos += y;
    const double global = pos / static_cast<double>(labels.size());
    std::vector<double> n(static_cast<std::size_t>(n_folds), 0), p(static_cast<std::size_t>(n_folds), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        n[static_cast<std::size_t>(fold_of[i])] += 1;
        p[static_cast<std::size_t>(fold_of[i])] += labels[i];
    }
    double dev = 0;
    for (int f = 0; f < n_folds; ++f)
        if (n[static_cast<std::size_t>(f)] > 0)
            dev += std::abs(p[static_cast<std::size_t>(f)] / n[static_cast<std::size_t>(f)] - global);
    return dev / n_folds;
}

// no group appears in two folds
inline bool groups_intact(const GroupedData& d, const std::vector<int>& fold_of)
{
    std::map<std::string, int> seen;
    for (std::size_t i = 0; i < d.groups.size(); ++i) {
        auto [it, fresh] = seen.try_emplace(d.groups[i], fold_of[i]);
        if (!fresh && it->second != fold_of[i])
            return false;
    }
    return true;
}

struct IntegrityResult {
    int datasets = 0;
    int intact = 0;
    int no_worse = 0;
};

inline IntegrityResult split_integrity(int datasets, int n_folds = 10)
{
    IntegrityResult r;
    for (int k = 0; k < datasets; ++k) {
        const auto d = random_grouped(static_cast<std::uint32_t>(1000 + k));
        const auto a = fluidlab::stratified_group_kfold(d.labels, d.groups, n_folds, static_cast<std::uint64_t>(k));
        const auto rnd = random_group_folds(d, n_folds, static_cast<std::uint32_t>(5000 + k));
        ++r.datasets;
        r.intact += groups_intact(d, a.fold_of_sample) ? 1 : 0;
        r.no_worse += rate_deviation(d.labels, a.fold_of_sample, n_folds) <= rate_deviation(d.labels, rnd, n_folds) ? 1 : 0;
    }
    return r;
}

} // namespace splitcheck

#pragma once

// Annotator reliability screening, rating aggregation, binarization and the
// 2x2 contingency test between the two rating scales.

#include "fluidlab/core.hpp"
#include "fluidlab/records.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace fluidlab {

/// Pearson correlation; nullopt when either side has zero variance.
inline std::optional<double> pearson_r(std::span<const double> x, std::span<const double> y)
{
    require(x.size() == y.size(), "pearson_r: length mismatch");
    require(x.size() >= 2, "pearson_r: fewer than 2 common clips");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0)
        return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Correlation between one annotator's ratings on the reliability clips and
/// the mean rating of the other annotators on the same clips.
inline std::optional<double> annotator_reliability(std::span<const double> own, std::span<const double> others_mean)
{
    return pearson_r(own, others_mean);
}

/// Reliability r for every annotator, each computed against the original
/// pool with the annotator left out of the reference means. Annotators with
/// fewer than two usable reliability clips or zero variance map to nullopt.
inline std::map<std::string, std::optional<double>> reliability_scores(const AnnotationSet& set)
{
    const std::unordered_set<std::string> rel(set.reliability_clips.begin(), set.reliability_clips.end());
    // clip -> (sum, count) over all annotators, fluidity only
    std::unordered_map<std::string, std::pair<double, int>> totals;
    std::map<std::string, std::vector<const Rating*>> by_annotator;
    for (const auto& r : set.ratings) {
        by_annotator[r.annotator_id];
        if (!rel.count(r.clip_id))
            continue;
        auto& t = totals[r.clip_id];
        t.first += r.fluidity;
        t.second += 1;
        by_annotator[r.annotator_id].push_back(&r);
    }
    std::map<std::string, std::optional<double>> out;
    for (const auto& [annotator, rs] : by_annotator) {
        std::vector<double> own, others;
        for (const Rating* r : rs) {
            const auto& t = totals.at(r->clip_id);
            if (t.second < 2)
                continue;
            own.push_back(r->fluidity);
            others.push_back((t.first - r->fluidity) / (t.second - 1));
        }
        out[annotator] = own.size() >= 2 ? annotator_reliability(own, others) : std::nullopt;
    }
    return out;
}

/// Keeps annotators whose reliability r is defined and strictly above `r_min`.
inline AnnotationSet filter_annotators(const AnnotationSet& set, double r_min = 0.2)
{
    const auto scores = reliability_scores(set);
    std::unordered_set<std::string> keep;
    for (const auto& [a, r] : scores)
        if (r && *r > r_min)
            keep.insert(a);
    AnnotationSet out;
    out.reliability_clips = set.reliability_clips;
    for (const auto& r : set.ratings)
        if (keep.count(r.annotator_id))
            out.ratings.push_back(r);
    return out;
}

/// Per-clip mean ratings; clips with fewer than `min_annotators` are dropped.
/// Label 1 iff the mean is strictly below `threshold`. Output follows the
/// order in which clips first appear in the ratings.
inline std::vector<LabeledClip> aggregate_and_binarize(const AnnotationSet& set, double threshold = 2.5,
                                                       int min_annotators = 4)
{
    struct Acc {
        double fl = 0, en = 0;
        int n = 0;
    };
    std::vector<std::string> order;
    std::unordered_map<std::string, Acc> acc;
    for (const auto& r : set.ratings) {
        auto [it, fresh] = acc.try_emplace(r.clip_id);
        if (fresh)
            order.push_back(r.clip_id);
        it->second.fl += r.fluidity;
        it->second.en += r.enjoyment;
        it->second.n += 1;
    }
    std::vector<LabeledClip> out;
    for (const auto& id : order) {
        const Acc& a = acc.at(id);
        if (a.n < min_annotators)
            continue;
        LabeledClip c;
        c.clip_id = id;
        c.n_annotators = a.n;
        c.mean_fluidity = a.fl / a.n;
        c.mean_enjoyment = a.en / a.n;
        c.label_fluidity = c.mean_fluidity < threshold ? 1 : 0;
        c.label_enjoyment = c.mean_enjoyment < threshold ? 1 : 0;
        out.push_back(std::move(c));
    }
    return out;
}

/// Chi-square survival function for one degree of freedom.
inline double chi2_sf_df1(double x)
{
    return x <= 0.0 ? 1.0 : std::erfc(std::sqrt(x / 2.0));
}

struct ChiSquareResult {
    double chi2 = 0.0;
    double p = 1.0;
};

using Table2x2 = std::array<std::array<double, 2>, 2>;

/// Pearson chi-square test of independence on a 2x2 table, df = 1. With
/// `yates`, each |O - E| is reduced by 0.5 (but not below zero).
inline ChiSquareResult contingency_chi2(const Table2x2& t, bool yates = true)
{
    double total = 0;
    std::array<double, 2> row{0, 0}, col{0, 0};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            require(t[i][j] >= 0.0, "contingency_chi2: negative count");
            row[i] += t[i][j];
            col[j] += t[i][j];
            total += t[i][j];
        }
    require(total > 0.0, "contingency_chi2: empty table");
    require(row[0] > 0 && row[1] > 0 && col[0] > 0 && col[1] > 0, "contingency_chi2: zero marginal row or column");
    double chi2 = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const double e = row[i] * col[j] / total;
            double d = std::abs(t[i][j] - e);
            if (yates)
                d = std::max(0.0, d - 0.5);
            chi2 += d * d / e;
        }
    return {chi2, chi2_sf_df1(chi2)};
}

/// Cross-tabulates binary labels: rows = enjoyment (high, low), columns =
/// fluidity (high, low).
inline Table2x2 label_table(const std::vector<LabeledClip>& clips)
{
    Table2x2 t{};
    for (const auto& c : clips)
        t[c.label_enjoyment][c.label_fluidity] += 1;
    return t;
}

} // namespace fluidlab

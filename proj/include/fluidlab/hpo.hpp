#pragma once

// Independent (per-dimension) tree-structured Parzen estimator search with a
// seeded random-search warm-up.

#include "fluidlab/core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace fluidlab {

enum class ParamKind { categorical, uniform, log_uniform };

struct ParamSpec {
    std::string name;
    ParamKind kind = ParamKind::uniform;
    std::vector<std::string> choices; // categorical only
    double lo = 0.0;
    double hi = 1.0;

    static ParamSpec categorical(std::string n, std::vector<std::string> c)
    {
        return {std::move(n), ParamKind::categorical, std::move(c), 0, 0};
    }
    static ParamSpec uniform(std::string n, double lo, double hi) { return {std::move(n), ParamKind::uniform, {}, lo, hi}; }
    static ParamSpec log_uniform(std::string n, double lo, double hi)
    {
        return {std::move(n), ParamKind::log_uniform, {}, lo, hi};
    }
};

struct SearchSpace {
    std::vector<ParamSpec> params;

    void validate() const
    {
        for (const auto& p : params) {
            if (p.kind == ParamKind::categorical)
                require(!p.choices.empty(), "search space: '" + p.name + "' has no choices");
            else
                require(std::isfinite(p.lo) && std::isfinite(p.hi) && p.lo < p.hi,
                        "search space: invalid bounds for '" + p.name + "'");
            if (p.kind == ParamKind::log_uniform)
                require(p.lo > 0.0, "search space: log-uniform '" + p.name + "' needs positive bounds");
        }
    }
};

/// PCA off or [0.2, 1.0] retained; loss; penalty; alpha log-uniform
/// [1e-5, 1e-2]; self-training criterion; pseudo-label threshold [0, 1].
inline SearchSpace default_search_space()
{
    return {{
        ParamSpec::categorical("pca_mode", {"off", "on"}),
        ParamSpec::uniform("pca_variance", 0.2, 1.0),
        ParamSpec::categorical("loss", {"log_loss", "modified_huber"}),
        ParamSpec::categorical("penalty", {"l1", "l2"}),
        ParamSpec::log_uniform("alpha", 1e-5, 1e-2),
        ParamSpec::categorical("criterion", {"threshold", "k_best"}),
        ParamSpec::uniform("threshold", 0.0, 1.0),
    }};
}

using ParamValue = std::variant<double, std::string>;
using Params = std::map<std::string, ParamValue>;

enum class TrialState { complete, failed };

struct Trial {
    Params params;
    std::optional<double> objective; // maximized; empty when failed
    TrialState state = TrialState::complete;
    std::string error;
};

struct TpeOptions {
    std::size_t n_startup = 10;
    double gamma = 0.25;
    std::size_t n_candidates = 24;
};

inline bool in_bounds(const Params& p, const SearchSpace& space)
{
    for (const auto& s : space.params) {
        auto it = p.find(s.name);
        if (it == p.end())
            return false;
        if (s.kind == ParamKind::categorical) {
            const auto* v = std::get_if<std::string>(&it->second);
            if (!v || std::find(s.choices.begin(), s.choices.end(), *v) == s.choices.end())
                return false;
        } else {
            const auto* v = std::get_if<double>(&it->second);
            if (!v || !(*v >= s.lo && *v <= s.hi))
                return false;
        }
    }
    return true;
}

namespace detail {

inline double to_internal(const ParamSpec& s, double v) { return s.kind == ParamKind::log_uniform ? std::log(v) : v; }

inline double from_internal(const ParamSpec& s, double v)
{
    return std::clamp(s.kind == ParamKind::log_uniform ? std::exp(v) : v, s.lo, s.hi);
}

inline ParamValue sample_prior(const ParamSpec& s, Rng& rng)
{
    if (s.kind == ParamKind::categorical)
        return s.choices[uniform_index(rng, s.choices.size())];
    const double a = to_internal(s, s.lo), b = to_internal(s, s.hi);
    return from_internal(s, uniform(rng, a, b));
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Parzen estimator for one numeric dimension in internal coordinates:
/// equal-weight mixture of a uniform prior and Gaussians truncated to [a, b].
/// Bandwidth is Silverman's rule, floored at range / min(100, n + 1) so a
/// tight cluster of points does not stop exploration.
struct NumericParzen {
    double a = 0, b = 1;
    std::vector<double> mus;
    double h = 1;

    NumericParzen(double lo, double hi, std::vector<double> points) : a(lo), b(hi), mus(std::move(points))
    {
        const double range = b - a;
        const double n = static_cast<double>(mus.size());
        double sd = 0.0;
        if (mus.size() >= 2) {
            double m = 0;
            for (double x : mus)
                m += x;
            m /= n;
            for (double x : mus)
                sd += (x - m) * (x - m);
            sd = std::sqrt(sd / (n - 1));
        }
        h = sd > 0 ? 1.06 * sd * std::pow(n, -0.2) : range / 4.0;
        h = std::clamp(h, range / std::min(100.0, n + 1.0), range);
    }

    double density(double x) const
    {
        const double w = 1.0 / static_cast<double>(mus.size() + 1);
        double d = w / (b - a);
        for (double mu : mus) {
            const double mass = normal_cdf((b - mu) / h) - normal_cdf((a - mu) / h);
            const double z = (x - mu) / h;
            d += w * std::exp(-0.5 * z * z) / (h * std::sqrt(2.0 * std::numbers::pi) * std::max(mass, 1e-300));
        }
        return d;
    }

    double sample(Rng& rng) const
    {
        const std::size_t c = uniform_index(rng, mus.size() + 1);
        if (c == mus.size())
            return uniform(rng, a, b);
        for (int tries = 0; tries < 100; ++tries) {
            const double x = mus[c] + h * normal01(rng);
            if (x >= a && x <= b)
                return x;
        }
        return std::clamp(mus[c], a, b);
    }
};

/// Smoothed categorical frequencies: (count + 1) / (n + C).
struct CategoricalParzen {
    std::vector<double> probs;

    CategoricalParzen(std::size_t n_choices, const std::vector<std::size_t>& observed)
        : probs(n_choices, 1.0)
    {
        for (std::size_t c : observed)
            probs[c] += 1.0;
        const double total = static_cast<double>(observed.size() + n_choices);
        for (auto& p : probs)
            p /= total;
    }

    std::size_t sample(Rng& rng) const
    {
        double u = uniform01(rng);
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (u < probs[i])
                return i;
            u -= probs[i];
        }
        return probs.size() - 1;
    }
};

} // namespace detail

/// Next parameter assignment. Failed trials are ignored; until `n_startup`
/// trials have completed the draw is from the prior. The draw is a function
/// of (history, space, seed) only.
inline Params suggest(const std::vector<Trial>& history, const SearchSpace& space, std::uint64_t seed,
                      const TpeOptions& opt = {})
{
    space.validate();
    Rng rng(mix_seed(seed, history.size()));

    std::vector<const Trial*> done;
    for (const auto& t : history)
        if (t.state == TrialState::complete && t.objective && std::isfinite(*t.objective) && in_bounds(t.params, space))
            done.push_back(&t);

    Params out;
    if (done.size() < std::max<std::size_t>(opt.n_startup, 2)) {
        for (const auto& s : space.params)
            out[s.name] = detail::sample_prior(s, rng);
        return out;
    }

    std::stable_sort(done.begin(), done.end(), [](const Trial* x, const Trial* y) { return *x->objective > *y->objective; });
    const auto n_good = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(opt.gamma * static_cast<double>(done.size()))), 1, done.size() - 1);
    const std::vector<const Trial*> good(done.begin(), done.begin() + static_cast<std::ptrdiff_t>(n_good));
    const std::vector<const Trial*> bad(done.begin() + static_cast<std::ptrdiff_t>(n_good), done.end());

    std::vector<Params> candidates(std::max<std::size_t>(opt.n_candidates, 1));
    std::vector<double> score(candidates.size(), 0.0);
    for (const auto& s : space.params) {
        if (s.kind == ParamKind::categorical) {
            auto index_of = [&](const Trial* t) {
                const auto& v = std::get<std::string>(t->params.at(s.name));
                return static_cast<std::size_t>(std::find(s.choices.begin(), s.choices.end(), v) - s.choices.begin());
            };
            std::vector<std::size_t> gi, bi;
            for (const auto* t : good)
                gi.push_back(index_of(t));
            for (const auto* t : bad)
                bi.push_back(index_of(t));
            const detail::CategoricalParzen l(s.choices.size(), gi), g(s.choices.size(), bi);
            for (std::size_t c = 0; c < candidates.size(); ++c) {
                const std::size_t k = l.sample(rng);
                candidates[c][s.name] = s.choices[k];
                score[c] += std::log(l.probs[k]) - std::log(g.probs[k]);
            }
        } else {
            auto value_of = [&](const Trial* t) { return detail::to_internal(s, std::get<double>(t->params.at(s.name))); };
            std::vector<double> gv, bv;
            for (const auto* t : good)
                gv.push_back(value_of(t));
            for (const auto* t : bad)
                bv.push_back(value_of(t));
            const double a = detail::to_internal(s, s.lo), b = detail::to_internal(s, s.hi);
            const detail::NumericParzen l(a, b, gv), g(a, b, bv);
            for (std::size_t c = 0; c < candidates.size(); ++c) {
                const double x = l.sample(rng);
                candidates[c][s.name] = detail::from_internal(s, x);
                score[c] += std::log(l.density(x)) - std::log(g.density(x));
            }
        }
    }
    const auto best = std::max_element(score.begin(), score.end()) - score.begin();
    return candidates[static_cast<std::size_t>(best)];
}

struct Study {
    std::vector<Trial> trials;
    std::size_t best = 0;

    const Trial& best_trial() const { return trials.at(best); }
};

using Objective = std::function<double(const Params&)>;

/// Runs `n_trials` sequential suggestions. A throwing or non-finite evaluation
/// is recorded as a failed trial. Best = highest objective, earliest on ties.
inline Study optimize(const Objective& evaluate, const SearchSpace& space, std::size_t n_trials, std::uint64_t seed,
                      const TpeOptions& opt = {})
{
    require(n_trials >= 1, "optimize: n_trials must be >= 1");
    Study study;
    std::optional<std::size_t> best;
    for (std::size_t t = 0; t < n_trials; ++t) {
        Trial trial;
        trial.params = suggest(study.trials, space, seed, opt);
        try {
            const double v = evaluate(trial.params);
            if (!std::isfinite(v))
                throw Error("non-finite objective");
            trial.objective = v;
        } catch (const std::exception& e) {
            trial.state = TrialState::failed;
            trial.error = e.what();
        }
        if (trial.objective && (!best || *trial.objective > *study.trials[*best].objective))
            best = t;
        study.trials.push_back(std::move(trial));
    }
    if (!best)
        throw Error("optimize: all " + std::to_string(n_trials) + " trials failed (last: " + study.trials.back().error + ")");
    study.best = *best;
    return study;
}

} // namespace fluidlab

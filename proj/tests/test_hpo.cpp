#include "fluidlab/hpo.hpp"

#include <gtest/gtest.h>

using namespace fluidlab;

namespace {

SearchSpace line() { return {{ParamSpec::uniform("x", 0.0, 1.0)}}; }

double quadratic(const Params& p)
{
    const double x = std::get<double>(p.at("x"));
    return -(x - 0.3) * (x - 0.3);
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

} // namespace

TEST(Suggest, AlwaysInBounds)
{
    const auto space = default_search_space();
    std::vector<Trial> history;
    std::size_t checked = 0;
    // history grows past n_startup so both samplers are exercised
    for (std::uint64_t seed = 0; checked < 10000; ++seed) {
        const auto p = suggest(history, space, seed);
        ASSERT_TRUE(in_bounds(p, space));
        ++checked;
        if (history.size() < 40) {
            const double a = std::log10(std::get<double>(p.at("alpha")));
            history.push_back({p, -std::abs(a + 3.0), TrialState::complete, ""});
        }
    }
}

TEST(Suggest, DeterministicAndSeedDependent)
{
    const auto space = default_search_space();
    EXPECT_EQ(suggest({}, space, 7), suggest({}, space, 7));
    EXPECT_NE(suggest({}, space, 7), suggest({}, space, 8));
    std::vector<Trial> h;
    for (std::uint64_t s = 0; s < 15; ++s)
        h.push_back({suggest({}, space, s), static_cast<double>(s % 4), TrialState::complete, ""});
    EXPECT_EQ(suggest(h, space, 3), suggest(h, space, 3));
}

TEST(Suggest, FailedTrialsAreIgnored)
{
    const auto space = line();
    std::vector<Trial> failed;
    for (int i = 0; i < 30; ++i)
        failed.push_back({suggest({}, space, static_cast<std::uint64_t>(i)), std::nullopt, TrialState::failed, "boom"});
    const auto p = suggest(failed, space, 1);
    EXPECT_TRUE(in_bounds(p, space));

    // with only failures before it, optimize still samples the prior
    int calls = 0;
    auto flaky = [&](const Params& q) {
        if (++calls <= 3)
            throw Error("boom");
        return quadratic(q);
    };
    const auto st = optimize(flaky, space, 5, 4);
    EXPECT_EQ(st.trials[0].state, TrialState::failed);
    EXPECT_FALSE(st.trials[0].objective.has_value());
    EXPECT_EQ(st.best, 3u);
}

TEST(Suggest, InvalidSpaceRejected)
{
    EXPECT_THROW(suggest({}, {{ParamSpec::uniform("x", 1.0, 1.0)}}, 0), ValidationError);
    EXPECT_THROW(suggest({}, {{ParamSpec::log_uniform("a", 0.0, 1.0)}}, 0), ValidationError);
    EXPECT_THROW(suggest({}, {{ParamSpec::categorical("c", {})}}, 0), ValidationError);
}

TEST(Optimize, QuadraticBeatsRandomSearch)
{
    int hits = 0;
    std::vector<double> tpe_regret, random_regret;
    TpeOptions random_only;
    random_only.n_startup = 60;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        const auto st = optimize(quadratic, line(), 60, rep);
        const double x = std::get<double>(st.best_trial().params.at("x"));
        hits += std::abs(x - 0.3) < 0.1 ? 1 : 0;
        tpe_regret.push_back(-*st.best_trial().objective);
        random_regret.push_back(-*optimize(quadratic, line(), 60, rep, random_only).best_trial().objective);
    }
    EXPECT_GE(hits, 90);
    EXPECT_LT(median(tpe_regret), median(random_regret));
}

TEST(Optimize, TiesGoToEarliestAndSingleTrial)
{
    const auto st = optimize([](const Params&) { return 0.5; }, line(), 8, 1);
    EXPECT_EQ(st.best, 0u);
    const auto one = optimize(quadratic, line(), 1, 2);
    EXPECT_EQ(one.trials.size(), 1u);
    EXPECT_EQ(one.best, 0u);
    EXPECT_THROW(optimize([](const Params&) -> double { throw Error("x"); }, line(), 3, 0), Error);
    EXPECT_THROW(optimize(quadratic, line(), 0, 0), ValidationError);
}

TEST(Optimize, StartupCoveringAllTrialsIsRandomSearch)
{
    TpeOptions opt;
    opt.n_startup = 20;
    const auto st = optimize(quadratic, line(), 20, 9, opt);
    // random search draws from the prior with the same per-step seed
    std::vector<Trial> prefix;
    for (const auto& t : st.trials) {
        Rng rng(mix_seed(9, prefix.size()));
        const double want = uniform(rng, 0.0, 1.0);
        EXPECT_EQ(std::get<double>(t.params.at("x")), want);
        prefix.push_back(t);
    }
}

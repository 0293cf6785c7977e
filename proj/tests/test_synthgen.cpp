#include "fluidlab/evaluation.hpp"
#include "fluidlab/experiment.hpp"
#include "fluidlab/synthgen.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace fluidlab;

namespace {

SynthConfig compact(double sep, std::uint64_t seed)
{
    SynthConfig c;
    c.n_sessions = 20;
    c.clips_per_session = 100;
    c.non_targeted_per_session = 0;
    c.positive_rate = 0.3;
    c.audio_dim = 6;
    c.face_dim = 4;
    c.text_dim = 6;
    c.cluster_separation = sep;
    c.seed = seed;
    return c;
}

// SL trained on the first half of the sessions, AUC on the second half
double holdout_auc(const SynthDataset& ds)
{
    const auto& t = ds.table;
    std::vector<std::size_t> train, test;
    Labels y, y_test;
    std::set<std::string> sessions(t.session_ids.begin(), t.session_ids.end());
    std::set<std::string> first(sessions.begin(), std::next(sessions.begin(), static_cast<long>(sessions.size() / 2)));
    for (std::size_t i = 0; i < t.rows(); ++i) {
        if (first.count(t.session_ids[i])) {
            train.push_back(i);
            y.push_back(ds.truth[i]);
        } else {
            test.push_back(i);
            y_test.push_back(ds.truth[i]);
        }
    }
    MethodParams mp;
    mp.pca.reset();
    const auto tp = train_pipeline(Method::sl, t, all_columns(t), split_data(t, train, y, {}), mp, 1);
    const Vector p = tp.predict_proba(take_rows(t.values, test));
    return roc_auc(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), y_test);
}

} // namespace

TEST(Synth, PositiveCount)
{
    SynthConfig c;
    c.n_sessions = 30;
    c.clips_per_session = 100;
    c.non_targeted_per_session = 0;
    c.audio_dim = 4;
    c.face_dim = 2;
    c.text_dim = 2;
    const auto ds = generate(c);
    ASSERT_EQ(ds.labels.size(), 3000u);
    int pos = 0;
    for (const auto& l : ds.labels)
        pos += l.label_fluidity;
    EXPECT_NEAR(pos, 240, 30);
}

TEST(Synth, ShapesAndIds)
{
    const auto ds = generate(synth_preset("small"));
    const auto c = synth_preset("small");
    const auto n = static_cast<std::size_t>(c.n_sessions * (c.clips_per_session + c.non_targeted_per_session));
    EXPECT_EQ(ds.table.rows(), n);
    EXPECT_EQ(ds.table.columns.size(), c.audio_dim + c.face_dim + c.text_dim + 3);
    EXPECT_EQ(ds.manifest.size(), n);
    EXPECT_EQ(ds.labels.size(), static_cast<std::size_t>(c.n_sessions * c.clips_per_session));
    std::set<std::string> ids(ds.table.clip_ids.begin(), ds.table.clip_ids.end());
    EXPECT_EQ(ids.size(), n);
    for (std::size_t i = 0; i < n; ++i)
        EXPECT_EQ(ds.manifest[i].clip_id, ds.table.clip_ids[i]);
    EXPECT_THROW(synth_preset("huge"), ValidationError);
}

TEST(Synth, Deterministic)
{
    const auto a = generate(compact(2.0, 5)), b = generate(compact(2.0, 5));
    EXPECT_EQ(a.table.values, b.table.values);
    EXPECT_EQ(a.truth, b.truth);
    const auto c = generate(compact(2.0, 6));
    EXPECT_NE(a.table.values, c.table.values);
}

TEST(Synth, NoSignalGivesChanceAuc)
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const double auc = holdout_auc(generate(compact(0.0, seed)));
        EXPECT_GE(auc, 0.4) << seed;
        EXPECT_LE(auc, 0.6) << seed;
    }
}

TEST(Synth, WideSeparationIsNearlySeparable)
{
    for (std::uint64_t seed = 0; seed < 3; ++seed)
        EXPECT_GT(holdout_auc(generate(compact(6.0, seed))), 0.95) << seed;
}

TEST(Synth, AucRisesWithSeparation)
{
    double prev = 0;
    for (double sep : {0.0, 1.0, 2.0, 4.0}) {
        double sum = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed)
            sum += holdout_auc(generate(compact(sep, 100 + seed)));
        const double mean = sum / 20;
        EXPECT_GE(mean, prev) << "separation " << sep;
        prev = mean;
    }
}

TEST(Synth, BadConfigRejected)
{
    auto c = compact(1.0, 0);
    c.view_redundancy = 1.5;
    EXPECT_THROW(generate(c), ValidationError);
    c = compact(-1.0, 0);
    EXPECT_THROW(generate(c), ValidationError);
}

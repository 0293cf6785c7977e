#include "fluidlab/dataio.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <random>

using namespace fluidlab;
using testutil::TempDir;
using testutil::write_text;

namespace {

std::string error_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const ValidationError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST(SessionAudio, ReadsFourSpeakersFromBytes)
{
    TempDir d("audio4");
    for (const char* s : {"d", "a", "c", "b"}) {
        const auto bytes = oracle::wav_bytes({0, 16384, -16384, 8192}, 16000);
        write_text(d / (std::string(s) + ".wav"), std::string(bytes.begin(), bytes.end()));
    }
    const auto sa = read_session_audio(d.path());
    EXPECT_EQ(sa.sample_rate, 16000);
    ASSERT_EQ(sa.tracks.size(), 4u);
    EXPECT_EQ(sa.tracks[0].speaker_id, "a");
    EXPECT_EQ(sa.tracks[3].speaker_id, "d");
    EXPECT_EQ(sa.tracks[2].samples, (std::vector<double>{0.0, 0.5, -0.5, 0.25}));
}

TEST(SessionAudio, MismatchedRatesAndEmptyDir)
{
    TempDir d("audiorate");
    auto a = oracle::wav_bytes({0, 1}, 16000), b = oracle::wav_bytes({0, 1}, 44100);
    write_text(d / "a.wav", std::string(a.begin(), a.end()));
    write_text(d / "b.wav", std::string(b.begin(), b.end()));
    EXPECT_NE(error_of([&] { read_session_audio(d.path()); }).find("mismatched sample rates"), std::string::npos);

    TempDir e("audioempty");
    EXPECT_NE(error_of([&] { read_session_audio(e.path()); }).find("zero tracks"), std::string::npos);
}

TEST(SessionAudio, TruncatesToShortestTrack)
{
    TempDir d("audiotrunc");
    auto a = oracle::wav_bytes({1, 2, 3, 4}, 8000), b = oracle::wav_bytes({1, 2, 3}, 8000);
    write_text(d / "a.wav", std::string(a.begin(), a.end()));
    write_text(d / "b.wav", std::string(b.begin(), b.end()));
    const auto sa = read_session_audio(d.path());
    EXPECT_EQ(sa.length(), 3u);
}

TEST(Manifest, RoundTripAndEmpty)
{
    TempDir d("manifest");
    std::vector<ClipManifest> clips{
        {"s1_targeted_gap_20000", "s1", 20.0, 17.0, 24.0, ClipKind::targeted_gap},
        {"s1_targeted_overlap_31250", "s1", 31.25, 28.25, 35.25, ClipKind::targeted_overlap},
        {"s1_non_targeted_40000", "s1", 43.0, 40.0, 47.0, ClipKind::non_targeted},
    };
    write_manifest(clips, d / "m.jsonl");
    EXPECT_EQ(read_manifest(d / "m.jsonl"), clips);
    const auto text = testutil::read_text(d / "m.jsonl");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);

    write_manifest({}, d / "e.jsonl");
    EXPECT_TRUE(read_manifest(d / "e.jsonl").empty());
}

TEST(Manifest, DuplicateIdAndBadLine)
{
    TempDir d("manifestbad");
    const std::string row = R"({"clip_id":"x","session_id":"s","mark_time":3,"start":0,"end":7,"kind":"targeted_gap"})";
    write_text(d / "dup.jsonl", row + "\n" + row + "\n");
    const auto e1 = error_of([&] { read_manifest(d / "dup.jsonl"); });
    EXPECT_NE(e1.find("duplicate clip_id 'x'"), std::string::npos);

    write_text(d / "bad.jsonl", row + "\n{not json\n");
    const auto e2 = error_of([&] { read_manifest(d / "bad.jsonl"); });
    EXPECT_NE(e2.find(":2"), std::string::npos) << e2;

    EXPECT_THROW(write_manifest({{"x", "s", 3, 0, 7, ClipKind::targeted_gap}, {"x", "s", 3, 0, 7, ClipKind::targeted_gap}},
                                d / "w.jsonl"),
                 ValidationError);
}

TEST(Embeddings, TwoAudioRows)
{
    TempDir d("emb");
    std::string csv = "clip_id,modality";
    for (int i = 0; i < 128; ++i)
        csv += ",v" + std::to_string(i);
    csv += "\n";
    for (const char* id : {"c1", "c2"}) {
        csv += std::string(id) + ",audio";
        for (int i = 0; i < 128; ++i)
            csv += "," + std::to_string(i * 0.5);
        csv += "\n";
    }
    write_text(d / "e.csv", csv);
    const auto r = read_embeddings(d / "e.csv");
    ASSERT_EQ(r.size(), 2u);
    EXPECT_EQ(r[0].dims(), 128u);
    EXPECT_EQ(r[1].vector[127], 63.5);
}

TEST(Embeddings, DimensionMismatchRaggedNaN)
{
    TempDir d("embbad");
    write_text(d / "mm.csv", "clip_id,modality,v0,v1,v2\nc1,audio,1,2,3\nc2,audio,1,2,\n");
    EXPECT_NE(error_of([&] { read_embeddings(d / "mm.csv"); }).find("dimension mismatch"), std::string::npos);

    write_text(d / "rag.csv", "clip_id,modality,v0,v1\nc1,audio,1,2,3\n");
    EXPECT_NE(error_of([&] { read_embeddings(d / "rag.csv"); }).find("ragged"), std::string::npos);

    write_text(d / "nan.csv", "clip_id,modality,v0,v1\nclipZ,text,1,nan\n");
    EXPECT_NE(error_of([&] { read_embeddings(d / "nan.csv"); }).find("clipZ"), std::string::npos);

    write_text(d / "txt.csv", "clip_id,modality,v0,v1\nc1,text,1,abc\n");
    EXPECT_NE(error_of([&] { read_embeddings(d / "txt.csv"); }).find("non-numeric"), std::string::npos);
}

TEST(Embeddings, MixedWidthRoundTrip)
{
    TempDir d("embrt");
    std::mt19937 g(5);
    std::uniform_real_distribution<float> u(-3, 3);
    std::vector<EmbeddingRecord> recs;
    for (int c = 0; c < 3; ++c) {
        EmbeddingRecord a{"c" + std::to_string(c), Modality::audio, {}};
        EmbeddingRecord t{"c" + std::to_string(c), Modality::text, {}};
        for (int i = 0; i < 6; ++i)
            a.vector.push_back(u(g));
        for (int i = 0; i < 4; ++i)
            t.vector.push_back(u(g));
        recs.push_back(a);
        recs.push_back(t);
    }
    write_embeddings(recs, d / "e.csv");
    const auto back = read_embeddings(d / "e.csv");
    ASSERT_EQ(back.size(), recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        EXPECT_EQ(back[i].clip_id, recs[i].clip_id);
        EXPECT_EQ(back[i].modality, recs[i].modality);
        ASSERT_EQ(back[i].dims(), recs[i].dims());
        for (std::size_t k = 0; k < recs[i].dims(); ++k) // 9 digits recover float32 exactly
            EXPECT_EQ(static_cast<float>(back[i].vector[k]), static_cast<float>(recs[i].vector[k]));
    }
}

TEST(Annotations, RoundTripAndRangeCheck)
{
    TempDir d("ann");
    std::vector<Rating> rs{{"c1", "a1", 1, 5}, {"c1", "a2", 3, 2}, {"c2", "a1", 4, 4}};
    write_annotations(rs, d / "a.csv");
    const auto back = read_annotations(d / "a.csv");
    ASSERT_EQ(back.size(), 3u);
    EXPECT_EQ(back[1].annotator_id, "a2");
    EXPECT_EQ(back[1].enjoyment, 2);

    write_text(d / "bad.csv", "clip_id,annotator_id,fluidity,enjoyment\nc1,a1,6,3\n");
    EXPECT_THROW(read_annotations(d / "bad.csv"), ValidationError);
    write_text(d / "dup.csv", "clip_id,annotator_id,fluidity,enjoyment\nc1,a1,2,3\nc1,a1,2,3\n");
    EXPECT_THROW(read_annotations(d / "dup.csv"), ValidationError);
}

TEST(Labels, RoundTripExact)
{
    TempDir d("labels");
    std::vector<LabeledClip> ls{{"c1", 2.25, 3.0, 4, 1, 0}, {"c2", 1.0 / 3.0, 4.8, 5, 1, 0}};
    write_labels(ls, d / "l.csv");
    const auto back = read_labels(d / "l.csv");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].mean_fluidity, 1.0 / 3.0);
    EXPECT_EQ(back[1].n_annotators, 5);
    EXPECT_EQ(back[0].label_fluidity, 1);
}

TEST(Features, RoundTripAt9Digits)
{
    TempDir d("feat");
    FeatureTable t;
    t.columns = {"audio_0", "face_0", "text_0", "has_audio", "has_face", "has_text"};
    t.values = Matrix(2, 6);
    t.values << 0.1f, -2.5f, 3.25f, 1, 1, 1, 1e-7f, 12345.678f, -0.333333343f, 1, 0, 1;
    t.clip_ids = {"a", "b"};
    t.session_ids = {"s1", "s2"};
    t.kinds = {ClipKind::targeted_gap, ClipKind::non_targeted};
    write_features(t, d / "f.csv");
    const auto back = read_features(d / "f.csv");
    EXPECT_EQ(back.columns, t.columns);
    EXPECT_EQ(back.clip_ids, t.clip_ids);
    EXPECT_EQ(back.kinds, t.kinds);
    for (Eigen::Index i = 0; i < 2; ++i)
        for (Eigen::Index j = 0; j < 6; ++j)
            EXPECT_EQ(static_cast<float>(back.values(i, j)), static_cast<float>(t.values(i, j)));
    // second write is byte-identical
    write_features(back, d / "g.csv");
    EXPECT_EQ(testutil::read_text(d / "f.csv"), testutil::read_text(d / "g.csv"));
}

TEST(Results, RoundTripBitExact)
{
    TempDir d("res");
    std::vector<ResultRow> rows{{17, "0-1", "2-5", 0.2, "sl", "fluidity", "roc_auc", 0.1 + 0.2, 18446744073709551615ull},
                                {18, "0-1", "3", 0.1, "self_training[A+F]", "enjoyment", "macro_f1", 2.0 / 3.0, 7}};
    write_results(rows, d / "r.csv");
    const auto back = read_results(d / "r.csv");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].value, 0.1 + 0.2);
    EXPECT_EQ(back[0].seed, 18446744073709551615ull);
    EXPECT_EQ(back[1].value, 2.0 / 3.0);
    EXPECT_EQ(back[1].algorithm, "self_training[A+F]");
    EXPECT_EQ(back[1].labeled_folds, "3");
}

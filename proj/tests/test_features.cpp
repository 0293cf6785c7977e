#include "fluidlab/features.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace fluidlab;

namespace {

Matrix random_matrix(std::uint32_t seed, Eigen::Index n, Eigen::Index d, double scale = 1.0)
{
    std::mt19937 g(seed);
    std::normal_distribution<double> z;
    Matrix m(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            m(i, j) = scale * z(g) * static_cast<double>(j + 1);
    return m;
}

FusionLayout small_layout() { return {4, 3, 5}; }

} // namespace

TEST(Layout, ReferenceWidth)
{
    FusionLayout l;
    EXPECT_EQ(l.width(), 549u);
    const auto c = l.columns();
    EXPECT_EQ(c.size(), 549u);
    EXPECT_EQ(c[128], "face_mean_au0");
    EXPECT_EQ(c[145], "face_std_au0");
    EXPECT_EQ(c[162], "text_0");
    EXPECT_EQ(c[546], "has_audio");
}

TEST(Pooling, AudioMeanFaceMeanStdText)
{
    const auto l = small_layout();
    ClipEmbeddings c;
    c.audio_frames = {{1, 2, 3, 4}, {1, 2, 3, 4}, {1, 2, 3, 4}};
    Matrix a(2, 3), b(2, 3);
    a << 1, 2, 3, 1, 2, 3;
    b << 3, 4, 5, 3, 4, 5;
    c.face_participants = {a, b};
    c.text = std::vector<double>{9, 8, 7, 6, 5};
    const auto v = pool_clip(c, l);
    ASSERT_EQ(v.size(), l.width());
    EXPECT_EQ(std::vector<double>(v.begin(), v.begin() + 4), (std::vector<double>{1, 2, 3, 4}));
    EXPECT_EQ(std::vector<double>(v.begin() + 4, v.begin() + 7), (std::vector<double>{2, 3, 4}));
    EXPECT_EQ(std::vector<double>(v.begin() + 7, v.begin() + 10), (std::vector<double>{0, 0, 0}));
    EXPECT_EQ(std::vector<double>(v.begin() + 10, v.begin() + 15), (std::vector<double>{9, 8, 7, 6, 5}));
    EXPECT_EQ(std::vector<double>(v.end() - 3, v.end()), (std::vector<double>{1, 1, 1}));
}

TEST(Pooling, FaceStdIsPopulationStd)
{
    const auto l = small_layout();
    ClipEmbeddings c;
    Matrix a(4, 3);
    a << 1, 0, 2, 3, 0, 2, 1, 0, 2, 3, 0, 2;
    c.face_participants = {a};
    const auto v = pool_clip(c, l);
    EXPECT_DOUBLE_EQ(v[4], 2.0);
    EXPECT_DOUBLE_EQ(v[7], 1.0);
    EXPECT_DOUBLE_EQ(v[8], 0.0);
    EXPECT_EQ(v[l.width() - 3], 0.0); // no audio
    EXPECT_EQ(v[l.width() - 1], 0.0); // no text
}

TEST(Pooling, PermutationAndDuplicationInvariance)
{
    const auto l = small_layout();
    const Matrix p1 = random_matrix(1, 6, 3), p2 = random_matrix(2, 5, 3), p3 = random_matrix(3, 7, 3);
    ClipEmbeddings x, y;
    x.face_participants = {p1, p2, p3};
    y.face_participants = {p3, p1, p2};
    x.audio_frames = {{1, 2, 3, 4}, {5, 6, 7, 8}};
    y.audio_frames = {{5, 6, 7, 8}, {1, 2, 3, 4}, {1, 2, 3, 4}, {5, 6, 7, 8}};
    const auto a = pool_clip(x, l), b = pool_clip(y, l);
    for (std::size_t k = 0; k < a.size(); ++k)
        EXPECT_NEAR(a[k], b[k], 1e-12) << k;
}

TEST(Pooling, ErrorsOnMissingAndWrongDims)
{
    const auto l = small_layout();
    EXPECT_THROW(pool_clip({}, l), ValidationError);
    ClipEmbeddings c;
    c.audio_frames = {{1, 2, 3}};
    EXPECT_THROW(pool_clip(c, l), ValidationError);
}

TEST(Featurize, ConcatenatedAudioRowAndMissingClip)
{
    const auto l = small_layout();
    std::vector<EmbeddingRecord> recs{{"c1", Modality::audio, {1, 1, 1, 1, 3, 3, 3, 3}},
                                      {"c1", Modality::face, {1, 2, 3, 3, 4, 5}},
                                      {"c2", Modality::text, {1, 2, 3, 4, 5}}};
    std::vector<ClipManifest> m{{"c1", "s", 3, 0, 7, ClipKind::targeted_gap},
                                {"c2", "s", 10, 7, 14, ClipKind::non_targeted}};
    const auto t = featurize(recs, m, l);
    ASSERT_EQ(t.rows(), 2u);
    EXPECT_EQ(t.values(0, 0), 2.0);
    EXPECT_EQ(t.values(0, 4), 2.0);
    EXPECT_EQ(t.values(0, 7), 1.0);
    EXPECT_EQ(t.values(1, 10), 1.0);
    EXPECT_EQ(t.values(1, static_cast<Eigen::Index>(l.width()) - 3), 0.0);
    EXPECT_EQ(t.kinds[1], ClipKind::non_targeted);

    m.push_back({"c3", "s", 20, 17, 24, ClipKind::targeted_gap});
    EXPECT_THROW(featurize(recs, m, l), ValidationError);
}

TEST(Standardizer, Examples)
{
    Matrix x(2, 1);
    x << 1, 3;
    const auto s = fit_standardizer(x);
    const Matrix z = s.apply(x);
    EXPECT_EQ(z(0, 0), -1.0);
    EXPECT_EQ(z(1, 0), 1.0);

    Matrix c(3, 2);
    c << 5, 1, 5, 2, 5, 4;
    const Matrix zc = fit_standardizer(c).apply(c);
    for (int i = 0; i < 3; ++i)
        EXPECT_EQ(zc(i, 0), 0.0);
    EXPECT_THROW(fit_standardizer(Matrix(0, 3)), ValidationError);
}

TEST(Standardizer, RandomMatrixMoments)
{
    const Matrix x = random_matrix(7, 100, 5, 3.0).array() + 10.0;
    const Matrix z = fit_standardizer(x).apply(x);
    for (Eigen::Index j = 0; j < 5; ++j) {
        double m = 0, v = 0;
        for (Eigen::Index i = 0; i < 100; ++i)
            m += z(i, j) / 100.0;
        for (Eigen::Index i = 0; i < 100; ++i)
            v += (z(i, j) - m) * (z(i, j) - m) / 100.0;
        EXPECT_LT(std::abs(m), 1e-9);
        EXPECT_NEAR(std::sqrt(v), 1.0, 1e-9);
    }
}

TEST(Pca, LineYEqualsX)
{
    std::mt19937 g(3);
    std::normal_distribution<double> z;
    Matrix x(200, 2);
    for (int i = 0; i < 200; ++i) {
        const double t = z(g);
        x(i, 0) = t + 1e-3 * z(g);
        x(i, 1) = t + 1e-3 * z(g);
    }
    const auto p = fit_pca(x, 0.9);
    ASSERT_EQ(p.components(), 1u);
    EXPECT_NEAR(p.basis(0, 0), 1.0 / std::sqrt(2.0), 1e-4);
    EXPECT_NEAR(p.basis(1, 0), 1.0 / std::sqrt(2.0), 1e-4);
}

TEST(Pca, FullRetentionReconstructs)
{
    const Matrix x = random_matrix(4, 30, 6);
    const auto p = fit_pca(x, 1.0);
    EXPECT_EQ(p.components(), 6u);
    EXPECT_LT((p.reconstruct(p.project(x)) - x).norm(), 1e-8);
    EXPECT_NEAR(p.explained_ratio.sum(), 1.0, 1e-9);

    // rank-deficient data: third column is a combination
    Matrix r = random_matrix(5, 20, 3);
    r.col(2) = r.col(0) - 2 * r.col(1);
    const auto pr = fit_pca(r, 1.0);
    EXPECT_EQ(pr.components(), 2u);
    EXPECT_LT((pr.reconstruct(pr.project(r)) - r).norm(), 1e-8);
}

TEST(Pca, DiscardedVarianceBound)
{
    const Matrix x = random_matrix(6, 50, 8);
    for (double keep : {0.2, 0.5, 0.8, 0.95}) {
        const auto p = fit_pca(x, keep);
        const Matrix centered = x.rowwise() - x.colwise().mean();
        const double lost = (x - p.reconstruct(p.project(x))).squaredNorm() / centered.squaredNorm();
        EXPECT_LE(lost, 1.0 - keep + 1e-8) << keep;
        if (p.components() > 1) { // k is the smallest that reaches `keep`
            EXPECT_LT(p.explained_ratio.head(static_cast<Eigen::Index>(p.components()) - 1).sum(), keep);
        }
    }
}

TEST(Pca, MatchesJacobiOnSmallMatrices)
{
    for (int d = 2; d <= 8; ++d) {
        const Matrix x = random_matrix(static_cast<std::uint32_t>(20 + d), 40, d);
        oracle::Mat rows(40, std::vector<double>(static_cast<std::size_t>(d)));
        for (int i = 0; i < 40; ++i)
            for (int j = 0; j < d; ++j)
                rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = x(i, j);
        std::vector<double> vals;
        oracle::Mat vecs;
        oracle::jacobi_eigen(oracle::covariance(rows), vals, vecs);
        const auto p = fit_pca(x, 1.0);
        for (int k = 0; k < d; ++k) {
            EXPECT_NEAR(p.eigenvalues(k), vals[static_cast<std::size_t>(k)], 1e-8);
            double dot = 0;
            for (int j = 0; j < d; ++j)
                dot += p.basis(j, k) * vecs[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
            EXPECT_NEAR(std::abs(dot), 1.0, 1e-8) << "d=" << d << " k=" << k;
        }
    }
}

TEST(Pca, SignConventionAndErrors)
{
    const auto p = fit_pca(random_matrix(8, 30, 4), 1.0);
    for (Eigen::Index c = 0; c < p.basis.cols(); ++c) {
        Eigen::Index arg = 0;
        p.basis.col(c).cwiseAbs().maxCoeff(&arg);
        EXPECT_GT(p.basis(arg, c), 0.0);
    }
    Matrix bad = random_matrix(9, 5, 2);
    bad(1, 1) = std::nan("");
    EXPECT_THROW(fit_pca(bad, 0.9), ValidationError);
    EXPECT_THROW(fit_pca(random_matrix(9, 5, 2), 0.1), ValidationError);
}

TEST(Preprocessor, OffIsStandardizedIdentity)
{
    const Matrix x = random_matrix(10, 25, 4);
    const auto p = fit_preprocessor(x, std::nullopt);
    EXPECT_FALSE(p.pca.has_value());
    EXPECT_EQ(p.output_dim(), 4u);
    EXPECT_TRUE(p.apply(x).isApprox(p.standardizer.apply(x)));
    const auto q = fit_preprocessor(x, 0.5, 3);
    EXPECT_GE(q.output_dim(), 3u);
}

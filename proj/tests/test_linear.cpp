#include "fluidlab/linear.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace fluidlab;

namespace {

struct Sample1d {
    Matrix x;
    Labels y;
    std::vector<double> xs;
};

// 1-d logistic sample with true slope 2 and intercept -0.5
Sample1d logistic_sample(std::uint32_t seed, int n)
{
    std::mt19937 g(seed);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u(0, 1);
    Sample1d s;
    s.x.resize(n, 1);
    for (int i = 0; i < n; ++i) {
        const double v = z(g);
        s.x(i, 0) = v;
        s.xs.push_back(v);
        s.y.push_back(u(g) < 1.0 / (1.0 + std::exp(-(2.0 * v - 0.5))) ? 1 : 0);
    }
    return s;
}

Vector analytic_gradient(const Matrix& x, const Labels& y, const std::vector<double>& sw, const Vector& w, double b,
                         Loss loss, Penalty pen, double alpha, double& gb)
{
    Vector g = Vector::Zero(w.size());
    gb = 0;
    const double n = static_cast<double>(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double d = sw[static_cast<std::size_t>(i)] *
                         loss_derivative(loss, y[static_cast<std::size_t>(i)], x.row(i).dot(w) + b) / n;
        g += d * x.row(i).transpose();
        gb += d;
    }
    return g + alpha * penalty_gradient(pen, w);
}

} // namespace

TEST(ClassWeights, Examples)
{
    const Labels y{1, 1, 1, 1, 1, 1, 1, 1, 0, 0};
    const auto w = class_weights(y);
    EXPECT_DOUBLE_EQ(w[1], 0.625);
    EXPECT_DOUBLE_EQ(w[0], 2.5);
    const auto e = class_weights(Labels{0, 1, 0, 1, 0, 1, 0, 1, 0, 1});
    EXPECT_EQ(e[0], 1.0);
    EXPECT_EQ(e[1], 1.0);
    EXPECT_THROW(class_weights(Labels{1, 1, 1}), ValidationError);
}

TEST(Fit, TwoSeparablePoints)
{
    Matrix x(2, 1);
    x << -1, 1;
    const Labels y{0, 1};
    for (Loss l : {Loss::log_loss, Loss::modified_huber}) {
        SgdConfig cfg;
        cfg.loss = l;
        cfg.alpha = 1e-5;
        const auto m = fit_linear(x, y, cfg);
        EXPECT_GT(m.weights(0), 0.0);
        const Vector s = m.decision(x);
        EXPECT_LT(s(0), 0.0);
        EXPECT_GT(s(1), 0.0);
    }
}

TEST(Fit, DeterministicUnderSeed)
{
    const auto s = logistic_sample(1, 150);
    SgdConfig cfg;
    cfg.seed = 42;
    const auto a = fit_linear(s.x, s.y, cfg), b = fit_linear(s.x, s.y, cfg);
    EXPECT_EQ(to_text(a), to_text(b));
    cfg.seed = 43;
    const auto c = fit_linear(s.x, s.y, cfg);
    EXPECT_NE(a.weights(0), c.weights(0));
}

TEST(Fit, Errors)
{
    Matrix x(3, 2);
    x << 1, 2, 3, 4, 5, 6;
    EXPECT_THROW(fit_linear(x, Labels{1, 1, 1}, {}), ValidationError);
    x(1, 1) = std::numeric_limits<double>::infinity();
    EXPECT_THROW(fit_linear(x, Labels{0, 1, 0}, {}), ValidationError);
    x(1, 1) = 0;
    EXPECT_THROW(fit_linear(x, Labels{0, 1}, {}), ValidationError);
    LinearModel m;
    m.weights = Vector::Zero(3);
    EXPECT_THROW(m.decision(x), ValidationError);
}

TEST(Fit, WithinFifteenPercentOfFullBatchReference)
{
    const auto s = logistic_sample(7, 200);
    SgdConfig cfg;
    cfg.alpha = 1e-5;
    const auto cw = class_weights(s.y);
    std::vector<double> w;
    for (int v : s.y)
        w.push_back(cw[static_cast<std::size_t>(v)]);
    const auto [a, b] = oracle::logistic_1d_reference(s.xs, s.y, w, cfg.alpha);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        cfg.seed = seed;
        const auto m = fit_linear(s.x, s.y, cfg);
        EXPECT_LE(std::hypot(m.weights(0) - a, m.intercept - b) / std::hypot(a, b), 0.15) << "seed " << seed;
    }
}

TEST(Probability, Examples)
{
    EXPECT_EQ(LinearModel::probability(Loss::log_loss, 0.0), 0.5);
    EXPECT_EQ(LinearModel::probability(Loss::modified_huber, 0.0), 0.5);
    EXPECT_EQ(LinearModel::probability(Loss::modified_huber, 3.0), 1.0);
    EXPECT_NEAR(LinearModel::probability(Loss::log_loss, std::log(3.0)), 0.75, 1e-15);
    for (Loss l : {Loss::log_loss, Loss::modified_huber}) {
        double prev = -1;
        for (double s = -5; s <= 5; s += 0.01) {
            const double p = LinearModel::probability(l, s);
            EXPECT_GE(p, prev);
            prev = p;
        }
    }
}

TEST(Gradient, MatchesCentralDifferences)
{
    std::mt19937 g(99);
    std::normal_distribution<double> z;
    std::bernoulli_distribution coin;
    const double h = 1e-6;
    int checked = 0;
    for (Loss loss : {Loss::log_loss, Loss::modified_huber})
        for (Penalty pen : {Penalty::l1, Penalty::l2})
            for (int rep = 0; rep < 20; ++rep) {
                Matrix x(3, 4);
                Labels y;
                for (int i = 0; i < 3; ++i) {
                    for (int j = 0; j < 4; ++j)
                        x(i, j) = z(g);
                    y.push_back(coin(g) ? 1 : 0);
                }
                Vector w(4);
                for (int j = 0; j < 4; ++j)
                    w(j) = 0.5 * z(g);
                const double b = 0.3 * z(g), alpha = 0.05;
                // stay away from kinks
                bool near_kink = false;
                for (int j = 0; j < 4; ++j)
                    near_kink |= std::abs(w(j)) < 1e-3;
                for (int i = 0; i < 3; ++i) {
                    const double m = (y[static_cast<std::size_t>(i)] ? 1 : -1) * (x.row(i).dot(w) + b);
                    near_kink |= std::abs(std::abs(m) - 1.0) < 1e-3;
                }
                if (near_kink)
                    continue;
                const std::vector<double> sw{1.0, 2.0, 0.5};
                double gb = 0;
                const Vector ga = analytic_gradient(x, y, sw, w, b, loss, pen, alpha, gb);
                auto f = [&](const Vector& ww, double bb) { return objective_value(x, y, sw, ww, bb, loss, pen, alpha); };
                for (int j = 0; j < 4; ++j) {
                    Vector wp = w, wm = w;
                    wp(j) += h;
                    wm(j) -= h;
                    const double fd = (f(wp, b) - f(wm, b)) / (2 * h);
                    EXPECT_LE(std::abs(fd - ga(j)), 1e-5 * std::max(1.0, std::abs(ga(j))));
                }
                const double fdb = (f(w, b + h) - f(w, b - h)) / (2 * h);
                EXPECT_LE(std::abs(fdb - gb), 1e-5 * std::max(1.0, std::abs(gb)));
                ++checked;
            }
    EXPECT_GE(checked, 60);
}

TEST(Objective, DuplicationEqualsWeighting)
{
    // minority class duplicated k times with unit weights vs weight k
    std::mt19937 g(4);
    std::normal_distribution<double> z;
    const int k = 3;
    Matrix x(6, 2);
    for (int i = 0; i < 6; ++i)
        x.row(i) << z(g), z(g);
    const Labels y{0, 0, 0, 0, 1, 1};
    std::vector<double> wts{1, 1, 1, 1, k, k};
    Matrix xd(4 + 2 * k, 2);
    Labels yd;
    for (int i = 0; i < 4; ++i) {
        xd.row(i) = x.row(i);
        yd.push_back(0);
    }
    for (int r = 0; r < k; ++r)
        for (int i = 4; i < 6; ++i) {
            xd.row(static_cast<Eigen::Index>(yd.size())) = x.row(i);
            yd.push_back(1);
        }
    Vector w(2);
    w << 0.4, -0.7;
    for (Loss l : {Loss::log_loss, Loss::modified_huber}) {
        const std::vector<double> ones(yd.size(), 1.0);
        const double dup = objective_value(xd, yd, ones, w, 0.1, l, Penalty::l2, 0.0) * static_cast<double>(yd.size());
        const double wtd = objective_value(x, y, wts, w, 0.1, l, Penalty::l2, 0.0) * 6.0;
        EXPECT_NEAR(dup, wtd, 1e-12);
    }
}

TEST(L1, ProducesExactZeros)
{
    std::mt19937 g(12);
    std::normal_distribution<double> z;
    Matrix x(200, 6);
    Labels y;
    for (int i = 0; i < 200; ++i) {
        for (int j = 0; j < 6; ++j)
            x(i, j) = z(g);
        y.push_back(x(i, 0) + 0.3 * z(g) > 0 ? 1 : 0);
    }
    SgdConfig cfg;
    cfg.penalty = Penalty::l1;
    cfg.alpha = 0.05;
    const auto m = fit_linear(x, y, cfg);
    EXPECT_GT(m.weights(0), 0.0);
    int zeros = 0;
    for (int j = 1; j < 6; ++j)
        zeros += m.weights(j) == 0.0 ? 1 : 0;
    EXPECT_GE(zeros, 3);
}

TEST(ModelText, RoundTripExact)
{
    const auto s = logistic_sample(5, 80);
    SgdConfig cfg;
    cfg.loss = Loss::modified_huber;
    cfg.penalty = Penalty::l1;
    cfg.alpha = 3.3e-4;
    cfg.seed = 123456789012345ull;
    const auto m = fit_linear(s.x, s.y, cfg);
    const auto back = linear_model_from_text(to_text(m));
    EXPECT_EQ(back.weights, m.weights);
    EXPECT_EQ(back.intercept, m.intercept);
    EXPECT_EQ(back.config.alpha, cfg.alpha);
    EXPECT_EQ(back.config.seed, cfg.seed);
    EXPECT_EQ(back.config.loss, cfg.loss);
    EXPECT_EQ(to_text(back), to_text(m));
    EXPECT_THROW(linear_model_from_text("fluidlab-linear-model 2\n"), ValidationError);
}

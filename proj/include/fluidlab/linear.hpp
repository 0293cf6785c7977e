#pragma once

// Linear binary classifier trained by plain SGD with balanced class weights.

#include "fluidlab/core.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace fluidlab {

enum class Loss { log_loss, modified_huber };
enum class Penalty { l1, l2 };

inline std::string to_string(Loss l) { return l == Loss::log_loss ? "log_loss" : "modified_huber"; }
inline std::string to_string(Penalty p) { return p == Penalty::l1 ? "l1" : "l2"; }

inline Loss parse_loss(const std::string& s)
{
    if (s == "log_loss")
        return Loss::log_loss;
    if (s == "modified_huber")
        return Loss::modified_huber;
    throw ValidationError("unknown loss '" + s + "' (expected log_loss, modified_huber)");
}

inline Penalty parse_penalty(const std::string& s)
{
    if (s == "l1" || s == "L1")
        return Penalty::l1;
    if (s == "l2" || s == "L2")
        return Penalty::l2;
    throw ValidationError("unknown penalty '" + s + "' (expected l1, l2)");
}

struct SgdConfig {
    Loss loss = Loss::log_loss;
    Penalty penalty = Penalty::l2;
    double alpha = 1e-4;
    int max_epochs = 1000;
    double tol = 1e-3;
    /// Consecutive epochs without an objective improvement of at least `tol`
    /// before stopping.
    int n_iter_no_change = 5;
    std::uint64_t seed = 0;
    bool balanced = true;
    /// Return the running mean of the iterates from the second epoch on.
    bool average = true;

    void validate() const
    {
        require(alpha > 0.0 && std::isfinite(alpha), "alpha must be positive");
        require(max_epochs >= 1, "max_epochs must be >= 1");
        require(n_iter_no_change >= 1, "n_iter_no_change must be >= 1");
    }
};

// Labels are {0, 1}; internally the margin uses y in {-1, +1}.

inline double sigmoid(double z)
{
    if (z >= 0)
        return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double loss_value(Loss loss, int y, double score)
{
    const double z = (y ? 1.0 : -1.0) * score;
    if (loss == Loss::log_loss)
        return z > 18 ? std::exp(-z) : (z < -18 ? -z : std::log1p(std::exp(-z)));
    if (z >= 1.0)
        return 0.0;
    if (z >= -1.0)
        return (1.0 - z) * (1.0 - z);
    return -4.0 * z;
}

/// d loss / d score.
inline double loss_derivative(Loss loss, int y, double score)
{
    const double ys = y ? 1.0 : -1.0;
    const double z = ys * score;
    if (loss == Loss::log_loss)
        return -ys * sigmoid(-z);
    if (z >= 1.0)
        return 0.0;
    if (z >= -1.0)
        return -2.0 * (1.0 - z) * ys;
    return -4.0 * ys;
}

inline double penalty_value(Penalty p, const Vector& w)
{
    return p == Penalty::l2 ? 0.5 * w.squaredNorm() : w.lpNorm<1>();
}

/// Subgradient of the penalty; sign(0) = 0 for L1.
inline Vector penalty_gradient(Penalty p, const Vector& w)
{
    if (p == Penalty::l2)
        return w;
    return w.unaryExpr([](double v) { return double((v > 0) - (v < 0)); });
}

/// n_total / (2 * n_c) for each class.
inline std::array<double, 2> class_weights(std::span<const int> labels)
{
    std::array<double, 2> n{0, 0};
    for (int y : labels) {
        require(y == 0 || y == 1, "labels must be 0 or 1");
        n[y] += 1;
    }
    require(n[0] > 0 && n[1] > 0, "class_weights: both classes must be present");
    const double total = n[0] + n[1];
    return {total / (2.0 * n[0]), total / (2.0 * n[1])};
}

struct LinearModel {
    Vector weights;
    double intercept = 0.0;
    SgdConfig config;
    int epochs = 0;

    std::size_t n_features() const { return static_cast<std::size_t>(weights.size()); }

    Vector decision(const Matrix& x) const
    {
        require(x.cols() == weights.size(), "decision: expected " + std::to_string(weights.size()) +
                                                " features, got " + std::to_string(x.cols()));
        return (x * weights).array() + intercept;
    }

    /// log_loss: logistic sigmoid; modified_huber: (clamp(score, -1, 1) + 1) / 2.
    static double probability(Loss loss, double score)
    {
        if (loss == Loss::log_loss)
            return sigmoid(score);
        return (std::clamp(score, -1.0, 1.0) + 1.0) / 2.0;
    }

    Vector predict_proba(const Matrix& x) const
    {
        const Loss l = config.loss;
        return decision(x).unaryExpr([l](double s) { return probability(l, s); });
    }
};

/// Full-batch objective: (1/n) sum_i w_i loss(y_i, f(x_i)) + alpha * penalty(w).
inline double objective_value(const Matrix& x, std::span<const int> y, std::span<const double> sample_weight,
                              const Vector& w, double b, Loss loss, Penalty penalty, double alpha)
{
    const Vector scores = (x * w).array() + b;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        acc += sample_weight[static_cast<std::size_t>(i)] * loss_value(loss, y[static_cast<std::size_t>(i)], scores(i));
    return acc / static_cast<double>(x.rows()) + alpha * penalty_value(penalty, w);
}

inline std::vector<double> effective_weights(std::span<const int> y, std::span<const double> sample_weight,
                                             bool balanced)
{
    std::vector<double> sw(y.size(), 1.0);
    if (!sample_weight.empty()) {
        require(sample_weight.size() == y.size(), "sample_weight length mismatch");
        sw.assign(sample_weight.begin(), sample_weight.end());
    }
    if (balanced) {
        const auto cw = class_weights(y);
        for (std::size_t i = 0; i < y.size(); ++i)
            sw[i] *= cw[static_cast<std::size_t>(y[i])];
    }
    return sw;
}

/// SGD with step 1 / (alpha * (t0 + t)), t0 set so the first step is at most
/// 1 and at most 1 / L for the largest per-sample curvature bound L. With
/// `average`, the result is the mean iterate from epoch 2 on. L1 uses
/// cumulative truncated-gradient clipping so weights that cross zero stay
/// exactly zero. Deterministic given (x, y, weights, cfg).
inline LinearModel fit_linear(const Matrix& x, std::span<const int> y, const SgdConfig& cfg,
                              std::span<const double> sample_weight = {})
{
    cfg.validate();
    require(x.rows() >= 2, "fit: need at least 2 rows");
    require(static_cast<std::size_t>(x.rows()) == y.size(), "fit: rows(X) != len(y)");
    require(x.allFinite(), "fit: non-finite feature");
    const auto sw = effective_weights(y, sample_weight, cfg.balanced);
    if (!cfg.balanced) {
        bool has0 = false, has1 = false;
        for (int v : y) {
            require(v == 0 || v == 1, "labels must be 0 or 1");
            (v ? has1 : has0) = true;
        }
        require(has0 && has1, "fit: both classes must be present");
    }

    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    LinearModel m;
    m.config = cfg;
    m.weights = Vector::Zero(d);

    const double typw = std::sqrt(1.0 / std::sqrt(cfg.alpha));
    double eta0 = std::min(1.0, typw / std::max(1.0, std::abs(loss_derivative(cfg.loss, 1, -typw))));
    // never step past 1 / L of the roughest single-sample loss (bias column included)
    double lmax = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        lmax = std::max(lmax, sw[static_cast<std::size_t>(i)] * (x.row(i).squaredNorm() + 1.0));
    lmax *= cfg.loss == Loss::log_loss ? 0.25 : 2.0;
    if (lmax > 0.0)
        eta0 = std::min(eta0, 1.0 / lmax);
    const double t0 = 1.0 / (eta0 * cfg.alpha);

    Vector q = Vector::Zero(d); // L1: penalty actually applied per weight
    double u = 0.0;             // L1: total penalty that could have been applied
    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(cfg.seed, 0x5346));

    double best = std::numeric_limits<double>::infinity();
    int stale = 0;
    double t = 0.0;
    Vector avg_w = Vector::Zero(d);
    double avg_b = 0.0, avg_n = 0.0;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        shuffle(order, rng);
        for (std::size_t i : order) {
            const auto r = static_cast<Eigen::Index>(i);
            const double eta = 1.0 / (cfg.alpha * (t0 + t));
            t += 1.0;
            const double score = x.row(r).dot(m.weights) + m.intercept;
            const double g = sw[i] * loss_derivative(cfg.loss, y[i], score);
            if (cfg.penalty == Penalty::l2)
                m.weights *= std::max(0.0, 1.0 - eta * cfg.alpha);
            if (g != 0.0) {
                m.weights.noalias() -= (eta * g) * x.row(r).transpose();
                m.intercept -= eta * g;
            }
            if (cfg.penalty == Penalty::l1) {
                u += eta * cfg.alpha;
                for (Eigen::Index j = 0; j < d; ++j) {
                    const double z = m.weights(j);
                    if (z > 0)
                        m.weights(j) = std::max(0.0, z - (u + q(j)));
                    else if (z < 0)
                        m.weights(j) = std::min(0.0, z + (u - q(j)));
                    q(j) += m.weights(j) - z;
                }
            }
            if (cfg.average && epoch > 0) {
                avg_n += 1.0;
                avg_w += (m.weights - avg_w) / avg_n;
                avg_b += (m.intercept - avg_b) / avg_n;
            }
        }
        m.epochs = epoch + 1;
        const Vector& cur_w = avg_n > 0 ? avg_w : m.weights;
        const double cur_b = avg_n > 0 ? avg_b : m.intercept;
        const double obj = objective_value(x, y, sw, cur_w, cur_b, cfg.loss, cfg.penalty, cfg.alpha);
        if (!std::isfinite(obj))
            throw Error("fit: objective diverged");
        if (obj > best - cfg.tol)
            ++stale;
        else
            stale = 0;
        best = std::min(best, obj);
        if (stale >= cfg.n_iter_no_change)
            break;
    }
    if (avg_n > 0) {
        // L1 keeps the final iterate's exact zeros
        if (cfg.penalty == Penalty::l1)
            avg_w = (m.weights.array() == 0.0).select(0.0, avg_w);
        m.weights = avg_w;
        m.intercept = avg_b;
    }
    return m;
}

// ---------------------------------------------------------------- text record

/// Flat text record; every real is written with 17 significant digits.
inline std::string to_text(const LinearModel& m)
{
    std::ostringstream os;
    os << "fluidlab-linear-model 1\n";
    os << "loss " << to_string(m.config.loss) << '\n';
    os << "penalty " << to_string(m.config.penalty) << '\n';
    os << "alpha " << format_double(m.config.alpha, 17) << '\n';
    os << "max_epochs " << m.config.max_epochs << '\n';
    os << "tol " << format_double(m.config.tol, 17) << '\n';
    os << "n_iter_no_change " << m.config.n_iter_no_change << '\n';
    os << "seed " << m.config.seed << '\n';
    os << "balanced " << (m.config.balanced ? 1 : 0) << '\n';
    os << "average " << (m.config.average ? 1 : 0) << '\n';
    os << "epochs " << m.epochs << '\n';
    os << "intercept " << format_double(m.intercept, 17) << '\n';
    os << "weights " << m.weights.size();
    for (Eigen::Index j = 0; j < m.weights.size(); ++j)
        os << ' ' << format_double(m.weights(j), 17);
    os << '\n';
    return os.str();
}

inline LinearModel linear_model_from_text(const std::string& text)
{
    std::istringstream is(text);
    auto expect = [&](const std::string& key) {
        std::string k;
        if (!(is >> k) || k != key)
            throw ValidationError("linear model record: expected '" + key + "'");
    };
    auto next = [&](auto& v, const std::string& key) {
        expect(key);
        if (!(is >> v))
            throw ValidationError("linear model record: bad value for '" + key + "'");
    };
    LinearModel m;
    std::string tag, s;
    int version = 0;
    if (!(is >> tag >> version) || tag != "fluidlab-linear-model" || version != 1)
        throw ValidationError("linear model record: bad header");
    next(s, "loss");
    m.config.loss = parse_loss(s);
    next(s, "penalty");
    m.config.penalty = parse_penalty(s);
    next(m.config.alpha, "alpha");
    next(m.config.max_epochs, "max_epochs");
    next(m.config.tol, "tol");
    next(m.config.n_iter_no_change, "n_iter_no_change");
    next(m.config.seed, "seed");
    int balanced = 1;
    next(balanced, "balanced");
    m.config.balanced = balanced != 0;
    int average = 1;
    next(average, "average");
    m.config.average = average != 0;
    next(m.epochs, "epochs");
    next(m.intercept, "intercept");
    Eigen::Index d = 0;
    next(d, "weights");
    require(d >= 0, "linear model record: negative dimension");
    m.weights.resize(d);
    for (Eigen::Index j = 0; j < d; ++j)
        if (!(is >> m.weights(j)))
            throw ValidationError("linear model record: truncated weights");
    require(m.weights.allFinite() && std::isfinite(m.intercept), "linear model record: non-finite weights");
    return m;
}

} // namespace fluidlab

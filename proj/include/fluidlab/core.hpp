#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace fluidlab {

/// Row-major so that per-sample SGD updates walk contiguous memory.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;
using Rng = std::mt19937_64;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: malformed file, violated precondition, unknown option.
/// The CLI maps this to exit code 1; any other exception maps to 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

inline void require(bool cond, const std::string& msg)
{
    if (!cond)
        throw ValidationError(msg);
}

/// Derives an independent stream seed from a base seed and a tag
/// (splitmix64 finalizer).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag)
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Uniform double in [0, 1) from the top 53 bits; independent of the
/// standard library's distribution implementation.
inline double uniform01(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi)
{
    return lo + (hi - lo) * uniform01(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n)
{
    return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

/// Standard normal via Box-Muller.
inline double normal01(Rng& rng)
{
    double u1 = uniform01(rng);
    while (u1 <= 0.0)
        u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Fisher-Yates with the portable index draw above.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng)
{
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

inline bool all_finite(const Matrix& m)
{
    return m.allFinite();
}

/// Rows of `m` selected by `idx`, in order.
inline Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& idx)
{
    Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
    return out;
}

inline Matrix take_cols(const Matrix& m, const std::vector<std::size_t>& idx)
{
    Matrix out(m.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j)
        out.col(static_cast<Eigen::Index>(j)) = m.col(static_cast<Eigen::Index>(idx[j]));
    return out;
}

inline Matrix vstack(const Matrix& a, const Matrix& b)
{
    if (a.rows() == 0)
        return b;
    if (b.rows() == 0)
        return a;
    Matrix out(a.rows() + b.rows(), a.cols());
    out << a, b;
    return out;
}

/// Shortest-round-trip-safe decimal rendering with the given significant digits.
inline std::string format_double(double v, int sig_digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", sig_digits, v);
    return buf;
}

} // namespace fluidlab

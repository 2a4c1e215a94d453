// SPDX-License-Identifier: Apache-2.0

#ifndef APMAP_COMMON_HPP
#define APMAP_COMMON_HPP

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace apmap {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Rng = std::mt19937_64;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kPi = 3.1415926535897932384626433832795;
inline constexpr double kLn10 = 2.3025850929940456840179914546844;

/// Base class for all domain errors raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CoincidentPoint final : Error {
    CoincidentPoint() : Error("query point coincides with a base station") {}
};

struct LengthMismatch final : Error {
    using Error::Error;
};

/// Wrap an angle to [0, 2*pi).
inline double wrap_angle(double a) {
    double r = std::fmod(a, kTwoPi);
    if (r < 0.0)
        r += kTwoPi;
    // fmod can round back up to 2*pi for tiny negative inputs
    if (r >= kTwoPi)
        r = 0.0;
    return r;
}

/// Minimal signed circular difference a - b, in (-pi, pi].
inline double angle_diff(double a, double b) {
    double d = std::fmod(a - b, kTwoPi);
    if (d > kPi)
        d -= kTwoPi;
    else if (d <= -kPi)
        d += kTwoPi;
    return d;
}

inline double sq(double x) { return x * x; }

/// log(sum(exp(v))) without overflow; -inf for an empty range.
double log_sum_exp(const std::vector<double>& v);

/// Runs fn(i) for i in [0, n) on up to `workers` threads.
/// Results must be written to pre-sized slots; iteration order within a
/// worker is ascending, so per-index outputs are deterministic.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

} // namespace apmap

#endif

// SPDX-License-Identifier: Apache-2.0

#ifndef APMAP_CRLB_HPP
#define APMAP_CRLB_HPP

#include "apmap/channel.hpp"
#include "apmap/synth.hpp"
#include "apmap/topology.hpp"

#include <Eigen/Dense>

#include <vector>

namespace apmap {

struct TrajectoryThroughBS final : Error {
    TrajectoryThroughBS() : Error("trajectory passes through a base station") {}
};

struct SingularGeometry final : Error {
    SingularGeometry() : Error("station geometry leaves a direction unobservable") {}
};

struct InvalidRadii final : Error {
    InvalidRadii() : Error("need R > r0 > 0") {}
};

/// Constant-speed measurement model used throughout this module:
/// x_t = x + t * delta * v for slot t = 1..T, i.e. x is the position one slot
/// before the first measurement. All alpha values are in dB per decade, as in
/// the measurement model; derivatives carry the implied 1/ln(10).

struct FimResult {
    Eigen::Matrix4d f_psi;  // ordered (x1, x2, v1, v2)
    Mat2 f_x;
    Mat2 f_v;
    double crlb_x = 0.0; // tr{f_x^-1}, m^2; +inf when singular
    double crlb_v = 0.0; // tr{f_v^-1}, (m/s)^2; +inf when singular
};

/// Exact Fisher information of (x, v) for the constant-speed path-loss model;
/// params supplies per-station (alpha, sigma). Throws TrajectoryThroughBS
/// when some d_{t,q} vanishes.
FimResult fim_psi(const Topology& topo, const Vec2& x, const Vec2& v, double delta,
                  const std::vector<PathLossParams>& params, int T);

/// sum_{t=1..T} t^n / d_{t,q}^4.
double series_s(int T, int q, int n, const Vec2& x, const Vec2& v, double delta,
                const Topology& topo);

struct BoundConfig {
    double r0 = 1.0;           // minimum station distance, meters
    double alpha_min2 = 400.0; // extremal (dB/decade)^2 path-loss slopes
    double alpha_max2 = 400.0;
    double sigma_min2 = 0.01;  // extremal shadowing variances, dB^2
    double sigma_max2 = 0.01;
};

/// Limited-region lower bound on the CRLB of x (meters^2); equals the true
/// CRLB when all stations sit at the extremal (alpha, sigma).
double bound_limited_x(int T, const Topology& topo, const Vec2& x, const Vec2& v, double delta,
                       const BoundConfig& cfg);

struct LimitedVBound {
    double value = 0.0; // (m/s)^2 at horizon T
    double c_v = 0.0;   // T -> infinity limit
};

LimitedVBound bound_limited_v(int T, const Topology& topo, const Vec2& x, const Vec2& v,
                              double delta, const BoundConfig& cfg);

/// PPP upper bounds on the CRLB. The per-slot expectation matrix of the
/// annulus-averaged information is isotropic and slot-independent, so the
/// stated large-T asymptote holds exactly at every T.
double bound_unlimited_x(int T, double kappa, double R, double r0, double delta,
                         const BoundConfig& cfg);
double bound_unlimited_v(int T, double kappa, double R, double r0, double delta,
                         const BoundConfig& cfg);

/// Numeric double integral of x^2/(x^2+y^2)^2 over the annulus r0 <= r <= R;
/// approaches pi * ln(R/r0).
double expected_projection_integral(double R, double r0);

struct MleConfig {
    enum class Kind { kScenario1, kScenario2 };
    Kind kind = Kind::kScenario2;
    Scenario1Config s1;
    Scenario2Config s2;
    TrajectorySpec tspec;  // must be kLinear (gamma = 1)
    PathLossConfig plc;
    int random_starts_per_scale = 2; // plus one start at the truth
    int max_iters = 200;
};

struct MleCurves {
    std::vector<int> T;
    std::vector<double> mse_x; // m^2
    std::vector<double> mse_v; // (m/s)^2
    std::vector<int> trials_used;
    std::vector<int> trials_failed;
};

/// Monte-Carlo MSE of the joint (x, v, alpha, beta) maximum-likelihood fit,
/// one fresh layout and noise draw per trial, multi-start quasi-Newton search
/// seeded at truth-perturbed points. Non-convergent trials are dropped and
/// counted.
MleCurves mle_experiment(const MleConfig& cfg, const std::vector<int>& T_list, int trials,
                         std::uint64_t seed, int workers = 0);

} // namespace apmap

#endif

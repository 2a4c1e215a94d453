// SPDX-License-Identifier: Apache-2.0

#include "apmap/mobility.hpp"

namespace apmap {

void validate(const MobilityParams& mp) {
    if (!(mp.gamma > 0.0) || mp.gamma > 1.0)
        throw std::invalid_argument("gamma must be in (0, 1]");
    if (mp.accel_var < 0.0)
        throw std::invalid_argument("accel_var must be >= 0");
    if (!(mp.slot > 0.0))
        throw std::invalid_argument("slot duration must be > 0");
    if (!mp.mean_velocity.allFinite())
        throw std::invalid_argument("mean velocity must be finite");
}

Vec2 step(const Vec2& x_prev, const Vec2& x_prev2, const MobilityParams& mp, Rng& rng) {
    validate(mp);
    const double noise_scale = std::sqrt(1.0 - mp.gamma * mp.gamma) * mp.slot;
    Vec2 eps{0.0, 0.0};
    if (noise_scale > 0.0 && mp.accel_var > 0.0) {
        std::normal_distribution<double> n(0.0, std::sqrt(mp.accel_var));
        eps = Vec2{n(rng), n(rng)};
    }
    return x_prev + mp.gamma * (x_prev - x_prev2) + (1.0 - mp.gamma) * mp.slot * mp.mean_velocity +
           noise_scale * eps;
}

Trajectory simulate(const Vec2& x0, const Vec2& x1, const MobilityParams& mp, int T, Rng& rng) {
    if (T < 2)
        throw InsufficientData{"simulate requires T >= 2"};
    Trajectory traj;
    traj.positions.reserve(static_cast<std::size_t>(T));
    traj.positions.push_back(x0);
    traj.positions.push_back(x1);
    for (int t = 2; t < T; ++t) {
        const std::size_t n = traj.positions.size();
        traj.positions.push_back(step(traj.positions[n - 1], traj.positions[n - 2], mp, rng));
    }
    return traj;
}

double log_transition(const Vec2& x_t, const Vec2& x_prev, const Vec2& x_prev2,
                      const MobilityParams& mp) {
    validate(mp);
    if (mp.gamma == 1.0)
        throw DegenerateGamma{};
    if (!(mp.accel_var > 0.0))
        throw std::invalid_argument("log_transition requires accel_var > 0");
    // per-axis variance of the residual
    const double s2 = (1.0 - mp.gamma * mp.gamma) * sq(mp.slot) * mp.accel_var;
    const Vec2 resid = x_t - (1.0 + mp.gamma) * x_prev + mp.gamma * x_prev2 -
                       (1.0 - mp.gamma) * mp.slot * mp.mean_velocity;
    return -std::log(kTwoPi * s2) - resid.squaredNorm() / (2.0 * s2);
}

} // namespace apmap

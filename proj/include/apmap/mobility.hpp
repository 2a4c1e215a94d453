// SPDX-License-Identifier: Apache-2.0

#ifndef APMAP_MOBILITY_HPP
#define APMAP_MOBILITY_HPP

#include "apmap/common.hpp"

#include <vector>

namespace apmap {

struct DegenerateGamma final : Error {
    DegenerateGamma() : Error("gamma = 1 makes the transition density degenerate") {}
};

struct InsufficientData final : Error {
    using Error::Error;
};

/// Gauss-Markov mobility: the per-slot displacement follows
///   x_t - x_{t-1} = gamma (x_{t-1} - x_{t-2}) + (1-gamma) delta vbar
///                   + sqrt(1-gamma^2) delta eps,   eps ~ N(0, accel_var I).
struct MobilityParams {
    Vec2 mean_velocity{0.0, 0.0}; // vbar, m/s
    double accel_var = 1.0;       // sigma_v^2, (m/s)^2
    double gamma = 0.9;           // velocity memory, (0, 1]
    double slot = 0.5;            // delta, seconds
};

void validate(const MobilityParams& mp);

struct Trajectory {
    std::vector<Vec2> positions;

    std::size_t size() const { return positions.size(); }
    const Vec2& operator[](std::size_t i) const { return positions[i]; }
    Vec2& operator[](std::size_t i) { return positions[i]; }
};

/// One Gauss-Markov step from the two most recent positions. Exactly
/// deterministic when gamma = 1 (the noise coefficient vanishes).
Vec2 step(const Vec2& x_prev, const Vec2& x_prev2, const MobilityParams& mp, Rng& rng);

/// Iterates `step` from the seed pair (x0, x1); positions[0..1] = (x0, x1).
Trajectory simulate(const Vec2& x0, const Vec2& x1, const MobilityParams& mp, int T, Rng& rng);

/// Log of the properly normalized 2-D transition density evaluated at x_t.
/// Throws DegenerateGamma when gamma = 1 (Dirac transition).
double log_transition(const Vec2& x_t, const Vec2& x_prev, const Vec2& x_prev2,
                      const MobilityParams& mp);

} // namespace apmap

#endif

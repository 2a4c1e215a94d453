// SPDX-License-Identifier: Apache-2.0

#ifndef APMAP_RECOVER_HPP
#define APMAP_RECOVER_HPP

#include "apmap/estimators.hpp"
#include "apmap/grid.hpp"
#include "apmap/viterbi.hpp"

#include <optional>
#include <utility>

namespace apmap {

/// Joint log-likelihood of measurements and trajectory: per-slot observation
/// terms plus Gauss-Markov transition log-densities from the third slot on.
double recovery_objective(const MeasurementSeries& series, const Trajectory& traj,
                          const Topology& topo, const PropagationParams& pp,
                          const MobilityParams& mp);

/// As above, also writing the per-position gradient when grad is non-null.
double recovery_objective(const MeasurementSeries& series, const Trajectory& traj,
                          const Topology& topo, const PropagationParams& pp,
                          const MobilityParams& mp, std::vector<Vec2>* grad);

/// Continuous-space ascent on the recovery objective, starting from traj0.
/// Steps are accepted only if the objective does not decrease (backtracking
/// halving); requires gamma < 1.
Trajectory refine_gradient(const Trajectory& traj0, const MeasurementSeries& series,
                           const Topology& topo, const PropagationParams& pp,
                           const MobilityParams& mp, double learning_rate, int max_iters);

struct RecoverConfig {
    std::uint64_t seed = 1;
    int outer_iters = 12;
    PruneConfig prune;
    double learning_rate = 0.01;
    int refine_iters = 200;
    PropagationFitConfig prop;
    /// Keep these propagation parameters fixed instead of fitting them
    /// (genie-aided mode).
    std::optional<PropagationParams> fixed_pp;
    /// Seed the alternation from a coarse constant-speed scan instead of a
    /// purely random parameter draw. Purely random starts tend to collapse
    /// into a static decode whose propagation fit is degenerate.
    bool bootstrap = true;
    /// Which diversity-ranked scan candidate seeds this run; restarts walk
    /// down the ranking so the final objective can arbitrate between basins.
    int bootstrap_rank = 0;
    /// Lower bound on the fitted per-slot innovation, in grid spacings; stops
    /// the transition density from freezing the decode onto a bad path.
    double min_innovation_factor = 0.25;
    int workers = 1;
};

/// Coarse global scan over constant-speed trajectories on the grid (start
/// and signed speed), ranked by the profiled aggregate path-loss likelihood.
/// `rank` selects among mutually distant high-scoring candidates (0 = best);
/// the pick is then locally refined.
Trajectory bootstrap_constant_speed(const MeasurementSeries& series, const Topology& topo,
                                    const GridGraph& graph, int workers = 1, int rank = 0);

struct RecoverResult {
    Trajectory trajectory;
    PropagationParams pp;
    MobilityParams mp;
    std::vector<double> objective_trace; // one entry per outer iteration
    int outer_iterations = 0;
};

/// Alternating trajectory recovery: random parameter init, then
/// {Viterbi decode -> gradient refinement -> propagation fit -> mobility fit}
/// until the decoded path repeats. Each update is guarded so the objective
/// never decreases.
RecoverResult recover(const MeasurementSeries& series, const Topology& topo,
                      const GridGraph& graph, double gamma, double delta,
                      const RecoverConfig& cfg);

/// (1/T) sum of per-slot position errors, meters.
double localization_error(const Trajectory& truth, const Trajectory& est);

/// Position of the station with the strongest observed power per slot; ties
/// resolve to the lowest (q, m). Slots without observations repeat the
/// previous estimate (station centroid before any observation).
Trajectory baseline_mar(const MeasurementSeries& series, const Topology& topo);

/// Weighted centroid with weights 10^(y/20), normalized per slot over the
/// observed entries.
Trajectory baseline_wcl(const MeasurementSeries& series, const Topology& topo);

/// Collapses each station to a single pseudo-beam carrying the strongest
/// observed beam power per slot (path-loss-only variant of the recovery).
std::pair<Topology, MeasurementSeries> reduce_to_strongest_beam(const Topology& topo,
                                                                const MeasurementSeries& series);

} // namespace apmap

#endif

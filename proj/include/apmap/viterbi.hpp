// SPDX-License-Identifier: Apache-2.0

#ifndef APMAP_VITERBI_HPP
#define APMAP_VITERBI_HPP

#include "apmap/channel.hpp"
#include "apmap/grid.hpp"
#include "apmap/mobility.hpp"

#include <vector>

namespace apmap {

struct NoFeasiblePath final : Error {
    NoFeasiblePath() : Error("pruning left no feasible path") {}
};

struct PruneConfig {
    enum class Mode { kLikelihoodThreshold, kTopN };
    Mode mode = Mode::kLikelihoodThreshold;
    /// kLikelihoodThreshold: keep vertices whose per-slot emission likelihood,
    /// divided by the slot maximum, exceeds zeta. zeta <= 0 disables pruning.
    double zeta = 0.8;
    /// kTopN: vertices kept per slot; 0 keeps all.
    int top_n = 0;
};

struct ViterbiStats {
    std::vector<int> retained;       // vertices kept per slot
    std::vector<long long> expanded; // (u, v) pair expansions per slot
};

struct ViterbiResult {
    Trajectory path;
    std::vector<int> vertex_ids;
    double log_score = 0.0; // emissions plus normalized transition log-probs
    ViterbiStats stats;
};

/// Exact MAP decoding of the second-order chain over pair states
/// (x_{t-1}, x_t) constrained to the grid. The first two slots are scored by
/// emissions only; score ties resolve to the lexicographically smallest
/// vertex-id path.
ViterbiResult viterbi2(const MeasurementSeries& series, const Topology& topo,
                       const PropagationParams& pp, const MobilityParams& mp,
                       const GridGraph& graph, const PruneConfig& prune, int workers = 1);

} // namespace apmap

#endif

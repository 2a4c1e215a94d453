// SPDX-License-Identifier: Apache-2.0

#ifndef APMAP_RADIOMAP_HPP
#define APMAP_RADIOMAP_HPP

#include "apmap/recover.hpp"
#include "apmap/synth.hpp"

#include <optional>
#include <vector>

namespace apmap {

struct EmptyMap final : Error {
    EmptyMap() : Error("radio map has no usable entries") {}
};

struct InsufficientHistory final : Error {
    InsufficientHistory() : Error("observation history shorter than the required window") {}
};

struct KTooLarge final : Error {
    KTooLarge() : Error("k exceeds the beam vector length") {}
};

struct ZeroEnergy final : Error {
    ZeroEnergy() : Error("true top-k energy is zero") {}
};

/// One location-labeled fingerprint: sparse measured beam powers plus
/// optional per-station vectors of finer-beam channel quantities.
struct RadioMapEntry {
    Vec2 location{0.0, 0.0};
    std::vector<ObsEntry> ssb;
    std::vector<std::pair<int, std::vector<double>>> csi; // (station id, beam values)
};

using RadioMap = std::vector<RadioMapEntry>;

/// One entry per slot, pairing the recovered position with the slot's
/// measurements (and CSI frame when given). Accumulation across runs is plain
/// concatenation.
RadioMap build_map(const Trajectory& recovered, const MeasurementSeries& series,
                   const CsiSeries* csi = nullptr, const Topology* topo = nullptr);

struct PredictConfig {
    int history_len = 12;               // L
    double v_max = 120.0 * 1000.0 / 3600.0; // m/s
    double learning_rate = 0.01;
    int refine_iters = 50;
    int alternations = 2;
    PruneConfig prune;
};

struct PredictResult {
    Vec2 x_next{0.0, 0.0};
    std::vector<ObsEntry> y_next; // model means at x_next for visible beams
    int matched_index = -1;       // into the radio map
};

/// Short-window trajectory fit over the last L+1 observations (map locations
/// as the search space), constant-memory extrapolation of the next position,
/// model-mean fingerprint there, and nearest-fingerprint lookup over the
/// overlapping (q, m) keys.
PredictResult predict_next(const std::vector<Observation>& history, const RadioMap& map,
                           const Topology& topo, const PropagationParams& pp,
                           const MobilityParams& mp, const PredictConfig& cfg);

using BeamFrame = std::vector<std::vector<double>>; // [station][beam], dB

/// 1 - |top-k overlap| / k, averaged over frames and stations.
double metric_eq(const std::vector<BeamFrame>& pred, const std::vector<BeamFrame>& truth, int k);

/// Mean relative deviation of the summed linear top-k energies.
double metric_ee(const std::vector<BeamFrame>& pred, const std::vector<BeamFrame>& truth, int k);

/// Mean absolute error of the strongest beam value, dB.
double metric_ea(const std::vector<BeamFrame>& pred, const std::vector<BeamFrame>& truth);

/// Adds the mean per-beam increment over the last L steps to the latest frame.
BeamFrame baseline_mi(const std::vector<BeamFrame>& history, int L);

/// Per-beam order-L linear autoregression (with intercept), least-squares fit
/// on `train`, applied to the last L frames of `history`.
BeamFrame baseline_ar(const std::vector<BeamFrame>& history, int L,
                      const std::vector<BeamFrame>& train);

} // namespace apmap

#endif

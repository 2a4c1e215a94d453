// SPDX-License-Identifier: Apache-2.0

#ifndef APMAP_CHANNEL_HPP
#define APMAP_CHANNEL_HPP

#include "apmap/common.hpp"
#include "apmap/topology.hpp"

#include <vector>

namespace apmap {

/// Log-distance path loss: mean received power in dB is
/// beta + alpha * log10(d). alpha is dB per decade of distance (negative for
/// a decaying channel); sigma is the shadowing standard deviation in dB.
struct PathLossParams {
    double alpha = -20.0;
    double beta = 5.0;
    double sigma = 1.0;
};

/// Gaussian-shaped directional gain in dB: omega * exp(-eta * dphi^2) where
/// dphi is the circular difference between the user bearing and `center`.
struct BeamPattern {
    double omega = 0.0;    // peak gain, dB
    double eta = 0.0;      // angular decay, rad^-2
    double center = 0.0;   // boresight, [0, 2*pi)
};

struct StationParams {
    PathLossParams path_loss;
    std::vector<BeamPattern> beams;
};

/// Per-station propagation parameters, aligned with Topology::stations().
struct PropagationParams {
    std::vector<StationParams> stations;

    const StationParams& at(int index) const { return stations.at(static_cast<std::size_t>(index)); }
};

/// Throws std::invalid_argument if sizes or invariants (sigma > 0, eta >= 0,
/// pattern count == beam_count) do not match the topology.
void validate(const PropagationParams& pp, const Topology& topo);

/// One measured beam power: station id, beam index, value in dB.
struct ObsEntry {
    int q = 0;
    int m = 0;
    double y_db = 0.0;
};

/// Sparse per-slot measurement. Entries are kept sorted by (q, m) and unique.
struct Observation {
    int t = 0;
    std::vector<ObsEntry> entries;
};

/// Sorts entries by (q, m); throws std::invalid_argument on duplicates.
void normalize_entries(Observation& obs);

struct MeasurementSeries {
    double slot_duration = 0.5; // seconds
    std::vector<Observation> observations;

    std::size_t size() const { return observations.size(); }
};

/// Throws std::invalid_argument unless slot indices are strictly increasing,
/// T >= 1, and every entry refers to a valid (station, beam) of `topo`.
void validate(const MeasurementSeries& series, const Topology& topo);

/// Mean received power in dB for beam (q, m) at position x:
/// beta_q + alpha_q log10 d(x, o_q) + omega_qm exp(-eta_qm dphi^2).
/// Throws CoincidentPoint when x sits exactly on a station with zero height.
double mean_rsrp_db(const PropagationParams& pp, int q, int m, const Vec2& x,
                    const Topology& topo);

/// Beam indices requested per station for one slot.
struct ObsMask {
    int q = 0;
    std::vector<int> beams;
};

/// Draws one slot of measurements. The shadowing term is drawn once per
/// station and shared by all of that station's beams in the slot.
Observation sample_observation(const PropagationParams& pp, const Topology& topo, const Vec2& x,
                               const std::vector<ObsMask>& mask, int t, Rng& rng);

/// Sum of per-entry Gaussian log-densities under the measurement model;
/// an empty observation contributes 0.
double log_likelihood_obs(const Observation& obs, const Vec2& x, const PropagationParams& pp,
                          const Topology& topo);

} // namespace apmap

#endif

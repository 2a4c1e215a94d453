// SPDX-License-Identifier: Apache-2.0

#ifndef APMAP_SYNTH_HPP
#define APMAP_SYNTH_HPP

#include "apmap/channel.hpp"
#include "apmap/mobility.hpp"
#include "apmap/topology.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace apmap {

/// How the ground-truth trajectory is produced.
struct TrajectorySpec {
    enum class Kind { kLinear, kGaussMarkov, kWaypoints };

    Kind kind = Kind::kLinear;
    double delta = 0.5; // slot duration, seconds
    int T = 100;

    // kLinear / kGaussMarkov
    Vec2 x0{0.0, 0.0};
    Vec2 v0{10.0, 0.0}; // m/s; constant velocity for kLinear, seed velocity otherwise
    double gamma = 1.0;
    double accel_var = 1.0;
    Vec2 mean_velocity{10.0, 0.0};

    // kWaypoints: traversed at constant `speed`, resampled every delta*speed meters;
    // T is derived from the path length.
    std::vector<Vec2> waypoints;
    double speed = 6.0;
};

Trajectory make_trajectory(const TrajectorySpec& spec, Rng& rng);

struct PathLossConfig {
    double alpha = -20.0;
    double beta = 5.0;
    double sigma = 0.2;
    double height_offset = 48.0; // folded into all generated stations
};

struct BeamLayout {
    enum class Kind {
        kSector,     // beams spread over a sector facing the trajectory
        kUniformRing // equispaced over the full circle; aggregate gain ~ constant
    };
    Kind kind = Kind::kSector;
    double sector_deg = 120.0;
    double omega = 10.0;
    double eta = 0.0; // <= 0 selects the default beamwidth rule
};

struct GroundTruth {
    std::uint64_t seed = 0;
    PropagationParams pp;
    MobilityParams mp; // gamma/delta always set; vbar/accel_var where applicable
    TrajectorySpec traj_spec;
    /// Mean aggregate beam gain (dB) for kUniformRing layouts: the
    /// per-beam-average of the summed pattern response, constant over angle.
    std::optional<double> cbar_db;
};

struct ScenarioData {
    Topology topo;
    Trajectory traj;
    MeasurementSeries series;
    GroundTruth truth;
};

struct Scenario1Config {
    int Q = 8;
    std::optional<Rect> bs_region; // default: trajectory bounding box + region_pad
    double region_pad = 100.0;
};

struct Scenario2Config {
    double kappa = 1.02e-3; // stations per m^2
    double radius = 50.0;   // connectivity radius R, meters
};

/// Fixed station count around the trajectory, every station observed in every
/// slot (R = infinite), one beam per station with omega = 0.
ScenarioData gen_scenario1(const Scenario1Config& cfg, const TrajectorySpec& tspec,
                           const PathLossConfig& plc, std::uint64_t seed);

/// PPP layout on the trajectory bounding box padded by R; per-slot observed
/// sets are the stations within R.
ScenarioData gen_scenario2(const Scenario2Config& cfg, const TrajectorySpec& tspec,
                           const PathLossConfig& plc, std::uint64_t seed);

/// Multi-beam stations around the trajectory, full observation per slot.
ScenarioData gen_mimo(int Q, int M, const BeamLayout& layout, const TrajectorySpec& tspec,
                      const PathLossConfig& plc, std::uint64_t seed);

/// Dense per-slot, per-station beam vectors, e.g. for finer measurement beams
/// generated from a second parameter set (shadowing drawn independently).
using CsiFrame = std::vector<std::vector<double>>; // [station index][beam]
using CsiSeries = std::vector<CsiFrame>;           // [slot]

CsiSeries gen_csi(const Topology& topo, const Trajectory& traj, const PropagationParams& csi_pp,
                  Rng& rng);

/// Beam patterns for one station: `count` beams over `sector_deg` centered on
/// `orientation` (kSector), or equispaced over the circle (kUniformRing).
std::vector<BeamPattern> make_beam_set(const BeamLayout& layout, int count, double orientation);

/// Samples one observation per trajectory slot (t = 1..T). With
/// `use_radius`, each slot observes only the stations within the topology's
/// connectivity radius; otherwise all stations and beams.
MeasurementSeries sample_measurements(const Topology& topo, const Trajectory& traj,
                                      const PropagationParams& pp, double delta, bool use_radius,
                                      Rng& rng);

} // namespace apmap

#endif

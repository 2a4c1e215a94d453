// SPDX-License-Identifier: Apache-2.0

#include "apmap/synth.hpp"

#include <algorithm>

namespace apmap {

namespace {

Rng layout_rng(std::uint64_t seed) { return Rng{seed}; }
Rng noise_rng(std::uint64_t seed) { return Rng{seed ^ 0x9e3779b97f4a7c15ULL}; }

Rect bounding_box(const Trajectory& traj) {
    Rect r{traj[0].x(), traj[0].y(), traj[0].x(), traj[0].y()};
    for (const Vec2& p : traj.positions) {
        r.x0 = std::min(r.x0, p.x());
        r.y0 = std::min(r.y0, p.y());
        r.x1 = std::max(r.x1, p.x());
        r.y1 = std::max(r.y1, p.y());
    }
    return r;
}

MobilityParams mobility_of(const TrajectorySpec& spec) {
    MobilityParams mp;
    mp.slot = spec.delta;
    switch (spec.kind) {
    case TrajectorySpec::Kind::kLinear:
        mp.gamma = 1.0;
        mp.accel_var = 0.0;
        mp.mean_velocity = spec.v0;
        break;
    case TrajectorySpec::Kind::kGaussMarkov:
        mp.gamma = spec.gamma;
        mp.accel_var = spec.accel_var;
        mp.mean_velocity = spec.mean_velocity;
        break;
    case TrajectorySpec::Kind::kWaypoints:
        mp.gamma = 1.0;
        mp.accel_var = 0.0;
        mp.mean_velocity = Vec2{spec.speed, 0.0};
        break;
    }
    return mp;
}

std::vector<BaseStation> uniform_stations(int Q, const Rect& region, int beams, double height,
                                          Rng& rng) {
    std::uniform_real_distribution<double> ux(region.x0, region.x1);
    std::uniform_real_distribution<double> uy(region.y0, region.y1);
    std::vector<BaseStation> stations;
    stations.reserve(static_cast<std::size_t>(Q));
    for (int i = 0; i < Q; ++i)
        stations.push_back(BaseStation{i, Vec2{ux(rng), uy(rng)}, beams, height});
    return stations;
}

std::vector<ObsMask> full_mask(const Topology& topo) {
    std::vector<ObsMask> mask;
    mask.reserve(topo.size());
    for (const BaseStation& bs : topo.stations()) {
        ObsMask m{bs.id, {}};
        m.beams.resize(static_cast<std::size_t>(bs.beam_count));
        for (int b = 0; b < bs.beam_count; ++b)
            m.beams[static_cast<std::size_t>(b)] = b;
        mask.push_back(std::move(m));
    }
    return mask;
}

PropagationParams single_beam_params(const Topology& topo, const PathLossConfig& plc) {
    PropagationParams pp;
    pp.stations.resize(topo.size());
    for (StationParams& sp : pp.stations) {
        sp.path_loss = PathLossParams{plc.alpha, plc.beta, plc.sigma};
        sp.beams = {BeamPattern{0.0, 0.0, 0.0}};
    }
    return pp;
}

} // namespace

MeasurementSeries sample_measurements(const Topology& topo, const Trajectory& traj,
                                      const PropagationParams& pp, double delta, bool use_radius,
                                      Rng& rng) {
    MeasurementSeries series;
    series.slot_duration = delta;
    series.observations.reserve(traj.size());
    const std::vector<ObsMask> all = full_mask(topo);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const int t = static_cast<int>(i) + 1;
        if (!use_radius) {
            series.observations.push_back(sample_observation(pp, topo, traj[i], all, t, rng));
            continue;
        }
        std::vector<ObsMask> mask;
        for (int q : visible_bs(topo, traj[i])) {
            const BaseStation& bs = topo.station(q);
            ObsMask m{q, {}};
            for (int b = 0; b < bs.beam_count; ++b)
                m.beams.push_back(b);
            mask.push_back(std::move(m));
        }
        series.observations.push_back(sample_observation(pp, topo, traj[i], mask, t, rng));
    }
    return series;
}

Trajectory make_trajectory(const TrajectorySpec& spec, Rng& rng) {
    if (spec.kind == TrajectorySpec::Kind::kWaypoints) {
        if (spec.waypoints.size() < 2)
            throw std::invalid_argument("waypoint trajectory needs >= 2 points");
        if (!(spec.speed > 0.0) || !(spec.delta > 0.0))
            throw std::invalid_argument("speed and delta must be > 0");
        const double step = spec.speed * spec.delta;
        Trajectory traj;
        traj.positions.push_back(spec.waypoints.front());
        std::size_t seg = 0;
        double along = 0.0; // arc position within current segment
        for (;;) {
            double remaining = step;
            while (seg + 1 < spec.waypoints.size()) {
                const Vec2 a = spec.waypoints[seg];
                const Vec2 b = spec.waypoints[seg + 1];
                const double seg_len = (b - a).norm();
                if (along + remaining <= seg_len) {
                    along += remaining;
                    traj.positions.push_back(a + (b - a) * (along / seg_len));
                    remaining = 0.0;
                    break;
                }
                remaining -= seg_len - along;
                along = 0.0;
                ++seg;
            }
            if (remaining > 0.0)
                break; // ran off the end of the path
        }
        return traj;
    }

    if (spec.T < 2)
        throw InsufficientData{"trajectory needs T >= 2"};
    const MobilityParams mp = mobility_of(spec);
    const Vec2 x1 = spec.x0 + spec.delta * spec.v0;
    return simulate(spec.x0, x1, mp, spec.T, rng);
}

std::vector<BeamPattern> make_beam_set(const BeamLayout& layout, int count, double orientation) {
    if (count < 1)
        throw std::invalid_argument("beam count must be >= 1");
    std::vector<BeamPattern> beams;
    beams.reserve(static_cast<std::size_t>(count));
    if (layout.kind == BeamLayout::Kind::kUniformRing) {
        const double eta = layout.eta > 0.0 ? layout.eta : 2.0;
        for (int m = 0; m < count; ++m)
            beams.push_back(BeamPattern{layout.omega, eta,
                                        wrap_angle(orientation + kTwoPi * m / count)});
        return beams;
    }
    const double sector = layout.sector_deg * kPi / 180.0;
    const double half_width = sector / (2.0 * count);
    double eta = layout.eta;
    if (eta <= 0.0) {
        // 3 dB beamwidth = sector / count (falls back to half gain when omega <= 3 dB)
        eta = layout.omega > 3.0 ? -std::log(1.0 - 3.0 / layout.omega) / sq(half_width)
                                 : std::log(2.0) / sq(half_width);
    }
    for (int m = 0; m < count; ++m) {
        const double c = orientation + sector * ((m + 0.5) / count - 0.5);
        beams.push_back(BeamPattern{layout.omega, eta, wrap_angle(c)});
    }
    return beams;
}

ScenarioData gen_scenario1(const Scenario1Config& cfg, const TrajectorySpec& tspec,
                           const PathLossConfig& plc, std::uint64_t seed) {
    if (cfg.Q < 1)
        throw std::invalid_argument("scenario 1 needs Q >= 1");
    Rng lrng = layout_rng(seed);
    Trajectory traj = make_trajectory(tspec, lrng);
    const Rect region = cfg.bs_region ? *cfg.bs_region : bounding_box(traj).padded(cfg.region_pad);
    Topology topo{uniform_stations(cfg.Q, region, 1, plc.height_offset, lrng), region};
    PropagationParams pp = single_beam_params(topo, plc);

    Rng nrng = noise_rng(seed);
    MeasurementSeries series = sample_measurements(topo, traj, pp, tspec.delta, false, nrng);
    GroundTruth truth{seed, pp, mobility_of(tspec), tspec, std::nullopt};
    return ScenarioData{std::move(topo), std::move(traj), std::move(series), std::move(truth)};
}

ScenarioData gen_scenario2(const Scenario2Config& cfg, const TrajectorySpec& tspec,
                           const PathLossConfig& plc, std::uint64_t seed) {
    if (!(cfg.kappa > 0.0) || !(cfg.radius > 0.0))
        throw std::invalid_argument("scenario 2 needs kappa > 0 and radius > 0");
    Rng lrng = layout_rng(seed);
    Trajectory traj = make_trajectory(tspec, lrng);
    // stations farther than R from every trajectory point never contribute
    const Rect region = bounding_box(traj).padded(cfg.radius);
    Topology topo = sample_ppp(cfg.kappa, region, lrng, 1, plc.height_offset, cfg.radius);
    PropagationParams pp = single_beam_params(topo, plc);

    Rng nrng = noise_rng(seed);
    MeasurementSeries series = sample_measurements(topo, traj, pp, tspec.delta, true, nrng);
    GroundTruth truth{seed, pp, mobility_of(tspec), tspec, std::nullopt};
    return ScenarioData{std::move(topo), std::move(traj), std::move(series), std::move(truth)};
}

ScenarioData gen_mimo(int Q, int M, const BeamLayout& layout, const TrajectorySpec& tspec,
                      const PathLossConfig& plc, std::uint64_t seed) {
    if (Q < 1 || M < 1)
        throw std::invalid_argument("gen_mimo needs Q >= 1 and M >= 1");
    Rng lrng = layout_rng(seed);
    Trajectory traj = make_trajectory(tspec, lrng);
    const Rect region = bounding_box(traj).padded(100.0);
    Topology topo{uniform_stations(Q, region, M, plc.height_offset, lrng), region};

    Vec2 centroid{0.0, 0.0};
    for (const Vec2& p : traj.positions)
        centroid += p;
    centroid /= static_cast<double>(traj.size());

    PropagationParams pp;
    pp.stations.resize(topo.size());
    for (std::size_t i = 0; i < topo.size(); ++i) {
        const BaseStation& bs = topo.stations()[i];
        pp.stations[i].path_loss = PathLossParams{plc.alpha, plc.beta, plc.sigma};
        double orientation = 0.0;
        if ((centroid - bs.position).norm() > 0.0)
            orientation = bearing(centroid, bs);
        pp.stations[i].beams = make_beam_set(layout, M, orientation);
    }

    GroundTruth truth{seed, pp, mobility_of(tspec), tspec, std::nullopt};
    if (layout.kind == BeamLayout::Kind::kUniformRing && !pp.stations.empty()) {
        // mean (per-beam) aggregate gain, evaluated on a dense angle sweep
        const std::vector<BeamPattern>& beams = pp.stations.front().beams;
        double acc = 0.0;
        const int n_sweep = 4096;
        for (int k = 0; k < n_sweep; ++k) {
            const double phi = kTwoPi * k / n_sweep;
            double sum = 0.0;
            for (const BeamPattern& b : beams)
                sum += b.omega * std::exp(-b.eta * sq(angle_diff(phi, b.center)));
            acc += sum;
        }
        truth.cbar_db = acc / n_sweep / static_cast<double>(M);
    }

    Rng nrng = noise_rng(seed);
    MeasurementSeries series = sample_measurements(topo, traj, pp, tspec.delta, false, nrng);
    return ScenarioData{std::move(topo), std::move(traj), std::move(series), std::move(truth)};
}

CsiSeries gen_csi(const Topology& topo, const Trajectory& traj, const PropagationParams& csi_pp,
                  Rng& rng) {
    if (csi_pp.stations.size() != topo.size())
        throw std::invalid_argument("csi params do not cover the topology");
    CsiSeries series;
    series.reserve(traj.size());
    std::normal_distribution<double> unit_normal(0.0, 1.0);
    for (const Vec2& x : traj.positions) {
        CsiFrame frame(topo.size());
        for (std::size_t i = 0; i < topo.size(); ++i) {
            const BaseStation& bs = topo.stations()[i];
            const StationParams& sp = csi_pp.stations[i];
            const double xi = sp.path_loss.sigma * unit_normal(rng);
            const double d = distance(x, bs);
            if (d <= 0.0)
                throw CoincidentPoint{};
            const double base = sp.path_loss.beta + sp.path_loss.alpha * std::log10(d);
            frame[i].reserve(sp.beams.size());
            for (const BeamPattern& b : sp.beams) {
                double gain = 0.0;
                if (b.omega != 0.0)
                    gain = b.omega * std::exp(-b.eta * sq(angle_diff(bearing(x, bs), b.center)));
                frame[i].push_back(base + gain + xi);
            }
        }
        series.push_back(std::move(frame));
    }
    return series;
}

} // namespace apmap

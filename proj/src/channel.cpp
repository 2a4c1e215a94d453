// SPDX-License-Identifier: Apache-2.0

#include "apmap/channel.hpp"

#include <algorithm>

namespace apmap {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178; // 0.5*ln(2*pi)

double gaussian_log_pdf(double resid, double sigma) {
    return -kHalfLog2Pi - std::log(sigma) - 0.5 * sq(resid / sigma);
}

} // namespace

void validate(const PropagationParams& pp, const Topology& topo) {
    if (pp.stations.size() != topo.size())
        throw std::invalid_argument("propagation params do not cover the topology");
    for (std::size_t i = 0; i < pp.stations.size(); ++i) {
        const StationParams& sp = pp.stations[i];
        if (!(sp.path_loss.sigma > 0.0))
            throw std::invalid_argument("sigma must be > 0");
        if (sp.beams.size() != static_cast<std::size_t>(topo.stations()[i].beam_count))
            throw std::invalid_argument("beam pattern count != station beam_count");
        for (const BeamPattern& b : sp.beams)
            if (b.eta < 0.0)
                throw std::invalid_argument("eta must be >= 0");
    }
}

void normalize_entries(Observation& obs) {
    auto key = [](const ObsEntry& e) { return std::pair<int, int>{e.q, e.m}; };
    std::sort(obs.entries.begin(), obs.entries.end(),
              [&](const ObsEntry& a, const ObsEntry& b) { return key(a) < key(b); });
    for (std::size_t i = 1; i < obs.entries.size(); ++i)
        if (key(obs.entries[i - 1]) == key(obs.entries[i]))
            throw std::invalid_argument("duplicate (q, m) entry in observation");
}

void validate(const MeasurementSeries& series, const Topology& topo) {
    if (series.observations.empty())
        throw std::invalid_argument("measurement series is empty");
    if (!(series.slot_duration > 0.0))
        throw std::invalid_argument("slot_duration must be > 0");
    int prev_t = std::numeric_limits<int>::min();
    for (const Observation& obs : series.observations) {
        if (obs.t <= prev_t)
            throw std::invalid_argument("slot indices must be strictly increasing");
        prev_t = obs.t;
        for (const ObsEntry& e : obs.entries) {
            const BaseStation& bs = topo.station(e.q);
            if (e.m < 0 || e.m >= bs.beam_count)
                throw std::invalid_argument("beam index out of range");
        }
    }
}

double mean_rsrp_db(const PropagationParams& pp, int q, int m, const Vec2& x,
                    const Topology& topo) {
    const int idx = topo.index_of(q);
    const BaseStation& bs = topo.stations()[static_cast<std::size_t>(idx)];
    const StationParams& sp = pp.at(idx);
    const double d = distance(x, bs);
    if (d <= 0.0)
        throw CoincidentPoint{};
    double value = sp.path_loss.beta + sp.path_loss.alpha * std::log10(d);
    const BeamPattern& b = sp.beams.at(static_cast<std::size_t>(m));
    if (b.omega != 0.0)
        value += b.omega * std::exp(-b.eta * sq(angle_diff(bearing(x, bs), b.center)));
    return value;
}

Observation sample_observation(const PropagationParams& pp, const Topology& topo, const Vec2& x,
                               const std::vector<ObsMask>& mask, int t, Rng& rng) {
    Observation obs;
    obs.t = t;
    std::normal_distribution<double> unit_normal(0.0, 1.0);
    for (const ObsMask& station_mask : mask) {
        const int idx = topo.index_of(station_mask.q);
        const double sigma = pp.at(idx).path_loss.sigma;
        // one shadowing draw per (station, slot), shared across beams
        const double xi = sigma * unit_normal(rng);
        for (int m : station_mask.beams)
            obs.entries.push_back(
                ObsEntry{station_mask.q, m, mean_rsrp_db(pp, station_mask.q, m, x, topo) + xi});
    }
    normalize_entries(obs);
    return obs;
}

double log_likelihood_obs(const Observation& obs, const Vec2& x, const PropagationParams& pp,
                          const Topology& topo) {
    double ll = 0.0;
    for (const ObsEntry& e : obs.entries) {
        const double sigma = pp.at(topo.index_of(e.q)).path_loss.sigma;
        ll += gaussian_log_pdf(e.y_db - mean_rsrp_db(pp, e.q, e.m, x, topo), sigma);
    }
    return ll;
}

} // namespace apmap

// SPDX-License-Identifier: Apache-2.0

#include "apmap/topology.hpp"

#include <limits>

namespace apmap {

Topology::Topology(std::vector<BaseStation> stations, Rect region, double connect_radius)
    : stations_(std::move(stations)), region_(region), connect_radius_(connect_radius) {
    if (region_.degenerate())
        throw std::invalid_argument("topology region is degenerate");
    if (!(connect_radius_ > 0.0))
        throw std::invalid_argument("connect_radius must be positive");
    index_.reserve(stations_.size());
    for (std::size_t i = 0; i < stations_.size(); ++i) {
        const BaseStation& bs = stations_[i];
        if (bs.beam_count < 1)
            throw std::invalid_argument("beam_count must be >= 1");
        if (!bs.position.allFinite() || !std::isfinite(bs.height_offset) || bs.height_offset < 0.0)
            throw std::invalid_argument("station position/height must be finite, height >= 0");
        if (!index_.emplace(bs.id, static_cast<int>(i)).second)
            throw std::invalid_argument("duplicate station id " + std::to_string(bs.id));
    }
}

const BaseStation& Topology::station(int id) const { return stations_[static_cast<std::size_t>(index_of(id))]; }

int Topology::index_of(int id) const {
    auto it = index_.find(id);
    if (it == index_.end())
        throw std::out_of_range("unknown station id " + std::to_string(id));
    return it->second;
}

double bearing(const Vec2& x, const BaseStation& bs) {
    const double dx = x.x() - bs.position.x();
    const double dy = x.y() - bs.position.y();
    if (dx == 0.0 && dy == 0.0)
        throw CoincidentPoint{};
    return wrap_angle(std::atan2(dy, dx));
}

Topology sample_ppp(double density, const Rect& region, Rng& rng, int beam_count,
                    double height_offset, double connect_radius) {
    if (density < 0.0)
        throw std::invalid_argument("ppp density must be >= 0");
    if (region.degenerate())
        throw std::invalid_argument("ppp region is degenerate");
    std::poisson_distribution<int> count_dist(density * region.area());
    const int n = density > 0.0 ? count_dist(rng) : 0;
    std::uniform_real_distribution<double> ux(region.x0, region.x1);
    std::uniform_real_distribution<double> uy(region.y0, region.y1);
    std::vector<BaseStation> stations;
    stations.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        stations.push_back(BaseStation{i, Vec2{ux(rng), uy(rng)}, beam_count, height_offset});
    return Topology{std::move(stations), region, connect_radius};
}

std::vector<int> visible_bs(const Topology& topo, const Vec2& x) {
    std::vector<int> ids;
    const double r = topo.connect_radius();
    for (const BaseStation& bs : topo.stations()) {
        if (std::isinf(r) || distance(x, bs) <= r)
            ids.push_back(bs.id);
    }
    return ids;
}

} // namespace apmap

// SPDX-License-Identifier: Apache-2.0

#ifndef APMAP_TOPOLOGY_HPP
#define APMAP_TOPOLOGY_HPP

#include "apmap/common.hpp"

#include <limits>
#include <unordered_map>
#include <vector>

namespace apmap {

/// Axis-aligned rectangle, in meters.
struct Rect {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
    bool degenerate() const { return !(x1 > x0) || !(y1 > y0); }
    Rect padded(double pad) const { return {x0 - pad, y0 - pad, x1 + pad, y1 + pad}; }
    bool contains(const Vec2& p) const {
        return p.x() >= x0 && p.x() <= x1 && p.y() >= y0 && p.y() <= y1;
    }
};

struct BaseStation {
    int id = 0;
    Vec2 position{0.0, 0.0};
    int beam_count = 1;
    /// Vertical offset folded into distances; 0 disables the 3-D correction.
    double height_offset = 0.0;
};

class Topology {
  public:
    Topology() = default;
    /// Throws std::invalid_argument on duplicate ids, beam_count < 1,
    /// non-finite positions or a degenerate region.
    Topology(std::vector<BaseStation> stations, Rect region,
             double connect_radius = std::numeric_limits<double>::infinity());

    const std::vector<BaseStation>& stations() const { return stations_; }
    const Rect& region() const { return region_; }
    double connect_radius() const { return connect_radius_; }
    std::size_t size() const { return stations_.size(); }

    const BaseStation& station(int id) const;
    int index_of(int id) const;

  private:
    std::vector<BaseStation> stations_;
    Rect region_;
    double connect_radius_ = std::numeric_limits<double>::infinity();
    std::unordered_map<int, int> index_;
};

/// sqrt(|x - o|^2 + h^2); reduces to the planar distance when h = 0.
inline double distance(const Vec2& x, const BaseStation& bs) {
    const double dx = x.x() - bs.position.x();
    const double dy = x.y() - bs.position.y();
    return std::sqrt(dx * dx + dy * dy + bs.height_offset * bs.height_offset);
}

/// Planar angle of (x - o), counter-clockwise from +x, in [0, 2*pi).
/// Throws CoincidentPoint when x equals the station position in 2-D.
double bearing(const Vec2& x, const BaseStation& bs);

/// Homogeneous Poisson point process with intensity `density` per m^2 on
/// `region`. Station ids are assigned 0..n-1; every station gets
/// `beam_count` beams and `height_offset`.
Topology sample_ppp(double density, const Rect& region, Rng& rng, int beam_count = 1,
                    double height_offset = 0.0,
                    double connect_radius = std::numeric_limits<double>::infinity());

/// Ids of stations with distance(x, bs) <= connect_radius; all ids when the
/// radius is infinite.
std::vector<int> visible_bs(const Topology& topo, const Vec2& x);

} // namespace apmap

#endif

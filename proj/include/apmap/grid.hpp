// SPDX-License-Identifier: Apache-2.0

#ifndef APMAP_GRID_HPP
#define APMAP_GRID_HPP

#include "apmap/common.hpp"
#include "apmap/mobility.hpp"
#include "apmap/topology.hpp"

#include <vector>

namespace apmap {

struct EmptyRegion final : Error {
    EmptyRegion() : Error("grid region or path is empty") {}
};

struct NotAdjacent final : Error {
    NotAdjacent() : Error("vertices are not connected in the grid graph") {}
};

/// Discrete location set with K-hop reachability. Lattices use Chebyshev
/// hops, polylines index hops, point clouds a Euclidean reach radius.
/// Neighborhoods always include the vertex itself.
class GridGraph {
  public:
    enum class Kind { kLattice, kPolyline, kCloud };

    /// Square lattice with spacing tau covering `region` (boundary included).
    static GridGraph lattice(const Rect& region, double tau, double v_max, double delta);

    /// Equispaced samples (spacing tau) along a polyline.
    static GridGraph polyline(const std::vector<Vec2>& path, double tau, double v_max,
                              double delta);

    /// Arbitrary points; two points are adjacent when within delta * v_max.
    static GridGraph cloud(std::vector<Vec2> points, double v_max, double delta);

    Kind kind() const { return kind_; }
    double spacing() const { return spacing_; }
    int hop_limit() const { return hop_limit_; }
    const std::vector<Vec2>& vertices() const { return vertices_; }
    int size() const { return static_cast<int>(vertices_.size()); }
    const Vec2& vertex(int i) const { return vertices_[static_cast<std::size_t>(i)]; }

    std::vector<int> neighbors(int i) const;
    bool adjacent(int a, int b) const;
    /// Upper bound on any neighborhood size, self included.
    int max_neighborhood() const;
    int nearest_vertex(const Vec2& p) const;

  private:
    Kind kind_ = Kind::kCloud;
    double spacing_ = 1.0;
    int hop_limit_ = 1;
    std::vector<Vec2> vertices_;
    // lattice layout
    int nx_ = 0, ny_ = 0;
    Vec2 origin_{0.0, 0.0};
    // cloud adjacency
    std::vector<std::vector<int>> adj_;
    double reach_ = 0.0;
};

/// Transition probability of x_t given (x_prev, x_prev2), normalized over the
/// K-hop neighborhood of x_prev. Vertex ids refer to `graph`.
double discretize_transition(int xt, int xprev, const Vec2& xprev2, const MobilityParams& mp,
                             const GridGraph& graph);

} // namespace apmap

#endif

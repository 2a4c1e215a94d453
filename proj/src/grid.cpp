// SPDX-License-Identifier: Apache-2.0

#include "apmap/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace apmap {

namespace {

int hop_count(double v_max, double delta, double tau) {
    if (!(tau > 0.0) || !(v_max > 0.0) || !(delta > 0.0))
        throw std::invalid_argument("tau, v_max and delta must be > 0");
    return std::max(1, static_cast<int>(std::ceil(delta * v_max / tau)));
}

} // namespace

GridGraph GridGraph::lattice(const Rect& region, double tau, double v_max, double delta) {
    if (region.degenerate())
        throw EmptyRegion{};
    GridGraph g;
    g.kind_ = Kind::kLattice;
    g.spacing_ = tau;
    g.hop_limit_ = hop_count(v_max, delta, tau);
    g.origin_ = Vec2{region.x0, region.y0};
    g.nx_ = static_cast<int>(std::floor((region.width()) / tau + 1e-9)) + 1;
    g.ny_ = static_cast<int>(std::floor((region.height()) / tau + 1e-9)) + 1;
    g.vertices_.reserve(static_cast<std::size_t>(g.nx_) * static_cast<std::size_t>(g.ny_));
    for (int j = 0; j < g.ny_; ++j)
        for (int i = 0; i < g.nx_; ++i)
            g.vertices_.emplace_back(region.x0 + i * tau, region.y0 + j * tau);
    return g;
}

GridGraph GridGraph::polyline(const std::vector<Vec2>& path, double tau, double v_max,
                              double delta) {
    if (path.size() < 2)
        throw EmptyRegion{};
    GridGraph g;
    g.kind_ = Kind::kPolyline;
    g.spacing_ = tau;
    g.hop_limit_ = hop_count(v_max, delta, tau);
    g.vertices_.push_back(path.front());
    std::size_t seg = 0;
    double along = 0.0;
    for (;;) {
        double remaining = tau;
        bool placed = false;
        while (seg + 1 < path.size()) {
            const Vec2 a = path[seg];
            const Vec2 b = path[seg + 1];
            const double seg_len = (b - a).norm();
            if (along + remaining <= seg_len) {
                along += remaining;
                g.vertices_.push_back(a + (b - a) * (along / seg_len));
                placed = true;
                break;
            }
            remaining -= seg_len - along;
            along = 0.0;
            ++seg;
        }
        if (!placed)
            break;
    }
    return g;
}

GridGraph GridGraph::cloud(std::vector<Vec2> points, double v_max, double delta) {
    if (points.empty())
        throw EmptyRegion{};
    GridGraph g;
    g.kind_ = Kind::kCloud;
    g.hop_limit_ = 1;
    g.reach_ = v_max * delta;
    g.vertices_ = std::move(points);
    const int n = g.size();
    g.adj_.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if ((g.vertices_[static_cast<std::size_t>(i)] - g.vertices_[static_cast<std::size_t>(j)])
                    .norm() <= g.reach_)
                g.adj_[static_cast<std::size_t>(i)].push_back(j);
        }
    }
    return g;
}

std::vector<int> GridGraph::neighbors(int i) const {
    std::vector<int> out;
    switch (kind_) {
    case Kind::kLattice: {
        const int cx = i % nx_;
        const int cy = i / nx_;
        const int K = hop_limit_;
        out.reserve(static_cast<std::size_t>(2 * K + 1) * static_cast<std::size_t>(2 * K + 1));
        for (int dy = -K; dy <= K; ++dy) {
            const int y = cy + dy;
            if (y < 0 || y >= ny_)
                continue;
            for (int dx = -K; dx <= K; ++dx) {
                const int x = cx + dx;
                if (x < 0 || x >= nx_)
                    continue;
                out.push_back(y * nx_ + x);
            }
        }
        return out;
    }
    case Kind::kPolyline: {
        const int K = hop_limit_;
        const int lo = std::max(0, i - K);
        const int hi = std::min(size() - 1, i + K);
        out.reserve(static_cast<std::size_t>(hi - lo + 1));
        for (int j = lo; j <= hi; ++j)
            out.push_back(j);
        return out;
    }
    case Kind::kCloud:
        return adj_[static_cast<std::size_t>(i)];
    }
    return out;
}

bool GridGraph::adjacent(int a, int b) const {
    switch (kind_) {
    case Kind::kLattice: {
        const int ax = a % nx_, ay = a / nx_;
        const int bx = b % nx_, by = b / nx_;
        return std::max(std::abs(ax - bx), std::abs(ay - by)) <= hop_limit_;
    }
    case Kind::kPolyline:
        return std::abs(a - b) <= hop_limit_;
    case Kind::kCloud:
        return (vertices_[static_cast<std::size_t>(a)] - vertices_[static_cast<std::size_t>(b)])
                   .norm() <= reach_;
    }
    return false;
}

int GridGraph::max_neighborhood() const {
    switch (kind_) {
    case Kind::kLattice:
        return sq(2 * hop_limit_ + 1);
    case Kind::kPolyline:
        return 2 * hop_limit_ + 1;
    case Kind::kCloud: {
        std::size_t m = 0;
        for (const auto& a : adj_)
            m = std::max(m, a.size());
        return static_cast<int>(m);
    }
    }
    return 0;
}

int GridGraph::nearest_vertex(const Vec2& p) const {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < size(); ++i) {
        const double d = (vertices_[static_cast<std::size_t>(i)] - p).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

double discretize_transition(int xt, int xprev, const Vec2& xprev2, const MobilityParams& mp,
                             const GridGraph& graph) {
    if (!graph.adjacent(xprev, xt))
        throw NotAdjacent{};
    const Vec2 prev = graph.vertex(xprev);
    std::vector<double> logp;
    double log_num = 0.0;
    bool found = false;
    for (int v : graph.neighbors(xprev)) {
        const double lp = log_transition(graph.vertex(v), prev, xprev2, mp);
        logp.push_back(lp);
        if (v == xt) {
            log_num = lp;
            found = true;
        }
    }
    if (!found)
        throw NotAdjacent{};
    return std::exp(log_num - log_sum_exp(logp));
}

} // namespace apmap

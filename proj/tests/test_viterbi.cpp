// SPDX-License-Identifier: Apache-2.0

#include "apmap/viterbi.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace apmap;

namespace {

struct SmallScene {
    Topology topo{{}, Rect{0, 0, 1, 1}};
    PropagationParams pp;
    MeasurementSeries series;
    MobilityParams mp;
};

/// Random two-station scene over an arbitrary graph; observations carry
/// random powers so emissions are generic.
SmallScene random_scene(int T, Rng& rng) {
    SmallScene s;
    std::uniform_real_distribution<double> u(-5.0, 25.0);
    s.topo = Topology{{BaseStation{0, Vec2{-3.5, -2.0}, 1, 1.0},
                       BaseStation{1, Vec2{27.0, 9.0}, 1, 1.0}},
                      Rect{-50, -50, 80, 80}};
    for (int q = 0; q < 2; ++q)
        s.pp.stations.push_back(
            StationParams{{-18.0 - q, 4.0, 1.2 + 0.4 * q}, {BeamPattern{0, 0, 0}}});
    for (int t = 1; t <= T; ++t) {
        Observation obs{t, {ObsEntry{0, 0, u(rng)}, ObsEntry{1, 0, u(rng)}}};
        s.series.observations.push_back(obs);
    }
    s.mp = MobilityParams{Vec2{1.0, 0.5}, 1.5, 0.7, 0.5};
    return s;
}

} // namespace

TEST_CASE("viterbi2 equals brute-force enumeration on small instances") {
    Rng rng(71);
    int checked = 0;
    for (int rep = 0; rep < 60; ++rep) {
        const int T = 3 + rep % 3;
        SmallScene s = random_scene(T, rng);
        const GridGraph g = rep % 2 == 0
                                ? GridGraph::lattice(Rect{0, 0, 8, 4}, 4.0, 9.0, 0.5)  // 3x2
                                : GridGraph::polyline({Vec2{0, 0}, Vec2{20, 0}}, 4.0, 17.0, 0.5);
        REQUIRE(g.size() <= 6);

        PruneConfig off;
        off.zeta = 0.0; // pruning disabled
        const ViterbiResult dp = viterbi2(s.series, s.topo, s.pp, s.mp, g, off);
        const auto bf = oracles::brute_force_map(s.series, s.topo, s.pp, s.mp, g);
        CHECK(dp.vertex_ids == bf.path);
        CHECK(dp.log_score == doctest::Approx(bf.score).epsilon(1e-9));
        ++checked;
    }
    CHECK(checked == 60);
}

TEST_CASE("noiseless emissions recover the generating path") {
    const GridGraph g = GridGraph::polyline({Vec2{0, 0}, Vec2{30, 0}}, 1.0, 6.0, 0.5);
    Topology topo{{BaseStation{0, Vec2{5, 8}, 1, 0.0}, BaseStation{1, Vec2{25, -6}, 1, 0.0}},
                  Rect{-50, -50, 80, 80}};
    PropagationParams pp;
    for (int q = 0; q < 2; ++q)
        pp.stations.push_back(StationParams{{-20.0, 5.0, 0.05}, {BeamPattern{0, 0, 0}}});

    std::vector<int> truth;
    MeasurementSeries series;
    for (int t = 0; t < 8; ++t) {
        const int v = 2 + 3 * t; // 1.5 m per slot along the line
        truth.push_back(v);
        Observation obs{t + 1, {}};
        for (int q = 0; q < 2; ++q)
            obs.entries.push_back(ObsEntry{q, 0, mean_rsrp_db(pp, q, 0, g.vertex(v), topo)});
        series.observations.push_back(obs);
    }
    const MobilityParams mp{Vec2{3, 0}, 2.0, 0.7, 0.5};
    PruneConfig off;
    off.zeta = 0.0;
    const ViterbiResult dp = viterbi2(series, topo, pp, mp, g, off);
    CHECK(dp.vertex_ids == truth);
}

TEST_CASE("disabled pruning and full top-n retention coincide") {
    Rng rng(72);
    SmallScene s = random_scene(5, rng);
    const GridGraph g = GridGraph::lattice(Rect{0, 0, 12, 8}, 2.0, 9.0, 0.5);

    PruneConfig off;
    off.zeta = 0.0;
    PruneConfig topn;
    topn.mode = PruneConfig::Mode::kTopN;
    topn.top_n = g.size();

    const ViterbiResult a = viterbi2(s.series, s.topo, s.pp, s.mp, g, off);
    const ViterbiResult b = viterbi2(s.series, s.topo, s.pp, s.mp, g, topn);
    CHECK(a.vertex_ids == b.vertex_ids);
    CHECK(a.log_score == b.log_score);
}

TEST_CASE("per-slot expansions respect the pruned-complexity envelope") {
    Rng rng(73);
    SUBCASE("lattice") {
        SmallScene s = random_scene(12, rng);
        const GridGraph g = GridGraph::lattice(Rect{0, 0, 30, 20}, 1.0, 5.0, 0.5); // K = 3
        PruneConfig prune; // zeta = 0.8
        const ViterbiResult r = viterbi2(s.series, s.topo, s.pp, s.mp, g, prune);
        const int n_max = *std::max_element(r.stats.retained.begin(), r.stats.retained.end());
        const long long cap = static_cast<long long>(n_max) * g.max_neighborhood();
        for (std::size_t t = 1; t < r.stats.expanded.size(); ++t)
            CHECK(r.stats.expanded[t] <= cap);
    }
    SUBCASE("unbranched polyline") {
        SmallScene s = random_scene(12, rng);
        const GridGraph g = GridGraph::polyline({Vec2{0, 0}, Vec2{60, 0}}, 1.0, 6.0, 0.5);
        PruneConfig prune;
        const ViterbiResult r = viterbi2(s.series, s.topo, s.pp, s.mp, g, prune);
        const int n_max = *std::max_element(r.stats.retained.begin(), r.stats.retained.end());
        const long long cap =
            static_cast<long long>(n_max) * (2 * g.hop_limit() + 1); // O(K) road case
        for (std::size_t t = 1; t < r.stats.expanded.size(); ++t)
            CHECK(r.stats.expanded[t] <= cap);
    }
}

TEST_CASE("single-slot series picks the emission argmax") {
    Rng rng(74);
    SmallScene s = random_scene(1, rng);
    const GridGraph g = GridGraph::lattice(Rect{0, 0, 10, 10}, 5.0, 9.0, 0.5);
    PruneConfig off;
    off.zeta = 0.0;
    const ViterbiResult r = viterbi2(s.series, s.topo, s.pp, s.mp, g, off);
    REQUIRE(r.vertex_ids.size() == 1);
    double best = -1e300;
    int best_v = -1;
    for (int v = 0; v < g.size(); ++v) {
        const double e = log_likelihood_obs(s.series.observations[0], g.vertex(v), s.pp, s.topo);
        if (e > best) {
            best = e;
            best_v = v;
        }
    }
    CHECK(r.vertex_ids[0] == best_v);
}

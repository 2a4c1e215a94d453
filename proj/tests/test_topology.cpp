// SPDX-License-Identifier: Apache-2.0

#include "apmap/topology.hpp"

#include <Eigen/Geometry>
#include <doctest.h>

#include <cmath>

using namespace apmap;

namespace {
Rect unit_region(double side) { return Rect{0.0, 0.0, side, side}; }
} // namespace

TEST_CASE("distance handles planar and height-corrected cases") {
    CHECK(distance(Vec2{3, 4}, BaseStation{0, Vec2{0, 0}, 1, 0.0}) == doctest::Approx(5.0));
    CHECK(distance(Vec2{1, 1}, BaseStation{0, Vec2{1, 1}, 1, 0.0}) == doctest::Approx(0.0));
    CHECK(distance(Vec2{3, 4}, BaseStation{0, Vec2{0, 0}, 1, 12.0}) == doctest::Approx(13.0));
}

TEST_CASE("bearing basics and errors") {
    const BaseStation o{0, Vec2{0, 0}, 1, 0.0};
    CHECK(bearing(Vec2{1, 0}, o) == doctest::Approx(0.0));
    CHECK(bearing(Vec2{0, 1}, o) == doctest::Approx(kPi / 2));
    CHECK(bearing(Vec2{-1, -1}, o) == doctest::Approx(5 * kPi / 4));
    CHECK_THROWS_AS(bearing(Vec2{0, 0}, o), CoincidentPoint);
}

TEST_CASE("bearing rotates with the frame") {
    Rng rng(5);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 50; ++i) {
        const Vec2 x{u(rng), u(rng)};
        const Vec2 o{u(rng), u(rng)};
        if ((x - o).norm() < 1e-6)
            continue;
        const double theta = u(rng);
        const Eigen::Rotation2D<double> rot(theta);
        const BaseStation bs{0, o, 1, 0.0};
        const BaseStation bs_rot{0, rot * o, 1, 0.0};
        const double a = bearing(x, bs);
        const double b = bearing(rot * x, bs_rot);
        CHECK(std::abs(angle_diff(b, wrap_angle(a + theta))) < 1e-10);
    }
}

TEST_CASE("distance triangle inequality in the plane") {
    Rng rng(6);
    std::uniform_real_distribution<double> u(-100.0, 100.0);
    for (int i = 0; i < 100; ++i) {
        const Vec2 a{u(rng), u(rng)}, b{u(rng), u(rng)}, c{u(rng), u(rng)};
        const BaseStation sb{0, b, 1, 0.0}, sc{0, c, 1, 0.0};
        CHECK(distance(a, sc) <= distance(a, sb) + distance(b, sc) + 1e-12);
    }
}

TEST_CASE("ppp sampling: empty, mean and variance") {
    Rng rng(7);
    CHECK(sample_ppp(0.0, unit_region(100.0), rng).size() == 0);

    // 100 x 100 m at 1e-3 per m^2: mean count 10
    const int trials = 10000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < trials; ++i) {
        const double n = static_cast<double>(sample_ppp(1e-3, unit_region(100.0), rng).size());
        sum += n;
        sumsq += n * n;
    }
    const double mean = sum / trials;
    const double var = sumsq / trials - mean * mean;
    const double se = std::sqrt(10.0 / trials);
    CHECK(std::abs(mean - 10.0) < 3.0 * se);     // Monte-Carlo oracle
    CHECK(var / mean > 0.9);                     // Poisson: variance == mean
    CHECK(var / mean < 1.1);
}

TEST_CASE("ppp positions are uniform over the region") {
    Rng rng(8);
    const Rect r{10.0, -20.0, 110.0, 30.0};
    double mx = 0.0, my = 0.0;
    int n = 0;
    for (int i = 0; i < 2000; ++i) {
        for (const BaseStation& bs : sample_ppp(2e-3, r, rng).stations()) {
            CHECK(r.contains(bs.position));
            mx += bs.position.x();
            my += bs.position.y();
            ++n;
        }
    }
    CHECK(std::abs(mx / n - 60.0) < 1.0);
    CHECK(std::abs(my / n - 5.0) < 1.0);
}

TEST_CASE("visible_bs matches a brute-force distance filter") {
    Rng rng(9);
    // infinite radius sees everything
    {
        std::vector<BaseStation> s;
        for (int i = 0; i < 4; ++i)
            s.push_back(BaseStation{i, Vec2{double(i), 0.0}, 1, 0.0});
        Topology topo{s, unit_region(10.0)};
        CHECK(visible_bs(topo, Vec2{100.0, 100.0}).size() == 4);
    }
    // single station just beyond the radius
    {
        Topology topo{{BaseStation{0, Vec2{51.0, 0.0}, 1, 0.0}}, unit_region(100.0), 50.0};
        CHECK(visible_bs(topo, Vec2{0.0, 0.0}).empty());
    }
    // random layouts
    std::uniform_real_distribution<double> u(0.0, 100.0);
    for (int rep = 0; rep < 20; ++rep) {
        Topology topo = sample_ppp(5e-3, unit_region(100.0), rng, 1, 0.0, 30.0);
        const Vec2 x{u(rng), u(rng)};
        const auto ids = visible_bs(topo, x);
        std::vector<int> expect;
        for (const BaseStation& bs : topo.stations())
            if (distance(x, bs) <= 30.0)
                expect.push_back(bs.id);
        CHECK(ids == expect);
    }
}

TEST_CASE("topology invariants are enforced") {
    CHECK_THROWS(Topology({BaseStation{0, Vec2{0, 0}, 1, 0.0}, BaseStation{0, Vec2{1, 1}, 1, 0.0}},
                          unit_region(10.0)));
    CHECK_THROWS(Topology({BaseStation{0, Vec2{0, 0}, 0, 0.0}}, unit_region(10.0)));
    CHECK_THROWS(Topology({}, Rect{0, 0, 0, 0}));
}

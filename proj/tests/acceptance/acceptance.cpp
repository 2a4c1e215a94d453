// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance runs: one pass/fail line per criterion, nonzero exit
// if any criterion fails. Criteria can be filtered with --only N.

#include "apmap/experiments.hpp"
#include "apmap/io.hpp"

#include "../oracles.hpp"

#include <chrono>
#include <cstring>
#include <iostream>
#include <sstream>

using namespace apmap;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& details) {
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << criterion << ": " << details
              << std::endl;
    if (!pass)
        ++g_failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- criteria 1 + 2: PPP scaling laws ---------------------------------------

void run_scaling_criteria() {
    const auto t0 = std::chrono::steady_clock::now();
    ScalingConfig cfg;
    cfg.T_list = {200, 400, 800, 1600, 3200};
    cfg.trials = 50;
    cfg.kappa = 1.02e-3;
    cfg.radius = 50.0;
    cfg.sigma = 0.1;
    cfg.seed = 2024;
    const ScalingResult res = run_scaling_experiment(cfg);
    const double elapsed = seconds_since(t0);

    std::ostringstream d1;
    d1 << "MSE(x) log-log slope " << res.slope_x << " in [-1.3, -0.7], " << cfg.trials
       << " trials/point, " << elapsed << " s";
    report(1, res.slope_x > -1.3 && res.slope_x < -0.7 && elapsed < 600.0, d1.str());

    std::ostringstream d2;
    d2 << "MSE(v) log-log slope " << res.slope_v << " in [-3.5, -2.5]";
    report(2, res.slope_v > -3.5 && res.slope_v < -2.5, d2.str());
}

// --- criterion 3: limited-region plateau -------------------------------------

void run_plateau_criterion() {
    PlateauConfig cfg;
    cfg.Q = 8;
    cfg.sigma = 0.1;
    cfg.trials = 40;
    cfg.seed = 31;
    const PlateauResult res = run_plateau_experiment(cfg);
    const double mse_ratio = res.mse_hi / res.mse_lo;
    std::ostringstream d;
    d << "bound strictly decreasing = " << (res.bound_strictly_decreasing ? "yes" : "no")
      << ", bound(2e4)/bound(1e4) = " << res.bound_ratio << " > 0.99, MSE(x) T=8000/T=4000 = "
      << mse_ratio << " > 0.5";
    report(3,
           res.bound_strictly_decreasing && res.bound_ratio > 0.99 && res.bound_ratio < 1.0 &&
               mse_ratio > 0.5,
           d.str());
}

// --- criterion 4: FIM against the per-term analytic-Hessian oracle -----------

void run_fim_criterion() {
    Rng rng(41);
    std::uniform_real_distribution<double> u(-30.0, 30.0);
    int failures = 0;
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const int Q = 2 + rep % 5;
        std::vector<BaseStation> stations;
        for (int q = 0; q < Q; ++q)
            stations.push_back(BaseStation{q, Vec2{5.0 * u(rng), 5.0 * u(rng)}, 1, 5.0});
        const Topology topo{std::move(stations), Rect{-500, -500, 500, 500}};
        const Vec2 x{u(rng), u(rng)};
        const Vec2 v{3.0 + 0.05 * u(rng), 0.05 * u(rng)};
        std::vector<PathLossParams> params;
        for (int q = 0; q < Q; ++q)
            params.push_back(PathLossParams{-15.0 - (rep % 10), 0.0, 0.3 + 0.02 * q});
        const int T = 4 + rep % 5;

        const FimResult got = fim_psi(topo, x, v, 0.5, params, T);
        Eigen::Matrix4d expect = Eigen::Matrix4d::Zero();
        for (int q = 0; q < Q; ++q) {
            const BaseStation& bs = topo.stations()[static_cast<std::size_t>(q)];
            for (int t = 1; t <= T; ++t) {
                Eigen::Vector4d g;
                const Eigen::Vector4d psi0{x.x(), x.y(), v.x(), v.y()};
                for (int k = 0; k < 4; ++k) {
                    g(k) = oracles::central_diff(
                        [&](double z) {
                            Eigen::Vector4d psi = psi0;
                            psi(k) = z;
                            const Vec2 p = Vec2{psi(0), psi(1)} + (0.5 * t) * Vec2{psi(2), psi(3)};
                            return params[static_cast<std::size_t>(q)].alpha *
                                   std::log10(distance(p, bs));
                        },
                        psi0(k), 1e-5);
                }
                expect += g * g.transpose() / sq(params[static_cast<std::size_t>(q)].sigma);
            }
        }
        const double rel = (got.f_psi - expect).cwiseAbs().maxCoeff() /
                           expect.cwiseAbs().maxCoeff();
        worst = std::max(worst, rel);
        if (!(rel < 1e-6))
            ++failures;
    }
    std::ostringstream d;
    d << "100 random instances vs finite-difference information oracle, worst relative error "
      << worst;
    report(4, failures == 0, d.str());
}

// --- criterion 5: separable path-loss estimation ------------------------------

void run_separability_criterion() {
    // stations inside a rectangular loop walked by the user; equispaced
    // full-circle beams keep the aggregate gain constant
    const int Q = 3, M = 12;
    std::vector<BaseStation> stations;
    Rng lrng(51);
    std::uniform_real_distribution<double> u(-15.0, 15.0);
    for (int q = 0; q < Q; ++q)
        stations.push_back(BaseStation{q, Vec2{u(lrng), u(lrng)}, M, 0.0});
    const Topology topo{std::move(stations), Rect{-100, -100, 100, 100}};

    BeamLayout ring;
    ring.kind = BeamLayout::Kind::kUniformRing;
    ring.omega = 6.0;
    ring.eta = 2.0;
    PropagationParams pp;
    for (int q = 0; q < Q; ++q) {
        StationParams sp;
        sp.path_loss = PathLossParams{-20.0, 5.0, 0.3};
        sp.beams = make_beam_set(ring, M, 0.2 * q);
        pp.stations.push_back(std::move(sp));
    }
    double cbar = 0.0;
    for (int k = 0; k < 8192; ++k) {
        double s = 0.0;
        for (const BeamPattern& b : pp.stations[0].beams)
            s += b.omega * std::exp(-b.eta * sq(angle_diff(kTwoPi * k / 8192, b.center)));
        cbar += s;
    }
    cbar /= 8192.0 * M;

    TrajectorySpec ts;
    ts.kind = TrajectorySpec::Kind::kWaypoints;
    ts.waypoints = {Vec2{-60, -60}, Vec2{60, -60}, Vec2{60, 60}, Vec2{-60, 60}, Vec2{-60, -60}};
    ts.speed = 2.0;
    ts.delta = 0.5;
    Rng trng(52);
    const Trajectory traj = make_trajectory(ts, trng);
    Rng nrng(53);
    const MeasurementSeries series = sample_measurements(topo, traj, pp, ts.delta, false, nrng);

    double worst_alpha = 0.0, worst_beta = 0.0;
    for (int q = 0; q < Q; ++q) {
        const auto [a2, b2] = fit_path_loss_aggregate(series, traj, topo, q);
        const PathLossFit r =
            fit_path_loss_residual(series, traj, topo, q, pp.stations[static_cast<std::size_t>(q)].beams);
        worst_alpha = std::max(worst_alpha, std::abs(a2 - r.alpha));
        worst_beta = std::max(worst_beta, std::abs(r.beta - b2 + cbar));
    }
    std::ostringstream d;
    d << "max |alpha_1 - alpha_2| = " << worst_alpha << ", max |beta_1 - beta_2 + Cbar| = "
      << worst_beta << " (tolerance 1e-6)";
    report(5, worst_alpha < 1e-6 && worst_beta < 1e-6, d.str());
}

// --- criterion 6: weighted log-fit gradient equivalence ----------------------

void run_gradient_equivalence_criterion() {
    Rng rng(61);
    std::uniform_real_distribution<double> uw(2.0, 12.0), ue(0.5, 6.0), uc(-0.5, 0.5),
        up(-0.8, 0.8), un(0.05, 3.0);
    double worst = 0.0;
    int failures = 0;
    for (int rep = 0; rep < 50; ++rep) {
        const int n = 40;
        std::vector<double> y(n), phi(n);
        for (int i = 0; i < n; ++i) {
            phi[static_cast<std::size_t>(i)] = up(rng);
            y[static_cast<std::size_t>(i)] = un(rng);
        }
        const std::vector<double> th0{uw(rng), ue(rng), uc(rng)};
        auto B = [&](const std::vector<double>& th, double p) {
            return th[0] * std::exp(-th[1] * sq(p - th[2]));
        };
        std::vector<double> lambda(n);
        for (int i = 0; i < n; ++i) {
            const double Bi = B(th0, phi[static_cast<std::size_t>(i)]);
            const double u = std::log(y[static_cast<std::size_t>(i)]) - std::log(Bi);
            lambda[static_cast<std::size_t>(i)] =
                std::abs(u) > 1e-8 ? Bi * Bi * std::expm1(u) / u : Bi * Bi * (1.0 + 0.5 * u);
        }
        auto orig = [&](const std::vector<double>& th) {
            double s = 0.0;
            for (int i = 0; i < n; ++i)
                s += sq(y[static_cast<std::size_t>(i)] - B(th, phi[static_cast<std::size_t>(i)]));
            return s;
        };
        auto weighted = [&](const std::vector<double>& th) {
            double s = 0.0;
            for (int i = 0; i < n; ++i)
                s += lambda[static_cast<std::size_t>(i)] *
                     sq(std::log(y[static_cast<std::size_t>(i)]) -
                        std::log(B(th, phi[static_cast<std::size_t>(i)])));
            return s;
        };
        for (int k = 0; k < 3; ++k) {
            const double h = 1e-5 * std::max(1.0, std::abs(th0[static_cast<std::size_t>(k)]));
            auto partial = [&](const std::function<double(const std::vector<double>&)>& f) {
                return oracles::central_diff(
                    [&](double z) {
                        std::vector<double> th = th0;
                        th[static_cast<std::size_t>(k)] = z;
                        return f(th);
                    },
                    th0[static_cast<std::size_t>(k)], h);
            };
            const double diff = std::abs(partial(orig) - partial(weighted));
            worst = std::max(worst, diff);
            if (!(diff < 1e-6))
                ++failures;
        }
    }
    std::ostringstream d;
    d << "50 random parameter points, worst componentwise gradient gap " << worst
      << " (tolerance 1e-6)";
    report(6, failures == 0, d.str());
}

// --- criterion 7: Viterbi exactness -------------------------------------------

void run_viterbi_criterion() {
    Rng rng(71);
    std::uniform_real_distribution<double> u(-5.0, 25.0);
    int mismatches = 0;
    for (int rep = 0; rep < 200; ++rep) {
        const int T = 3 + rep % 3; // up to 5 slots
        Topology topo{{BaseStation{0, Vec2{-3.5, -2.0}, 1, 1.0},
                       BaseStation{1, Vec2{27.0, 9.0}, 1, 1.0}},
                      Rect{-50, -50, 80, 80}};
        PropagationParams pp;
        for (int q = 0; q < 2; ++q)
            pp.stations.push_back(
                StationParams{{-18.0 - q, 4.0, 1.2 + 0.4 * q}, {BeamPattern{0, 0, 0}}});
        MeasurementSeries series;
        for (int t = 1; t <= T; ++t)
            series.observations.push_back(
                Observation{t, {ObsEntry{0, 0, u(rng)}, ObsEntry{1, 0, u(rng)}}});
        const MobilityParams mp{Vec2{1.0, 0.5}, 1.5, 0.7, 0.5};
        const GridGraph g =
            rep % 2 == 0 ? GridGraph::lattice(Rect{0, 0, 8, 4}, 4.0, 9.0, 0.5)
                         : GridGraph::polyline({Vec2{0, 0}, Vec2{20, 0}}, 4.0, 17.0, 0.5);

        PruneConfig off;
        off.zeta = 0.0;
        const ViterbiResult dp = viterbi2(series, topo, pp, mp, g, off);
        const auto bf = oracles::brute_force_map(series, topo, pp, mp, g);
        if (dp.vertex_ids != bf.path ||
            std::abs(dp.log_score - bf.score) > 1e-9 * std::max(1.0, std::abs(bf.score)))
            ++mismatches;
    }
    std::ostringstream d;
    d << "200 random instances (|V| <= 6, T <= 5) vs exhaustive enumeration, " << mismatches
      << " mismatches";
    report(7, mismatches == 0, d.str());
}

// --- criterion 8: closed-form mobility estimator -------------------------------

void run_mobility_criterion() {
    Rng rng(81);
    std::uniform_real_distribution<double> ug(0.2, 0.95), us(0.2, 3.0), uv(-5.0, 5.0);
    double worst = 0.0;
    int failures = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const MobilityParams mp{Vec2{uv(rng), uv(rng)}, us(rng), ug(rng), 0.5};
        const Trajectory traj = simulate(Vec2{0, 0}, Vec2{uv(rng), uv(rng)}, mp, 40, rng);
        const auto [vbar, sv2] = estimate_mobility(traj, mp.gamma, mp.slot);

        auto objective = [&](const std::vector<double>& z) {
            const MobilityParams cand{Vec2{z[0], z[1]}, std::exp(z[2]), mp.gamma, mp.slot};
            double ll = 0.0;
            for (std::size_t t = 2; t < traj.size(); ++t)
                ll += log_transition(traj[t], traj[t - 1], traj[t - 2], cand);
            return -ll;
        };
        const auto coarse = oracles::nelder_mead(
            objective, {vbar.x() + 0.2, vbar.y() - 0.3, std::log(sv2) + 0.3}, 0.4);
        const auto opt = oracles::fd_newton_polish(objective, coarse);
        const double gap = std::max({std::abs(opt[0] - vbar.x()), std::abs(opt[1] - vbar.y()),
                                     std::abs(std::exp(opt[2]) - sv2)});
        worst = std::max(worst, gap);
        if (!(gap < 1e-8))
            ++failures;
    }
    std::ostringstream d;
    d << "100 random trajectories, worst |closed form - numeric maximizer| = " << worst
      << " (tolerance 1e-8)";
    report(8, failures == 0, d.str());
}

// --- criteria 9 + 10 + 12: end-to-end recovery, monotonicity, prediction ------

void run_recovery_criteria() {
    RecoveryExperimentConfig cfg;
    cfg.seed = 91;
    const RecoveryOutcome res = run_recovery_experiment(cfg);

    std::ostringstream d9;
    d9 << "Q=" << cfg.Q << " M=" << cfg.M << " T=" << res.data.traj.size()
       << " sigma=" << cfg.sigma << ": E_l=" << res.el_proposed << " m (<= 10), MaR="
       << res.el_mar << ", WCL=" << res.el_wcl;
    if (res.el_m1 >= 0.0)
        d9 << ", M1=" << res.el_m1;
    if (res.el_gma >= 0.0)
        d9 << ", GMA=" << res.el_gma;
    d9 << " (reference: ray-traced 7.2 m / drive-test 18.7 m reported externally)";
    const bool beats = res.el_proposed * 2.0 <= res.el_mar && res.el_proposed * 2.0 <= res.el_wcl;
    report(9, res.el_proposed <= 10.0 && beats, d9.str());

    // criterion 10: every seeded run has a non-decreasing objective trace
    int runs = 0, monotone = 0;
    auto check_trace = [&](const std::vector<double>& trace) {
        ++runs;
        for (std::size_t i = 1; i < trace.size(); ++i)
            if (trace[i] < trace[i - 1])
                return;
        ++monotone;
    };
    for (const auto& trace : res.traces)
        check_trace(trace);

    // additional small seeded runs across scenarios
    TrajectorySpec ts;
    ts.kind = TrajectorySpec::Kind::kGaussMarkov;
    ts.x0 = Vec2{10, 10};
    ts.v0 = Vec2{2, 1};
    ts.gamma = 0.9;
    ts.accel_var = 0.5;
    ts.mean_velocity = Vec2{2, 1};
    ts.T = 50;
    PathLossConfig plc;
    plc.sigma = 0.15;
    plc.height_offset = 5.0;
    for (std::uint64_t seed = 0; seed < 17; ++seed) {
        const ScenarioData data =
            gen_scenario1(Scenario1Config{8, std::nullopt, 60.0}, ts, plc, 500 + seed);
        Rect box{1e300, 1e300, -1e300, -1e300};
        for (const Vec2& p : data.traj.positions) {
            box.x0 = std::min(box.x0, p.x());
            box.y0 = std::min(box.y0, p.y());
            box.x1 = std::max(box.x1, p.x());
            box.y1 = std::max(box.y1, p.y());
        }
        const GridGraph graph = GridGraph::lattice(box.padded(6.0), 2.0, 8.0, ts.delta);
        RecoverConfig rc;
        rc.seed = seed + 1;
        rc.outer_iters = 6;
        const RecoverResult r = recover(data.series, data.topo, graph, 0.9, ts.delta, rc);
        check_trace(r.objective_trace);
    }
    std::ostringstream d10;
    d10 << monotone << "/" << runs << " seeded runs have non-decreasing objective traces";
    report(10, runs > 0 && monotone == runs, d10.str());
}

void run_prediction_criterion() {
    PredictionExperimentConfig cfg;
    cfg.seed = 121;
    const PredictionOutcome res = run_prediction_experiment(cfg);
    std::ostringstream d;
    d << "E_q(1): proposed " << res.eq_proposed << " vs MI " << res.eq_mi << " / AR " << res.eq_ar
      << "; E_a: proposed " << res.ea_proposed << " dB vs MI " << res.ea_mi << " / AR "
      << res.ea_ar << " (" << res.evaluated << " slots)";
    const bool pass = res.eq_proposed < res.eq_mi && res.eq_proposed < res.eq_ar &&
                      res.ea_proposed < res.ea_mi && res.ea_proposed < res.ea_ar;
    report(12, pass, d.str());
}

// --- criterion 11: annulus projection integral ---------------------------------

void run_integral_criterion() {
    Rng rng(111);
    std::uniform_real_distribution<double> ur0(0.5, 20.0), uratio(1.2, 60.0);
    double worst = 0.0;
    int failures = 0;
    for (int rep = 0; rep < 20; ++rep) {
        const double r0 = ur0(rng);
        const double R = r0 * uratio(rng);
        const double got = expected_projection_integral(R, r0);
        const double expect = kPi * std::log(R / r0);
        const double rel = std::abs(got - expect) / expect;
        worst = std::max(worst, rel);
        if (!(rel < 1e-4))
            ++failures;
    }
    std::ostringstream d;
    d << "20 (R, r0) pairs, worst relative error vs pi ln(R/r0) = " << worst
      << " (tolerance 1e-4)";
    report(11, failures == 0, d.str());
}

} // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc)
            only = std::atoi(argv[i + 1]);
    }
    auto wants = [&](int c) { return only == 0 || only == c; };

    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (wants(1) || wants(2))
            run_scaling_criteria();
        if (wants(3))
            run_plateau_criterion();
        if (wants(4))
            run_fim_criterion();
        if (wants(5))
            run_separability_criterion();
        if (wants(6))
            run_gradient_equivalence_criterion();
        if (wants(7))
            run_viterbi_criterion();
        if (wants(8))
            run_mobility_criterion();
        if (wants(9) || wants(10))
            run_recovery_criteria();
        if (wants(11))
            run_integral_criterion();
        if (wants(12))
            run_prediction_criterion();
    } catch (const std::exception& e) {
        std::cerr << "acceptance run aborted: " << e.what() << "\n";
        return 2;
    }

    std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED" : "CRITERIA FAILED") << " ("
              << seconds_since(t0) << " s total)" << std::endl;
    return g_failures == 0 ? 0 : 1;
}

// SPDX-License-Identifier: Apache-2.0

#include "apmap/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace apmap {

double loglog_slope(const std::vector<int>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw LengthMismatch{"slope fit needs matched series with >= 2 points"};
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0) || !(y[i] > 0.0))
            throw std::invalid_argument("log-log slope needs positive data");
        const double lx = std::log(static_cast<double>(x[i]));
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = static_cast<double>(x.size());
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ScalingResult run_scaling_experiment(const ScalingConfig& cfg) {
    MleConfig mle;
    mle.kind = MleConfig::Kind::kScenario2;
    mle.s2 = Scenario2Config{cfg.kappa, cfg.radius};
    mle.tspec.kind = TrajectorySpec::Kind::kLinear;
    mle.tspec.x0 = Vec2{0.0, 0.0};
    mle.tspec.v0 = cfg.velocity;
    mle.tspec.delta = cfg.delta;
    mle.plc = PathLossConfig{cfg.alpha, cfg.beta, cfg.sigma, cfg.r0};

    ScalingResult res;
    res.curves = mle_experiment(mle, cfg.T_list, cfg.trials, cfg.seed, cfg.workers);

    BoundConfig bc;
    bc.r0 = cfg.r0;
    bc.alpha_min2 = bc.alpha_max2 = sq(cfg.alpha);
    bc.sigma_min2 = bc.sigma_max2 = sq(cfg.sigma);
    for (int T : cfg.T_list) {
        res.bound_x.push_back(bound_unlimited_x(T, cfg.kappa, cfg.radius, cfg.r0, cfg.delta, bc));
        res.bound_v.push_back(bound_unlimited_v(T, cfg.kappa, cfg.radius, cfg.r0, cfg.delta, bc));
    }
    res.slope_x = loglog_slope(res.curves.T, res.curves.mse_x);
    res.slope_v = loglog_slope(res.curves.T, res.curves.mse_v);
    return res;
}

PlateauResult run_plateau_experiment(const PlateauConfig& cfg) {
    PlateauResult res;

    // one representative limited-region geometry for the bound sweep
    TrajectorySpec tspec;
    tspec.kind = TrajectorySpec::Kind::kLinear;
    tspec.x0 = Vec2{0.0, 0.0};
    tspec.v0 = cfg.velocity;
    tspec.delta = cfg.delta;
    tspec.T = 2;
    Scenario1Config s1;
    s1.Q = cfg.Q;
    s1.bs_region = cfg.bs_region;
    const PathLossConfig plc{cfg.alpha, cfg.beta, cfg.sigma, cfg.height};
    const ScenarioData geo = gen_scenario1(s1, tspec, plc, cfg.seed);
    const Vec2 x_paper = geo.traj[0] - cfg.delta * cfg.velocity;

    BoundConfig bc;
    bc.alpha_min2 = bc.alpha_max2 = sq(cfg.alpha);
    bc.sigma_min2 = bc.sigma_max2 = sq(cfg.sigma);

    res.bound_strictly_decreasing = true;
    double prev = std::numeric_limits<double>::infinity();
    for (int T = cfg.bound_T_lo / 10; T <= cfg.bound_T_hi; T += cfg.bound_T_lo / 10) {
        const double b = bound_limited_x(T, geo.topo, x_paper, cfg.velocity, cfg.delta, bc);
        if (!(b < prev))
            res.bound_strictly_decreasing = false;
        prev = b;
        res.bound_T.push_back(T);
        res.bound_trace.push_back(b);
    }
    const double b_lo =
        bound_limited_x(cfg.bound_T_lo, geo.topo, x_paper, cfg.velocity, cfg.delta, bc);
    const double b_hi =
        bound_limited_x(cfg.bound_T_hi, geo.topo, x_paper, cfg.velocity, cfg.delta, bc);
    res.bound_ratio = b_hi / b_lo;

    MleConfig mle;
    mle.kind = MleConfig::Kind::kScenario1;
    mle.s1 = s1;
    mle.tspec = tspec;
    mle.plc = plc;
    const MleCurves curves =
        mle_experiment(mle, {cfg.T_lo, cfg.T_hi}, cfg.trials, cfg.seed, cfg.workers);
    res.mse_lo = curves.mse_x[0];
    res.mse_hi = curves.mse_x[1];
    return res;
}

RecoverResult recover_multi_start(const MeasurementSeries& series, const Topology& topo,
                                  const GridGraph& graph, double gamma, double delta,
                                  const RecoverConfig& base, int restarts,
                                  std::vector<std::vector<double>>* traces) {
    RecoverResult best;
    double best_obj = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, restarts); ++r) {
        RecoverConfig cfg = base;
        cfg.seed = base.seed + 1000ULL * static_cast<std::uint64_t>(r);
        cfg.bootstrap_rank = r; // walk down the ranked scan candidates
        RecoverResult res = recover(series, topo, graph, gamma, delta, cfg);
        if (traces)
            traces->push_back(res.objective_trace);
        const double obj = res.objective_trace.empty()
                               ? -std::numeric_limits<double>::infinity()
                               : res.objective_trace.back();
        if (obj > best_obj) {
            best_obj = obj;
            best = std::move(res);
        }
    }
    return best;
}

RecoveryOutcome run_recovery_experiment(const RecoveryExperimentConfig& cfg) {
    TrajectorySpec tspec;
    tspec.kind = TrajectorySpec::Kind::kWaypoints;
    tspec.waypoints = cfg.waypoints;
    tspec.speed = cfg.speed;
    tspec.delta = cfg.slot_step / cfg.speed;

    BeamLayout layout; // sector layout facing the route
    const PathLossConfig plc{-20.0, 5.0, cfg.sigma, cfg.height};

    RecoveryOutcome out;
    out.data = gen_mimo(cfg.Q, cfg.M, layout, tspec, plc, cfg.seed);

    const GridGraph graph = GridGraph::polyline(cfg.waypoints, cfg.tau, cfg.v_max, tspec.delta);

    RecoverConfig base;
    base.seed = cfg.seed;
    base.outer_iters = cfg.outer_iters;
    base.prune = PruneConfig{PruneConfig::Mode::kLikelihoodThreshold, cfg.zeta, 0};
    base.learning_rate = cfg.learning_rate;
    base.refine_iters = cfg.refine_iters;
    base.prop.workers = cfg.workers;
    base.workers = cfg.workers;

    out.best = recover_multi_start(out.data.series, out.data.topo, graph, cfg.gamma, tspec.delta,
                                   base, cfg.restarts, &out.traces);
    out.el_proposed = localization_error(out.data.traj, out.best.trajectory);

    out.el_mar = localization_error(out.data.traj, baseline_mar(out.data.series, out.data.topo));
    out.el_wcl = localization_error(out.data.traj, baseline_wcl(out.data.series, out.data.topo));

    if (cfg.run_m1) {
        auto [topo1, series1] = reduce_to_strongest_beam(out.data.topo, out.data.series);
        RecoverConfig m1 = base;
        m1.prop.fit_patterns = false;
        const RecoverResult res =
            recover_multi_start(series1, topo1, graph, cfg.gamma, tspec.delta, m1,
                                std::max(1, cfg.restarts - 1), nullptr);
        out.el_m1 = localization_error(out.data.traj, res.trajectory);
    }
    if (cfg.run_gma) {
        RecoverConfig gma = base;
        gma.fixed_pp = out.data.truth.pp;
        const RecoverResult res = recover_multi_start(out.data.series, out.data.topo, graph,
                                                      cfg.gamma, tspec.delta, gma, 1, nullptr);
        out.el_gma = localization_error(out.data.traj, res.trajectory);
    }
    return out;
}

PredictionOutcome run_prediction_experiment(const PredictionExperimentConfig& cfg) {
    TrajectorySpec tspec;
    tspec.kind = TrajectorySpec::Kind::kWaypoints;
    tspec.waypoints = cfg.waypoints;
    tspec.speed = cfg.speed;
    tspec.delta = cfg.slot_step / cfg.speed;

    BeamLayout layout;
    const PathLossConfig plc{-20.0, 5.0, cfg.sigma, cfg.height};
    ScenarioData run1 = gen_mimo(cfg.Q, cfg.M, layout, tspec, plc, cfg.seed);

    // finer-beam parameter set reusing the station path loss
    PropagationParams csi_pp;
    csi_pp.stations.resize(run1.topo.size());
    Vec2 centroid{0.0, 0.0};
    for (const Vec2& p : run1.traj.positions)
        centroid += p;
    centroid /= static_cast<double>(run1.traj.size());
    for (std::size_t qi = 0; qi < run1.topo.size(); ++qi) {
        csi_pp.stations[qi].path_loss = run1.truth.pp.stations[qi].path_loss;
        const BaseStation& bs = run1.topo.stations()[qi];
        const double orient = (centroid - bs.position).norm() > 0.0 ? bearing(centroid, bs) : 0.0;
        csi_pp.stations[qi].beams = make_beam_set(layout, cfg.csi_beams, orient);
    }

    Rng csi_rng1(cfg.seed ^ 0x5151515151515151ULL);
    const CsiSeries csi1 = gen_csi(run1.topo, run1.traj, csi_pp, csi_rng1);

    // blind recovery on run 1 provides the location labels and the model fit
    const GridGraph road = GridGraph::polyline(cfg.waypoints, cfg.tau,
                                               120.0 * 1000.0 / 3600.0, tspec.delta);
    RecoverConfig rc;
    rc.seed = cfg.seed + 1;
    rc.outer_iters = 8;
    rc.workers = cfg.workers;
    const RecoverResult fit = recover_multi_start(run1.series, run1.topo, road, cfg.gamma,
                                                  tspec.delta, rc, 2, nullptr);
    const RadioMap map = build_map(fit.trajectory, run1.series, &csi1, &run1.topo);

    // evaluation run: same roads and stations, different speed and noise
    TrajectorySpec tspec2 = tspec;
    tspec2.speed = cfg.speed * 0.92;
    tspec2.delta = cfg.slot_step / tspec2.speed;
    Rng traj_rng(cfg.seed ^ 0x2222222222222222ULL);
    const Trajectory traj2 = make_trajectory(tspec2, traj_rng);
    Rng obs_rng(cfg.seed ^ 0x3333333333333333ULL);
    const MeasurementSeries series2 =
        sample_measurements(run1.topo, traj2, run1.truth.pp, tspec2.delta, false, obs_rng);
    Rng csi_rng2(cfg.seed ^ 0x4444444444444444ULL);
    const CsiSeries csi2 = gen_csi(run1.topo, traj2, csi_pp, csi_rng2);

    PredictConfig pc;
    pc.history_len = cfg.history_len;

    MobilityParams mp = fit.mp;
    mp.gamma = cfg.gamma;
    mp.slot = tspec2.delta;

    const int L = cfg.history_len;
    const int T2 = static_cast<int>(traj2.size());
    std::vector<BeamFrame> pred_prop, pred_mi, pred_ar, truth;
    std::vector<Observation> history;
    std::vector<BeamFrame> csi_history;

    int evaluated = 0;
    for (int t = 0; t + 1 < T2 && evaluated < cfg.max_eval_slots; ++t) {
        history.push_back(series2.observations[static_cast<std::size_t>(t)]);
        csi_history.push_back(csi2[static_cast<std::size_t>(t)]);
        if (static_cast<int>(history.size()) < L + 2)
            continue;

        const PredictResult pr = predict_next(history, map, run1.topo, fit.pp, mp, pc);
        const RadioMapEntry& entry = map[static_cast<std::size_t>(pr.matched_index)];
        BeamFrame prop(run1.topo.size());
        for (const auto& [q, values] : entry.csi)
            prop[static_cast<std::size_t>(run1.topo.index_of(q))] = values;

        pred_prop.push_back(std::move(prop));
        pred_mi.push_back(baseline_mi(csi_history, L));
        pred_ar.push_back(baseline_ar(csi_history, L, csi1));
        truth.push_back(csi2[static_cast<std::size_t>(t) + 1]);
        ++evaluated;
    }

    PredictionOutcome out;
    out.evaluated = evaluated;
    out.eq_proposed = metric_eq(pred_prop, truth, cfg.k);
    out.eq_mi = metric_eq(pred_mi, truth, cfg.k);
    out.eq_ar = metric_eq(pred_ar, truth, cfg.k);
    out.ea_proposed = metric_ea(pred_prop, truth);
    out.ea_mi = metric_ea(pred_mi, truth);
    out.ea_ar = metric_ea(pred_ar, truth);
    return out;
}

} // namespace apmap

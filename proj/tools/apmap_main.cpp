// SPDX-License-Identifier: Apache-2.0
//
// Config-driven experiment runner: scenario generation, model fitting,
// trajectory recovery, CRLB experiments, beam prediction and evaluation.

#include "apmap/experiments.hpp"
#include "apmap/io.hpp"
#include "apmap/version.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using apmap::io::json;

namespace {

struct RunContext {
    fs::path out;
    json config;
    std::uint64_t seed = 1;
    int workers = 0;
    std::vector<std::string> outputs;

    fs::path emit(const std::string& name) {
        outputs.push_back(name);
        return out / name;
    }

    void write_manifest(const std::string& command) {
        json m{{"command", command},
               {"version", apmap::kVersion},
               {"seed", seed},
               {"workers", workers},
               {"config", config},
               {"outputs", outputs}};
        apmap::io::save_json(out / "manifest.json", m);
    }
};

json load_config(const std::string& path) {
    if (path.empty())
        return json::object();
    return apmap::io::load_json(path);
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (j.contains(key))
        return j.at(key).get<T>();
    return fallback;
}

apmap::Vec2 vec2_of(const json& j) { return apmap::Vec2{j.at(0).get<double>(), j.at(1).get<double>()}; }

apmap::TrajectorySpec trajectory_spec(const json& cfg) {
    apmap::TrajectorySpec ts;
    const json j = cfg.value("trajectory", json::object());
    const std::string kind = get_or<std::string>(j, "kind", "linear");
    if (kind == "linear")
        ts.kind = apmap::TrajectorySpec::Kind::kLinear;
    else if (kind == "gauss_markov")
        ts.kind = apmap::TrajectorySpec::Kind::kGaussMarkov;
    else if (kind == "waypoints")
        ts.kind = apmap::TrajectorySpec::Kind::kWaypoints;
    else
        throw std::invalid_argument("unknown trajectory kind: " + kind);
    ts.delta = get_or(j, "delta", 0.5);
    ts.T = get_or(j, "T", 100);
    if (j.contains("x0"))
        ts.x0 = vec2_of(j.at("x0"));
    if (j.contains("v0"))
        ts.v0 = vec2_of(j.at("v0"));
    ts.gamma = get_or(j, "gamma", 1.0);
    ts.accel_var = get_or(j, "accel_var", 1.0);
    if (j.contains("mean_velocity"))
        ts.mean_velocity = vec2_of(j.at("mean_velocity"));
    else
        ts.mean_velocity = ts.v0;
    if (j.contains("waypoints"))
        for (const json& p : j.at("waypoints"))
            ts.waypoints.push_back(vec2_of(p));
    ts.speed = get_or(j, "speed", 6.0);
    return ts;
}

apmap::PathLossConfig path_loss_config(const json& cfg) {
    const json j = cfg.value("path_loss", json::object());
    apmap::PathLossConfig plc;
    plc.alpha = get_or(j, "alpha", -20.0);
    plc.beta = get_or(j, "beta", 5.0);
    plc.sigma = get_or(j, "sigma", 0.2);
    plc.height_offset = get_or(j, "height", 48.0);
    return plc;
}

apmap::BeamLayout beam_layout(const json& cfg) {
    const json j = cfg.value("layout", json::object());
    apmap::BeamLayout layout;
    const std::string kind = get_or<std::string>(j, "kind", "sector");
    layout.kind = kind == "ring" ? apmap::BeamLayout::Kind::kUniformRing
                                 : apmap::BeamLayout::Kind::kSector;
    layout.sector_deg = get_or(j, "sector_deg", 120.0);
    layout.omega = get_or(j, "omega", 10.0);
    layout.eta = get_or(j, "eta", 0.0);
    return layout;
}

int cmd_synth(RunContext& ctx) {
    const json& cfg = ctx.config;
    const std::string scenario = get_or<std::string>(cfg, "scenario", "scenario1");
    const apmap::TrajectorySpec ts = trajectory_spec(cfg);
    const apmap::PathLossConfig plc = path_loss_config(cfg);

    apmap::ScenarioData data;
    if (scenario == "scenario1") {
        apmap::Scenario1Config s1;
        s1.Q = get_or(cfg, "Q", 8);
        if (cfg.contains("bs_region")) {
            const json r = cfg.at("bs_region");
            s1.bs_region = apmap::Rect{r.at(0).get<double>(), r.at(1).get<double>(),
                                       r.at(2).get<double>(), r.at(3).get<double>()};
        }
        data = gen_scenario1(s1, ts, plc, ctx.seed);
    } else if (scenario == "scenario2") {
        apmap::Scenario2Config s2;
        s2.kappa = get_or(cfg, "kappa", 1.02e-3);
        s2.radius = get_or(cfg, "radius", 50.0);
        data = gen_scenario2(s2, ts, plc, ctx.seed);
    } else if (scenario == "mimo") {
        data = gen_mimo(get_or(cfg, "Q", 7), get_or(cfg, "M", 7), beam_layout(cfg), ts, plc,
                        ctx.seed);
    } else {
        throw std::invalid_argument("unknown scenario: " + scenario);
    }

    apmap::io::save_json(ctx.emit("topology.json"), apmap::io::topology_to_json(data.topo));
    apmap::io::save_trajectory(ctx.emit("trajectory.csv"), data.traj);
    apmap::io::save_measurements(ctx.emit("measurements.csv"), data.series);
    ctx.outputs.push_back("measurements.csv.json");

    json truth{{"seed", data.truth.seed},
               {"scenario", scenario},
               {"params", apmap::io::propagation_to_json(data.truth.pp, data.topo)},
               {"mobility",
                {{"gamma", data.truth.mp.gamma},
                 {"accel_var", data.truth.mp.accel_var},
                 {"delta", data.truth.mp.slot},
                 {"mean_velocity",
                  {data.truth.mp.mean_velocity.x(), data.truth.mp.mean_velocity.y()}}}}};
    if (data.truth.cbar_db)
        truth["cbar_db"] = *data.truth.cbar_db;
    apmap::io::save_json(ctx.emit("truth.json"), truth);

    const int csi_beams = get_or(cfg, "csi_beams", 0);
    if (csi_beams > 0) {
        apmap::PropagationParams csi_pp = data.truth.pp;
        for (std::size_t qi = 0; qi < csi_pp.stations.size(); ++qi)
            csi_pp.stations[qi].beams = apmap::make_beam_set(
                beam_layout(cfg), csi_beams, csi_pp.stations[qi].beams.front().center);
        apmap::Rng rng(ctx.seed ^ 0x5151515151515151ULL);
        const apmap::CsiSeries csi = gen_csi(data.topo, data.traj, csi_pp, rng);
        json out = json::array();
        for (const apmap::CsiFrame& f : csi)
            out.push_back(f);
        apmap::io::save_json(ctx.emit("csi.json"), out);
    }
    return 0;
}

int cmd_fit(RunContext& ctx) {
    const json& cfg = ctx.config;
    const apmap::Topology topo =
        apmap::io::topology_from_json(apmap::io::load_json(cfg.at("topology").get<std::string>()));
    const apmap::MeasurementSeries series =
        apmap::io::load_measurements(cfg.at("measurements").get<std::string>());
    const apmap::Trajectory traj =
        apmap::io::load_trajectory(cfg.at("trajectory").get<std::string>());

    apmap::PropagationFitConfig fc;
    const json p = cfg.value("pattern", json::object());
    fc.pattern.epsilon = get_or(p, "epsilon", 0.01);
    fc.pattern.max_iters = get_or(p, "max_iters", 100);
    fc.pattern.tol = get_or(p, "tol", 1e-6);
    fc.fit_patterns = get_or(cfg, "fit_patterns", true);
    fc.workers = ctx.workers;

    const apmap::PropagationFitReport report = fit_propagation(series, traj, topo, fc);
    apmap::io::save_json(ctx.emit("propagation.json"),
                         apmap::io::propagation_to_json(report.params, topo));
    apmap::io::save_trace(ctx.emit("fit_trace.csv"), report.objective_trace);

    json status = json::array();
    for (std::size_t q = 0; q < topo.size(); ++q) {
        json beams = json::array();
        for (const auto s : report.beam_status[q])
            beams.push_back(s == apmap::BeamFitStatus::kFitted
                                ? "fitted"
                                : (s == apmap::BeamFitStatus::kPatternFree ? "pattern_free"
                                                                           : "insufficient_data"));
        status.push_back({{"id", topo.stations()[q].id},
                          {"ok", static_cast<bool>(report.station_ok[q])},
                          {"beams", beams}});
    }
    apmap::io::save_json(ctx.emit("fit_report.json"), json{{"stations", status}});
    return 0;
}

apmap::GridGraph grid_from_config(const json& cfg, const apmap::Topology& topo, double delta) {
    const json g = cfg.value("grid", json::object());
    const double tau = get_or(g, "tau", 1.0);
    const double v_max = get_or(g, "v_max_kmh", 120.0) * 1000.0 / 3600.0;
    const std::string kind = get_or<std::string>(g, "kind", "lattice");
    if (kind == "road") {
        std::vector<apmap::Vec2> pts;
        for (const json& p : g.at("waypoints"))
            pts.push_back(vec2_of(p));
        return apmap::GridGraph::polyline(pts, tau, v_max, delta);
    }
    apmap::Rect region = topo.region();
    if (g.contains("region")) {
        const json r = g.at("region");
        region = apmap::Rect{r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>(),
                             r.at(3).get<double>()};
    }
    return apmap::GridGraph::lattice(region, tau, v_max, delta);
}

int cmd_recover(RunContext& ctx) {
    const json& cfg = ctx.config;
    apmap::Topology topo =
        apmap::io::topology_from_json(apmap::io::load_json(cfg.at("topology").get<std::string>()));
    apmap::MeasurementSeries series =
        apmap::io::load_measurements(cfg.at("measurements").get<std::string>());

    const std::string mode = get_or<std::string>(cfg, "mode", "full");
    if (mode == "m1") {
        auto reduced = reduce_to_strongest_beam(topo, series);
        topo = std::move(reduced.first);
        series = std::move(reduced.second);
    }

    apmap::RecoverConfig rc;
    rc.seed = ctx.seed;
    rc.outer_iters = get_or(cfg, "outer_iters", 12);
    rc.prune.zeta = get_or(cfg, "zeta", 0.8);
    rc.learning_rate = get_or(cfg, "learning_rate", 0.01);
    rc.refine_iters = get_or(cfg, "refine_iters", 200);
    rc.prop.fit_patterns = mode != "m1";
    rc.prop.workers = ctx.workers;
    rc.workers = ctx.workers;
    if (mode == "gma")
        rc.fixed_pp = apmap::io::propagation_from_json(
            apmap::io::load_json(cfg.at("truth_params").get<std::string>()), topo);

    const double gamma = get_or(cfg, "gamma", 0.9);
    const apmap::GridGraph graph = grid_from_config(cfg, topo, series.slot_duration);

    std::vector<std::vector<double>> traces;
    const apmap::RecoverResult res =
        recover_multi_start(series, topo, graph, gamma, series.slot_duration, rc,
                            get_or(cfg, "restarts", 3), &traces);

    apmap::io::save_trajectory(ctx.emit("recovered.csv"), res.trajectory);
    apmap::io::save_json(ctx.emit("params.json"), apmap::io::propagation_to_json(res.pp, topo));
    apmap::io::save_trace(ctx.emit("objective_trace.csv"), res.objective_trace);
    apmap::io::save_json(
        ctx.emit("mobility.json"),
        json{{"mean_velocity", {res.mp.mean_velocity.x(), res.mp.mean_velocity.y()}},
             {"accel_var", res.mp.accel_var},
             {"gamma", res.mp.gamma},
             {"delta", res.mp.slot}});
    return 0;
}

int cmd_crlb(RunContext& ctx, const std::string& figure) {
    const json& cfg = ctx.config;
    if (figure == "scaling") {
        apmap::ScalingConfig sc;
        if (cfg.contains("T_list"))
            sc.T_list = cfg.at("T_list").get<std::vector<int>>();
        sc.trials = get_or(cfg, "trials", 50);
        sc.kappa = get_or(cfg, "kappa", 1.02e-3);
        sc.radius = get_or(cfg, "radius", 50.0);
        sc.r0 = get_or(cfg, "r0", 2.0);
        sc.sigma = get_or(cfg, "sigma", 0.1);
        sc.seed = ctx.seed;
        sc.workers = ctx.workers;
        const apmap::ScalingResult res = run_scaling_experiment(sc);
        apmap::io::save_curve(ctx.emit("mse_x.csv"), res.curves.T, res.curves.mse_x);
        apmap::io::save_curve(ctx.emit("mse_v.csv"), res.curves.T, res.curves.mse_v);
        apmap::io::save_curve(ctx.emit("bound_x.csv"), res.curves.T, res.bound_x);
        apmap::io::save_curve(ctx.emit("bound_v.csv"), res.curves.T, res.bound_v);
        apmap::io::save_json(ctx.emit("slopes.json"),
                             json{{"slope_x", res.slope_x}, {"slope_v", res.slope_v}});
        std::cout << "slope_x=" << res.slope_x << " slope_v=" << res.slope_v << "\n";
        return 0;
    }
    if (figure == "plateau") {
        apmap::PlateauConfig pc;
        pc.Q = get_or(cfg, "Q", 8);
        pc.sigma = get_or(cfg, "sigma", 0.1);
        pc.trials = get_or(cfg, "trials", 40);
        pc.seed = ctx.seed;
        pc.workers = ctx.workers;
        const apmap::PlateauResult res = run_plateau_experiment(pc);
        apmap::io::save_curve(ctx.emit("bound_limited_x.csv"), res.bound_T, res.bound_trace);
        apmap::io::save_json(ctx.emit("plateau.json"),
                             json{{"bound_ratio", res.bound_ratio},
                                  {"bound_strictly_decreasing", res.bound_strictly_decreasing},
                                  {"mse_x_lo", res.mse_lo},
                                  {"mse_x_hi", res.mse_hi}});
        std::cout << "bound_ratio=" << res.bound_ratio << " mse_lo=" << res.mse_lo
                  << " mse_hi=" << res.mse_hi << "\n";
        return 0;
    }
    throw std::invalid_argument("unknown figure: " + figure);
}

int cmd_predict(RunContext& ctx) {
    const json& cfg = ctx.config;
    apmap::PredictionExperimentConfig pc;
    pc.Q = get_or(cfg, "Q", 5);
    pc.M = get_or(cfg, "M", 5);
    pc.csi_beams = get_or(cfg, "csi_beams", 16);
    pc.sigma = get_or(cfg, "sigma", 0.25);
    pc.history_len = get_or(cfg, "history_len", 12);
    pc.k = get_or(cfg, "k", 1);
    pc.max_eval_slots = get_or(cfg, "max_eval_slots", 160);
    pc.seed = ctx.seed;
    pc.workers = ctx.workers;
    const apmap::PredictionOutcome res = run_prediction_experiment(pc);

    std::ofstream out(ctx.emit("prediction_metrics.csv"));
    out << "method,E_q,E_a\n";
    out << "proposed," << res.eq_proposed << "," << res.ea_proposed << "\n";
    out << "mi," << res.eq_mi << "," << res.ea_mi << "\n";
    out << "ar," << res.eq_ar << "," << res.ea_ar << "\n";
    std::cout << "proposed E_q=" << res.eq_proposed << " E_a=" << res.ea_proposed
              << " | mi E_q=" << res.eq_mi << " E_a=" << res.ea_mi << " | ar E_q=" << res.eq_ar
              << " E_a=" << res.ea_ar << "\n";
    return 0;
}

int cmd_eval(RunContext& ctx) {
    const json& cfg = ctx.config;
    const apmap::Trajectory truth =
        apmap::io::load_trajectory(cfg.at("truth").get<std::string>());
    const apmap::Trajectory est =
        apmap::io::load_trajectory(cfg.at("estimate").get<std::string>());
    json result{{"E_l", localization_error(truth, est)}};

    if (cfg.contains("topology") && cfg.contains("measurements")) {
        const apmap::Topology topo = apmap::io::topology_from_json(
            apmap::io::load_json(cfg.at("topology").get<std::string>()));
        const apmap::MeasurementSeries series =
            apmap::io::load_measurements(cfg.at("measurements").get<std::string>());
        result["E_l_mar"] = localization_error(truth, baseline_mar(series, topo));
        result["E_l_wcl"] = localization_error(truth, baseline_wcl(series, topo));
    }
    apmap::io::save_json(ctx.emit("eval.json"), result);
    std::cout << result.dump(2) << "\n";
    return 0;
}

int cmd_repro(RunContext& ctx, bool quick) {
    // end-to-end runs of the headline experiments, with plot-ready outputs
    {
        apmap::ScalingConfig sc;
        sc.seed = ctx.seed;
        sc.workers = ctx.workers;
        if (quick) {
            sc.T_list = {200, 400, 800};
            sc.trials = 12;
        }
        const apmap::ScalingResult res = run_scaling_experiment(sc);
        apmap::io::save_curve(ctx.emit("scaling_mse_x.csv"), res.curves.T, res.curves.mse_x);
        apmap::io::save_curve(ctx.emit("scaling_mse_v.csv"), res.curves.T, res.curves.mse_v);
        apmap::io::save_curve(ctx.emit("scaling_bound_x.csv"), res.curves.T, res.bound_x);
        apmap::io::save_curve(ctx.emit("scaling_bound_v.csv"), res.curves.T, res.bound_v);
        std::cout << "[scaling] slope_x=" << res.slope_x << " slope_v=" << res.slope_v << "\n";
    }
    {
        apmap::PlateauConfig pc;
        pc.seed = ctx.seed;
        pc.workers = ctx.workers;
        if (quick) {
            pc.trials = 8;
            pc.T_lo = 1000;
            pc.T_hi = 2000;
        }
        const apmap::PlateauResult res = run_plateau_experiment(pc);
        apmap::io::save_curve(ctx.emit("plateau_bound_x.csv"), res.bound_T, res.bound_trace);
        std::cout << "[plateau] bound_ratio=" << res.bound_ratio
                  << " mse_ratio=" << res.mse_hi / res.mse_lo << "\n";
    }
    {
        apmap::RecoveryExperimentConfig rc;
        rc.seed = ctx.seed;
        rc.workers = ctx.workers;
        if (quick) {
            rc.restarts = 1;
            rc.run_m1 = false;
            rc.run_gma = false;
        }
        const apmap::RecoveryOutcome res = run_recovery_experiment(rc);
        apmap::io::save_trajectory(ctx.emit("recovery_truth.csv"), res.data.traj);
        apmap::io::save_trajectory(ctx.emit("recovery_estimate.csv"), res.best.trajectory);
        apmap::io::save_trace(ctx.emit("recovery_trace.csv"), res.best.objective_trace);
        std::cout << "[recovery] E_l=" << res.el_proposed << " MaR=" << res.el_mar
                  << " WCL=" << res.el_wcl;
        if (res.el_m1 >= 0.0)
            std::cout << " M1=" << res.el_m1;
        if (res.el_gma >= 0.0)
            std::cout << " GMA=" << res.el_gma;
        std::cout << "\n";
    }
    {
        apmap::PredictionExperimentConfig pc;
        pc.seed = ctx.seed;
        pc.workers = ctx.workers;
        if (quick)
            pc.max_eval_slots = 40;
        const apmap::PredictionOutcome res = run_prediction_experiment(pc);
        std::ofstream out(ctx.emit("prediction_metrics.csv"));
        out << "method,E_q,E_a\n";
        out << "proposed," << res.eq_proposed << "," << res.ea_proposed << "\n";
        out << "mi," << res.eq_mi << "," << res.ea_mi << "\n";
        out << "ar," << res.eq_ar << "," << res.ea_ar << "\n";
        std::cout << "[prediction] proposed E_q=" << res.eq_proposed
                  << " E_a=" << res.ea_proposed << " mi E_q=" << res.eq_mi
                  << " ar E_q=" << res.eq_ar << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Angular power map construction from unlabeled beam measurements"};
    app.set_version_flag("--version", apmap::kVersion);
    app.require_subcommand(1);
    app.fallthrough(); // global options may follow the subcommand

    std::string config_path, out_dir = ".", figure = "scaling";
    std::uint64_t seed = 1;
    int workers = 0;
    bool quick = false;

    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--workers", workers, "worker threads (0 = hardware)");

    auto* synth = app.add_subcommand("synth", "generate a synthetic scenario");
    auto* fit = app.add_subcommand("fit", "fit propagation parameters to labeled data");
    auto* rec = app.add_subcommand("recover", "blind trajectory recovery");
    auto* crlb = app.add_subcommand("crlb", "CRLB bounds and MLE scaling experiments");
    crlb->add_option("--figure", figure, "scaling | plateau");
    auto* predict = app.add_subcommand("predict", "radio-map beam prediction experiment");
    auto* eval = app.add_subcommand("eval", "localization-error evaluation");
    auto* repro = app.add_subcommand("repro", "run the headline experiments end-to-end");
    repro->add_flag("--quick", quick, "reduced problem sizes");

    CLI11_PARSE(app, argc, argv);

    RunContext ctx;
    ctx.seed = seed;
    ctx.workers = workers;
    ctx.out = out_dir;

    try {
        ctx.config = load_config(config_path);
        std::filesystem::create_directories(ctx.out);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }

    int rc = 0;
    std::string command;
    try {
        if (synth->parsed())
            rc = cmd_synth(ctx), command = "synth";
        else if (fit->parsed())
            rc = cmd_fit(ctx), command = "fit";
        else if (rec->parsed())
            rc = cmd_recover(ctx), command = "recover";
        else if (crlb->parsed())
            rc = cmd_crlb(ctx, figure), command = "crlb";
        else if (predict->parsed())
            rc = cmd_predict(ctx), command = "predict";
        else if (eval->parsed())
            rc = cmd_eval(ctx), command = "eval";
        else if (repro->parsed())
            rc = cmd_repro(ctx, quick), command = "repro";
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    if (rc == 0)
        ctx.write_manifest(command);
    return rc;
}

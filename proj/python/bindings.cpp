// SPDX-License-Identifier: Apache-2.0

#include "apmap/crlb.hpp"
#include "apmap/experiments.hpp"
#include "apmap/radiomap.hpp"
#include "apmap/recover.hpp"
#include "apmap/synth.hpp"
#include "apmap/version.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace apmap;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Blind angular power map construction: HMM trajectory recovery, "
              "propagation fitting, CRLB bounds and radio-map beam prediction.";
    m.attr("__version__") = kVersion;

    // ---- geometry and topology ----
    py::class_<Rect>(m, "Rect")
        .def(py::init<double, double, double, double>(), py::arg("x0"), py::arg("y0"),
             py::arg("x1"), py::arg("y1"))
        .def_readwrite("x0", &Rect::x0)
        .def_readwrite("y0", &Rect::y0)
        .def_readwrite("x1", &Rect::x1)
        .def_readwrite("y1", &Rect::y1)
        .def("area", &Rect::area);

    py::class_<BaseStation>(m, "BaseStation")
        .def(py::init<int, Vec2, int, double>(), py::arg("id"), py::arg("position"),
             py::arg("beam_count") = 1, py::arg("height_offset") = 0.0)
        .def_readwrite("id", &BaseStation::id)
        .def_readwrite("position", &BaseStation::position)
        .def_readwrite("beam_count", &BaseStation::beam_count)
        .def_readwrite("height_offset", &BaseStation::height_offset);

    py::class_<Topology>(m, "Topology")
        .def(py::init<std::vector<BaseStation>, Rect, double>(), py::arg("stations"),
             py::arg("region"),
             py::arg("connect_radius") = std::numeric_limits<double>::infinity())
        .def_property_readonly("stations", &Topology::stations)
        .def_property_readonly("region", &Topology::region)
        .def_property_readonly("connect_radius", &Topology::connect_radius)
        .def("__len__", &Topology::size);

    m.def("distance", &distance, py::arg("x"), py::arg("station"));
    m.def("bearing", &bearing, py::arg("x"), py::arg("station"));
    m.def("wrap_angle", &wrap_angle);
    m.def("angle_diff", &angle_diff, py::arg("a"), py::arg("b"));
    m.def(
        "sample_ppp",
        [](double density, const Rect& region, std::uint64_t seed, int beams, double height,
           double radius) {
            Rng rng(seed);
            return sample_ppp(density, region, rng, beams, height, radius);
        },
        py::arg("density"), py::arg("region"), py::arg("seed"), py::arg("beam_count") = 1,
        py::arg("height_offset") = 0.0,
        py::arg("connect_radius") = std::numeric_limits<double>::infinity());
    m.def("visible_bs", &visible_bs, py::arg("topology"), py::arg("x"));

    // ---- channel ----
    py::class_<PathLossParams>(m, "PathLossParams")
        .def(py::init<double, double, double>(), py::arg("alpha") = -20.0, py::arg("beta") = 5.0,
             py::arg("sigma") = 1.0)
        .def_readwrite("alpha", &PathLossParams::alpha)
        .def_readwrite("beta", &PathLossParams::beta)
        .def_readwrite("sigma", &PathLossParams::sigma);

    py::class_<BeamPattern>(m, "BeamPattern")
        .def(py::init<double, double, double>(), py::arg("omega") = 0.0, py::arg("eta") = 0.0,
             py::arg("center") = 0.0)
        .def_readwrite("omega", &BeamPattern::omega)
        .def_readwrite("eta", &BeamPattern::eta)
        .def_readwrite("center", &BeamPattern::center);

    py::class_<StationParams>(m, "StationParams")
        .def(py::init<>())
        .def_readwrite("path_loss", &StationParams::path_loss)
        .def_readwrite("beams", &StationParams::beams);

    py::class_<PropagationParams>(m, "PropagationParams")
        .def(py::init<>())
        .def_readwrite("stations", &PropagationParams::stations);

    py::class_<ObsEntry>(m, "ObsEntry")
        .def(py::init<int, int, double>(), py::arg("q"), py::arg("m"), py::arg("y_db"))
        .def_readwrite("q", &ObsEntry::q)
        .def_readwrite("m", &ObsEntry::m)
        .def_readwrite("y_db", &ObsEntry::y_db);

    py::class_<Observation>(m, "Observation")
        .def(py::init<>())
        .def_readwrite("t", &Observation::t)
        .def_readwrite("entries", &Observation::entries);

    py::class_<MeasurementSeries>(m, "MeasurementSeries")
        .def(py::init<>())
        .def_readwrite("slot_duration", &MeasurementSeries::slot_duration)
        .def_readwrite("observations", &MeasurementSeries::observations)
        .def("__len__", &MeasurementSeries::size);

    m.def("mean_rsrp_db", &mean_rsrp_db, py::arg("params"), py::arg("q"), py::arg("m"),
          py::arg("x"), py::arg("topology"));
    m.def("log_likelihood_obs", &log_likelihood_obs, py::arg("observation"), py::arg("x"),
          py::arg("params"), py::arg("topology"));

    // ---- mobility ----
    py::class_<MobilityParams>(m, "MobilityParams")
        .def(py::init<>())
        .def(py::init([](Vec2 v, double accel_var, double gamma, double slot) {
                 return MobilityParams{v, accel_var, gamma, slot};
             }),
             py::arg("mean_velocity"), py::arg("accel_var"), py::arg("gamma"), py::arg("slot"))
        .def_readwrite("mean_velocity", &MobilityParams::mean_velocity)
        .def_readwrite("accel_var", &MobilityParams::accel_var)
        .def_readwrite("gamma", &MobilityParams::gamma)
        .def_readwrite("slot", &MobilityParams::slot);

    py::class_<Trajectory>(m, "Trajectory")
        .def(py::init<>())
        .def_readwrite("positions", &Trajectory::positions)
        .def("__len__", &Trajectory::size);

    m.def(
        "simulate",
        [](const Vec2& x0, const Vec2& x1, const MobilityParams& mp, int T, std::uint64_t seed) {
            Rng rng(seed);
            return simulate(x0, x1, mp, T, rng);
        },
        py::arg("x0"), py::arg("x1"), py::arg("params"), py::arg("T"), py::arg("seed"));
    m.def("log_transition", &log_transition, py::arg("x_t"), py::arg("x_prev"),
          py::arg("x_prev2"), py::arg("params"));

    // ---- scenario generation ----
    py::class_<TrajectorySpec> tspec(m, "TrajectorySpec");
    py::enum_<TrajectorySpec::Kind>(tspec, "Kind")
        .value("LINEAR", TrajectorySpec::Kind::kLinear)
        .value("GAUSS_MARKOV", TrajectorySpec::Kind::kGaussMarkov)
        .value("WAYPOINTS", TrajectorySpec::Kind::kWaypoints);
    tspec.def(py::init<>())
        .def_readwrite("kind", &TrajectorySpec::kind)
        .def_readwrite("delta", &TrajectorySpec::delta)
        .def_readwrite("T", &TrajectorySpec::T)
        .def_readwrite("x0", &TrajectorySpec::x0)
        .def_readwrite("v0", &TrajectorySpec::v0)
        .def_readwrite("gamma", &TrajectorySpec::gamma)
        .def_readwrite("accel_var", &TrajectorySpec::accel_var)
        .def_readwrite("mean_velocity", &TrajectorySpec::mean_velocity)
        .def_readwrite("waypoints", &TrajectorySpec::waypoints)
        .def_readwrite("speed", &TrajectorySpec::speed);

    py::class_<PathLossConfig>(m, "PathLossConfig")
        .def(py::init<>())
        .def_readwrite("alpha", &PathLossConfig::alpha)
        .def_readwrite("beta", &PathLossConfig::beta)
        .def_readwrite("sigma", &PathLossConfig::sigma)
        .def_readwrite("height_offset", &PathLossConfig::height_offset);

    py::class_<BeamLayout> layout(m, "BeamLayout");
    py::enum_<BeamLayout::Kind>(layout, "Kind")
        .value("SECTOR", BeamLayout::Kind::kSector)
        .value("UNIFORM_RING", BeamLayout::Kind::kUniformRing);
    layout.def(py::init<>())
        .def_readwrite("kind", &BeamLayout::kind)
        .def_readwrite("sector_deg", &BeamLayout::sector_deg)
        .def_readwrite("omega", &BeamLayout::omega)
        .def_readwrite("eta", &BeamLayout::eta);

    py::class_<Scenario1Config>(m, "Scenario1Config")
        .def(py::init<>())
        .def_readwrite("Q", &Scenario1Config::Q)
        .def_readwrite("region_pad", &Scenario1Config::region_pad);

    py::class_<Scenario2Config>(m, "Scenario2Config")
        .def(py::init<>())
        .def_readwrite("kappa", &Scenario2Config::kappa)
        .def_readwrite("radius", &Scenario2Config::radius);

    py::class_<GroundTruth>(m, "GroundTruth")
        .def_readonly("seed", &GroundTruth::seed)
        .def_readonly("pp", &GroundTruth::pp)
        .def_readonly("mp", &GroundTruth::mp)
        .def_readonly("cbar_db", &GroundTruth::cbar_db);

    py::class_<ScenarioData>(m, "ScenarioData")
        .def_readonly("topo", &ScenarioData::topo)
        .def_readonly("traj", &ScenarioData::traj)
        .def_readonly("series", &ScenarioData::series)
        .def_readonly("truth", &ScenarioData::truth);

    m.def(
        "make_trajectory",
        [](const TrajectorySpec& spec, std::uint64_t seed) {
            Rng rng(seed);
            return make_trajectory(spec, rng);
        },
        py::arg("spec"), py::arg("seed"));
    m.def("gen_scenario1", &gen_scenario1, py::arg("config"), py::arg("trajectory"),
          py::arg("path_loss"), py::arg("seed"));
    m.def("gen_scenario2", &gen_scenario2, py::arg("config"), py::arg("trajectory"),
          py::arg("path_loss"), py::arg("seed"));
    m.def("gen_mimo", &gen_mimo, py::arg("Q"), py::arg("M"), py::arg("layout"),
          py::arg("trajectory"), py::arg("path_loss"), py::arg("seed"));
    m.def(
        "gen_csi",
        [](const Topology& topo, const Trajectory& traj, const PropagationParams& pp,
           std::uint64_t seed) {
            Rng rng(seed);
            return gen_csi(topo, traj, pp, seed ? rng : rng);
        },
        py::arg("topology"), py::arg("trajectory"), py::arg("params"), py::arg("seed"));
    m.def("make_beam_set", &make_beam_set, py::arg("layout"), py::arg("count"),
          py::arg("orientation"));

    // ---- estimators ----
    m.def("estimate_mobility", &estimate_mobility, py::arg("trajectory"), py::arg("gamma"),
          py::arg("delta"));
    m.def("fit_path_loss_aggregate", &fit_path_loss_aggregate, py::arg("series"),
          py::arg("trajectory"), py::arg("topology"), py::arg("q"));

    py::class_<PathLossFit>(m, "PathLossFit")
        .def_readonly("alpha", &PathLossFit::alpha)
        .def_readonly("beta", &PathLossFit::beta)
        .def_readonly("sigma", &PathLossFit::sigma);
    m.def("fit_path_loss_residual", &fit_path_loss_residual, py::arg("series"),
          py::arg("trajectory"), py::arg("topology"), py::arg("q"), py::arg("patterns"));

    py::class_<PatternFitConfig>(m, "PatternFitConfig")
        .def(py::init<>())
        .def_readwrite("epsilon", &PatternFitConfig::epsilon)
        .def_readwrite("max_iters", &PatternFitConfig::max_iters)
        .def_readwrite("tol", &PatternFitConfig::tol);
    m.def("fit_beam_pattern", &fit_beam_pattern, py::arg("residuals"), py::arg("bearings"),
          py::arg("config") = PatternFitConfig{});

    py::class_<PropagationFitConfig>(m, "PropagationFitConfig")
        .def(py::init<>())
        .def_readwrite("pattern", &PropagationFitConfig::pattern)
        .def_readwrite("outer_iters", &PropagationFitConfig::outer_iters)
        .def_readwrite("tol", &PropagationFitConfig::tol)
        .def_readwrite("fit_patterns", &PropagationFitConfig::fit_patterns)
        .def_readwrite("workers", &PropagationFitConfig::workers);

    py::class_<PropagationFitReport>(m, "PropagationFitReport")
        .def_readonly("params", &PropagationFitReport::params)
        .def_readonly("station_ok", &PropagationFitReport::station_ok)
        .def_readonly("objective_trace", &PropagationFitReport::objective_trace);
    m.def("fit_propagation", &fit_propagation, py::arg("series"), py::arg("trajectory"),
          py::arg("topology"), py::arg("config") = PropagationFitConfig{});
    m.def("series_log_likelihood", &series_log_likelihood, py::arg("series"),
          py::arg("trajectory"), py::arg("params"), py::arg("topology"));

    // ---- grid + decoding + recovery ----
    py::class_<GridGraph>(m, "GridGraph")
        .def_static("lattice", &GridGraph::lattice, py::arg("region"), py::arg("tau"),
                    py::arg("v_max"), py::arg("delta"))
        .def_static("polyline", &GridGraph::polyline, py::arg("path"), py::arg("tau"),
                    py::arg("v_max"), py::arg("delta"))
        .def_static("cloud", &GridGraph::cloud, py::arg("points"), py::arg("v_max"),
                    py::arg("delta"))
        .def_property_readonly("vertices", &GridGraph::vertices)
        .def_property_readonly("hop_limit", &GridGraph::hop_limit)
        .def("neighbors", &GridGraph::neighbors)
        .def("nearest_vertex", &GridGraph::nearest_vertex)
        .def("__len__", &GridGraph::size);

    m.def("discretize_transition", &discretize_transition, py::arg("x_t"), py::arg("x_prev"),
          py::arg("x_prev2"), py::arg("params"), py::arg("graph"));

    py::class_<PruneConfig> prune(m, "PruneConfig");
    py::enum_<PruneConfig::Mode>(prune, "Mode")
        .value("LIKELIHOOD_THRESHOLD", PruneConfig::Mode::kLikelihoodThreshold)
        .value("TOP_N", PruneConfig::Mode::kTopN);
    prune.def(py::init<>())
        .def_readwrite("mode", &PruneConfig::mode)
        .def_readwrite("zeta", &PruneConfig::zeta)
        .def_readwrite("top_n", &PruneConfig::top_n);

    py::class_<ViterbiStats>(m, "ViterbiStats")
        .def_readonly("retained", &ViterbiStats::retained)
        .def_readonly("expanded", &ViterbiStats::expanded);
    py::class_<ViterbiResult>(m, "ViterbiResult")
        .def_readonly("path", &ViterbiResult::path)
        .def_readonly("vertex_ids", &ViterbiResult::vertex_ids)
        .def_readonly("log_score", &ViterbiResult::log_score)
        .def_readonly("stats", &ViterbiResult::stats);
    m.def("viterbi2", &viterbi2, py::arg("series"), py::arg("topology"), py::arg("params"),
          py::arg("mobility"), py::arg("graph"), py::arg("prune") = PruneConfig{},
          py::arg("workers") = 1);

    m.def("recovery_objective",
          py::overload_cast<const MeasurementSeries&, const Trajectory&, const Topology&,
                            const PropagationParams&, const MobilityParams&>(
              &recovery_objective),
          py::arg("series"), py::arg("trajectory"), py::arg("topology"), py::arg("params"),
          py::arg("mobility"));
    m.def("refine_gradient", &refine_gradient, py::arg("trajectory"), py::arg("series"),
          py::arg("topology"), py::arg("params"), py::arg("mobility"),
          py::arg("learning_rate") = 0.01, py::arg("max_iters") = 200);

    py::class_<RecoverConfig>(m, "RecoverConfig")
        .def(py::init<>())
        .def_readwrite("seed", &RecoverConfig::seed)
        .def_readwrite("outer_iters", &RecoverConfig::outer_iters)
        .def_readwrite("prune", &RecoverConfig::prune)
        .def_readwrite("learning_rate", &RecoverConfig::learning_rate)
        .def_readwrite("refine_iters", &RecoverConfig::refine_iters)
        .def_readwrite("prop", &RecoverConfig::prop)
        .def_readwrite("fixed_pp", &RecoverConfig::fixed_pp)
        .def_readwrite("bootstrap", &RecoverConfig::bootstrap)
        .def_readwrite("bootstrap_rank", &RecoverConfig::bootstrap_rank)
        .def_readwrite("min_innovation_factor", &RecoverConfig::min_innovation_factor)
        .def_readwrite("workers", &RecoverConfig::workers);
    py::class_<RecoverResult>(m, "RecoverResult")
        .def_readonly("trajectory", &RecoverResult::trajectory)
        .def_readonly("pp", &RecoverResult::pp)
        .def_readonly("mp", &RecoverResult::mp)
        .def_readonly("objective_trace", &RecoverResult::objective_trace)
        .def_readonly("outer_iterations", &RecoverResult::outer_iterations);
    m.def("recover", &recover, py::arg("series"), py::arg("topology"), py::arg("graph"),
          py::arg("gamma"), py::arg("delta"), py::arg("config") = RecoverConfig{});

    m.def("bootstrap_constant_speed", &bootstrap_constant_speed, py::arg("series"),
          py::arg("topology"), py::arg("graph"), py::arg("workers") = 1, py::arg("rank") = 0);
    m.def("localization_error", &localization_error, py::arg("truth"), py::arg("estimate"));
    m.def("baseline_mar", &baseline_mar, py::arg("series"), py::arg("topology"));
    m.def("baseline_wcl", &baseline_wcl, py::arg("series"), py::arg("topology"));
    m.def("reduce_to_strongest_beam", &reduce_to_strongest_beam, py::arg("topology"),
          py::arg("series"));

    // ---- CRLB ----
    py::class_<FimResult>(m, "FimResult")
        .def_readonly("f_psi", &FimResult::f_psi)
        .def_readonly("f_x", &FimResult::f_x)
        .def_readonly("f_v", &FimResult::f_v)
        .def_readonly("crlb_x", &FimResult::crlb_x)
        .def_readonly("crlb_v", &FimResult::crlb_v);
    m.def("fim_psi", &fim_psi, py::arg("topology"), py::arg("x"), py::arg("v"), py::arg("delta"),
          py::arg("params"), py::arg("T"));
    m.def("series_s", &series_s, py::arg("T"), py::arg("q"), py::arg("n"), py::arg("x"),
          py::arg("v"), py::arg("delta"), py::arg("topology"));

    py::class_<BoundConfig>(m, "BoundConfig")
        .def(py::init<>())
        .def_readwrite("r0", &BoundConfig::r0)
        .def_readwrite("alpha_min2", &BoundConfig::alpha_min2)
        .def_readwrite("alpha_max2", &BoundConfig::alpha_max2)
        .def_readwrite("sigma_min2", &BoundConfig::sigma_min2)
        .def_readwrite("sigma_max2", &BoundConfig::sigma_max2);
    m.def("bound_limited_x", &bound_limited_x, py::arg("T"), py::arg("topology"), py::arg("x"),
          py::arg("v"), py::arg("delta"), py::arg("config"));
    py::class_<LimitedVBound>(m, "LimitedVBound")
        .def_readonly("value", &LimitedVBound::value)
        .def_readonly("c_v", &LimitedVBound::c_v);
    m.def("bound_limited_v", &bound_limited_v, py::arg("T"), py::arg("topology"), py::arg("x"),
          py::arg("v"), py::arg("delta"), py::arg("config"));
    m.def("bound_unlimited_x", &bound_unlimited_x, py::arg("T"), py::arg("kappa"), py::arg("R"),
          py::arg("r0"), py::arg("delta"), py::arg("config"));
    m.def("bound_unlimited_v", &bound_unlimited_v, py::arg("T"), py::arg("kappa"), py::arg("R"),
          py::arg("r0"), py::arg("delta"), py::arg("config"));
    m.def("expected_projection_integral", &expected_projection_integral, py::arg("R"),
          py::arg("r0"));

    // ---- radio map ----
    py::class_<RadioMapEntry>(m, "RadioMapEntry")
        .def(py::init<>())
        .def_readwrite("location", &RadioMapEntry::location)
        .def_readwrite("ssb", &RadioMapEntry::ssb)
        .def_readwrite("csi", &RadioMapEntry::csi);
    m.def("build_map", &build_map, py::arg("recovered"), py::arg("series"),
          py::arg("csi") = nullptr, py::arg("topology") = nullptr);

    py::class_<PredictConfig>(m, "PredictConfig")
        .def(py::init<>())
        .def_readwrite("history_len", &PredictConfig::history_len)
        .def_readwrite("v_max", &PredictConfig::v_max)
        .def_readwrite("learning_rate", &PredictConfig::learning_rate)
        .def_readwrite("refine_iters", &PredictConfig::refine_iters)
        .def_readwrite("alternations", &PredictConfig::alternations)
        .def_readwrite("prune", &PredictConfig::prune);
    py::class_<PredictResult>(m, "PredictResult")
        .def_readonly("x_next", &PredictResult::x_next)
        .def_readonly("y_next", &PredictResult::y_next)
        .def_readonly("matched_index", &PredictResult::matched_index);
    m.def("predict_next", &predict_next, py::arg("history"), py::arg("map"), py::arg("topology"),
          py::arg("params"), py::arg("mobility"), py::arg("config") = PredictConfig{});

    m.def("metric_eq", &metric_eq, py::arg("pred"), py::arg("truth"), py::arg("k"));
    m.def("metric_ee", &metric_ee, py::arg("pred"), py::arg("truth"), py::arg("k"));
    m.def("metric_ea", &metric_ea, py::arg("pred"), py::arg("truth"));
    m.def("baseline_mi", &baseline_mi, py::arg("history"), py::arg("L"));
    m.def("baseline_ar", &baseline_ar, py::arg("history"), py::arg("L"), py::arg("train"));
}

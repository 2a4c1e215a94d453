// SPDX-License-Identifier: Apache-2.0

#ifndef APMAP_EXPERIMENTS_HPP
#define APMAP_EXPERIMENTS_HPP

#include "apmap/crlb.hpp"
#include "apmap/radiomap.hpp"
#include "apmap/recover.hpp"
#include "apmap/synth.hpp"

#include <cstdint>
#include <vector>

namespace apmap {

/// Least-squares slope of log(y) against log(x); x, y > 0.
double loglog_slope(const std::vector<int>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// PPP scaling-law experiment (MSE of x and v against T, with the CRLB bounds)
// ---------------------------------------------------------------------------

struct ScalingConfig {
    std::vector<int> T_list{200, 400, 800, 1600, 3200};
    int trials = 50;
    double kappa = 1.02e-3;
    double radius = 50.0;
    double r0 = 2.0; // station height, doubling as the minimum-distance scale
    double sigma = 0.1;
    double alpha = -20.0;
    double beta = 5.0;
    Vec2 velocity{10.0, 0.0};
    double delta = 0.5;
    std::uint64_t seed = 7;
    int workers = 0;
};

struct ScalingResult {
    MleCurves curves;
    std::vector<double> bound_x; // PPP upper bounds at each T
    std::vector<double> bound_v;
    double slope_x = 0.0;
    double slope_v = 0.0;
};

ScalingResult run_scaling_experiment(const ScalingConfig& cfg);

// ---------------------------------------------------------------------------
// Limited-region plateau experiment
// ---------------------------------------------------------------------------

struct PlateauConfig {
    int Q = 8;
    Rect bs_region{-100.0, -250.0, 400.0, 250.0}; // fixed, independent of T
    double sigma = 0.1;
    double alpha = -20.0;
    double beta = 5.0;
    double height = 48.0;
    Vec2 velocity{10.0, 0.0};
    double delta = 0.5;
    int T_lo = 4000;
    int T_hi = 8000;
    int bound_T_lo = 10000;
    int bound_T_hi = 20000;
    int trials = 40;
    std::uint64_t seed = 11;
    int workers = 0;
};

struct PlateauResult {
    std::vector<double> bound_trace; // limited-region bound over a T sweep
    std::vector<int> bound_T;
    double bound_ratio = 0.0;        // bound(bound_T_hi) / bound(bound_T_lo)
    bool bound_strictly_decreasing = false;
    double mse_lo = 0.0; // MLE MSE(x) at T_lo
    double mse_hi = 0.0; // and at T_hi
};

PlateauResult run_plateau_experiment(const PlateauConfig& cfg);

// ---------------------------------------------------------------------------
// Blind multi-beam recovery on a road-constrained scene
// ---------------------------------------------------------------------------

struct RecoveryExperimentConfig {
    int Q = 7;
    int M = 7;
    double sigma = 0.25;
    double height = 10.0;
    double tau = 1.0;
    double v_max = 120.0 * 1000.0 / 3600.0;
    double speed = 6.0;
    double slot_step = 0.5; // meters advanced per slot (delta = slot_step / speed)
    std::vector<Vec2> waypoints{{0.0, 0.0}, {300.0, 0.0}, {300.0, 200.0}, {475.0, 200.0}};
    int restarts = 3;
    int outer_iters = 10;
    double gamma = 0.9;
    double zeta = 0.8;
    double learning_rate = 0.01;
    int refine_iters = 150;
    bool run_m1 = true;
    bool run_gma = true;
    std::uint64_t seed = 21;
    int workers = 0;
};

struct RecoveryOutcome {
    ScenarioData data;
    RecoverResult best;      // best-objective restart
    double el_proposed = 0.0;
    double el_m1 = -1.0; // -1 when not run
    double el_gma = -1.0;
    double el_mar = 0.0;
    double el_wcl = 0.0;
    std::vector<std::vector<double>> traces; // objective trace per restart
};

RecoveryOutcome run_recovery_experiment(const RecoveryExperimentConfig& cfg);

/// Recovery on `series` with several seeded restarts; returns the
/// best-objective result and all traces.
RecoverResult recover_multi_start(const MeasurementSeries& series, const Topology& topo,
                                  const GridGraph& graph, double gamma, double delta,
                                  const RecoverConfig& base, int restarts,
                                  std::vector<std::vector<double>>* traces = nullptr);

// ---------------------------------------------------------------------------
// Radio-map-assisted beam prediction against MI / AR baselines
// ---------------------------------------------------------------------------

struct PredictionExperimentConfig {
    int Q = 5;
    int M = 5;        // measured beams
    int csi_beams = 16;
    double sigma = 0.25;
    double height = 10.0;
    int history_len = 12;
    int k = 1;
    int max_eval_slots = 160;
    std::vector<Vec2> waypoints{{0.0, 0.0}, {220.0, 0.0}, {220.0, 160.0}};
    double speed = 6.0;
    double slot_step = 1.0;
    double tau = 1.0;
    double gamma = 0.9;
    std::uint64_t seed = 33;
    int workers = 0;
};

struct PredictionOutcome {
    double eq_proposed = 0.0, eq_mi = 0.0, eq_ar = 0.0; // E_q(k)
    double ea_proposed = 0.0, ea_mi = 0.0, ea_ar = 0.0; // E_a, dB
    int evaluated = 0;
};

PredictionOutcome run_prediction_experiment(const PredictionExperimentConfig& cfg);

} // namespace apmap

#endif

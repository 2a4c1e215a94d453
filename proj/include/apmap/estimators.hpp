// SPDX-License-Identifier: Apache-2.0

#ifndef APMAP_ESTIMATORS_HPP
#define APMAP_ESTIMATORS_HPP

#include "apmap/channel.hpp"
#include "apmap/mobility.hpp"
#include "apmap/topology.hpp"

#include <utility>
#include <vector>

namespace apmap {

struct SingularDesign final : Error {
    SingularDesign() : Error("path-loss design matrix is singular (no distance spread)") {}
};

struct InvalidCurvature final : Error {
    InvalidCurvature() : Error("beam pattern fit converged with non-negative curvature") {}
};

/// Closed-form maximizer of the mobility log-likelihood given a trajectory.
/// Returns (vbar, sigma_v^2). Requires T >= 3 and gamma < 1.
std::pair<Vec2, double> estimate_mobility(const Trajectory& traj, double gamma, double delta);

/// Ordinary least squares of the per-slot beam-mean power against
/// [log10 d, 1] for station q. Returns (alpha, beta).
std::pair<double, double> fit_path_loss_aggregate(const MeasurementSeries& series,
                                                  const Trajectory& traj, const Topology& topo,
                                                  int q);

struct PathLossFit {
    double alpha = 0.0;
    double beta = 0.0;
    double sigma = 0.0;
};

/// Least squares on pattern-compensated measurements (stacked over observed
/// beams); sigma is the RMS of the fitted residuals.
PathLossFit fit_path_loss_residual(const MeasurementSeries& series, const Trajectory& traj,
                                   const Topology& topo, int q,
                                   const std::vector<BeamPattern>& patterns);

struct PatternFitConfig {
    double epsilon = 0.01; // dB threshold selecting reliable residuals
    int max_iters = 100;
    double tol = 1e-6;
};

/// Iteratively reweighted fit of omega * exp(-eta (phi - c)^2) to positive
/// residuals y_dd at bearings, via the log-transformed quadratic model.
/// Throws InsufficientData (< 3 usable points or bearings) and
/// InvalidCurvature (converged with a non-decaying shape).
BeamPattern fit_beam_pattern(const std::vector<double>& y_dd, const std::vector<double>& bearings,
                             const PatternFitConfig& cfg);

enum class BeamFitStatus { kFitted, kPatternFree, kInsufficientData };

struct PropagationFitConfig {
    PatternFitConfig pattern;
    int outer_iters = 50;
    double tol = 1e-6;
    bool fit_patterns = true;
    int workers = 1;
};

struct PropagationFitReport {
    PropagationParams params;
    std::vector<bool> station_ok;                       // per station index
    std::vector<std::vector<BeamFitStatus>> beam_status;
    std::vector<double> objective_trace; // observation log-likelihood per outer iteration
};

/// Alternating propagation-parameter estimation: aggregate path-loss init,
/// then beam-pattern fits and pattern-compensated path-loss refits until the
/// parameters settle. Stations or beams with insufficient data are flagged,
/// not fatal; a pattern update is kept only if it does not increase that
/// beam's squared residual.
PropagationFitReport fit_propagation(const MeasurementSeries& series, const Trajectory& traj,
                                     const Topology& topo, const PropagationFitConfig& cfg);

/// Sum over slots of log_likelihood_obs; positions align with observations.
double series_log_likelihood(const MeasurementSeries& series, const Trajectory& traj,
                             const PropagationParams& pp, const Topology& topo);

} // namespace apmap

#endif

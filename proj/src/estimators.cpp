// SPDX-License-Identifier: Apache-2.0

#include "apmap/estimators.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace apmap {

namespace {

constexpr double kSigmaFloor = 1e-9;

struct Ls2Result {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Normal-equation solution of y ~ slope * x + intercept.
Ls2Result solve_ls2(const std::vector<double>& x, const std::vector<double>& y,
                    const std::vector<double>* weights = nullptr) {
    const std::size_t n = x.size();
    double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weights ? (*weights)[i] : 1.0;
        sw += w;
        sx += w * x[i];
        sy += w * y[i];
        sxx += w * x[i] * x[i];
        sxy += w * x[i] * y[i];
    }
    const double det = sw * sxx - sx * sx;
    const double scale = std::max({sw * sxx, sx * sx, 1e-300});
    if (!(det > 1e-12 * scale))
        throw SingularDesign{};
    return Ls2Result{(sw * sxy - sx * sy) / det, (sxx * sy - sx * sxy) / det};
}

double pattern_gain(const BeamPattern& b, double phi) {
    if (b.omega == 0.0)
        return 0.0;
    return b.omega * std::exp(-b.eta * sq(angle_diff(phi, b.center)));
}

/// Per-station view of the measurement series.
struct StationRows {
    std::vector<int> slots;        // positions into series.observations
    std::vector<double> logd, phi; // aligned with slots
    struct Row {
        int slot_pos; // index into `slots`
        int m;
        double y;
    };
    std::vector<Row> rows;
};

std::vector<StationRows> collect_rows(const MeasurementSeries& series, const Trajectory& traj,
                                      const Topology& topo) {
    if (series.size() != traj.size())
        throw LengthMismatch{"series and trajectory lengths differ"};
    std::vector<StationRows> data(topo.size());
    std::vector<int> slot_pos(topo.size(), -1);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const Observation& obs = series.observations[i];
        for (const ObsEntry& e : obs.entries) {
            const int qi = topo.index_of(e.q);
            StationRows& sr = data[static_cast<std::size_t>(qi)];
            if (sr.slots.empty() || sr.slots.back() != static_cast<int>(i)) {
                const BaseStation& bs = topo.stations()[static_cast<std::size_t>(qi)];
                // positions right on top of a station have no usable bearing
                // or log-distance; drop that station's rows for the slot
                if ((traj[i] - bs.position).squaredNorm() < 1e-18)
                    continue;
                sr.slots.push_back(static_cast<int>(i));
                sr.logd.push_back(std::log10(distance(traj[i], bs)));
                sr.phi.push_back(bearing(traj[i], bs));
                slot_pos[static_cast<std::size_t>(qi)] = static_cast<int>(sr.slots.size()) - 1;
            }
            sr.rows.push_back({slot_pos[static_cast<std::size_t>(qi)], e.m, e.y_db});
        }
    }
    return data;
}

std::pair<double, double> aggregate_fit(const StationRows& sr) {
    // per-slot mean over observed beams
    std::vector<double> sum(sr.slots.size(), 0.0);
    std::vector<int> cnt(sr.slots.size(), 0);
    for (const StationRows::Row& r : sr.rows) {
        sum[static_cast<std::size_t>(r.slot_pos)] += r.y;
        cnt[static_cast<std::size_t>(r.slot_pos)] += 1;
    }
    std::vector<double> ybar(sr.slots.size());
    for (std::size_t i = 0; i < ybar.size(); ++i)
        ybar[i] = sum[i] / cnt[i];
    const Ls2Result ls = solve_ls2(sr.logd, ybar);
    return {ls.slope, ls.intercept};
}

PathLossFit residual_fit(const StationRows& sr, const std::vector<BeamPattern>& patterns) {
    std::vector<double> x, y;
    x.reserve(sr.rows.size());
    y.reserve(sr.rows.size());
    for (const StationRows::Row& r : sr.rows) {
        x.push_back(sr.logd[static_cast<std::size_t>(r.slot_pos)]);
        y.push_back(r.y - pattern_gain(patterns.at(static_cast<std::size_t>(r.m)),
                                       sr.phi[static_cast<std::size_t>(r.slot_pos)]));
    }
    const Ls2Result ls = solve_ls2(x, y);
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        sse += sq(y[i] - ls.slope * x[i] - ls.intercept);
    const double sigma = std::max(std::sqrt(sse / static_cast<double>(x.size())), kSigmaFloor);
    return PathLossFit{ls.slope, ls.intercept, sigma};
}

double beam_sse(const StationRows& sr, int m, double alpha, double beta, const BeamPattern& b) {
    double sse = 0.0;
    for (const StationRows::Row& r : sr.rows) {
        if (r.m != m)
            continue;
        const std::size_t sp = static_cast<std::size_t>(r.slot_pos);
        const double ydd = r.y - alpha * sr.logd[sp] - beta;
        sse += sq(ydd - pattern_gain(b, sr.phi[sp]));
    }
    return sse;
}

} // namespace

std::pair<Vec2, double> estimate_mobility(const Trajectory& traj, double gamma, double delta) {
    const std::size_t T = traj.size();
    if (T < 3)
        throw InsufficientData{"mobility estimation needs T >= 3"};
    if (gamma >= 1.0)
        throw DegenerateGamma{};
    if (!(gamma > 0.0) || !(delta > 0.0))
        throw std::invalid_argument("need 0 < gamma < 1 and delta > 0");

    Vec2 rsum{0.0, 0.0};
    for (std::size_t t = 2; t < T; ++t)
        rsum += traj[t] - (1.0 + gamma) * traj[t - 1] + gamma * traj[t - 2];
    const double n = static_cast<double>(T - 2);
    const Vec2 vbar = rsum / (n * (1.0 - gamma) * delta);

    double sse = 0.0;
    for (std::size_t t = 2; t < T; ++t) {
        const Vec2 r = traj[t] - (1.0 + gamma) * traj[t - 1] + gamma * traj[t - 2] -
                       (1.0 - gamma) * delta * vbar;
        sse += r.squaredNorm();
    }
    const double sigma_v2 = sse / (2.0 * n * (1.0 - gamma * gamma) * sq(delta));
    return {vbar, sigma_v2};
}

std::pair<double, double> fit_path_loss_aggregate(const MeasurementSeries& series,
                                                  const Trajectory& traj, const Topology& topo,
                                                  int q) {
    const auto data = collect_rows(series, traj, topo);
    const StationRows& sr = data[static_cast<std::size_t>(topo.index_of(q))];
    if (sr.slots.size() < 2)
        throw InsufficientData{"station needs >= 2 observed slots"};
    return aggregate_fit(sr);
}

PathLossFit fit_path_loss_residual(const MeasurementSeries& series, const Trajectory& traj,
                                   const Topology& topo, int q,
                                   const std::vector<BeamPattern>& patterns) {
    const auto data = collect_rows(series, traj, topo);
    const StationRows& sr = data[static_cast<std::size_t>(topo.index_of(q))];
    if (sr.slots.size() < 2)
        throw InsufficientData{"station needs >= 2 observed slots"};
    return residual_fit(sr, patterns);
}

BeamPattern fit_beam_pattern(const std::vector<double>& y_dd, const std::vector<double>& bearings,
                             const PatternFitConfig& cfg) {
    if (y_dd.size() != bearings.size())
        throw LengthMismatch{"residuals and bearings differ in length"};

    std::vector<double> y, phi_raw;
    for (std::size_t i = 0; i < y_dd.size(); ++i) {
        if (y_dd[i] > cfg.epsilon) {
            y.push_back(y_dd[i]);
            phi_raw.push_back(bearings[i]);
        }
    }
    if (y.size() < 3)
        throw InsufficientData{"fewer than 3 residuals above the threshold"};

    // Unwrap bearings onto one branch around their circular mean so the
    // quadratic in phi is well defined for beams near the 0/2pi seam.
    double cs = 0.0, sn = 0.0;
    for (double p : phi_raw) {
        cs += std::cos(p);
        sn += std::sin(p);
    }
    const double ref = std::atan2(sn, cs);
    std::vector<double> phi(phi_raw.size());
    for (std::size_t i = 0; i < phi.size(); ++i)
        phi[i] = ref + angle_diff(phi_raw[i], ref);

    {
        std::vector<double> uniq = phi;
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        if (uniq.size() < 3)
            throw InsufficientData{"fewer than 3 distinct bearings"};
    }

    const std::size_t n = y.size();
    std::vector<double> logy(n), lambda(n, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        logy[i] = std::log(y[i]);

    Eigen::Vector3d b = Eigen::Vector3d::Zero();
    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
        Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::Vector3d f{phi[i] * phi[i], phi[i], 1.0};
            M += lambda[i] * f * f.transpose();
            rhs += lambda[i] * logy[i] * f;
        }
        Eigen::FullPivLU<Eigen::Matrix3d> lu(M);
        if (!lu.isInvertible())
            throw InsufficientData{"degenerate weighted design"};
        const Eigen::Vector3d b_new = lu.solve(rhs);

        const double delta = (b_new - b).cwiseAbs().maxCoeff();
        b = b_new;
        if (iter > 0 && delta < cfg.tol)
            break;

        for (std::size_t i = 0; i < n; ++i) {
            const double expo = std::clamp(b[0] * phi[i] * phi[i] + b[1] * phi[i] + b[2],
                                           -700.0, 700.0);
            const double B = std::exp(expo);
            const double u = logy[i] - expo; // ln(y/B)
            // lambda = (y - B) B / (ln y - ln B), limit B^2 at y = B
            lambda[i] = std::abs(u) > 1e-8 ? B * B * std::expm1(u) / u
                                           : B * B * (1.0 + 0.5 * u);
        }
    }

    if (b[0] >= 0.0)
        throw InvalidCurvature{};
    const double eta = -b[0];
    const double center = wrap_angle(-b[1] / (2.0 * b[0]));
    const double omega = std::exp(b[2] - sq(b[1]) / (4.0 * b[0]));
    return BeamPattern{omega, eta, center};
}

double series_log_likelihood(const MeasurementSeries& series, const Trajectory& traj,
                             const PropagationParams& pp, const Topology& topo) {
    if (series.size() != traj.size())
        throw LengthMismatch{"series and trajectory lengths differ"};
    double ll = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i)
        ll += log_likelihood_obs(series.observations[i], traj[i], pp, topo);
    return ll;
}

PropagationFitReport fit_propagation(const MeasurementSeries& series, const Trajectory& traj,
                                     const Topology& topo, const PropagationFitConfig& cfg) {
    const auto data = collect_rows(series, traj, topo);
    const std::size_t Q = topo.size();

    PropagationFitReport report;
    report.params.stations.resize(Q);
    report.station_ok.assign(Q, false);
    report.beam_status.resize(Q);

    // aggregate initialization, one station at a time
    parallel_for(Q, cfg.workers, [&](std::size_t qi) {
        const StationRows& sr = data[qi];
        const int beams = topo.stations()[qi].beam_count;
        StationParams& sp = report.params.stations[qi];
        sp.beams.assign(static_cast<std::size_t>(beams), BeamPattern{0.0, 0.0, 0.0});
        report.beam_status[qi].assign(static_cast<std::size_t>(beams),
                                      BeamFitStatus::kPatternFree);
        sp.path_loss = PathLossParams{0.0, 0.0, 1.0};
        if (sr.slots.size() < 2)
            return;
        try {
            const auto [alpha, beta] = aggregate_fit(sr);
            double sse = 0.0;
            for (const StationRows::Row& r : sr.rows)
                sse += sq(r.y - alpha * sr.logd[static_cast<std::size_t>(r.slot_pos)] - beta);
            const double sigma =
                std::max(std::sqrt(sse / static_cast<double>(sr.rows.size())), kSigmaFloor);
            sp.path_loss = PathLossParams{alpha, beta, sigma};
            report.station_ok[qi] = true;
        } catch (const SingularDesign&) {
        }
    });

    const int outer_total = cfg.fit_patterns ? cfg.outer_iters : 0;
    std::vector<double> deltas(Q, 0.0);
    for (int outer = 0; outer < outer_total; ++outer) {
        std::fill(deltas.begin(), deltas.end(), 0.0);
        parallel_for(Q, cfg.workers, [&](std::size_t qi) {
            if (!report.station_ok[qi])
                return;
            const StationRows& sr = data[qi];
            StationParams& sp = report.params.stations[qi];
            double delta = 0.0;

            const int beams = topo.stations()[qi].beam_count;
            for (int m = 0; m < beams; ++m) {
                std::vector<double> ydd, phim;
                for (const StationRows::Row& r : sr.rows) {
                    if (r.m != m)
                        continue;
                    const std::size_t p = static_cast<std::size_t>(r.slot_pos);
                    ydd.push_back(r.y - sp.path_loss.alpha * sr.logd[p] - sp.path_loss.beta);
                    phim.push_back(sr.phi[p]);
                }
                BeamPattern& cur = sp.beams[static_cast<std::size_t>(m)];
                BeamFitStatus status = BeamFitStatus::kFitted;
                BeamPattern cand = cur;
                try {
                    cand = fit_beam_pattern(ydd, phim, cfg.pattern);
                } catch (const InsufficientData&) {
                    status = BeamFitStatus::kInsufficientData;
                    cand = BeamPattern{0.0, 0.0, 0.0};
                } catch (const InvalidCurvature&) {
                    status = BeamFitStatus::kPatternFree;
                    cand = BeamPattern{0.0, 0.0, 0.0};
                }
                // keep the candidate only if it does not worsen this beam's fit
                const double sse_cur =
                    beam_sse(sr, m, sp.path_loss.alpha, sp.path_loss.beta, cur);
                const double sse_cand =
                    beam_sse(sr, m, sp.path_loss.alpha, sp.path_loss.beta, cand);
                if (sse_cand <= sse_cur) {
                    delta = std::max({delta, std::abs(cand.omega - cur.omega),
                                      std::abs(cand.eta - cur.eta),
                                      std::abs(angle_diff(cand.center, cur.center))});
                    cur = cand;
                    report.beam_status[qi][static_cast<std::size_t>(m)] =
                        cand.omega == 0.0 ? status : BeamFitStatus::kFitted;
                }
            }

            const PathLossFit pl = residual_fit(sr, sp.beams);
            delta = std::max({delta, std::abs(pl.alpha - sp.path_loss.alpha),
                              std::abs(pl.beta - sp.path_loss.beta),
                              std::abs(pl.sigma - sp.path_loss.sigma)});
            sp.path_loss = PathLossParams{pl.alpha, pl.beta, pl.sigma};
            deltas[qi] = delta;
        });

        report.objective_trace.push_back(series_log_likelihood(series, traj, report.params, topo));
        if (*std::max_element(deltas.begin(), deltas.end()) < cfg.tol)
            break;
    }

    if (report.objective_trace.empty())
        report.objective_trace.push_back(series_log_likelihood(series, traj, report.params, topo));
    return report;
}

} // namespace apmap

// SPDX-License-Identifier: Apache-2.0

#include "apmap/recover.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace apmap {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr double kMinAccelVar = 1e-6;

double transition_log_likelihood(const Trajectory& traj, const MobilityParams& mp) {
    double ll = 0.0;
    for (std::size_t t = 2; t < traj.size(); ++t)
        ll += log_transition(traj[t], traj[t - 1], traj[t - 2], mp);
    return ll;
}

/// Emission log-likelihood of one slot plus its gradient w.r.t. x.
/// Returns -inf (gradient unspecified) when x degenerates onto a station.
double emission_with_grad(const Observation& obs, const Vec2& x, const Topology& topo,
                          const PropagationParams& pp, Vec2* grad) {
    double ll = 0.0;
    Vec2 g{0.0, 0.0};
    for (const ObsEntry& e : obs.entries) {
        const int qi = topo.index_of(e.q);
        const BaseStation& bs = topo.stations()[static_cast<std::size_t>(qi)];
        const StationParams& sp = pp.at(qi);
        const Vec2 dvec = x - bs.position;
        const double r2 = dvec.squaredNorm();
        const double d2 = r2 + sq(bs.height_offset);
        if (d2 < 1e-18)
            return kNegInf;
        const double d = std::sqrt(d2);
        double mu = sp.path_loss.beta + sp.path_loss.alpha * std::log10(d);
        Vec2 dmu = sp.path_loss.alpha / (kLn10 * d2) * dvec;
        const BeamPattern& b = sp.beams.at(static_cast<std::size_t>(e.m));
        if (b.omega != 0.0) {
            if (r2 < 1e-18)
                return kNegInf; // bearing undefined
            const double phi = wrap_angle(std::atan2(dvec.y(), dvec.x()));
            const double dphi = angle_diff(phi, b.center);
            const double gain = b.omega * std::exp(-b.eta * dphi * dphi);
            mu += gain;
            const Vec2 dphi_dx{-dvec.y() / r2, dvec.x() / r2};
            dmu += gain * (-2.0 * b.eta * dphi) * dphi_dx;
        }
        const double sigma2 = sq(sp.path_loss.sigma);
        const double resid = e.y_db - mu;
        ll += -kHalfLog2Pi - std::log(sp.path_loss.sigma) - 0.5 * resid * resid / sigma2;
        g += (resid / sigma2) * dmu;
    }
    if (grad)
        *grad = g;
    return ll;
}

/// Objective and, optionally, its full gradient over all positions.
double objective_with_grad(const MeasurementSeries& series, const Trajectory& traj,
                           const Topology& topo, const PropagationParams& pp,
                           const MobilityParams& mp, std::vector<Vec2>* grad) {
    const std::size_t T = traj.size();
    if (series.size() != T)
        throw LengthMismatch{"series and trajectory lengths differ"};
    if (grad)
        grad->assign(T, Vec2{0.0, 0.0});

    double J = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        Vec2 g;
        const double e = emission_with_grad(series.observations[t], traj[t], topo, pp,
                                            grad ? &g : nullptr);
        if (e == kNegInf)
            return kNegInf;
        J += e;
        if (grad)
            (*grad)[t] += g;
    }
    if (T < 3)
        return J;

    const double s2 = (1.0 - sq(mp.gamma)) * sq(mp.slot) * mp.accel_var;
    for (std::size_t t = 2; t < T; ++t) {
        const Vec2 r = traj[t] - (1.0 + mp.gamma) * traj[t - 1] + mp.gamma * traj[t - 2] -
                       (1.0 - mp.gamma) * mp.slot * mp.mean_velocity;
        J += -std::log(kTwoPi * s2) - r.squaredNorm() / (2.0 * s2);
        if (grad) {
            (*grad)[t] += -r / s2;
            (*grad)[t - 1] += (1.0 + mp.gamma) * r / s2;
            (*grad)[t - 2] += -mp.gamma * r / s2;
        }
    }
    return J;
}

PropagationParams random_propagation(const Topology& topo, Rng& rng) {
    std::uniform_real_distribution<double> ua(-40.0, -10.0), ub(0.0, 10.0), us(0.1, 2.0),
        uw(0.0, 20.0), ue(0.5, 8.0), uc(0.0, kTwoPi);
    PropagationParams pp;
    pp.stations.resize(topo.size());
    for (std::size_t i = 0; i < topo.size(); ++i) {
        StationParams& sp = pp.stations[i];
        sp.path_loss = PathLossParams{ua(rng), ub(rng), us(rng)};
        const int beams = topo.stations()[i].beam_count;
        sp.beams.reserve(static_cast<std::size_t>(beams));
        for (int m = 0; m < beams; ++m)
            sp.beams.push_back(BeamPattern{uw(rng), ue(rng), uc(rng)});
    }
    return pp;
}

/// Profiled aggregate-fit score of one candidate trajectory: per station,
/// least squares of the per-slot beam-mean power on [log10 d, 1]; the
/// Gaussian profile likelihood is then -sum_q n_q ln sigma_hat_q.
double aggregate_scan_score(const MeasurementSeries& series, const Trajectory& traj,
                            const Topology& topo) {
    const std::size_t Q = topo.size();
    struct Acc {
        double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    };
    std::vector<Acc> acc(Q);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const Observation& obs = series.observations[i];
        std::size_t j = 0;
        while (j < obs.entries.size()) {
            const int q = obs.entries[j].q;
            double sum = 0.0;
            int cnt = 0;
            while (j < obs.entries.size() && obs.entries[j].q == q) {
                sum += obs.entries[j].y_db;
                ++cnt;
                ++j;
            }
            const std::size_t qi = static_cast<std::size_t>(topo.index_of(q));
            const BaseStation& bs = topo.stations()[qi];
            const double d = distance(traj[i], bs);
            if (d < 1e-9)
                continue;
            const double x = std::log10(d);
            const double y = sum / cnt;
            Acc& a = acc[qi];
            a.sw += 1.0;
            a.sx += x;
            a.sy += y;
            a.sxx += x * x;
            a.sxy += x * y;
            a.syy += y * y;
        }
    }
    double score = 0.0;
    for (const Acc& a : acc) {
        if (a.sw < 3.0)
            continue;
        const double det = a.sw * a.sxx - a.sx * a.sx;
        double sse;
        if (det > 1e-9 * std::max(1.0, a.sw * a.sxx)) {
            const double alpha = (a.sw * a.sxy - a.sx * a.sy) / det;
            const double beta = (a.sxx * a.sy - a.sx * a.sxy) / det;
            sse = a.syy - alpha * a.sxy - beta * a.sy;
        } else {
            sse = a.syy - a.sy * a.sy / a.sw; // mean-only fit
        }
        const double sigma2 = std::max(sse / a.sw, 1e-12);
        score += -0.5 * a.sw * std::log(sigma2);
    }
    return score;
}

} // namespace

Trajectory bootstrap_constant_speed(const MeasurementSeries& series, const Topology& topo,
                                    const GridGraph& graph, int workers, int rank) {
    const std::size_t T = series.size();
    const std::vector<Vec2>& verts = graph.vertices();
    const int n = graph.size();
    rank = std::max(0, rank);

    // ranked, mutually distant picks from a scored candidate list
    auto pick_diverse = [&](const std::vector<double>& scores,
                            const std::function<Vec2(std::size_t, std::size_t)>& point_of,
                            double min_dist) {
        std::vector<std::size_t> order(scores.size());
        for (std::size_t i = 0; i < order.size(); ++i)
            order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
        const std::size_t stride = std::max<std::size_t>(1, T / 16);
        std::vector<std::size_t> chosen;
        for (std::size_t idx : order) {
            bool distinct = true;
            for (std::size_t c : chosen) {
                double acc = 0.0;
                std::size_t cnt = 0;
                for (std::size_t t = 0; t < T; t += stride) {
                    acc += (point_of(idx, t) - point_of(c, t)).norm();
                    ++cnt;
                }
                if (acc / static_cast<double>(cnt) < min_dist) {
                    distinct = false;
                    break;
                }
            }
            if (distinct) {
                chosen.push_back(idx);
                if (static_cast<int>(chosen.size()) > rank)
                    break;
            }
        }
        return chosen.empty() ? order.front()
                              : chosen[std::min<std::size_t>(chosen.size() - 1,
                                                             static_cast<std::size_t>(rank))];
    };

    if (graph.kind() == GridGraph::Kind::kPolyline) {
        const double L = graph.spacing() * (n - 1);
        const double max_step = graph.spacing() * graph.hop_limit();
        auto arc_point = [&](double s) {
            const double clamped = std::clamp(s, 0.0, L);
            const double idx = clamped / graph.spacing();
            const int lo = std::min(n - 2, static_cast<int>(idx));
            const double w = idx - lo;
            return Vec2{(1.0 - w) * verts[static_cast<std::size_t>(lo)] +
                        w * verts[static_cast<std::size_t>(lo + 1)]};
        };
        // the score basin in u is narrow (a speed error drifts by u_err * T
        // meters), so the global sweep is dense in u but strides the slots
        auto score_of = [&](double s0, double u, std::size_t stride) {
            Trajectory cand;
            MeasurementSeries sub;
            sub.slot_duration = series.slot_duration;
            for (std::size_t t = 0; t < T; t += stride) {
                cand.positions.push_back(arc_point(s0 + u * static_cast<double>(t)));
                sub.observations.push_back(series.observations[t]);
            }
            return aggregate_scan_score(sub, cand, topo);
        };

        const std::size_t stride = std::clamp<std::size_t>(T / 256, 1, 8);
        std::vector<std::pair<double, double>> params;
        double s_step = std::max(graph.spacing(), L / 96.0);
        double u_step = max_step / 512.0;
        for (double s0 = 0.0; s0 <= L; s0 += s_step)
            for (double u = -max_step; u <= max_step; u += u_step)
                params.emplace_back(s0, u);
        std::vector<double> scores(params.size(), 0.0);
        parallel_for(params.size(), workers, [&](std::size_t c) {
            scores[c] = score_of(params[c].first, params[c].second, stride);
        });
        auto point_of = [&](std::size_t idx, std::size_t t) {
            return arc_point(params[idx].first + params[idx].second * static_cast<double>(t));
        };
        std::pair<double, double> best =
            params[pick_diverse(scores, point_of, 8.0 * graph.spacing())];

        for (int round = 0; round < 4; ++round) {
            std::vector<std::pair<double, double>> local;
            const double s_lo = best.first - s_step, s_hi = best.first + s_step;
            const double u_lo = best.second - u_step, u_hi = best.second + u_step;
            s_step = std::max(s_step / 5.0, 1e-4);
            u_step = std::max(u_step / 5.0, 1e-7);
            for (double s0 = s_lo; s0 <= s_hi; s0 += s_step)
                for (double u = u_lo; u <= u_hi; u += u_step)
                    local.emplace_back(s0, u);
            std::vector<double> ls(local.size(), 0.0);
            parallel_for(local.size(), workers, [&](std::size_t c) {
                ls[c] = score_of(local[c].first, local[c].second, 1);
            });
            best = local[static_cast<std::size_t>(std::max_element(ls.begin(), ls.end()) -
                                                  ls.begin())];
        }

        Trajectory out;
        out.positions.reserve(T);
        for (std::size_t t = 0; t < T; ++t)
            out.positions.push_back(arc_point(best.first + best.second * static_cast<double>(t)));
        return out;
    }

    // lattice / point-cloud: straight lines p_t = p0 + t * du, clamped
    struct Candidate {
        Vec2 p0;
        Vec2 du;
    };
    Rect box{verts.front().x(), verts.front().y(), verts.front().x(), verts.front().y()};
    for (const Vec2& p : verts) {
        box.x0 = std::min(box.x0, p.x());
        box.y0 = std::min(box.y0, p.y());
        box.x1 = std::max(box.x1, p.x());
        box.y1 = std::max(box.y1, p.y());
    }
    auto line_point = [&](const Candidate& c, std::size_t t) {
        const Vec2 p = c.p0 + static_cast<double>(t) * c.du;
        return Vec2{std::clamp(p.x(), box.x0, box.x1), std::clamp(p.y(), box.y0, box.y1)};
    };
    auto score_of = [&](const Candidate& c, std::size_t stride) {
        Trajectory cand;
        MeasurementSeries sub;
        sub.slot_duration = series.slot_duration;
        for (std::size_t t = 0; t < T; t += stride) {
            cand.positions.push_back(line_point(c, t));
            sub.observations.push_back(series.observations[t]);
        }
        return aggregate_scan_score(sub, cand, topo);
    };
    const std::size_t slot_stride = std::clamp<std::size_t>(T / 256, 1, 8);

    // du errors drift by T * err, so the velocity grid is scaled with 1/T
    const double du_max = graph.spacing() * graph.hop_limit();
    const double du_step =
        std::max(du_max / 24.0, std::min(du_max / 4.0, 4.0 * graph.spacing() / T));
    std::vector<Candidate> candidates;
    const int stride_v = std::max(1, n / 160);
    for (int i = 0; i < n; i += stride_v) {
        for (double ux = -du_max; ux <= du_max; ux += du_step)
            for (double uy = -du_max; uy <= du_max; uy += du_step)
                candidates.push_back({verts[static_cast<std::size_t>(i)], Vec2{ux, uy}});
    }
    std::vector<double> scores(candidates.size(), 0.0);
    parallel_for(candidates.size(), workers,
                 [&](std::size_t c) { scores[c] = score_of(candidates[c], slot_stride); });
    auto point_of = [&](std::size_t idx, std::size_t t) { return line_point(candidates[idx], t); };
    Candidate best = candidates[pick_diverse(scores, point_of, 8.0 * graph.spacing())];

    double sp = graph.spacing() * std::max(1, stride_v / 2);
    double sd = du_step;
    for (int round = 0; round < 4; ++round) {
        std::vector<Candidate> local;
        for (int ax = -2; ax <= 2; ++ax)
            for (int ay = -2; ay <= 2; ++ay)
                for (int bx = -2; bx <= 2; ++bx)
                    for (int by = -2; by <= 2; ++by)
                        local.push_back({best.p0 + Vec2{ax * sp, ay * sp},
                                         best.du + Vec2{bx * sd, by * sd}});
        std::vector<double> ls(local.size(), 0.0);
        parallel_for(local.size(), workers,
                     [&](std::size_t c) { ls[c] = score_of(local[c], 1); });
        best = local[static_cast<std::size_t>(std::max_element(ls.begin(), ls.end()) -
                                              ls.begin())];
        sp /= 3.0;
        sd /= 3.0;
    }

    Trajectory out;
    out.positions.reserve(T);
    for (std::size_t t = 0; t < T; ++t)
        out.positions.push_back(line_point(best, t));
    return out;
}

double recovery_objective(const MeasurementSeries& series, const Trajectory& traj,
                          const Topology& topo, const PropagationParams& pp,
                          const MobilityParams& mp) {
    return recovery_objective(series, traj, topo, pp, mp, nullptr);
}

double recovery_objective(const MeasurementSeries& series, const Trajectory& traj,
                          const Topology& topo, const PropagationParams& pp,
                          const MobilityParams& mp, std::vector<Vec2>* grad) {
    if (traj.size() >= 3 && mp.gamma >= 1.0)
        throw DegenerateGamma{};
    return objective_with_grad(series, traj, topo, pp, mp, grad);
}

Trajectory refine_gradient(const Trajectory& traj0, const MeasurementSeries& series,
                           const Topology& topo, const PropagationParams& pp,
                           const MobilityParams& mp, double learning_rate, int max_iters) {
    if (mp.gamma >= 1.0)
        throw DegenerateGamma{};
    Trajectory traj = traj0;
    std::vector<Vec2> grad;
    double J = objective_with_grad(series, traj, topo, pp, mp, &grad);
    if (J == kNegInf)
        return traj;

    Trajectory cand = traj;
    for (int iter = 0; iter < max_iters; ++iter) {
        double gmax = 0.0;
        for (const Vec2& g : grad)
            gmax = std::max(gmax, g.cwiseAbs().maxCoeff());
        if (gmax < 1e-9)
            break;

        double step = learning_rate;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            for (std::size_t t = 0; t < traj.size(); ++t)
                cand[t] = traj[t] + step * grad[t];
            const double Jc = objective_with_grad(series, cand, topo, pp, mp, nullptr);
            if (Jc >= J) {
                const bool stalled = Jc - J <= 1e-12 * (1.0 + std::abs(J));
                traj.positions.swap(cand.positions);
                J = Jc;
                accepted = !stalled;
                break;
            }
            step *= 0.5;
        }
        if (!accepted)
            break;
        J = objective_with_grad(series, traj, topo, pp, mp, &grad);
    }
    return traj;
}

RecoverResult recover(const MeasurementSeries& series, const Topology& topo,
                      const GridGraph& graph, double gamma, double delta,
                      const RecoverConfig& cfg) {
    if (!(gamma > 0.0) || gamma >= 1.0)
        throw std::invalid_argument("recover requires 0 < gamma < 1");
    Rng rng(cfg.seed);

    // keep per-slot innovations from shrinking below a fraction of the grid
    // step; a frozen transition density locks the decode onto its first path
    const double accel_floor = std::max(
        kMinAccelVar, sq(cfg.min_innovation_factor * graph.spacing() /
                         (std::sqrt(1.0 - sq(gamma)) * delta)));

    RecoverResult res;
    res.pp = cfg.fixed_pp ? *cfg.fixed_pp : random_propagation(topo, rng);

    std::uniform_real_distribution<double> uv(-10.0, 10.0), usv(0.5, 5.0);
    res.mp = MobilityParams{Vec2{uv(rng), uv(rng)}, std::max(usv(rng), accel_floor), gamma,
                            delta};

    if (cfg.bootstrap && !cfg.fixed_pp) {
        const Trajectory seed_traj =
            bootstrap_constant_speed(series, topo, graph, cfg.workers, cfg.bootstrap_rank);
        PropagationFitReport boot = fit_propagation(series, seed_traj, topo, cfg.prop);
        for (std::size_t qi = 0; qi < topo.size(); ++qi)
            if (boot.station_ok[qi])
                res.pp.stations[qi] = boot.params.stations[qi];
        try {
            auto [vbar, sv2] = estimate_mobility(seed_traj, gamma, delta);
            res.mp = MobilityParams{vbar, std::max(sv2, accel_floor), gamma, delta};
        } catch (const InsufficientData&) {
        }
    }

    double J_cur = kNegInf;
    std::vector<int> prev_ids;
    for (int outer = 0; outer < cfg.outer_iters; ++outer) {
        res.outer_iterations = outer + 1;

        // update the trajectory (P3): Viterbi then gradient refinement
        ViterbiResult vr = viterbi2(series, topo, res.pp, res.mp, graph, cfg.prune, cfg.workers);
        Trajectory cand =
            refine_gradient(vr.path, series, topo, res.pp, res.mp, cfg.learning_rate,
                            cfg.refine_iters);
        const double J_cand = recovery_objective(series, cand, topo, res.pp, res.mp);
        if (J_cand >= J_cur || res.trajectory.size() == 0) {
            res.trajectory = std::move(cand);
            J_cur = J_cand;
        }

        // update the propagation parameters (P2)
        if (!cfg.fixed_pp) {
            PropagationFitReport report = fit_propagation(series, res.trajectory, topo, cfg.prop);
            PropagationParams merged = res.pp;
            for (std::size_t qi = 0; qi < topo.size(); ++qi)
                if (report.station_ok[qi])
                    merged.stations[qi] = report.params.stations[qi];
            const double em_old = series_log_likelihood(series, res.trajectory, res.pp, topo);
            const double em_new = series_log_likelihood(series, res.trajectory, merged, topo);
            if (em_new >= em_old) {
                res.pp = std::move(merged);
                J_cur += em_new - em_old;
            }
        }

        // update the mobility parameters (P1)
        try {
            auto [vbar, sv2] = estimate_mobility(res.trajectory, gamma, delta);
            MobilityParams mp_new{vbar, std::max(sv2, accel_floor), gamma, delta};
            const double tr_old = transition_log_likelihood(res.trajectory, res.mp);
            const double tr_new = transition_log_likelihood(res.trajectory, mp_new);
            if (tr_new >= tr_old) {
                res.mp = mp_new;
                J_cur += tr_new - tr_old;
            }
        } catch (const InsufficientData&) {
        }

        res.objective_trace.push_back(J_cur);
        if (vr.vertex_ids == prev_ids)
            break;
        prev_ids = std::move(vr.vertex_ids);
    }
    return res;
}

double localization_error(const Trajectory& truth, const Trajectory& est) {
    if (truth.size() != est.size())
        throw LengthMismatch{"trajectories differ in length"};
    if (truth.size() == 0)
        throw LengthMismatch{"empty trajectories"};
    double acc = 0.0;
    for (std::size_t t = 0; t < truth.size(); ++t)
        acc += (truth[t] - est[t]).norm();
    return acc / static_cast<double>(truth.size());
}

Trajectory baseline_mar(const MeasurementSeries& series, const Topology& topo) {
    Vec2 fallback{0.0, 0.0};
    for (const BaseStation& bs : topo.stations())
        fallback += bs.position;
    if (!topo.stations().empty())
        fallback /= static_cast<double>(topo.size());

    Trajectory traj;
    traj.positions.reserve(series.size());
    for (const Observation& obs : series.observations) {
        if (!obs.entries.empty()) {
            const ObsEntry* best = &obs.entries.front();
            for (const ObsEntry& e : obs.entries)
                if (e.y_db > best->y_db)
                    best = &e; // entries sorted by (q, m): ties keep the lowest
            fallback = topo.station(best->q).position;
        }
        traj.positions.push_back(fallback);
    }
    return traj;
}

Trajectory baseline_wcl(const MeasurementSeries& series, const Topology& topo) {
    Vec2 fallback{0.0, 0.0};
    for (const BaseStation& bs : topo.stations())
        fallback += bs.position;
    if (!topo.stations().empty())
        fallback /= static_cast<double>(topo.size());

    Trajectory traj;
    traj.positions.reserve(series.size());
    for (const Observation& obs : series.observations) {
        double wsum = 0.0;
        Vec2 acc{0.0, 0.0};
        for (const ObsEntry& e : obs.entries) {
            const double w = std::pow(10.0, e.y_db / 20.0);
            wsum += w;
            acc += w * topo.station(e.q).position;
        }
        if (wsum > 0.0)
            fallback = acc / wsum;
        traj.positions.push_back(fallback);
    }
    return traj;
}

std::pair<Topology, MeasurementSeries> reduce_to_strongest_beam(const Topology& topo,
                                                                const MeasurementSeries& series) {
    std::vector<BaseStation> stations = topo.stations();
    for (BaseStation& bs : stations)
        bs.beam_count = 1;
    Topology reduced{std::move(stations), topo.region(), topo.connect_radius()};

    MeasurementSeries out;
    out.slot_duration = series.slot_duration;
    out.observations.reserve(series.size());
    for (const Observation& obs : series.observations) {
        Observation o;
        o.t = obs.t;
        for (const ObsEntry& e : obs.entries) {
            bool merged = false;
            for (ObsEntry& kept : o.entries) {
                if (kept.q == e.q) {
                    kept.y_db = std::max(kept.y_db, e.y_db);
                    merged = true;
                    break;
                }
            }
            if (!merged)
                o.entries.push_back(ObsEntry{e.q, 0, e.y_db});
        }
        normalize_entries(o);
        out.observations.push_back(std::move(o));
    }
    return {std::move(reduced), std::move(out)};
}

} // namespace apmap

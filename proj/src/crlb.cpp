// SPDX-License-Identifier: Apache-2.0

#include "apmap/crlb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace apmap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double lambda_min2(const Mat2& m) {
    const double half_tr = 0.5 * (m(0, 0) + m(1, 1));
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    return half_tr - std::sqrt(std::max(0.0, half_tr * half_tr - det));
}

double trace_inverse2(const Mat2& m) {
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const double scale = std::max({std::abs(m(0, 0) * m(1, 1)), std::abs(m(0, 1) * m(1, 0)), 1e-300});
    if (!(det > 1e-14 * scale))
        return kInf;
    return (m(0, 0) + m(1, 1)) / det;
}

/// d_{t,q} with x_t = x + t*delta*v; throws when the path hits a station.
double slot_distance(const Topology& topo, int q_index, const Vec2& x, const Vec2& v, double delta,
                     int t) {
    const BaseStation& bs = topo.stations()[static_cast<std::size_t>(q_index)];
    const Vec2 p = x + (delta * t) * v;
    const double d = distance(p, bs);
    if (d < 1e-9)
        throw TrajectoryThroughBS{};
    return d;
}

struct LimitedMatrices {
    Mat2 a_x = Mat2::Zero();
    Mat2 a_v = Mat2::Zero(); // in per-slot velocity units
    double sum_s2_proj = 0.0;
};

LimitedMatrices limited_matrices(int T, const Topology& topo, const Vec2& x, const Vec2& v,
                                 double delta) {
    const Vec2 vs = delta * v; // meters per slot
    const double v2 = vs.squaredNorm();
    LimitedMatrices out;
    for (std::size_t qi = 0; qi < topo.size(); ++qi) {
        const Vec2 l = x - topo.stations()[qi].position;
        double s[5] = {0, 0, 0, 0, 0};
        for (int t = 1; t <= T; ++t) {
            const double d = slot_distance(topo, static_cast<int>(qi), x, v, delta, t);
            const double w = 1.0 / (d * d * d * d);
            double tn = 1.0;
            for (int n = 0; n <= 4; ++n) {
                s[n] += tn * w;
                tn *= t;
            }
        }
        const Mat2 ll = l * l.transpose();
        const Mat2 lv = l * vs.transpose() + vs * l.transpose();
        const Mat2 vv = vs * vs.transpose();
        out.a_x += s[0] * ll + s[1] * lv + s[2] * vv;
        out.a_v += s[2] * ll + s[3] * lv + s[4] * vv;
        if (v2 > 0.0) {
            const Vec2 proj = l - (l.dot(vs) / v2) * vs;
            out.sum_s2_proj += s[2] * proj.squaredNorm();
        }
    }
    return out;
}

double alpha_eff2(double alpha2_db) { return alpha2_db / (kLn10 * kLn10); }

// ---------------------------------------------------------------------------
// Maximum-likelihood machinery for the scaling experiment
// ---------------------------------------------------------------------------

struct MleRows {
    std::vector<int> t;       // slot, 1-based
    std::vector<int> q;       // station index
    std::vector<double> y;
    std::vector<Vec2> station; // positions, aligned with q
    std::vector<double> h2;    // squared height offsets
};

/// Negative profiled log-likelihood (up to constants): the residual sum of
/// squares after the optimal shared (alpha, beta) regression on log10 d.
class ProfiledObjective {
  public:
    ProfiledObjective(const MleRows& rows, double delta) : rows_(rows), delta_(delta) {}

    double value(const Vec2& x, const Vec2& v, Eigen::Vector4d* grad) const {
        const std::size_t n = rows_.t.size();
        logd_.resize(n);
        planar_.resize(n);
        d2_.resize(n);
        double sl = 0.0, sll = 0.0, sy = 0.0, sly = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 p = x + (delta_ * rows_.t[i]) * v - rows_.station[i];
            const double d2 = p.squaredNorm() + rows_.h2[i];
            if (d2 < 1e-18)
                return kInf;
            planar_[i] = p;
            d2_[i] = d2;
            const double L = 0.5 * std::log10(d2);
            logd_[i] = L;
            sl += L;
            sll += L * L;
            sy += rows_.y[i];
            sly += L * rows_.y[i];
        }
        const double nn = static_cast<double>(n);
        const double det = nn * sll - sl * sl;
        if (!(det > 1e-12 * std::max(1.0, nn * sll)))
            return kInf;
        const double alpha = (nn * sly - sl * sy) / det;
        const double beta = (sll * sy - sl * sly) / det;

        double sse = 0.0;
        if (grad)
            grad->setZero();
        for (std::size_t i = 0; i < n; ++i) {
            const double r = rows_.y[i] - alpha * logd_[i] - beta;
            sse += r * r;
            if (grad) {
                // d(log10 d)/dx = planar / (ln10 * d^2); envelope theorem for (alpha, beta)
                const Vec2 gl = planar_[i] / (kLn10 * d2_[i]);
                const double c = -2.0 * r * alpha;
                (*grad)(0) += c * gl.x();
                (*grad)(1) += c * gl.y();
                (*grad)(2) += c * gl.x() * delta_ * rows_.t[i];
                (*grad)(3) += c * gl.y() * delta_ * rows_.t[i];
            }
        }
        return sse;
    }

  private:
    const MleRows& rows_;
    double delta_;
    mutable std::vector<double> logd_, d2_;
    mutable std::vector<Vec2> planar_;
};

struct BfgsOutcome {
    Vec2 x{0, 0};
    Vec2 v{0, 0};
    double value = kInf;
    bool converged = false;
};

/// BFGS with Armijo backtracking over w = (x, v * delta * T): all coordinates
/// in meters, which keeps the Hessian conditioning manageable at large T.
BfgsOutcome minimize_profiled(const ProfiledObjective& obj, const Vec2& x0, const Vec2& v0,
                              double delta, int T, int max_iters) {
    const double vscale = delta * std::max(T, 1);
    auto unpack = [&](const Eigen::Vector4d& w, Vec2& x, Vec2& v) {
        x = Vec2{w(0), w(1)};
        v = Vec2{w(2) / vscale, w(3) / vscale};
    };
    auto eval = [&](const Eigen::Vector4d& w, Eigen::Vector4d* g) {
        Vec2 x, v;
        unpack(w, x, v);
        const double f = obj.value(x, v, g);
        if (g) {
            (*g)(2) /= vscale;
            (*g)(3) /= vscale;
        }
        return f;
    };

    Eigen::Vector4d w{x0.x(), x0.y(), v0.x() * vscale, v0.y() * vscale};
    Eigen::Vector4d g;
    double f = eval(w, &g);
    if (!std::isfinite(f))
        return {};

    Eigen::Matrix4d H = Eigen::Matrix4d::Identity();
    BfgsOutcome out;
    int stall = 0;
    for (int iter = 0; iter < max_iters; ++iter) {
        Eigen::Vector4d dir = -H * g;
        if (dir.dot(g) >= 0.0) {
            H.setIdentity();
            dir = -g;
        }
        double step = 1.0;
        double f_new = kInf;
        Eigen::Vector4d w_new;
        bool ok = false;
        for (int bt = 0; bt < 50; ++bt) {
            w_new = w + step * dir;
            f_new = eval(w_new, nullptr);
            if (f_new <= f + 1e-4 * step * dir.dot(g)) {
                ok = true;
                break;
            }
            step *= 0.5;
        }
        if (!ok) {
            out.converged = true; // no descent direction left
            break;
        }
        Eigen::Vector4d g_new = Eigen::Vector4d::Zero();
        eval(w_new, &g_new);
        const Eigen::Vector4d s = w_new - w;
        const Eigen::Vector4d yv = g_new - g;
        const double sy = s.dot(yv);
        if (sy > 1e-12 * s.norm() * yv.norm()) {
            const Eigen::Vector4d Hy = H * yv;
            const double yHy = yv.dot(Hy);
            H += ((sy + yHy) / (sy * sy)) * (s * s.transpose()) -
                 (Hy * s.transpose() + s * Hy.transpose()) / sy;
        }
        const bool tiny_step = s.cwiseAbs().maxCoeff() < 1e-12;
        const bool tiny_gain = (f - f_new) <= 1e-15 * (1.0 + std::abs(f));
        w = w_new;
        f = f_new;
        g = g_new;
        if (tiny_step || tiny_gain) {
            if (++stall >= 2) {
                out.converged = true;
                break;
            }
        } else {
            stall = 0;
        }
    }
    unpack(w, out.x, out.v);
    out.value = f;
    return out;
}

} // namespace

FimResult fim_psi(const Topology& topo, const Vec2& x, const Vec2& v, double delta,
                  const std::vector<PathLossParams>& params, int T) {
    if (params.size() != topo.size())
        throw std::invalid_argument("params do not cover the topology");
    if (T < 1 || !(delta > 0.0))
        throw std::invalid_argument("need T >= 1 and delta > 0");

    FimResult res;
    res.f_psi.setZero();
    res.f_x.setZero();
    res.f_v.setZero();
    for (std::size_t qi = 0; qi < topo.size(); ++qi) {
        const double a2 = alpha_eff2(sq(params[qi].alpha));
        const double s2 = sq(params[qi].sigma);
        const Vec2 o = topo.stations()[qi].position;
        for (int t = 1; t <= T; ++t) {
            const double d = slot_distance(topo, static_cast<int>(qi), x, v, delta, t);
            const Vec2 p = x + (delta * t) * v - o; // planar offset
            const double c = a2 / (s2 * d * d * d * d);
            const Mat2 outer = c * (p * p.transpose());
            const double td = delta * t;
            res.f_x += outer;
            res.f_v += (td * td) * outer;
            res.f_psi.topLeftCorner<2, 2>() += outer;
            res.f_psi.topRightCorner<2, 2>() += td * outer;
            res.f_psi.bottomLeftCorner<2, 2>() += td * outer;
            res.f_psi.bottomRightCorner<2, 2>() += (td * td) * outer;
        }
    }
    res.crlb_x = trace_inverse2(res.f_x);
    res.crlb_v = trace_inverse2(res.f_v);
    return res;
}

double series_s(int T, int q, int n, const Vec2& x, const Vec2& v, double delta,
                const Topology& topo) {
    if (n < 0 || n > 4)
        throw std::invalid_argument("series order n must be in 0..4");
    const int qi = topo.index_of(q);
    double acc = 0.0;
    for (int t = 1; t <= T; ++t) {
        const double d = slot_distance(topo, qi, x, v, delta, t);
        acc += std::pow(static_cast<double>(t), n) / (d * d * d * d);
    }
    return acc;
}

double bound_limited_x(int T, const Topology& topo, const Vec2& x, const Vec2& v, double delta,
                       const BoundConfig& cfg) {
    const LimitedMatrices m = limited_matrices(T, topo, x, v, delta);
    const double c0 = alpha_eff2(cfg.alpha_max2) / cfg.sigma_min2;
    const double tr = trace_inverse2(c0 * m.a_x);
    if (!std::isfinite(tr))
        throw SingularGeometry{};
    return tr;
}

LimitedVBound bound_limited_v(int T, const Topology& topo, const Vec2& x, const Vec2& v,
                              double delta, const BoundConfig& cfg) {
    const LimitedMatrices m = limited_matrices(T, topo, x, v, delta);
    const double c0 = alpha_eff2(cfg.alpha_max2) / cfg.sigma_min2;
    const double lmin = lambda_min2(m.a_v);
    if (!(lmin > 0.0) || !(m.sum_s2_proj > 0.0))
        throw SingularGeometry{};

    // numeric tail of sum_q s^(2)_{inf,q} ||P_v_perp l_q||^2
    const Vec2 vs = delta * v;
    const double v2 = vs.squaredNorm();
    double s_inf_proj = 0.0;
    for (std::size_t qi = 0; qi < topo.size(); ++qi) {
        const Vec2 l = x - topo.stations()[qi].position;
        const Vec2 proj = l - (l.dot(vs) / v2) * vs;
        const double p2 = proj.squaredNorm();
        if (p2 == 0.0)
            continue;
        double acc = 0.0;
        for (long t = 1; t <= 20000000; ++t) {
            const double d = slot_distance(topo, static_cast<int>(qi), x, v, delta,
                                           static_cast<int>(t));
            const double inc = static_cast<double>(t) * static_cast<double>(t) / (d * d * d * d);
            acc += inc;
            if (t > T && inc < 1e-14 * acc)
                break;
        }
        s_inf_proj += acc * p2;
    }

    LimitedVBound out;
    out.value = 1.0 / (c0 * lmin) / sq(delta);     // (m/s)^2
    out.c_v = 1.0 / (c0 * s_inf_proj) / sq(delta); // (m/s)^2
    return out;
}

double bound_unlimited_x(int T, double kappa, double R, double r0, double delta,
                         const BoundConfig& cfg) {
    (void)delta;
    if (!(R > r0) || !(r0 > 0.0))
        throw InvalidRadii{};
    if (T < 1 || !(kappa > 0.0))
        throw std::invalid_argument("need T >= 1 and kappa > 0");
    const double c0 = alpha_eff2(cfg.alpha_min2) / cfg.sigma_max2;
    return 2.0 * (1.0 / c0) / (kappa * kPi * std::log(R / r0) * T);
}

double bound_unlimited_v(int T, double kappa, double R, double r0, double delta,
                         const BoundConfig& cfg) {
    if (!(R > r0) || !(r0 > 0.0))
        throw InvalidRadii{};
    if (T < 1 || !(kappa > 0.0) || !(delta > 0.0))
        throw std::invalid_argument("need T >= 1, kappa > 0, delta > 0");
    const double c0 = alpha_eff2(cfg.alpha_min2) / cfg.sigma_max2;
    const double tsum = static_cast<double>(T) * (T + 1.0) * (2.0 * T + 1.0) / 6.0;
    return (1.0 / c0) * 2.0 / (kappa * kPi * std::log(R / r0) * tsum) / sq(delta);
}

double expected_projection_integral(double R, double r0) {
    if (!(R >= r0) || !(r0 > 0.0))
        throw InvalidRadii{};
    if (R == r0)
        return 0.0;

    auto simpson2d = [&](int nr, int ntheta) {
        // f(r, theta) = r^2 cos^2(theta) / r^4 * r (polar Jacobian)
        auto f = [](double r, double th) {
            const double c = std::cos(th);
            return c * c / r;
        };
        const double hr = (R - r0) / nr;
        const double ht = kTwoPi / ntheta;
        double total = 0.0;
        for (int i = 0; i <= nr; ++i) {
            const double wr = (i == 0 || i == nr) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            const double r = r0 + i * hr;
            double row = 0.0;
            for (int j = 0; j <= ntheta; ++j) {
                const double wt = (j == 0 || j == ntheta) ? 1.0 : (j % 2 ? 4.0 : 2.0);
                row += wt * f(r, j * ht);
            }
            total += wr * row;
        }
        return total * hr * ht / 9.0;
    };

    int nr = 512, ntheta = 64;
    double prev = simpson2d(nr, ntheta);
    for (int k = 0; k < 5; ++k) {
        nr *= 2;
        ntheta *= 2;
        const double cur = simpson2d(nr, ntheta);
        if (std::abs(cur - prev) <= 1e-7 * std::max(1.0, std::abs(cur)))
            return cur;
        prev = cur;
    }
    return prev;
}

MleCurves mle_experiment(const MleConfig& cfg, const std::vector<int>& T_list, int trials,
                         std::uint64_t seed, int workers) {
    if (cfg.tspec.kind != TrajectorySpec::Kind::kLinear)
        throw std::invalid_argument("mle_experiment requires a constant-speed trajectory");

    MleCurves curves;
    for (std::size_t ti = 0; ti < T_list.size(); ++ti) {
        const int T = T_list[ti];
        TrajectorySpec tspec = cfg.tspec;
        tspec.T = T;
        const double delta = tspec.delta;

        std::vector<double> err_x(static_cast<std::size_t>(trials), -1.0);
        std::vector<double> err_v(static_cast<std::size_t>(trials), -1.0);

        parallel_for(static_cast<std::size_t>(trials), workers, [&](std::size_t trial) {
            const std::uint64_t s =
                splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(T) * 1000003ULL + trial));
            ScenarioData data = cfg.kind == MleConfig::Kind::kScenario1
                                    ? gen_scenario1(cfg.s1, tspec, cfg.plc, s)
                                    : gen_scenario2(cfg.s2, tspec, cfg.plc, s);

            MleRows rows;
            for (std::size_t i = 0; i < data.series.size(); ++i) {
                for (const ObsEntry& e : data.series.observations[i].entries) {
                    const int qi = data.topo.index_of(e.q);
                    rows.t.push_back(static_cast<int>(i) + 1);
                    rows.q.push_back(qi);
                    rows.y.push_back(e.y_db);
                    rows.station.push_back(data.topo.stations()[static_cast<std::size_t>(qi)].position);
                    rows.h2.push_back(sq(data.topo.stations()[static_cast<std::size_t>(qi)].height_offset));
                }
            }
            if (rows.t.size() < 4)
                return; // too sparse; leave the trial flagged

            // x parameterizes the position one slot before the first sample
            const Vec2 v_true = tspec.v0;
            const Vec2 x_true = data.traj[0] - delta * v_true;

            ProfiledObjective obj(rows, delta);
            Rng rng(splitmix64(s ^ 0xabcdef1234567890ULL));
            std::normal_distribution<double> nd(0.0, 1.0);

            BfgsOutcome best;
            const double x_scales[3] = {0.5, 2.0, 8.0};
            const double v_scales[3] = {0.05, 0.2, 0.8};
            for (int start = 0; start < 1 + 3 * cfg.random_starts_per_scale; ++start) {
                Vec2 x0 = x_true, v0 = v_true;
                if (start > 0) {
                    const int scale = (start - 1) % 3;
                    x0 += x_scales[scale] * Vec2{nd(rng), nd(rng)};
                    v0 += v_scales[scale] * Vec2{nd(rng), nd(rng)};
                }
                BfgsOutcome r = minimize_profiled(obj, x0, v0, delta, T, cfg.max_iters);
                if (r.converged && r.value < best.value) {
                    best = r;
                    best.converged = true;
                }
            }
            if (!best.converged)
                return;
            err_x[trial] = (best.x - x_true).squaredNorm();
            err_v[trial] = (best.v - v_true).squaredNorm();
        });

        double sx = 0.0, sv = 0.0;
        int used = 0;
        for (int i = 0; i < trials; ++i) {
            if (err_x[static_cast<std::size_t>(i)] >= 0.0) {
                sx += err_x[static_cast<std::size_t>(i)];
                sv += err_v[static_cast<std::size_t>(i)];
                ++used;
            }
        }
        curves.T.push_back(T);
        curves.mse_x.push_back(used > 0 ? sx / used : std::numeric_limits<double>::quiet_NaN());
        curves.mse_v.push_back(used > 0 ? sv / used : std::numeric_limits<double>::quiet_NaN());
        curves.trials_used.push_back(used);
        curves.trials_failed.push_back(trials - used);
    }
    return curves;
}

} // namespace apmap

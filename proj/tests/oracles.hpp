// SPDX-License-Identifier: Apache-2.0
//
// Test-side reference implementations, kept independent of the library code
// paths they check.

#ifndef APMAP_TESTS_ORACLES_HPP
#define APMAP_TESTS_ORACLES_HPP

#include "apmap/channel.hpp"
#include "apmap/grid.hpp"
#include "apmap/mobility.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracles {

/// Derivative-free Nelder-Mead minimizer with restarts.
inline std::vector<double> nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x0, double initial_step,
                                       int max_iters = 20000, double tol = 1e-15) {
    const std::size_t n = x0.size();
    for (int restart = 0; restart < 7; ++restart) {
        std::vector<std::vector<double>> simplex(n + 1, x0);
        for (std::size_t i = 0; i < n; ++i)
            simplex[i + 1][i] += initial_step;
        std::vector<double> fv(n + 1);
        for (std::size_t i = 0; i <= n; ++i)
            fv[i] = f(simplex[i]);

        for (int iter = 0; iter < max_iters; ++iter) {
            std::vector<std::size_t> ord(n + 1);
            for (std::size_t i = 0; i <= n; ++i)
                ord[i] = i;
            std::sort(ord.begin(), ord.end(),
                      [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
            std::vector<std::vector<double>> s2;
            std::vector<double> f2;
            for (std::size_t i = 0; i <= n; ++i) {
                s2.push_back(simplex[ord[i]]);
                f2.push_back(fv[ord[i]]);
            }
            simplex = s2;
            fv = f2;
            double spread = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j <= n; ++j)
                    spread = std::max(spread, std::abs(simplex[j][i] - simplex[0][i]));
            if (spread < tol && std::abs(fv[n] - fv[0]) < tol)
                break;

            std::vector<double> centroid(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j)
                    centroid[j] += simplex[i][j] / static_cast<double>(n);
            }
            auto blend = [&](double c) {
                std::vector<double> p(n);
                for (std::size_t j = 0; j < n; ++j)
                    p[j] = centroid[j] + c * (simplex[n][j] - centroid[j]);
                return p;
            };
            const auto xr = blend(-1.0);
            const double fr = f(xr);
            if (fr < fv[0]) {
                const auto xe = blend(-2.0);
                const double fe = f(xe);
                if (fe < fr) {
                    simplex[n] = xe;
                    fv[n] = fe;
                } else {
                    simplex[n] = xr;
                    fv[n] = fr;
                }
            } else if (fr < fv[n - 1]) {
                simplex[n] = xr;
                fv[n] = fr;
            } else {
                const auto xc = blend(0.5);
                const double fc = f(xc);
                if (fc < fv[n]) {
                    simplex[n] = xc;
                    fv[n] = fc;
                } else {
                    for (std::size_t i = 1; i <= n; ++i) {
                        for (std::size_t j = 0; j < n; ++j)
                            simplex[i][j] = 0.5 * (simplex[i][j] + simplex[0][j]);
                        fv[i] = f(simplex[i]);
                    }
                }
            }
        }
        x0 = simplex[0];
        initial_step *= 0.1;
    }
    return x0;
}

/// Central finite difference of a scalar function.
inline double central_diff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Newton refinement on finite-difference derivatives: pushes a near-optimal
/// point to the gradient noise floor, well below what simplex search can
/// resolve from raw function values.
inline std::vector<double> fd_newton_polish(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
    int steps = 8, double h = 1e-5) {
    const std::size_t n = x.size();
    for (int it = 0; it < steps; ++it) {
        Eigen::VectorXd g(n);
        Eigen::MatrixXd H(n, n);
        const double f0 = f(x);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const double fp = f(xp), fm = f(xm);
            g(static_cast<Eigen::Index>(i)) = (fp - fm) / (2.0 * h);
            H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) =
                (fp - 2.0 * f0 + fm) / (h * h);
            for (std::size_t j = i + 1; j < n; ++j) {
                std::vector<double> xpp = x, xpm = x, xmp = x, xmm = x;
                xpp[i] += h;
                xpp[j] += h;
                xpm[i] += h;
                xpm[j] -= h;
                xmp[i] -= h;
                xmp[j] += h;
                xmm[i] -= h;
                xmm[j] -= h;
                const double hij = (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * h * h);
                H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = hij;
                H(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = hij;
            }
        }
        const Eigen::VectorXd step = H.fullPivLu().solve(g);
        if (!step.allFinite())
            break;
        for (std::size_t i = 0; i < n; ++i)
            x[i] -= step(static_cast<Eigen::Index>(i));
        if (step.cwiseAbs().maxCoeff() < 1e-12)
            break;
    }
    return x;
}

/// Composite 2-D Simpson integral on [ax,bx] x [ay,by].
inline double simpson2d(const std::function<double(double, double)>& f, double ax, double bx,
                        double ay, double by, int nx, int ny) {
    auto w = [](int i, int n) { return (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0); };
    const double hx = (bx - ax) / nx, hy = (by - ay) / ny;
    double total = 0.0;
    for (int i = 0; i <= nx; ++i) {
        double row = 0.0;
        for (int j = 0; j <= ny; ++j)
            row += w(j, ny) * f(ax + i * hx, ay + j * hy);
        total += w(i, nx) * row;
    }
    return total * hx * hy / 9.0;
}

/// Exhaustive second-order MAP decoder: enumerates every feasible vertex
/// sequence in lexicographic order and keeps the first best-scoring one.
/// Scores use the same emission/normalized-transition terms as the decoder.
struct BruteForceResult {
    std::vector<int> path;
    double score = -std::numeric_limits<double>::infinity();
};

inline BruteForceResult brute_force_map(const apmap::MeasurementSeries& series,
                                        const apmap::Topology& topo,
                                        const apmap::PropagationParams& pp,
                                        const apmap::MobilityParams& mp,
                                        const apmap::GridGraph& graph) {
    using namespace apmap;
    const std::size_t T = series.size();
    std::vector<std::vector<double>> E(T, std::vector<double>(graph.size()));
    for (std::size_t t = 0; t < T; ++t) {
        for (int v = 0; v < graph.size(); ++v) {
            try {
                E[t][static_cast<std::size_t>(v)] =
                    log_likelihood_obs(series.observations[t], graph.vertex(v), pp, topo);
            } catch (const CoincidentPoint&) {
                E[t][static_cast<std::size_t>(v)] =
                    -std::numeric_limits<double>::infinity();
            }
        }
    }

    // normalized transition log-prob, accumulated in the same term order as
    // the decoder so that identical paths produce bit-identical scores
    auto log_norm_trans = [&](int v, int u, int w) {
        std::vector<double> lps;
        for (int z : graph.neighbors(u))
            lps.push_back(log_transition(graph.vertex(z), graph.vertex(u), graph.vertex(w), mp));
        return log_transition(graph.vertex(v), graph.vertex(u), graph.vertex(w), mp) -
               log_sum_exp(lps);
    };

    BruteForceResult best;
    std::vector<int> path(T);
    std::function<void(std::size_t, double)> walk = [&](std::size_t t, double score) {
        if (t == T) {
            if (score > best.score) {
                best.score = score;
                best.path = path;
            }
            return;
        }
        for (int v = 0; v < graph.size(); ++v) {
            if (t >= 1 && !graph.adjacent(path[t - 1], v))
                continue;
            double s = score;
            if (t >= 2)
                s += log_norm_trans(v, path[t - 1], path[t - 2]);
            s += E[t][static_cast<std::size_t>(v)];
            path[t] = v;
            walk(t + 1, s);
        }
    };
    walk(0, 0.0);
    return best;
}

} // namespace oracles

#endif

// SPDX-License-Identifier: Apache-2.0

#include "apmap/radiomap.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace apmap {

namespace {

std::vector<int> top_k_indices(const std::vector<double>& v, int k) {
    std::vector<int> order(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (v[static_cast<std::size_t>(a)] != v[static_cast<std::size_t>(b)])
            return v[static_cast<std::size_t>(a)] > v[static_cast<std::size_t>(b)];
        return a < b; // ties to the lower beam index
    });
    order.resize(static_cast<std::size_t>(k));
    return order;
}

void check_frames(const std::vector<BeamFrame>& pred, const std::vector<BeamFrame>& truth,
                  int k) {
    if (pred.size() != truth.size() || pred.empty())
        throw LengthMismatch{"prediction and truth frame counts differ or are empty"};
    for (std::size_t n = 0; n < pred.size(); ++n) {
        if (pred[n].size() != truth[n].size())
            throw LengthMismatch{"station counts differ"};
        for (std::size_t q = 0; q < pred[n].size(); ++q) {
            if (pred[n][q].size() != truth[n][q].size())
                throw LengthMismatch{"beam counts differ"};
            if (k > static_cast<int>(truth[n][q].size()))
                throw KTooLarge{};
        }
    }
    if (k < 1)
        throw KTooLarge{};
}

double linear_energy(const std::vector<double>& v, const std::vector<int>& idx) {
    double e = 0.0;
    for (int i : idx)
        e += std::pow(10.0, v[static_cast<std::size_t>(i)] / 10.0);
    return e;
}

} // namespace

RadioMap build_map(const Trajectory& recovered, const MeasurementSeries& series,
                   const CsiSeries* csi, const Topology* topo) {
    if (recovered.size() != series.size())
        throw LengthMismatch{"trajectory and series lengths differ"};
    if (csi) {
        if (!topo)
            throw std::invalid_argument("csi frames need the topology for station ids");
        if (csi->size() != series.size())
            throw LengthMismatch{"csi series length differs"};
    }
    RadioMap map;
    map.reserve(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        RadioMapEntry e;
        e.location = recovered[i];
        e.ssb = series.observations[i].entries;
        if (csi) {
            const CsiFrame& frame = (*csi)[i];
            e.csi.reserve(frame.size());
            for (std::size_t qi = 0; qi < frame.size(); ++qi)
                e.csi.emplace_back(topo->stations()[qi].id, frame[qi]);
        }
        map.push_back(std::move(e));
    }
    return map;
}

PredictResult predict_next(const std::vector<Observation>& history, const RadioMap& map,
                           const Topology& topo, const PropagationParams& pp,
                           const MobilityParams& mp, const PredictConfig& cfg) {
    if (map.empty())
        throw EmptyMap{};
    if (static_cast<int>(history.size()) < cfg.history_len + 1)
        throw InsufficientHistory{};

    const std::size_t window = static_cast<std::size_t>(cfg.history_len) + 1;
    MeasurementSeries win;
    win.slot_duration = mp.slot;
    win.observations.assign(history.end() - static_cast<std::ptrdiff_t>(window), history.end());

    std::vector<Vec2> points;
    points.reserve(map.size());
    for (const RadioMapEntry& e : map)
        points.push_back(e.location);
    const GridGraph graph = GridGraph::cloud(std::move(points), cfg.v_max, mp.slot);

    // windowed trajectory fit with the propagation model held fixed
    MobilityParams mp_est = mp;
    Trajectory traj;
    for (int it = 0; it < std::max(1, cfg.alternations); ++it) {
        const ViterbiResult vr = viterbi2(win, topo, pp, mp_est, graph, cfg.prune);
        traj = refine_gradient(vr.path, win, topo, pp, mp_est, cfg.learning_rate,
                               cfg.refine_iters);
        try {
            auto [vbar, sv2] = estimate_mobility(traj, mp_est.gamma, mp_est.slot);
            mp_est.mean_velocity = vbar;
            mp_est.accel_var = std::max(sv2, 1e-6);
        } catch (const InsufficientData&) {
        }
    }

    PredictResult result;
    const std::size_t T = traj.size();
    result.x_next = (1.0 + mp_est.gamma) * traj[T - 1] - mp_est.gamma * traj[T - 2] +
                    (1.0 - mp_est.gamma) * mp_est.slot * mp_est.mean_velocity;

    for (int q : visible_bs(topo, result.x_next)) {
        const BaseStation& bs = topo.station(q);
        for (int m = 0; m < bs.beam_count; ++m) {
            try {
                result.y_next.push_back(
                    ObsEntry{q, m, mean_rsrp_db(pp, q, m, result.x_next, topo)});
            } catch (const CoincidentPoint&) {
            }
        }
    }

    // nearest fingerprint over the overlapping keys, normalized by overlap size
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < map.size(); ++i) {
        double acc = 0.0;
        int overlap = 0;
        auto it = map[i].ssb.begin();
        for (const ObsEntry& e : result.y_next) {
            while (it != map[i].ssb.end() &&
                   std::pair<int, int>{it->q, it->m} < std::pair<int, int>{e.q, e.m})
                ++it;
            if (it != map[i].ssb.end() && it->q == e.q && it->m == e.m) {
                acc += sq(it->y_db - e.y_db);
                ++overlap;
            }
        }
        if (overlap == 0)
            continue;
        const double dist = std::sqrt(acc / overlap);
        if (dist < best) {
            best = dist;
            result.matched_index = static_cast<int>(i);
        }
    }
    if (result.matched_index < 0)
        throw EmptyMap{};
    return result;
}

double metric_eq(const std::vector<BeamFrame>& pred, const std::vector<BeamFrame>& truth, int k) {
    check_frames(pred, truth, k);
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t n = 0; n < pred.size(); ++n) {
        for (std::size_t q = 0; q < pred[n].size(); ++q) {
            const auto a = top_k_indices(pred[n][q], k);
            const auto b = top_k_indices(truth[n][q], k);
            int overlap = 0;
            for (int i : a)
                if (std::find(b.begin(), b.end(), i) != b.end())
                    ++overlap;
            acc += 1.0 - static_cast<double>(overlap) / k;
            ++count;
        }
    }
    return acc / static_cast<double>(count);
}

double metric_ee(const std::vector<BeamFrame>& pred, const std::vector<BeamFrame>& truth, int k) {
    check_frames(pred, truth, k);
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t n = 0; n < pred.size(); ++n) {
        for (std::size_t q = 0; q < pred[n].size(); ++q) {
            const double e = linear_energy(truth[n][q], top_k_indices(truth[n][q], k));
            const double e_hat = linear_energy(pred[n][q], top_k_indices(pred[n][q], k));
            if (!(e > 0.0))
                throw ZeroEnergy{};
            acc += std::abs(e - e_hat) / e;
            ++count;
        }
    }
    return acc / static_cast<double>(count);
}

double metric_ea(const std::vector<BeamFrame>& pred, const std::vector<BeamFrame>& truth) {
    check_frames(pred, truth, 1);
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t n = 0; n < pred.size(); ++n) {
        for (std::size_t q = 0; q < pred[n].size(); ++q) {
            const double a = *std::max_element(pred[n][q].begin(), pred[n][q].end());
            const double b = *std::max_element(truth[n][q].begin(), truth[n][q].end());
            acc += std::abs(a - b);
            ++count;
        }
    }
    return acc / static_cast<double>(count);
}

BeamFrame baseline_mi(const std::vector<BeamFrame>& history, int L) {
    if (L < 1 || static_cast<int>(history.size()) < L + 1)
        throw InsufficientHistory{};
    const BeamFrame& last = history.back();
    const BeamFrame& oldest = history[history.size() - 1 - static_cast<std::size_t>(L)];
    BeamFrame out = last;
    for (std::size_t q = 0; q < out.size(); ++q)
        for (std::size_t m = 0; m < out[q].size(); ++m)
            out[q][m] += (last[q][m] - oldest[q][m]) / L;
    return out;
}

BeamFrame baseline_ar(const std::vector<BeamFrame>& history, int L,
                      const std::vector<BeamFrame>& train) {
    if (L < 1 || static_cast<int>(history.size()) < L)
        throw InsufficientHistory{};
    const int rows = static_cast<int>(train.size()) - L;
    if (rows < L + 2)
        throw InsufficientData{"training series too short for the AR order"};

    BeamFrame out = history.back();
    for (std::size_t q = 0; q < out.size(); ++q) {
        for (std::size_t m = 0; m < out[q].size(); ++m) {
            Eigen::MatrixXd X(rows, L + 1);
            Eigen::VectorXd y(rows);
            for (int r = 0; r < rows; ++r) {
                for (int j = 0; j < L; ++j)
                    X(r, j) = train[static_cast<std::size_t>(r + L - 1 - j)][q][m];
                X(r, L) = 1.0;
                y(r) = train[static_cast<std::size_t>(r + L)][q][m];
            }
            const Eigen::VectorXd coef = X.colPivHouseholderQr().solve(y);
            double pred = coef(L);
            for (int j = 0; j < L; ++j)
                pred += coef(j) * history[history.size() - 1 - static_cast<std::size_t>(j)][q][m];
            out[q][m] = pred;
        }
    }
    return out;
}

} // namespace apmap

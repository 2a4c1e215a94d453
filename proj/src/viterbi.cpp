// SPDX-License-Identifier: Apache-2.0

#include "apmap/viterbi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace apmap {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct PairState {
    int u = -1; // x_{t-1} vertex
    int v = -1; // x_t vertex
    double score = kNegInf;
    int prev = -1;      // state index in the previous slot
    double log_z = std::numeric_limits<double>::quiet_NaN(); // transition normalizer from (u, v)
};

/// Model means for every (station, beam) at every vertex, plus per-station
/// noise terms; shared by all slots of one decode.
struct EmissionModel {
    int n_vertices = 0;
    std::vector<int> offset;      // per station index, into the mean table
    std::vector<double> mean;     // [ (offset[q] + m) * n_vertices + v ]
    std::vector<double> sigma;    // per station
    std::vector<double> log_norm; // per station: -0.5 ln(2 pi) - ln sigma

    EmissionModel(const Topology& topo, const PropagationParams& pp, const GridGraph& graph,
                  int workers) {
        n_vertices = graph.size();
        offset.resize(topo.size() + 1, 0);
        for (std::size_t qi = 0; qi < topo.size(); ++qi)
            offset[qi + 1] = offset[qi] + topo.stations()[qi].beam_count;
        mean.assign(static_cast<std::size_t>(offset.back()) * static_cast<std::size_t>(n_vertices),
                    kNegInf);
        sigma.resize(topo.size());
        log_norm.resize(topo.size());
        for (std::size_t qi = 0; qi < topo.size(); ++qi) {
            const double s = pp.at(static_cast<int>(qi)).path_loss.sigma;
            sigma[qi] = s;
            log_norm[qi] = -0.91893853320467274178 - std::log(s);
        }
        parallel_for(topo.size(), workers, [&](std::size_t qi) {
            const BaseStation& bs = topo.stations()[qi];
            const StationParams& sp = pp.at(static_cast<int>(qi));
            for (int v = 0; v < n_vertices; ++v) {
                const Vec2 x = graph.vertex(v);
                const double d = distance(x, bs);
                if (d <= 0.0)
                    continue; // vertex on the station: mean stays -inf
                const double base = sp.path_loss.beta + sp.path_loss.alpha * std::log10(d);
                double phi = 0.0;
                bool have_phi = false;
                for (int m = 0; m < bs.beam_count; ++m) {
                    const BeamPattern& b = sp.beams[static_cast<std::size_t>(m)];
                    double value = base;
                    if (b.omega != 0.0) {
                        if (!have_phi) {
                            if ((x - bs.position).squaredNorm() == 0.0) {
                                value = kNegInf; // bearing undefined
                                mean[index(qi, m, v)] = value;
                                continue;
                            }
                            phi = bearing(x, bs);
                            have_phi = true;
                        }
                        value += b.omega * std::exp(-b.eta * sq(angle_diff(phi, b.center)));
                    }
                    mean[index(qi, m, v)] = value;
                }
            }
        });
    }

    std::size_t index(std::size_t qi, int m, int v) const {
        return (static_cast<std::size_t>(offset[qi]) + static_cast<std::size_t>(m)) *
                   static_cast<std::size_t>(n_vertices) +
               static_cast<std::size_t>(v);
    }

    void slot_emissions(const Observation& obs, const Topology& topo,
                        std::vector<double>& e) const {
        e.assign(static_cast<std::size_t>(n_vertices), 0.0);
        for (const ObsEntry& entry : obs.entries) {
            const std::size_t qi = static_cast<std::size_t>(topo.index_of(entry.q));
            const double* mu = &mean[index(qi, entry.m, 0)];
            const double s = sigma[qi];
            const double c = log_norm[qi];
            for (int v = 0; v < n_vertices; ++v) {
                const double m = mu[v];
                if (m == kNegInf) {
                    e[static_cast<std::size_t>(v)] = kNegInf;
                    continue;
                }
                const double z = (entry.y_db - m) / s;
                e[static_cast<std::size_t>(v)] += c - 0.5 * sq(z);
            }
        }
    }
};

std::vector<int> retained_vertices(const std::vector<double>& e, const PruneConfig& prune) {
    const int n = static_cast<int>(e.size());
    std::vector<int> kept;
    if (prune.mode == PruneConfig::Mode::kLikelihoodThreshold) {
        if (prune.zeta <= 0.0) {
            kept.resize(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i)
                kept[static_cast<std::size_t>(i)] = i;
            return kept;
        }
        const double best = *std::max_element(e.begin(), e.end());
        const double cut = best + std::log(std::min(prune.zeta, 1.0));
        for (int i = 0; i < n; ++i)
            if (e[static_cast<std::size_t>(i)] >= cut)
                kept.push_back(i);
        return kept;
    }
    // top-n by emission, ties to the smaller vertex id
    if (prune.top_n <= 0 || prune.top_n >= n) {
        kept.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            kept[static_cast<std::size_t>(i)] = i;
        return kept;
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (e[static_cast<std::size_t>(a)] != e[static_cast<std::size_t>(b)])
            return e[static_cast<std::size_t>(a)] > e[static_cast<std::size_t>(b)];
        return a < b;
    });
    kept.assign(order.begin(), order.begin() + prune.top_n);
    std::sort(kept.begin(), kept.end());
    return kept;
}

} // namespace

ViterbiResult viterbi2(const MeasurementSeries& series, const Topology& topo,
                       const PropagationParams& pp, const MobilityParams& mp,
                       const GridGraph& graph, const PruneConfig& prune, int workers) {
    const std::size_t T = series.size();
    if (T == 0)
        throw std::invalid_argument("empty measurement series");
    if (graph.size() == 0)
        throw EmptyRegion{};

    // emissions per slot; vertices that coincide with a station score -inf
    const EmissionModel model(topo, pp, graph, workers);
    std::vector<std::vector<double>> E(T);
    parallel_for(T, workers, [&](std::size_t t) {
        model.slot_emissions(series.observations[t], topo, E[t]);
    });

    ViterbiResult result;
    result.stats.retained.resize(T, 0);
    result.stats.expanded.resize(T, 0);

    std::vector<std::vector<int>> ret(T);
    for (std::size_t t = 0; t < T; ++t) {
        ret[t] = retained_vertices(E[t], prune);
        result.stats.retained[t] = static_cast<int>(ret[t].size());
    }

    auto argmax_vertex = [&](const std::vector<double>& e) {
        int best = 0;
        for (int i = 1; i < graph.size(); ++i)
            if (e[static_cast<std::size_t>(i)] > e[static_cast<std::size_t>(best)])
                best = i;
        return best;
    };

    if (T == 1) {
        const int v = argmax_vertex(E[0]);
        result.vertex_ids = {v};
        result.path.positions = {graph.vertex(v)};
        result.log_score = E[0][static_cast<std::size_t>(v)];
        return result;
    }

    std::vector<std::vector<PairState>> states(T); // states[t] holds pairs (x_{t-1}, x_t)

    // slot 1: emission-only pair initialization
    for (int u : ret[0]) {
        if (E[0][static_cast<std::size_t>(u)] == kNegInf)
            continue;
        for (int v : graph.neighbors(u)) {
            if (!std::binary_search(ret[1].begin(), ret[1].end(), v))
                continue;
            ++result.stats.expanded[1];
            states[1].push_back(PairState{u, v,
                                          E[0][static_cast<std::size_t>(u)] +
                                              E[1][static_cast<std::size_t>(v)],
                                          -1});
        }
    }
    if (states[1].empty()) {
        const int u = argmax_vertex(E[0]);
        for (int v : graph.neighbors(u)) {
            ++result.stats.expanded[1];
            states[1].push_back(PairState{u, v,
                                          E[0][static_cast<std::size_t>(u)] +
                                              E[1][static_cast<std::size_t>(v)],
                                          -1});
        }
    }
    if (states[1].empty())
        throw NoFeasiblePath{};

    // rebuilds the vertex-id prefix ending at states[slot][idx]
    auto rebuild = [&](std::size_t slot, int idx) {
        std::vector<int> ids(slot + 1);
        for (std::size_t t = slot; t >= 1; --t) {
            const PairState& s = states[t][static_cast<std::size_t>(idx)];
            ids[t] = s.v;
            if (t == 1)
                ids[0] = s.u;
            idx = s.prev;
        }
        return ids;
    };

    auto lex_less = [&](std::size_t slot, int a, int b) {
        return rebuild(slot, a) < rebuild(slot, b);
    };

    for (std::size_t t = 2; t < T; ++t) {
        std::unordered_map<int, std::vector<int>> bucket; // end vertex -> state indices
        for (std::size_t i = 0; i < states[t - 1].size(); ++i)
            bucket[states[t - 1][i].v].push_back(static_cast<int>(i));

        auto log_z_of = [&](PairState& s) {
            if (std::isnan(s.log_z)) {
                std::vector<double> lps;
                const Vec2 prev = graph.vertex(s.v);
                const Vec2 prev2 = graph.vertex(s.u);
                for (int w : graph.neighbors(s.v))
                    lps.push_back(log_transition(graph.vertex(w), prev, prev2, mp));
                s.log_z = log_sum_exp(lps);
            }
            return s.log_z;
        };

        auto relax = [&](int u, int v, std::vector<PairState>& out) {
            auto it = bucket.find(u);
            if (it == bucket.end())
                return;
            ++result.stats.expanded[t]; // a predecessor bucket exists: one expansion
            double best_score = kNegInf;
            int best_idx = -1;
            for (int si : it->second) {
                PairState& s = states[t - 1][static_cast<std::size_t>(si)];
                const double lp = log_transition(graph.vertex(v), graph.vertex(u),
                                                 graph.vertex(s.u), mp) -
                                  log_z_of(s);
                const double cand = s.score + lp;
                if (cand > best_score ||
                    (cand == best_score && best_idx >= 0 && lex_less(t - 1, si, best_idx))) {
                    best_score = cand;
                    best_idx = si;
                }
            }
            if (best_idx >= 0 && best_score > kNegInf)
                out.push_back(
                    PairState{u, v, best_score + E[t][static_cast<std::size_t>(v)], best_idx});
        };

        std::vector<PairState> next;
        for (int v : ret[t])
            for (int u : graph.neighbors(v))
                relax(u, v, next);

        if (next.empty()) {
            // pruning emptied the slot: extend the single best predecessor pair
            int best = 0;
            for (std::size_t i = 1; i < states[t - 1].size(); ++i) {
                if (states[t - 1][i].score > states[t - 1][static_cast<std::size_t>(best)].score)
                    best = static_cast<int>(i);
            }
            PairState& s = states[t - 1][static_cast<std::size_t>(best)];
            for (int v : graph.neighbors(s.v)) {
                ++result.stats.expanded[t];
                const double lp =
                    log_transition(graph.vertex(v), graph.vertex(s.v), graph.vertex(s.u), mp) -
                    log_z_of(s);
                next.push_back(PairState{s.v, v, s.score + lp + E[t][static_cast<std::size_t>(v)],
                                         best});
            }
        }
        if (next.empty())
            throw NoFeasiblePath{};
        states[t] = std::move(next);
    }

    // best final state; ties resolve to the lexicographically smallest path
    const std::size_t last = T - 1;
    int best = 0;
    for (std::size_t i = 1; i < states[last].size(); ++i) {
        const double si = states[last][i].score;
        const double sb = states[last][static_cast<std::size_t>(best)].score;
        if (si > sb || (si == sb && lex_less(last, static_cast<int>(i), best)))
            best = static_cast<int>(i);
    }

    result.log_score = states[last][static_cast<std::size_t>(best)].score;
    result.vertex_ids = rebuild(last, best);
    result.path.positions.reserve(T);
    for (int id : result.vertex_ids)
        result.path.positions.push_back(graph.vertex(id));
    return result;
}

} // namespace apmap

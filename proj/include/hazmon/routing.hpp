#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "hazmon/errors.hpp"
#include "hazmon/geometry.hpp"
#include "hazmon/rng.hpp"

namespace hazmon {

enum class NodeKind { KnownHazard, Pseudo };

struct NodeSet {
    Point2 depot;
    std::vector<Point2> nodes;
    std::vector<NodeKind> kinds;

    NodeSet(Point2 depot_, std::vector<Point2> nodes_, std::vector<NodeKind> kinds_ = {})
        : depot(depot_), nodes(std::move(nodes_)), kinds(std::move(kinds_)) {
        if (kinds.empty()) kinds.assign(nodes.size(), NodeKind::KnownHazard);
        if (kinds.size() != nodes.size())
            throw std::invalid_argument("node kinds must match node count");
        for (const auto& n : nodes)
            if (squared_distance(n, depot) < 1e-18)
                throw std::invalid_argument("node coincides with the depot");
    }

    int size() const { return static_cast<int>(nodes.size()); }
};

struct FleetSpec {
    int num_vehicles = 1;
    double max_distance = 0.0;

    void validate() const {
        if (num_vehicles < 1) throw std::invalid_argument("fleet needs at least one vehicle");
        if (!(max_distance > 0.0)) throw std::invalid_argument("max distance must be positive");
    }
};

struct SolverConfig {
    std::uint64_t seed = 0;
    int restarts = 20;
};

struct Route {
    // per-vehicle index sequences, each starting and ending at depot index 0
    std::vector<std::vector<int>> sequences;
    // resolved positions, index 0 is the depot
    std::vector<Point2> points;
    std::vector<double> lengths;
    double total_length = 0.0;
};

inline std::vector<Segment> route_edges(const Route& r) {
    std::vector<Segment> edges;
    for (const auto& seq : r.sequences)
        for (std::size_t i = 1; i < seq.size(); ++i)
            edges.emplace_back(r.points[seq[i - 1]], r.points[seq[i]]);
    return edges;
}

namespace detail {

class DistanceMatrix {
public:
    DistanceMatrix(const NodeSet& set) : n_(set.size() + 1), d_(n_ * n_, 0.0) {
        std::vector<Point2> pts;
        pts.reserve(n_);
        pts.push_back(set.depot);
        pts.insert(pts.end(), set.nodes.begin(), set.nodes.end());
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) d_[i * n_ + j] = distance(pts[i], pts[j]);
        points_ = std::move(pts);
    }

    double operator()(int i, int j) const { return d_[i * n_ + j]; }
    int size() const { return n_; }
    const std::vector<Point2>& points() const { return points_; }

private:
    int n_;
    std::vector<double> d_;
    std::vector<Point2> points_;
};

inline double sequence_length(const std::vector<int>& seq, const DistanceMatrix& d) {
    double total = 0.0;
    for (std::size_t i = 1; i < seq.size(); ++i) total += d(seq[i - 1], seq[i]);
    return total;
}

inline Route make_route(std::vector<std::vector<int>> sequences, const DistanceMatrix& d) {
    Route r;
    r.sequences = std::move(sequences);
    r.points = d.points();
    r.total_length = 0.0;
    for (const auto& seq : r.sequences) {
        r.lengths.push_back(sequence_length(seq, d));
        r.total_length += r.lengths.back();
    }
    return r;
}

inline void check_feasible_nodes(const DistanceMatrix& d, const FleetSpec& fleet) {
    std::vector<int> offenders;
    for (int i = 1; i < d.size(); ++i)
        if (2.0 * d(0, i) > fleet.max_distance) offenders.push_back(i);
    if (!offenders.empty()) {
        std::string msg = "nodes beyond vehicle range:";
        for (int i : offenders) msg += " " + std::to_string(i);
        throw InfeasibleInstance(msg);
    }
}

// greedy nearest-neighbor construction; restart > 0 randomizes among the
// closest few candidates; with respect_budget false the tours may run over
// the distance budget and rely on local search to repair them
inline bool construct_routes(const DistanceMatrix& d, const FleetSpec& fleet, Rng& rng,
                             bool randomized, std::vector<std::vector<int>>& out,
                             bool respect_budget = true) {
    const int n = d.size() - 1;
    const int m = fleet.num_vehicles;
    std::vector<bool> assigned(n + 1, false);
    out.assign(m, {0});
    std::vector<double> used(m, 0.0);

    auto pick_candidate = [&](int from, double budget_used) {
        // unassigned nodes sorted by distance from the route end, filtered to
        // those leaving enough budget to return home
        std::vector<std::pair<double, int>> cands;
        for (int i = 1; i <= n; ++i) {
            if (assigned[i]) continue;
            if (respect_budget &&
                budget_used + d(from, i) + d(i, 0) > fleet.max_distance)
                continue;
            cands.push_back({d(from, i), i});
        }
        if (cands.empty()) return -1;
        std::sort(cands.begin(), cands.end());
        if (!randomized || cands.size() == 1) return cands[0].second;
        const std::size_t k = std::min<std::size_t>(3, cands.size());
        return cands[rng.uniform_index(k)].second;
    };

    // every vehicle must serve at least one node
    for (int v = 0; v < m; ++v) {
        const int c = pick_candidate(0, 0.0);
        if (c < 0) return false;
        out[v].push_back(c);
        used[v] = d(0, c);
        assigned[c] = true;
    }

    int remaining = n - m;
    while (remaining > 0) {
        int best_v = -1, best_node = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int v = 0; v < m; ++v) {
            const int end = out[v].back();
            const int c = pick_candidate(end, used[v]);
            if (c >= 0 && d(end, c) < best_d) {
                best_d = d(end, c);
                best_v = v;
                best_node = c;
            }
        }
        if (best_v < 0) return false;
        used[best_v] += d(out[best_v].back(), best_node);
        out[best_v].push_back(best_node);
        assigned[best_node] = true;
        --remaining;
    }
    for (int v = 0; v < m; ++v) out[v].push_back(0);
    return true;
}

// strictly improving 2-opt and Or-opt passes under the distance budget
inline void local_search(std::vector<std::vector<int>>& seqs, const DistanceMatrix& d,
                         const FleetSpec& fleet) {
    constexpr double kGain = 1e-9;
    std::vector<double> len(seqs.size());
    for (std::size_t v = 0; v < seqs.size(); ++v) len[v] = sequence_length(seqs[v], d);

    bool improved = true;
    while (improved) {
        improved = false;

        // 2-opt: reverse seq[i..j] within one vehicle
        for (std::size_t v = 0; v < seqs.size(); ++v) {
            auto& s = seqs[v];
            const int sz = static_cast<int>(s.size());
            for (int i = 1; i + 1 < sz; ++i) {
                for (int j = i + 1; j + 1 < sz; ++j) {
                    const double delta = d(s[i - 1], s[j]) + d(s[i], s[j + 1]) -
                                         d(s[i - 1], s[i]) - d(s[j], s[j + 1]);
                    if (delta < -kGain) {
                        std::reverse(s.begin() + i, s.begin() + j + 1);
                        len[v] += delta;
                        improved = true;
                    }
                }
            }
        }

        // Or-opt: move a block of 1..3 nodes to another position, any vehicle
        for (std::size_t sv = 0; sv < seqs.size() && !improved; ++sv) {
            auto& src = seqs[sv];
            for (int blk = 1; blk <= 3 && !improved; ++blk) {
                for (int i = 1; i + blk < static_cast<int>(src.size()) && !improved; ++i) {
                    const double removed = d(src[i - 1], src[i]) +
                                           d(src[i + blk - 1], src[i + blk]) -
                                           d(src[i - 1], src[i + blk]);
                    double block_len = 0.0;
                    for (int b = 1; b < blk; ++b) block_len += d(src[i + b - 1], src[i + b]);

                    for (std::size_t tv = 0; tv < seqs.size() && !improved; ++tv) {
                        if (tv == sv && static_cast<int>(src.size()) - 2 == blk) continue;
                        if (tv != sv && static_cast<int>(src.size()) - 2 == blk)
                            continue;  // would empty the source vehicle
                        auto& dst = seqs[tv];
                        const int dst_sz = static_cast<int>(dst.size());
                        for (int j = 0; j + 1 < dst_sz; ++j) {
                            if (tv == sv && j >= i - 1 && j <= i + blk - 1) continue;
                            const double added = d(dst[j], src[i]) +
                                                 d(src[i + blk - 1], dst[j + 1]) -
                                                 d(dst[j], dst[j + 1]);
                            const double delta = added - removed;
                            if (delta >= -kGain) continue;
                            // budget check on the affected vehicles; a tour
                            // already over budget may keep any improving move
                            if (tv == sv) {
                                if (len[sv] + delta >
                                    std::max(fleet.max_distance, len[sv]))
                                    continue;
                            } else {
                                if (len[tv] + added + block_len > fleet.max_distance) continue;
                            }
                            std::vector<int> block(src.begin() + i, src.begin() + i + blk);
                            src.erase(src.begin() + i, src.begin() + i + blk);
                            int insert_at = j + 1;
                            if (tv == sv && j >= i + blk) insert_at -= blk;
                            dst.insert(dst.begin() + insert_at, block.begin(), block.end());
                            len[sv] = sequence_length(seqs[sv], d);
                            len[tv] = sequence_length(seqs[tv], d);
                            improved = true;
                            break;
                        }
                    }
                }
            }
        }
    }
}

// exhaustive search over visit orders of `remaining` for one vehicle
inline void best_tour_dfs(const DistanceMatrix& d, std::vector<int>& remaining,
                          std::vector<int>& current, double length_so_far, double max_distance,
                          std::vector<int>& best, double& best_len) {
    if (remaining.empty()) {
        const double total = length_so_far + d(current.back(), 0);
        if (total <= max_distance && total < best_len) {
            best_len = total;
            best = current;
        }
        return;
    }
    if (length_so_far >= best_len || length_so_far > max_distance) return;
    for (std::size_t idx = 0; idx < remaining.size(); ++idx) {
        const int node = remaining[idx];
        remaining.erase(remaining.begin() + idx);
        current.push_back(node);
        best_tour_dfs(d, remaining, current, length_so_far + d(current[current.size() - 2], node),
                      max_distance, best, best_len);
        current.pop_back();
        remaining.insert(remaining.begin() + idx, node);
    }
}

inline std::pair<std::vector<int>, double> best_single_tour(const DistanceMatrix& d,
                                                            const std::vector<int>& nodes,
                                                            double max_distance) {
    std::vector<int> remaining = nodes;
    std::vector<int> current{0};
    std::vector<int> best;
    double best_len = std::numeric_limits<double>::infinity();
    best_tour_dfs(d, remaining, current, 0.0, max_distance, best, best_len);
    if (!best.empty()) best.push_back(0);
    return {best, best_len};
}

}  // namespace detail

inline Route solve_vrp_exact(const NodeSet& set, const FleetSpec& fleet) {
    fleet.validate();
    const int n = set.size();
    if (n > 10 || fleet.num_vehicles > 2)
        throw InstanceTooLarge("exact solver caps: 10 nodes, 2 vehicles");
    if (n < 1) throw std::invalid_argument("empty node set");
    if (fleet.num_vehicles > n)
        throw InfeasibleInstance("every vehicle must visit a node, got " +
                                 std::to_string(fleet.num_vehicles) + " vehicles for " +
                                 std::to_string(n) + " nodes");
    detail::DistanceMatrix d(set);
    detail::check_feasible_nodes(d, fleet);

    if (fleet.num_vehicles == 1) {
        std::vector<int> all(n);
        std::iota(all.begin(), all.end(), 1);
        auto [tour, len] = detail::best_single_tour(d, all, fleet.max_distance);
        if (tour.empty()) throw InfeasibleInstance("no tour fits the distance budget");
        return detail::make_route({tour}, d);
    }

    double best_total = std::numeric_limits<double>::infinity();
    std::vector<std::vector<int>> best_seqs;
    for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
        std::vector<int> a, b;
        for (int i = 0; i < n; ++i)
            (mask >> i & 1u ? a : b).push_back(i + 1);
        auto [tour_a, len_a] = detail::best_single_tour(d, a, fleet.max_distance);
        if (tour_a.empty()) continue;
        auto [tour_b, len_b] = detail::best_single_tour(d, b, fleet.max_distance);
        if (tour_b.empty()) continue;
        if (len_a + len_b < best_total) {
            best_total = len_a + len_b;
            best_seqs = {tour_a, tour_b};
        }
    }
    if (best_seqs.empty()) throw InfeasibleInstance("no vehicle partition fits the budget");
    return detail::make_route(best_seqs, d);
}

inline Route solve_vrp(const NodeSet& set, const FleetSpec& fleet,
                       const SolverConfig& config = {}) {
    fleet.validate();
    const int n = set.size();
    if (n < 1) throw std::invalid_argument("empty node set");
    if (fleet.num_vehicles > n)
        throw InfeasibleInstance("every vehicle must visit a node, got " +
                                 std::to_string(fleet.num_vehicles) + " vehicles for " +
                                 std::to_string(n) + " nodes");
    detail::DistanceMatrix d(set);
    detail::check_feasible_nodes(d, fleet);

    std::vector<std::vector<int>> best_seqs;
    double best_total = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < std::max(1, config.restarts); ++restart) {
        Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(restart)));
        std::vector<std::vector<int>> seqs;
        // the budget-aware greedy can dead-end far from home on tight
        // budgets; fall back to an unconstrained tour and let local search
        // shrink it back inside the budget
        if (!detail::construct_routes(d, fleet, rng, restart > 0, seqs) &&
            !detail::construct_routes(d, fleet, rng, restart > 0, seqs, false))
            continue;
        detail::local_search(seqs, d, fleet);
        bool within_budget = true;
        double total = 0.0;
        for (const auto& s : seqs) {
            const double len = detail::sequence_length(s, d);
            if (len > fleet.max_distance) within_budget = false;
            total += len;
        }
        if (within_budget && total < best_total - 1e-12) {
            best_total = total;
            best_seqs = seqs;
        }
    }
    if (best_seqs.empty()) throw InfeasibleInstance("heuristic failed to place all nodes");
    return detail::make_route(best_seqs, d);
}

}  // namespace hazmon

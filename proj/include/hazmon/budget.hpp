#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "hazmon/geometry.hpp"
#include "hazmon/routing.hpp"

namespace hazmon {

struct SegmentVoronoi {
    std::vector<Segment> edges;
    UniformGrid grid;
    std::vector<int> assignment;
    std::vector<long> cell_counts;
    std::vector<double> areas;
};

inline SegmentVoronoi build_segment_voronoi(const std::vector<Segment>& edges,
                                            const RectDomain& domain,
                                            int grid_resolution = 200) {
    if (edges.empty()) throw std::invalid_argument("segment voronoi needs edges");
    if (grid_resolution < 1) throw std::invalid_argument("grid resolution must be positive");

    SegmentVoronoi sv{edges, UniformGrid(domain, grid_resolution, grid_resolution), {}, {}, {}};
    sv.assignment.resize(sv.grid.num_cells());
    sv.cell_counts.assign(edges.size(), 0);
    for (int c = 0; c < sv.grid.num_cells(); ++c) {
        const Point2 center = sv.grid.cell_center(c);
        int best = 0;
        double best_d = point_segment_distance(center, edges[0]);
        for (std::size_t k = 1; k < edges.size(); ++k) {
            const double d = point_segment_distance(center, edges[k]);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(k);
            }
        }
        sv.assignment[c] = best;
        ++sv.cell_counts[best];
    }
    sv.areas.resize(edges.size());
    for (std::size_t k = 0; k < edges.size(); ++k)
        sv.areas[k] = static_cast<double>(sv.cell_counts[k]) * sv.grid.cell_area();
    return sv;
}

struct BudgetAllocation {
    double total = 0.0;
    std::vector<double> per_edge;
};

inline BudgetAllocation allocate_budget(const SegmentVoronoi& sv, double total) {
    if (!(total > 0.0)) throw std::invalid_argument("budget must be positive");
    double area_sum = 0.0;
    for (double a : sv.areas) area_sum += a;
    if (!(area_sum > 0.0)) throw std::invalid_argument("no edge covers any area");
    BudgetAllocation out;
    out.total = total;
    out.per_edge.reserve(sv.areas.size());
    for (double a : sv.areas) out.per_edge.push_back(total * a / area_sum);
    return out;
}

// remaining travel distance per vehicle
inline std::vector<double> marginal_budget(const Route& route, const FleetSpec& fleet) {
    fleet.validate();
    std::vector<double> out;
    out.reserve(route.lengths.size());
    for (double len : route.lengths) {
        const double margin = fleet.max_distance - len;
        if (margin < 0.0)
            throw std::logic_error("route exceeds the vehicle distance budget");
        out.push_back(margin);
    }
    return out;
}

// Per-edge planning budget: the edge's own length plus the vehicle's marginal
// budget split by Voronoi area share. Edges are ordered as route_edges(route).
inline std::vector<double> planner_budgets(const Route& route, const FleetSpec& fleet,
                                           const SegmentVoronoi& sv) {
    std::size_t total_edges = 0;
    for (const auto& seq : route.sequences) total_edges += seq.size() - 1;
    if (sv.edges.size() != total_edges)
        throw std::invalid_argument("voronoi edge count does not match the route");

    const std::vector<double> margins = marginal_budget(route, fleet);
    std::vector<double> out(total_edges, 0.0);
    std::size_t base = 0;
    for (std::size_t v = 0; v < route.sequences.size(); ++v) {
        const std::size_t n_edges = route.sequences[v].size() - 1;
        double area_sum = 0.0;
        for (std::size_t e = 0; e < n_edges; ++e) area_sum += sv.areas[base + e];
        for (std::size_t e = 0; e < n_edges; ++e) {
            const double len = sv.edges[base + e].length();
            const double share =
                area_sum > 0.0 ? sv.areas[base + e] / area_sum : 1.0 / n_edges;
            out[base + e] = len + margins[v] * share;
        }
        base += n_edges;
    }
    return out;
}

}  // namespace hazmon

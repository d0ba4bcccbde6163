#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hazmon/geometry.hpp"

namespace hazmon {

struct CoverageReport {
    double ecr = 0.0;
    double edv = 0.0;
    std::vector<int> counts;
    int nx = 0;
    int ny = 0;
};

namespace detail {

// indices of closed cells [i*cell, (i+1)*cell] meeting the closed range [lo, hi]
inline std::pair<int, int> closed_span(double lo, double hi, double origin, double cell,
                                       int n) {
    const int i0 = static_cast<int>(std::ceil((lo - origin) / cell - 1.0));
    const int i1 = static_cast<int>(std::floor((hi - origin) / cell));
    return {std::max(0, i0), std::min(n - 1, i1)};
}

inline CoverageReport finalize_report(std::vector<int> counts, int nx, int ny) {
    CoverageReport report;
    report.nx = nx;
    report.ny = ny;
    const double n = static_cast<double>(counts.size());
    long covered = 0;
    double sum = 0.0;
    for (int c : counts) {
        if (c > 0) ++covered;
        sum += c;
    }
    const double mean = sum / n;
    double var = 0.0;
    for (int c : counts) var += (c - mean) * (c - mean);
    report.ecr = covered / n;
    report.edv = var / n;
    report.counts = std::move(counts);
    return report;
}

}  // namespace detail

// Exact closed-cell coverage: a cell counts as intersected when the segment
// meets its closed rectangle, corner touches included.
inline CoverageReport edge_coverage(const std::vector<Segment>& edges,
                                    const UniformGrid& grid) {
    std::vector<int> counts(grid.num_cells(), 0);
    const RectDomain& dom = grid.domain;
    const double cw = grid.cell_width();
    const double ch = grid.cell_height();

    for (const auto& e : edges) {
        const double dy = e.b.y - e.a.y;
        const double dx = e.b.x - e.a.x;
        const auto [r0, r1] = detail::closed_span(std::min(e.a.y, e.b.y),
                                                  std::max(e.a.y, e.b.y), dom.y_min, ch,
                                                  grid.ny);
        for (int r = r0; r <= r1; ++r) {
            double x_lo, x_hi;
            if (dy == 0.0) {
                x_lo = std::min(e.a.x, e.b.x);
                x_hi = std::max(e.a.x, e.b.x);
            } else {
                const double slab_lo = dom.y_min + r * ch;
                const double slab_hi = slab_lo + ch;
                double t0 = (slab_lo - e.a.y) / dy;
                double t1 = (slab_hi - e.a.y) / dy;
                if (t0 > t1) std::swap(t0, t1);
                t0 = std::max(0.0, t0);
                t1 = std::min(1.0, t1);
                if (t0 > t1) continue;
                const double xa = e.a.x + t0 * dx;
                const double xb = e.a.x + t1 * dx;
                x_lo = std::min(xa, xb);
                x_hi = std::max(xa, xb);
            }
            const auto [c0, c1] = detail::closed_span(x_lo, x_hi, dom.x_min, cw, grid.nx);
            for (int c = c0; c <= c1; ++c) ++counts[r * grid.nx + c];
        }
    }
    return detail::finalize_report(std::move(counts), grid.nx, grid.ny);
}

// Cell-center walk along each edge; marks only cells containing sample points,
// so its coverage is a subset of the exact report's.
inline CoverageReport edge_coverage_rasterized(const std::vector<Segment>& edges,
                                               const UniformGrid& grid,
                                               double step_fraction = 0.25) {
    std::vector<int> counts(grid.num_cells(), 0);
    std::vector<char> touched(grid.num_cells(), 0);
    std::vector<int> touched_list;
    const double step = step_fraction * std::min(grid.cell_width(), grid.cell_height());

    for (const auto& e : edges) {
        const double len = e.length();
        const int n_steps = std::max(1, static_cast<int>(std::ceil(len / step)));
        touched_list.clear();
        for (int i = 0; i <= n_steps; ++i) {
            const double t = static_cast<double>(i) / n_steps;
            const int cell = grid.cell_containing(e.a + t * (e.b - e.a));
            if (!touched[cell]) {
                touched[cell] = 1;
                touched_list.push_back(cell);
            }
        }
        for (int cell : touched_list) {
            ++counts[cell];
            touched[cell] = 0;
        }
    }
    return detail::finalize_report(std::move(counts), grid.nx, grid.ny);
}

}  // namespace hazmon

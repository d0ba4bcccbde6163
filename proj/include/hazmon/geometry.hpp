#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace hazmon {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
inline Point2 operator*(Point2 p, double s) { return {s * p.x, s * p.y}; }

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
// scalar 2-D cross product
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double squared_norm(Point2 p) { return p.x * p.x + p.y * p.y; }
inline double distance(Point2 a, Point2 b) { return norm(b - a); }
inline double squared_distance(Point2 a, Point2 b) { return squared_norm(b - a); }

struct Segment {
    Point2 a;
    Point2 b;

    Segment(Point2 a_, Point2 b_) : a(a_), b(b_) {
        if (squared_distance(a, b) < 1e-18)
            throw std::invalid_argument("Segment: endpoints coincide");
    }

    double length() const { return distance(a, b); }
};

struct RectDomain {
    double x_min, x_max, y_min, y_max;

    RectDomain(double x0, double x1, double y0, double y1)
        : x_min(x0), x_max(x1), y_min(y0), y_max(y1) {
        if (!(x_min < x_max) || !(y_min < y_max))
            throw std::invalid_argument("RectDomain: empty extent");
    }

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }

    bool contains(Point2 p) const {
        return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
    }
};

// Regular nx-by-ny tiling of a rectangular domain. Cells are indexed
// row-major: index = iy * nx + ix.
struct UniformGrid {
    RectDomain domain;
    int nx, ny;

    UniformGrid(RectDomain d, int nx_, int ny_) : domain(d), nx(nx_), ny(ny_) {
        if (nx < 1 || ny < 1) throw std::invalid_argument("UniformGrid: empty grid");
    }

    int num_cells() const { return nx * ny; }
    double cell_width() const { return domain.width() / nx; }
    double cell_height() const { return domain.height() / ny; }
    double cell_area() const { return domain.area() / (static_cast<double>(nx) * ny); }

    Point2 cell_center(int ix, int iy) const {
        return {domain.x_min + (ix + 0.5) * cell_width(),
                domain.y_min + (iy + 0.5) * cell_height()};
    }

    Point2 cell_center(int index) const {
        return cell_center(index % nx, index / nx);
    }

    // closed cell rectangle [x_lo, x_hi] x [y_lo, y_hi]
    RectDomain cell_bounds(int ix, int iy) const {
        return RectDomain(domain.x_min + ix * cell_width(),
                          domain.x_min + (ix + 1) * cell_width(),
                          domain.y_min + iy * cell_height(),
                          domain.y_min + (iy + 1) * cell_height());
    }

    // cell containing p, clamped to the grid for boundary points
    int cell_containing(Point2 p) const {
        int ix = static_cast<int>(std::floor((p.x - domain.x_min) / cell_width()));
        int iy = static_cast<int>(std::floor((p.y - domain.y_min) / cell_height()));
        ix = std::max(0, std::min(nx - 1, ix));
        iy = std::max(0, std::min(ny - 1, iy));
        return iy * nx + ix;
    }
};

// Unclamped projection factor of p onto the line through s; t in [0,1]
// means the foot lies on the segment.
inline double project_factor(Point2 p, const Segment& s) {
    const Point2 d = s.b - s.a;
    return dot(p - s.a, d) / squared_norm(d);
}

inline double point_segment_distance(Point2 p, const Segment& s) {
    const double t = project_factor(p, s);
    if (t < 0.0) return distance(p, s.a);
    if (t > 1.0) return distance(p, s.b);
    return distance(p, s.a + t * (s.b - s.a));
}

inline double min_distance_to_edge_set(Point2 p, const std::vector<Segment>& edges) {
    if (edges.empty())
        throw std::invalid_argument("min_distance_to_edge_set: empty edge set");
    double best = point_segment_distance(p, edges.front());
    for (std::size_t i = 1; i < edges.size(); ++i)
        best = std::min(best, point_segment_distance(p, edges[i]));
    return best;
}

}  // namespace hazmon

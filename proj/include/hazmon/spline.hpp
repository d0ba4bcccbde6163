#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hazmon/errors.hpp"
#include "hazmon/geometry.hpp"

namespace hazmon {

inline constexpr int kMaxSplineDegree = 7;
inline constexpr double kVelocityEps = 1e-6;

struct KinematicSample {
    Point2 position;
    double v = 0.0;
    double u = 0.0;
    double kappa = 0.0;
    double t = 0.0;
};

// Uniform B-spline over [t0, tf] with degree extra knots beyond each end.
// Endpoints are not clamped; interpolation conditions are imposed by callers.
class SplinePath {
public:
    SplinePath(int degree, std::vector<Point2> control, double t0, double tf)
        : degree_(degree), control_(std::move(control)), t0_(t0), tf_(tf) {
        if (degree_ < 1 || degree_ > kMaxSplineDegree)
            throw std::invalid_argument("spline degree out of range");
        if (static_cast<int>(control_.size()) < degree_ + 1)
            throw std::invalid_argument("spline needs at least degree+1 control points");
        if (!(t0_ < tf_)) throw std::invalid_argument("spline horizon is empty");
        const int n_c = static_cast<int>(control_.size());
        const int spans = n_c - degree_;
        delta_ = (tf_ - t0_) / spans;
        knots_.resize(n_c + degree_ + 1);
        for (std::size_t i = 0; i < knots_.size(); ++i)
            knots_[i] = t0_ + (static_cast<int>(i) - degree_) * delta_;
        knots_[degree_] = t0_;
        knots_[n_c] = tf_;
    }

    int degree() const { return degree_; }
    double t0() const { return t0_; }
    double tf() const { return tf_; }
    double knot_spacing() const { return delta_; }
    const std::vector<Point2>& control() const { return control_; }
    const std::vector<double>& knots() const { return knots_; }
    int num_control() const { return static_cast<int>(control_.size()); }

    // index of the knot span containing t, in [degree, num_control - 1]
    int find_span(double t) const {
        check_time(t);
        int span = degree_ + static_cast<int>((t - t0_) / delta_);
        return std::clamp(span, degree_, num_control() - 1);
    }

    // weights[j] = B_{span-degree+j}(t) for j = 0..degree
    void basis_at(double t, int span, double* weights) const {
        std::array<double, kMaxSplineDegree + 1> left{}, right{};
        weights[0] = 1.0;
        for (int j = 1; j <= degree_; ++j) {
            left[j] = t - knots_[span + 1 - j];
            right[j] = knots_[span + j] - t;
            double saved = 0.0;
            for (int r = 0; r < j; ++r) {
                const double temp = weights[r] / (right[r + 1] + left[j - r]);
                weights[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            weights[j] = saved;
        }
    }

    // ders[k*(degree+1) + j] = d^k/dt^k B_{span-degree+j}(t) for k = 0..n_ders
    void basis_derivatives_at(double t, int span, int n_ders, double* ders) const {
        const int p = degree_;
        const int cols = p + 1;
        std::array<std::array<double, kMaxSplineDegree + 1>, kMaxSplineDegree + 1> ndu{};
        std::array<std::array<double, kMaxSplineDegree + 1>, 2> a{};
        std::array<double, kMaxSplineDegree + 1> left{}, right{};

        ndu[0][0] = 1.0;
        for (int j = 1; j <= p; ++j) {
            left[j] = t - knots_[span + 1 - j];
            right[j] = knots_[span + j] - t;
            double saved = 0.0;
            for (int r = 0; r < j; ++r) {
                ndu[j][r] = right[r + 1] + left[j - r];
                const double temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        for (int j = 0; j <= p; ++j) ders[0 * cols + j] = ndu[j][p];

        for (int r = 0; r <= p; ++r) {
            int s1 = 0;
            int s2 = 1;
            a[0][0] = 1.0;
            for (int k = 1; k <= n_ders; ++k) {
                double d = 0.0;
                const int rk = r - k;
                const int pk = p - k;
                if (r >= k) {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                    d = a[s2][0] * ndu[rk][pk];
                }
                const int j1 = (rk >= -1) ? 1 : -rk;
                const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
                for (int j = j1; j <= j2; ++j) {
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
                    d += a[s2][j] * ndu[rk + j][pk];
                }
                if (r <= pk) {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                ders[k * cols + r] = d;
                std::swap(s1, s2);
            }
        }
        double factor = p;
        for (int k = 1; k <= n_ders; ++k) {
            for (int j = 0; j <= p; ++j) ders[k * cols + j] *= factor;
            factor *= (p - k);
        }
    }

    Point2 eval(double t) const {
        const int span = find_span(t);
        std::array<double, kMaxSplineDegree + 1> w{};
        basis_at(t, span, w.data());
        Point2 out{0.0, 0.0};
        for (int j = 0; j <= degree_; ++j) out = out + w[j] * control_[span - degree_ + j];
        return out;
    }

    // velocity and acceleration vectors at t
    std::pair<Point2, Point2> derivatives(double t) const {
        const int span = find_span(t);
        std::array<double, 3 * (kMaxSplineDegree + 1)> d{};
        basis_derivatives_at(t, span, 2, d.data());
        const int cols = degree_ + 1;
        Point2 vel{0.0, 0.0}, acc{0.0, 0.0};
        for (int j = 0; j <= degree_; ++j) {
            const Point2& c = control_[span - degree_ + j];
            vel = vel + d[1 * cols + j] * c;
            acc = acc + d[2 * cols + j] * c;
        }
        return {vel, acc};
    }

    KinematicSample kinematics(double t) const {
        const auto [vel, acc] = derivatives(t);
        KinematicSample out;
        out.position = eval(t);
        out.t = t;
        out.v = norm(vel);
        if (out.v <= kVelocityEps)
            throw DegenerateVelocity("speed is numerically zero at t=" + std::to_string(t));
        out.u = cross(vel, acc) / (out.v * out.v);
        out.kappa = out.u / out.v;
        return out;
    }

    double arc_length() const {
        // composite 5-point Gauss-Legendre on 100 sub-intervals
        static constexpr std::array<double, 5> gl_x = {
            -0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
            0.9061798459386640};
        static constexpr std::array<double, 5> gl_w = {
            0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
            0.4786286704993665, 0.2369268850561891};
        constexpr int n_sub = 100;
        const double h = (tf_ - t0_) / n_sub;
        double total = 0.0;
        for (int i = 0; i < n_sub; ++i) {
            const double mid = t0_ + (i + 0.5) * h;
            double acc = 0.0;
            for (int q = 0; q < 5; ++q) {
                const double t = mid + 0.5 * h * gl_x[q];
                acc += gl_w[q] * norm(derivatives(t).first);
            }
            total += 0.5 * h * acc;
        }
        return total;
    }

private:
    void check_time(double t) const {
        if (t < t0_ || t > tf_) throw std::domain_error("time outside spline horizon");
    }

    int degree_;
    std::vector<Point2> control_;
    double t0_;
    double tf_;
    double delta_ = 0.0;
    std::vector<double> knots_;
};

// Least-squares fit to waypoints parameterized by cumulative arc length,
// with both endpoints interpolated exactly.
inline SplinePath fit_to_polyline(const std::vector<Point2>& waypoints, int degree,
                                  int n_control, double horizon) {
    if (waypoints.size() < 2) throw std::invalid_argument("fit needs at least 2 waypoints");
    if (n_control > static_cast<int>(waypoints.size()))
        throw std::invalid_argument("more control points than waypoint samples");
    if (n_control < degree + 1)
        throw std::invalid_argument("fit needs at least degree+1 control points");
    if (!(horizon > 0.0)) throw std::invalid_argument("fit horizon must be positive");

    const int m = static_cast<int>(waypoints.size());
    std::vector<double> cum(m, 0.0);
    for (int i = 1; i < m; ++i) cum[i] = cum[i - 1] + distance(waypoints[i], waypoints[i - 1]);
    const double total = cum[m - 1];
    if (!(total > 0.0)) throw std::invalid_argument("waypoints have zero total length");

    // shape probe with arbitrary control points, reused for basis rows
    SplinePath probe(degree, std::vector<Point2>(n_control, Point2{0, 0}), 0.0, horizon);

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, n_control);
    Eigen::MatrixXd bx(m, 2);
    std::array<double, kMaxSplineDegree + 1> w{};
    for (int j = 0; j < m; ++j) {
        const double t = std::clamp(horizon * cum[j] / total, 0.0, horizon);
        const int span = probe.find_span(t);
        probe.basis_at(t, span, w.data());
        for (int r = 0; r <= degree; ++r) a(j, span - degree + r) = w[r];
        bx(j, 0) = waypoints[j].x;
        bx(j, 1) = waypoints[j].y;
    }

    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, n_control);
    {
        const int s0 = probe.find_span(0.0);
        probe.basis_at(0.0, s0, w.data());
        for (int r = 0; r <= degree; ++r) c(0, s0 - degree + r) = w[r];
        const int s1 = probe.find_span(horizon);
        probe.basis_at(horizon, s1, w.data());
        for (int r = 0; r <= degree; ++r) c(1, s1 - degree + r) = w[r];
    }
    Eigen::MatrixXd d(2, 2);
    d << waypoints.front().x, waypoints.front().y, waypoints.back().x, waypoints.back().y;

    const int n = n_control;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + 2, n + 2);
    kkt.topLeftCorner(n, n) = a.transpose() * a;
    kkt.topRightCorner(n, 2) = c.transpose();
    kkt.bottomLeftCorner(2, n) = c;
    Eigen::MatrixXd rhs(n + 2, 2);
    rhs.topRows(n) = a.transpose() * bx;
    rhs.bottomRows(2) = d;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) throw std::runtime_error("polyline fit is rank-deficient");
    Eigen::MatrixXd sol = lu.solve(rhs);

    std::vector<Point2> control(n);
    for (int i = 0; i < n; ++i) control[i] = {sol(i, 0), sol(i, 1)};
    return SplinePath(degree, std::move(control), 0.0, horizon);
}

// Evenly spaced points along a polyline by arc length, endpoints included.
inline std::vector<Point2> resample_polyline(const std::vector<Point2>& waypoints,
                                             int n_samples) {
    if (waypoints.size() < 2) throw std::invalid_argument("resample needs at least 2 waypoints");
    if (n_samples < 2) throw std::invalid_argument("resample needs at least 2 output points");
    const int m = static_cast<int>(waypoints.size());
    std::vector<double> cum(m, 0.0);
    for (int i = 1; i < m; ++i) cum[i] = cum[i - 1] + distance(waypoints[i], waypoints[i - 1]);
    const double total = cum[m - 1];
    if (!(total > 0.0)) throw std::invalid_argument("waypoints have zero total length");

    std::vector<Point2> out;
    out.reserve(n_samples);
    int seg = 0;
    for (int i = 0; i < n_samples; ++i) {
        const double target = total * i / (n_samples - 1);
        while (seg < m - 2 && cum[seg + 1] < target) ++seg;
        const double seg_len = cum[seg + 1] - cum[seg];
        const double f = seg_len > 0.0 ? (target - cum[seg]) / seg_len : 0.0;
        out.push_back(waypoints[seg] + f * (waypoints[seg + 1] - waypoints[seg]));
    }
    out.back() = waypoints.back();
    return out;
}

}  // namespace hazmon

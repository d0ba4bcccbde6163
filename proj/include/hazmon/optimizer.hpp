#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "hazmon/errors.hpp"
#include "hazmon/geometry.hpp"
#include "hazmon/hazard.hpp"
#include "hazmon/lbfgs.hpp"
#include "hazmon/spline.hpp"

namespace hazmon {

// success tolerances for a planned edge trajectory
constexpr double kEndpointPosTol = 0.5;    // meters
constexpr double kEndpointVelTol = 0.1;    // m/s
constexpr double kKinematicRelTol = 1e-3;  // relative to the bound magnitude
constexpr double kBudgetRelTol = 0.005;    // relative to the edge budget

struct EdgePlanningProblem {
    Point2 x0{0.0, 0.0};
    Point2 xf{0.0, 0.0};
    Point2 v0{0.0, 0.0};
    Point2 vf{0.0, 0.0};
    double v_lb = 2.0;
    double v_ub = 20.0;
    double u_lb = -1.0;
    double u_ub = 1.0;
    double kappa_ub = 0.2;
    double budget = 0.0;
    std::vector<Point2> grid_points;
    HazardField field{{}, HazardParams{}};

    void validate() const {
        if (!(v_lb > 0.0) || !(v_ub > v_lb))
            throw std::invalid_argument("speed bounds must satisfy 0 < v_lb < v_ub");
        if (!(u_ub > u_lb)) throw std::invalid_argument("turn-rate bounds are empty");
        if (!(kappa_ub > 0.0)) throw std::invalid_argument("curvature bound must be positive");
        const double v0n = norm(v0);
        const double vfn = norm(vf);
        if (v0n < v_lb - 1e-9 || v0n > v_ub + 1e-9 || vfn < v_lb - 1e-9 ||
            vfn > v_ub + 1e-9)
            throw std::invalid_argument("endpoint speeds outside kinematic bounds");
        if (budget < distance(x0, xf))
            throw std::invalid_argument("budget below straight-line distance");
        if (grid_points.empty())
            throw std::invalid_argument("edge problem needs evaluation grid points");
    }
};

struct OptimizerConfig {
    int max_outer = 8;
    int max_inner = 60;
    double mu_initial = 10.0;
    double mu_growth = 8.0;
    double inner_grad_tol = 1e-7;
};

// max violation per constraint family; kinematic and budget entries are
// relative to the bound magnitude, endpoint entries are absolute
struct ConstraintResiduals {
    double endpoint_pos = 0.0;  // meters
    double endpoint_vel = 0.0;  // m/s
    double speed = 0.0;
    double turn_rate = 0.0;
    double curvature = 0.0;
    double budget = 0.0;

    bool within_tolerance() const {
        return endpoint_pos <= kEndpointPosTol && endpoint_vel <= kEndpointVelTol &&
               speed <= kKinematicRelTol && turn_rate <= kKinematicRelTol &&
               curvature <= kKinematicRelTol && budget <= kBudgetRelTol;
    }

    // worst family violation as a multiple of its tolerance
    double score() const {
        return std::max({endpoint_pos / kEndpointPosTol, endpoint_vel / kEndpointVelTol,
                         speed / kKinematicRelTol, turn_rate / kKinematicRelTol,
                         curvature / kKinematicRelTol, budget / kBudgetRelTol});
    }
};

struct PlannedTrajectory {
    SplinePath path;
    double t_f = 0.0;
    double gamma = 0.0;
    ConstraintResiduals residuals;
    std::vector<double> sample_times;
    bool feasible = false;
    bool hit_iteration_limit = false;
};

struct GammaGradient {
    std::vector<Point2> d_control;
    double d_t_f = 0.0;
};

// measurement instants (t0, t0+delta, ..., tf); tf <= t0 yields none
inline std::vector<double> sampling_times(double t0, double tf, double delta_s) {
    if (!(delta_s > 0.0)) throw std::invalid_argument("sampling period must be positive");
    std::vector<double> times;
    if (tf <= t0) return times;
    for (int j = 0;; ++j) {
        const double t = t0 + j * delta_s;
        if (t >= tf - 1e-9 * delta_s) break;
        times.push_back(t);
    }
    times.push_back(tf);
    return times;
}

// mean posterior over the problem grid after adding the samples a traversal
// of `path` up to t_f would collect
inline double objective_gamma(const SplinePath& path, double t_f,
                              const EdgePlanningProblem& prob) {
    if (prob.grid_points.empty())
        throw std::invalid_argument("objective needs a non-empty grid");
    const auto times = sampling_times(path.t0(), t_f, prob.field.params().delta_s);
    std::vector<Point2> points;
    points.reserve(times.size());
    for (double t : times) points.push_back(path.eval(t));
    const HazardField conditioned = prob.field.with_samples(points);
    double total = 0.0;
    for (const auto& g : prob.grid_points) total += conditioned.posterior(g);
    return total / static_cast<double>(prob.grid_points.size());
}

namespace detail {

// posterior mean and its gradient with respect to the new sample positions,
// with the stored past samples folded into per-grid-point constants
class GammaEvaluator {
public:
    GammaEvaluator(const std::vector<Point2>& grid, const HazardField& field,
                   bool use_cutoff)
        : grid_(grid), beta_(field.params().beta_sense), use_cutoff_(use_cutoff) {
        const double p_fa = field.params().p_fa;
        log_q_ = (p_fa < 1.0) ? std::log1p(-p_fa) : -std::numeric_limits<double>::infinity();
        n_past_ = static_cast<double>(field.samples().size());
        log_num_past_.resize(grid.size());
        log_one_minus_pi_.resize(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double pi = field.prior(grid[i]);
            log_one_minus_pi_[i] =
                (pi < 1.0) ? std::log1p(-pi) : -std::numeric_limits<double>::infinity();
            double log_num =
                (pi > 0.0) ? std::log(pi) : -std::numeric_limits<double>::infinity();
            for (const auto& s : field.samples()) {
                const double bd2 = beta_ * squared_distance(s, grid[i]);
                if (use_cutoff_ && bd2 > kExpCutoff) continue;
                const double one_minus = -std::expm1(-bd2);
                log_num += (one_minus > 0.0)
                               ? std::log(one_minus)
                               : -std::numeric_limits<double>::infinity();
            }
            log_num_past_[i] = log_num;
        }
    }

    // evaluates gamma; when d_samples is non-null it must have samples.size()
    // entries, which are overwritten with d gamma / d sample position
    double evaluate(const std::vector<Point2>& samples,
                    std::vector<Point2>* d_samples) const {
        const double n_g = static_cast<double>(grid_.size());
        const double n_total = n_past_ + static_cast<double>(samples.size());
        if (d_samples)
            std::fill(d_samples->begin(), d_samples->end(), Point2{0.0, 0.0});
        std::vector<double> one_minus_row(samples.size());
        double total = 0.0;
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            const Point2 g = grid_[i];
            double log_num = log_num_past_[i];
            double prod = 1.0;
            for (std::size_t j = 0; j < samples.size(); ++j) {
                const double bd2 = beta_ * squared_distance(samples[j], g);
                if (use_cutoff_ && bd2 > kExpCutoff) {
                    one_minus_row[j] = 1.0;
                    continue;
                }
                const double one_minus = -std::expm1(-bd2);
                one_minus_row[j] = one_minus;
                prod *= one_minus;
                if (prod < 1e-280) {
                    log_num += (prod > 0.0) ? std::log(prod)
                                            : -std::numeric_limits<double>::infinity();
                    prod = 1.0;
                }
            }
            log_num += (prod > 0.0) ? std::log(prod)
                                    : -std::numeric_limits<double>::infinity();
            if (!(log_num > -std::numeric_limits<double>::infinity())) continue;
            const double log_alt = log_one_minus_pi_[i] + n_total * log_q_;
            const double s = log_alt - log_num;
            const double phi = 1.0 / (1.0 + std::exp(s));
            total += phi;
            if (d_samples) {
                const double weight = phi * (1.0 - phi) * 2.0 * beta_ / n_g;
                if (weight > 0.0) {
                    for (std::size_t j = 0; j < samples.size(); ++j) {
                        const double one_minus = std::max(one_minus_row[j], 1e-12);
                        const double e = 1.0 - one_minus_row[j];
                        if (e <= 0.0) continue;
                        const double coef = weight * e / one_minus;
                        (*d_samples)[j] =
                            (*d_samples)[j] + coef * (samples[j] - g);
                    }
                }
            }
        }
        return total / n_g;
    }

private:
    static constexpr double kExpCutoff = 45.0;
    const std::vector<Point2>& grid_;
    double beta_;
    bool use_cutoff_;
    double log_q_ = 0.0;
    double n_past_ = 0.0;
    std::vector<double> log_num_past_;
    std::vector<double> log_one_minus_pi_;
};

}  // namespace detail

// analytic gradient of objective_gamma over control points and t_f
inline GammaGradient gradient_gamma(const SplinePath& path, double t_f,
                                    const EdgePlanningProblem& prob) {
    if (prob.grid_points.empty())
        throw std::invalid_argument("objective needs a non-empty grid");
    GammaGradient out;
    out.d_control.assign(path.num_control(), Point2{0.0, 0.0});
    const double delta_s = prob.field.params().delta_s;
    const auto times = sampling_times(path.t0(), t_f, delta_s);
    if (times.empty()) return out;

    std::vector<Point2> points;
    points.reserve(times.size());
    for (double t : times) points.push_back(path.eval(t));

    const detail::GammaEvaluator evaluator(prob.grid_points, prob.field, false);
    std::vector<Point2> d_points(points.size());
    evaluator.evaluate(points, &d_points);

    const int p = path.degree();
    std::array<double, kMaxSplineDegree + 1> w{};
    const double horizon = t_f - path.t0();
    for (std::size_t j = 0; j < times.size(); ++j) {
        const double t = times[j];
        const int span = path.find_span(t);
        path.basis_at(t, span, w.data());
        for (int r = 0; r <= p; ++r)
            out.d_control[span - p + r] = out.d_control[span - p + r] + w[r] * d_points[j];
        // a sample at fixed wall time slides backward along the path as the
        // horizon stretches; the final sample rides the endpoint instead
        if (t < t_f - 1e-9 * delta_s) {
            const Point2 vel = path.derivatives(t).first;
            const double factor = -(t - path.t0()) / horizon;
            out.d_t_f += factor * dot(vel, d_points[j]);
        }
    }
    return out;
}

// recomputes every constraint residual from the path alone
inline ConstraintResiduals verify_trajectory(const SplinePath& path,
                                             const EdgePlanningProblem& prob) {
    ConstraintResiduals r;
    r.endpoint_pos = std::max(distance(path.eval(path.t0()), prob.x0),
                              distance(path.eval(path.tf()), prob.xf));
    r.endpoint_vel = std::max(norm(path.derivatives(path.t0()).first - prob.v0),
                              norm(path.derivatives(path.tf()).first - prob.vf));
    const double u_scale = std::max(std::abs(prob.u_lb), std::abs(prob.u_ub));
    const auto times = sampling_times(path.t0(), path.tf(), prob.field.params().delta_s);
    for (double t : times) {
        const auto [vel, acc] = path.derivatives(t);
        const double v = norm(vel);
        r.speed = std::max(r.speed,
                           std::max(prob.v_lb - v, v - prob.v_ub) / prob.v_ub);
        if (v > kVelocityEps) {
            const double u = cross(vel, acc) / (v * v);
            const double kappa = u / v;
            r.turn_rate =
                std::max(r.turn_rate, std::max(prob.u_lb - u, u - prob.u_ub) / u_scale);
            r.curvature =
                std::max(r.curvature, (std::abs(kappa) - prob.kappa_ub) / prob.kappa_ub);
        }
    }
    r.speed = std::max(r.speed, 0.0);
    r.turn_rate = std::max(r.turn_rate, 0.0);
    r.curvature = std::max(r.curvature, 0.0);
    r.budget = std::abs(path.arc_length() - prob.budget) / prob.budget;
    return r;
}

namespace detail {

// augmented-Lagrangian solve over control points and the horizon T, with the
// measurement instants frozen at normalized times so every quantity stays
// smooth during an inner minimization
class EdgeSolver {
public:
    EdgeSolver(const EdgePlanningProblem& prob, const SplinePath& init,
               const OptimizerConfig& cfg)
        : prob_(prob),
          cfg_(cfg),
          n_c_(init.num_control()),
          degree_(init.degree()),
          t_init_(init.tf()),
          probe_(degree_, std::vector<Point2>(n_c_, Point2{0.0, 0.0}), 0.0, 1.0),
          evaluator_(prob.grid_points, prob.field, true) {
        build_quadrature_rows();
        endpoint0_ = make_row(0.0);
        endpoint1_ = make_row(1.0);
    }

    PlannedTrajectory solve(const SplinePath& init) {
        Eigen::VectorXd z(2 * n_c_ + 1);
        for (int i = 0; i < n_c_; ++i) {
            z[2 * i] = init.control()[i].x;
            z[2 * i + 1] = init.control()[i].y;
        }
        z[2 * n_c_] = t_init_;

        refresh_sample_grid(t_init_);
        mu_ = cfg_.mu_initial;
        lambda_eq_.assign(kNumEq, 0.0);
        lambda_ineq_.assign(6 * tau_.size(), 0.0);

        std::vector<Eigen::VectorXd> candidates;
        candidates.push_back(z);
        double prev_violation = std::numeric_limits<double>::infinity();
        bool converged = false;

        for (int outer = 0; outer < cfg_.max_outer && !converged; ++outer) {
            const double t_now = z[2 * n_c_];
            if (std::abs(t_now - grid_t_ref_) > 1e-3 * grid_t_ref_) {
                const std::vector<double> old = std::move(lambda_ineq_);
                const std::size_t old_count = old.size() / 6;
                refresh_sample_grid(t_now);
                lambda_ineq_.assign(6 * tau_.size(), 0.0);
                for (std::size_t j = 0; j < tau_.size() && old_count > 0; ++j) {
                    const std::size_t src = std::min(j, old_count - 1);
                    for (int k = 0; k < 6; ++k)
                        lambda_ineq_[6 * j + k] = old[6 * src + k];
                }
            }

            LbfgsOptions inner;
            inner.max_iterations = cfg_.max_inner;
            inner.grad_tol = cfg_.inner_grad_tol;
            const auto result = lbfgs_minimize(
                [this](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
                    return al_value(x, grad);
                },
                z, inner);
            z = result.x;
            candidates.push_back(z);

            std::array<double, kNumEq> c{};
            std::vector<double> g;
            constraint_state(z, c, g);
            double viol_eq = 0.0;
            for (double ci : c) viol_eq = std::max(viol_eq, std::abs(ci));
            double viol_in = 0.0;
            for (double gi : g) viol_in = std::max(viol_in, gi);
            const double violation = std::max(viol_eq, viol_in);
            for (int i = 0; i < kNumEq; ++i) lambda_eq_[i] += mu_ * c[i];
            for (std::size_t i = 0; i < g.size(); ++i)
                lambda_ineq_[i] = std::max(0.0, lambda_ineq_[i] + mu_ * g[i]);

            if (viol_eq <= 2e-3 && viol_in <= 2e-4) {
                converged = true;
            } else {
                if (violation > 0.25 * prev_violation)
                    mu_ = std::min(mu_ * cfg_.mu_growth, 1e8);
                prev_violation = violation;
            }
        }

        return select_result(candidates, converged);
    }

private:
    static constexpr int kNumEq = 9;

    struct Row {
        int span = 0;
        std::array<double, kMaxSplineDegree + 1> w0{};
        std::array<double, kMaxSplineDegree + 1> w1{};
        std::array<double, kMaxSplineDegree + 1> w2{};
    };

    Row make_row(double tau) const {
        Row row;
        row.span = probe_.find_span(tau);
        std::array<double, 3 * (kMaxSplineDegree + 1)> ders{};
        probe_.basis_derivatives_at(tau, row.span, 2, ders.data());
        const int cols = degree_ + 1;
        for (int j = 0; j <= degree_; ++j) {
            row.w0[j] = ders[j];
            row.w1[j] = ders[cols + j];
            row.w2[j] = ders[2 * cols + j];
        }
        return row;
    }

    void build_quadrature_rows() {
        static constexpr std::array<double, 5> gl_x = {
            -0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
            0.9061798459386640};
        static constexpr std::array<double, 5> gl_w = {
            0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
            0.4786286704993665, 0.2369268850561891};
        constexpr int n_sub = 100;
        const double h = 1.0 / n_sub;
        for (int i = 0; i < n_sub; ++i) {
            const double mid = (i + 0.5) * h;
            for (int q = 0; q < 5; ++q) {
                quad_rows_.push_back(make_row(mid + 0.5 * h * gl_x[q]));
                quad_w_.push_back(0.5 * h * gl_w[q]);
            }
        }
    }

    void refresh_sample_grid(double t_ref) {
        grid_t_ref_ = t_ref;
        const auto times = sampling_times(0.0, t_ref, prob_.field.params().delta_s);
        tau_.clear();
        sample_rows_.clear();
        for (double t : times) {
            const double tau = std::clamp(t / t_ref, 0.0, 1.0);
            tau_.push_back(tau);
            sample_rows_.push_back(make_row(tau));
        }
    }

    Point2 combine(const Row& row, const std::array<double, kMaxSplineDegree + 1> Row::*w,
                   const Eigen::VectorXd& z) const {
        Point2 out{0.0, 0.0};
        const int base = row.span - degree_;
        for (int j = 0; j <= degree_; ++j) {
            const double weight = (row.*w)[j];
            out.x += weight * z[2 * (base + j)];
            out.y += weight * z[2 * (base + j) + 1];
        }
        return out;
    }

    void scatter(const Row& row, const std::array<double, kMaxSplineDegree + 1> Row::*w,
                 Point2 value, Eigen::VectorXd& grad) const {
        const int base = row.span - degree_;
        for (int j = 0; j <= degree_; ++j) {
            const double weight = (row.*w)[j];
            grad[2 * (base + j)] += weight * value.x;
            grad[2 * (base + j) + 1] += weight * value.y;
        }
    }

    // equality residuals (scaled) and per-sample-time inequality residuals
    void constraint_state(const Eigen::VectorXd& z, std::array<double, kNumEq>& c,
                          std::vector<double>& g) const {
        const double t = z[2 * n_c_];
        const Point2 p0 = combine(endpoint0_, &Row::w0, z);
        const Point2 p1 = combine(endpoint1_, &Row::w0, z);
        const Point2 d1_0 = combine(endpoint0_, &Row::w1, z);
        const Point2 d1_1 = combine(endpoint1_, &Row::w1, z);
        c[0] = p0.x - prob_.x0.x;
        c[1] = p0.y - prob_.x0.y;
        c[2] = p1.x - prob_.xf.x;
        c[3] = p1.y - prob_.xf.y;
        c[4] = d1_0.x / t - prob_.v0.x;
        c[5] = d1_0.y / t - prob_.v0.y;
        c[6] = d1_1.x / t - prob_.vf.x;
        c[7] = d1_1.y / t - prob_.vf.y;

        double length = 0.0;
        for (std::size_t q = 0; q < quad_rows_.size(); ++q)
            length += quad_w_[q] * norm(combine(quad_rows_[q], &Row::w1, z));
        c[8] = (length - prob_.budget) / prob_.budget;

        const double u_scale = std::max(std::abs(prob_.u_lb), std::abs(prob_.u_ub));
        g.assign(6 * tau_.size(), 0.0);
        for (std::size_t j = 0; j < tau_.size(); ++j) {
            const Point2 d1 = combine(sample_rows_[j], &Row::w1, z);
            const Point2 d2 = combine(sample_rows_[j], &Row::w2, z);
            const double s = dot(d1, d1);
            const double v = std::sqrt(s) / t;
            const double w = cross(d1, d2);
            const double u = (s > 0.0) ? w / (t * s) : 0.0;
            const double kappa = (s > 0.0) ? w / (s * std::sqrt(s)) : 0.0;
            g[6 * j + 0] = (prob_.v_lb - v) / prob_.v_ub;
            g[6 * j + 1] = (v - prob_.v_ub) / prob_.v_ub;
            g[6 * j + 2] = (prob_.u_lb - u) / u_scale;
            g[6 * j + 3] = (u - prob_.u_ub) / u_scale;
            g[6 * j + 4] = (kappa - prob_.kappa_ub) / prob_.kappa_ub;
            g[6 * j + 5] = (-kappa - prob_.kappa_ub) / prob_.kappa_ub;
        }
    }

    double al_value(const Eigen::VectorXd& z, Eigen::VectorXd& grad) {
        const double inf = std::numeric_limits<double>::infinity();
        const double t = z[2 * n_c_];
        if (!std::isfinite(t) || t < 0.05 * t_init_) return inf;
        grad.setZero(z.size());
        double& grad_t = grad[2 * n_c_];

        // objective term
        samples_buf_.resize(tau_.size());
        for (std::size_t j = 0; j < tau_.size(); ++j)
            samples_buf_[j] = combine(sample_rows_[j], &Row::w0, z);
        d_samples_buf_.resize(tau_.size());
        double f = evaluator_.evaluate(samples_buf_, &d_samples_buf_);
        for (std::size_t j = 0; j < tau_.size(); ++j)
            scatter(sample_rows_[j], &Row::w0, d_samples_buf_[j], grad);

        // equality terms
        const Point2 p0 = combine(endpoint0_, &Row::w0, z);
        const Point2 p1 = combine(endpoint1_, &Row::w0, z);
        const Point2 d1_0 = combine(endpoint0_, &Row::w1, z);
        const Point2 d1_1 = combine(endpoint1_, &Row::w1, z);
        std::array<double, kNumEq> c{};
        c[0] = p0.x - prob_.x0.x;
        c[1] = p0.y - prob_.x0.y;
        c[2] = p1.x - prob_.xf.x;
        c[3] = p1.y - prob_.xf.y;
        c[4] = d1_0.x / t - prob_.v0.x;
        c[5] = d1_0.y / t - prob_.v0.y;
        c[6] = d1_1.x / t - prob_.vf.x;
        c[7] = d1_1.y / t - prob_.vf.y;

        double length = 0.0;
        length_grad_.assign(2 * n_c_, 0.0);
        for (std::size_t q = 0; q < quad_rows_.size(); ++q) {
            const Point2 d1 = combine(quad_rows_[q], &Row::w1, z);
            const double n = norm(d1);
            if (n <= 1e-12) return inf;
            length += quad_w_[q] * n;
            const Point2 dir = (quad_w_[q] / n) * d1;
            const int base = quad_rows_[q].span - degree_;
            for (int j = 0; j <= degree_; ++j) {
                length_grad_[2 * (base + j)] += quad_rows_[q].w1[j] * dir.x;
                length_grad_[2 * (base + j) + 1] += quad_rows_[q].w1[j] * dir.y;
            }
        }
        c[8] = (length - prob_.budget) / prob_.budget;

        for (int i = 0; i < kNumEq; ++i) {
            const double force = lambda_eq_[i] + mu_ * c[i];
            f += lambda_eq_[i] * c[i] + 0.5 * mu_ * c[i] * c[i];
            switch (i) {
                case 0:
                    scatter(endpoint0_, &Row::w0, {force, 0.0}, grad);
                    break;
                case 1:
                    scatter(endpoint0_, &Row::w0, {0.0, force}, grad);
                    break;
                case 2:
                    scatter(endpoint1_, &Row::w0, {force, 0.0}, grad);
                    break;
                case 3:
                    scatter(endpoint1_, &Row::w0, {0.0, force}, grad);
                    break;
                case 4:
                    scatter(endpoint0_, &Row::w1, {force / t, 0.0}, grad);
                    grad_t += force * (-d1_0.x / (t * t));
                    break;
                case 5:
                    scatter(endpoint0_, &Row::w1, {0.0, force / t}, grad);
                    grad_t += force * (-d1_0.y / (t * t));
                    break;
                case 6:
                    scatter(endpoint1_, &Row::w1, {force / t, 0.0}, grad);
                    grad_t += force * (-d1_1.x / (t * t));
                    break;
                case 7:
                    scatter(endpoint1_, &Row::w1, {0.0, force / t}, grad);
                    grad_t += force * (-d1_1.y / (t * t));
                    break;
                case 8:
                    for (int k = 0; k < 2 * n_c_; ++k)
                        grad[k] += force * length_grad_[k] / prob_.budget;
                    break;
            }
        }

        // inequality terms at the frozen sample grid
        const double u_scale = std::max(std::abs(prob_.u_lb), std::abs(prob_.u_ub));
        for (std::size_t j = 0; j < tau_.size(); ++j) {
            const Row& row = sample_rows_[j];
            const Point2 d1 = combine(row, &Row::w1, z);
            const Point2 d2 = combine(row, &Row::w2, z);
            const double s = dot(d1, d1);
            if (s <= 1e-12) return inf;
            const double sqrt_s = std::sqrt(s);
            const double v = sqrt_s / t;
            const double w = cross(d1, d2);
            const double u = w / (t * s);
            const double kappa = w / (s * sqrt_s);

            const double g_vals[6] = {(prob_.v_lb - v) / prob_.v_ub,
                                      (v - prob_.v_ub) / prob_.v_ub,
                                      (prob_.u_lb - u) / u_scale,
                                      (u - prob_.u_ub) / u_scale,
                                      (kappa - prob_.kappa_ub) / prob_.kappa_ub,
                                      (-kappa - prob_.kappa_ub) / prob_.kappa_ub};
            double force[6];
            bool any = false;
            for (int k = 0; k < 6; ++k) {
                const double trial = lambda_ineq_[6 * j + k] + mu_ * g_vals[k];
                if (trial > 0.0) {
                    f += (trial * trial - lambda_ineq_[6 * j + k] * lambda_ineq_[6 * j + k]) /
                         (2.0 * mu_);
                    force[k] = trial;
                    any = true;
                } else {
                    f += -lambda_ineq_[6 * j + k] * lambda_ineq_[6 * j + k] / (2.0 * mu_);
                    force[k] = 0.0;
                }
            }
            if (!any) continue;

            // chain factors: dv, du, dkappa against d1, d2 and t
            const double fv = (force[1] - force[0]) / prob_.v_ub;
            const double fu = (force[3] - force[2]) / u_scale;
            const double fk = (force[4] - force[5]) / prob_.kappa_ub;

            if (fv != 0.0) {
                scatter(row, &Row::w1, (fv / (sqrt_s * t)) * d1, grad);
                grad_t += fv * (-v / t);
            }
            if (fu != 0.0 || fk != 0.0) {
                const double cu = fu / (t * s) + fk / (s * sqrt_s);
                const double cs = -fu * w / (t * s * s) - fk * 1.5 * w / (s * s * sqrt_s);
                scatter(row, &Row::w1, Point2{cu * d2.y, -cu * d2.x} + (2.0 * cs) * d1,
                        grad);
                scatter(row, &Row::w2, Point2{-cu * d1.y, cu * d1.x}, grad);
                grad_t += fu * (-u / t);
            }
        }
        return f;
    }

    SplinePath path_from(const Eigen::VectorXd& z) const {
        std::vector<Point2> control(n_c_);
        for (int i = 0; i < n_c_; ++i) control[i] = {z[2 * i], z[2 * i + 1]};
        return SplinePath(degree_, std::move(control), 0.0, z[2 * n_c_]);
    }

    PlannedTrajectory select_result(const std::vector<Eigen::VectorXd>& candidates,
                                    bool converged) {
        int best = -1;
        int best_any = 0;
        double best_gamma = std::numeric_limits<double>::infinity();
        double best_score = std::numeric_limits<double>::infinity();
        std::vector<SplinePath> paths;
        std::vector<ConstraintResiduals> residuals;
        paths.reserve(candidates.size());
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            paths.push_back(path_from(candidates[i]));
            residuals.push_back(verify_trajectory(paths.back(), prob_));
            const double score = residuals.back().score();
            if (score < best_score) {
                best_score = score;
                best_any = static_cast<int>(i);
            }
            if (residuals.back().within_tolerance()) {
                const auto times =
                    sampling_times(0.0, paths.back().tf(), prob_.field.params().delta_s);
                std::vector<Point2> pts;
                pts.reserve(times.size());
                for (double t : times) pts.push_back(paths.back().eval(t));
                const double gamma = evaluator_.evaluate(pts, nullptr);
                if (gamma < best_gamma) {
                    best_gamma = gamma;
                    best = static_cast<int>(i);
                }
            }
        }

        const int chosen = (best >= 0) ? best : best_any;
        PlannedTrajectory out{paths[chosen], paths[chosen].tf(), 0.0, residuals[chosen],
                              {}, residuals[chosen].within_tolerance(),
                              !converged || best < 0};
        out.sample_times =
            sampling_times(0.0, out.t_f, prob_.field.params().delta_s);
        out.gamma = objective_gamma(out.path, out.t_f, prob_);
        return out;
    }

    const EdgePlanningProblem& prob_;
    OptimizerConfig cfg_;
    int n_c_;
    int degree_;
    double t_init_;
    SplinePath probe_;
    GammaEvaluator evaluator_;
    std::vector<Row> quad_rows_;
    std::vector<double> quad_w_;
    Row endpoint0_, endpoint1_;
    std::vector<double> tau_;
    std::vector<Row> sample_rows_;
    double grid_t_ref_ = 1.0;
    double mu_ = 1.0;
    std::vector<double> lambda_eq_;
    std::vector<double> lambda_ineq_;
    std::vector<Point2> samples_buf_, d_samples_buf_;
    std::vector<double> length_grad_;
};

}  // namespace detail

inline PlannedTrajectory plan_edge(const EdgePlanningProblem& prob, const SplinePath& init,
                                   const OptimizerConfig& cfg = {}) {
    prob.validate();
    if (init.t0() != 0.0)
        throw std::invalid_argument("edge trajectories start at t = 0");
    const double init_length = init.arc_length();
    if (std::abs(init_length - prob.budget) > 0.05 * prob.budget)
        throw InfeasibleInit("initial path length " + std::to_string(init_length) +
                             " is more than 5% off the budget " +
                             std::to_string(prob.budget));
    detail::EdgeSolver solver(prob, init, cfg);
    return solver.solve(init);
}

}  // namespace hazmon

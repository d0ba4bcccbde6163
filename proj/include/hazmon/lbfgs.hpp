#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>

namespace hazmon {

struct LbfgsOptions {
    int max_iterations = 60;
    int memory = 8;
    double grad_tol = 1e-7;
    double f_rel_tol = 1e-12;
    int max_line_search = 40;
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double f = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

// Limited-memory BFGS with backtracking Armijo line search. The objective
// returns f and fills grad; returning a non-finite f rejects the point and
// shrinks the step, which doubles as a feasible-region guard.
inline LbfgsResult lbfgs_minimize(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& objective,
    Eigen::VectorXd x0, const LbfgsOptions& opts = {}) {
    const auto n = x0.size();
    LbfgsResult result;
    Eigen::VectorXd grad(n), grad_new(n), x_new(n), direction(n);
    double f = objective(x0, grad);
    if (!std::isfinite(f)) {
        result.x = std::move(x0);
        return result;
    }

    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;
    double h0_scale = 1.0;
    int stall = 0;

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        result.iterations = iter;
        if (grad.lpNorm<Eigen::Infinity>() <= opts.grad_tol) {
            result.converged = true;
            break;
        }

        direction = -grad;
        const int m = static_cast<int>(s_hist.size());
        Eigen::VectorXd alpha(m);
        for (int i = m - 1; i >= 0; --i) {
            alpha[i] = rho_hist[i] * s_hist[i].dot(direction);
            direction -= alpha[i] * y_hist[i];
        }
        direction *= h0_scale;
        for (int i = 0; i < m; ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(direction);
            direction += (alpha[i] - beta) * s_hist[i];
        }

        double slope = grad.dot(direction);
        if (slope >= 0.0) {
            direction = -grad;
            slope = grad.dot(direction);
        }

        double step = 1.0;
        double f_new = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int ls = 0; ls < opts.max_line_search; ++ls) {
            x_new = x0 + step * direction;
            f_new = objective(x_new, grad_new);
            if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        const Eigen::VectorXd s = x_new - x0;
        const Eigen::VectorXd y = grad_new - grad;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opts.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
            h0_scale = sy / y.squaredNorm();
        }

        const double f_drop = f - f_new;
        x0.swap(x_new);
        grad.swap(grad_new);
        f = f_new;
        if (f_drop <= opts.f_rel_tol * (1.0 + std::abs(f))) {
            if (++stall >= 2) {
                result.converged = true;
                break;
            }
        } else {
            stall = 0;
        }
    }

    result.x = std::move(x0);
    result.f = f;
    return result;
}

}  // namespace hazmon

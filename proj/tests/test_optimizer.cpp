#include <algorithm>
#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "hazmon/errors.hpp"
#include "hazmon/geometry.hpp"
#include "hazmon/hazard.hpp"
#include "hazmon/optimizer.hpp"
#include "hazmon/rng.hpp"
#include "hazmon/spline.hpp"

using namespace hazmon;

namespace {

SplinePath straight_path(Point2 a, Point2 b, double horizon, int n_control = 8) {
    std::vector<Point2> wps;
    const int n = 60;
    for (int i = 0; i <= n; ++i)
        wps.push_back(a + (static_cast<double>(i) / n) * (b - a));
    return fit_to_polyline(wps, 3, n_control, horizon);
}

SplinePath zigzag_path(Point2 a, Point2 b, double amplitude, double horizon,
                       int n_control = 16) {
    const Point2 axis = b - a;
    const Point2 unit = (1.0 / norm(axis)) * axis;
    const Point2 perp{-unit.y, unit.x};
    std::vector<Point2> corners;
    const int legs = 4;
    for (int i = 0; i <= legs; ++i) {
        const double along = static_cast<double>(i) / legs;
        double offset = 0.0;
        if (i > 0 && i < legs) offset = (i % 2 == 1) ? amplitude : -amplitude;
        corners.push_back(a + along * axis + offset * perp);
    }
    return fit_to_polyline(resample_polyline(corners, 240), 3, n_control, horizon);
}

std::vector<Point2> box_grid(double x_lo, double x_hi, double y_lo, double y_hi, int nx,
                             int ny) {
    std::vector<Point2> pts;
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix)
            pts.push_back({x_lo + (ix + 0.5) * (x_hi - x_lo) / nx,
                           y_lo + (iy + 0.5) * (y_hi - y_lo) / ny});
    return pts;
}

// problem whose initial path is exactly feasible: the budget and endpoint
// velocities are read off the path itself
EdgePlanningProblem problem_from_init(const SplinePath& init, Point2 a, Point2 b,
                                      std::vector<Point2> grid,
                                      std::vector<Point2> known) {
    EdgePlanningProblem prob;
    prob.x0 = a;
    prob.xf = b;
    prob.v0 = init.derivatives(init.t0()).first;
    prob.vf = init.derivatives(init.tf()).first;
    prob.budget = init.arc_length();
    prob.grid_points = std::move(grid);
    prob.field = HazardField(std::move(known), HazardParams{});
    return prob;
}

}  // namespace

TEST_CASE("sampling instants step by the period and end at the horizon") {
    const auto times = sampling_times(0.0, 1.05, 0.1);
    REQUIRE(times.size() == 12);
    CHECK(times.front() == 0.0);
    CHECK(times[5] == Catch::Approx(0.5));
    CHECK(times.back() == 1.05);

    const auto exact = sampling_times(0.0, 0.3, 0.1);
    REQUIRE(exact.size() == 4);
    CHECK(exact.back() == 0.3);

    CHECK(sampling_times(2.0, 2.0, 0.1).empty());
    CHECK_THROWS_AS(sampling_times(0.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("degenerate horizon reproduces the stored field posterior") {
    const Point2 a{200.0, 500.0}, b{600.0, 500.0};
    const auto path = straight_path(a, b, 30.0);
    EdgePlanningProblem prob =
        problem_from_init(path, a, b, box_grid(200, 600, 400, 600, 5, 4),
                          {{300.0, 450.0}, {500.0, 560.0}});
    prob.field = prob.field.with_samples({{250.0, 480.0}, {420.0, 510.0}});

    double expected = 0.0;
    for (const auto& g : prob.grid_points) expected += prob.field.posterior(g);
    expected /= static_cast<double>(prob.grid_points.size());

    CHECK(objective_gamma(path, path.t0(), prob) == expected);

    const auto grad = gradient_gamma(path, path.t0(), prob);
    CHECK(grad.d_t_f == 0.0);
    for (const auto& d : grad.d_control) {
        CHECK(d.x == 0.0);
        CHECK(d.y == 0.0);
    }
}

TEST_CASE("samples on every grid point drive the posterior mean to zero") {
    const Point2 a{200.0, 500.0}, b{400.0, 500.0};
    const auto path = straight_path(a, b, 18.0);
    EdgePlanningProblem prob = problem_from_init(path, a, b, {{0.0, 0.0}}, {});
    prob.grid_points.clear();
    for (double t : sampling_times(path.t0(), path.tf(), prob.field.params().delta_s))
        prob.grid_points.push_back(path.eval(t));

    CHECK(objective_gamma(path, path.tf(), prob) == 0.0);
}

TEST_CASE("duplicated grid point re-averages the objective") {
    const Point2 a{200.0, 500.0}, b{500.0, 500.0};
    const auto path = straight_path(a, b, 27.0);
    EdgePlanningProblem prob =
        problem_from_init(path, a, b, box_grid(200, 500, 430, 570, 4, 3),
                          {{350.0, 480.0}});

    const double base = objective_gamma(path, path.tf(), prob);
    const double n = static_cast<double>(prob.grid_points.size());

    EdgePlanningProblem single = prob;
    single.grid_points = {prob.grid_points.front()};
    const double phi = objective_gamma(path, path.tf(), single);

    EdgePlanningProblem duplicated = prob;
    duplicated.grid_points.push_back(prob.grid_points.front());
    const double combined = objective_gamma(path, path.tf(), duplicated);

    CHECK(combined == Catch::Approx((n * base + phi) / (n + 1.0)).margin(1e-14));
}

TEST_CASE("objective gradient matches central differences") {
    Rng rng(314159);
    for (int rep = 0; rep < 20; ++rep) {
        const int n_control = 8;
        std::vector<Point2> control;
        Point2 cursor{rng.uniform(200.0, 400.0), rng.uniform(300.0, 700.0)};
        for (int i = 0; i < n_control; ++i) {
            control.push_back(cursor);
            cursor = cursor + Point2{rng.uniform(30.0, 70.0), rng.uniform(-45.0, 45.0)};
        }
        double horizon = rng.uniform(5.0, 15.0);
        const double frac = horizon - 0.1 * std::floor(horizon / 0.1);
        if (frac < 1e-3 || frac > 0.0999) horizon += 0.013;

        EdgePlanningProblem prob;
        prob.x0 = control.front();
        prob.xf = control.back();
        prob.v0 = {11.0, 0.0};
        prob.vf = {11.0, 0.0};
        prob.budget = 1e6;
        for (int k = 0; k < 12; ++k)
            prob.grid_points.push_back(
                {rng.uniform(200.0, 800.0), rng.uniform(250.0, 750.0)});
        std::vector<Point2> known;
        const int n_known = static_cast<int>(rng.uniform_index(3));
        for (int k = 0; k < n_known; ++k)
            known.push_back({rng.uniform(200.0, 800.0), rng.uniform(250.0, 750.0)});
        prob.field = HazardField(known, HazardParams{});
        if (rep % 2 == 0)
            prob.field = prob.field.with_samples(
                {{rng.uniform(200.0, 800.0), rng.uniform(250.0, 750.0)},
                 {rng.uniform(200.0, 800.0), rng.uniform(250.0, 750.0)}});

        const SplinePath path(3, control, 0.0, horizon);
        const auto grad = gradient_gamma(path, horizon, prob);

        const double h = 1e-6;
        std::vector<double> analytic, numeric;
        for (int i = 0; i < n_control; ++i) {
            for (int axis = 0; axis < 2; ++axis) {
                auto lo = control;
                auto hi = control;
                (axis == 0 ? lo[i].x : lo[i].y) -= h;
                (axis == 0 ? hi[i].x : hi[i].y) += h;
                const double f_lo =
                    objective_gamma(SplinePath(3, lo, 0.0, horizon), horizon, prob);
                const double f_hi =
                    objective_gamma(SplinePath(3, hi, 0.0, horizon), horizon, prob);
                numeric.push_back((f_hi - f_lo) / (2.0 * h));
                analytic.push_back(axis == 0 ? grad.d_control[i].x
                                             : grad.d_control[i].y);
            }
        }
        const double f_tlo = objective_gamma(SplinePath(3, control, 0.0, horizon - h),
                                             horizon - h, prob);
        const double f_thi = objective_gamma(SplinePath(3, control, 0.0, horizon + h),
                                             horizon + h, prob);
        numeric.push_back((f_thi - f_tlo) / (2.0 * h));
        analytic.push_back(grad.d_t_f);

        double diff2 = 0.0, norm2 = 0.0;
        for (std::size_t i = 0; i < numeric.size(); ++i) {
            diff2 += (numeric[i] - analytic[i]) * (numeric[i] - analytic[i]);
            norm2 += numeric[i] * numeric[i] + analytic[i] * analytic[i];
        }
        // central differences of a ~O(1) objective carry ~1e-10 rounding noise
        // per component at h = 1e-6, hence the absolute floor
        REQUIRE(std::sqrt(diff2) <= 1e-4 * std::sqrt(norm2) + 2e-9);
    }
}

TEST_CASE("symmetric field yields mirror-symmetric gradients") {
    const Point2 a{300.0, 500.0}, b{700.0, 500.0};
    const auto path = straight_path(a, b, 36.0);
    EdgePlanningProblem prob = problem_from_init(path, a, b, {}, {});
    for (int iy = 0; iy < 4; ++iy)
        for (int ix = 0; ix < 6; ++ix) {
            const double y = 420.0 + iy * 40.0;
            prob.grid_points.push_back({330.0 + ix * 70.0, y});
            prob.grid_points.push_back({330.0 + ix * 70.0, 1000.0 - y});
        }

    const auto grad = gradient_gamma(path, path.tf(), prob);
    for (const auto& d : grad.d_control) CHECK(std::abs(d.y) < 1e-9);
}

TEST_CASE("empty evaluation grids are rejected") {
    const Point2 a{200.0, 500.0}, b{400.0, 500.0};
    const auto path = straight_path(a, b, 18.0);
    EdgePlanningProblem prob = problem_from_init(path, a, b, {{300.0, 500.0}}, {});
    prob.grid_points.clear();
    CHECK_THROWS_AS(objective_gamma(path, path.tf(), prob), std::invalid_argument);
    CHECK_THROWS_AS(gradient_gamma(path, path.tf(), prob), std::invalid_argument);
    CHECK_THROWS_AS(plan_edge(prob, path), std::invalid_argument);
}

TEST_CASE("budget-forced straight edge stays straight and feasible") {
    const Point2 a{300.0, 500.0}, b{640.0, 500.0};
    const double dist = distance(a, b);
    const auto init = straight_path(a, b, dist / 11.0);
    EdgePlanningProblem prob =
        problem_from_init(init, a, b, box_grid(300, 640, 440, 560, 6, 3), {});
    prob.budget = dist;

    const double gamma_init = objective_gamma(init, init.tf(), prob);
    const auto planned = plan_edge(prob, init);

    CHECK(planned.feasible);
    CHECK(planned.residuals.within_tolerance());
    CHECK(planned.gamma <= gamma_init + 1e-9);
    CHECK(std::abs(planned.gamma - gamma_init) < 1e-3);

    const Segment seg{a, b};
    double max_dev = 0.0;
    for (int i = 0; i <= 50; ++i) {
        const double t = planned.t_f * i / 50.0;
        max_dev = std::max(max_dev, point_segment_distance(planned.path.eval(t), seg));
    }
    CHECK(max_dev < 5.0);
}

TEST_CASE("optimization descends from a zig-zag initial path") {
    const Point2 a{300.0, 500.0}, b{700.0, 500.0};
    SplinePath init = zigzag_path(a, b, 35.0, 1.0);
    init = SplinePath(init.degree(), init.control(), 0.0, init.arc_length() / 11.0);
    EdgePlanningProblem prob =
        problem_from_init(init, a, b, box_grid(280, 720, 380, 620, 8, 5), {});
    REQUIRE(norm(prob.v0) > prob.v_lb);
    REQUIRE(norm(prob.v0) < prob.v_ub);

    const double gamma_init = objective_gamma(init, init.tf(), prob);
    const auto planned = plan_edge(prob, init);

    CHECK(planned.feasible);
    CHECK(planned.gamma <= gamma_init + 1e-9);
    CHECK(planned.gamma >= 0.0);
    CHECK(planned.gamma <= 1.0);
}

TEST_CASE("planned path beats zig-zag and straight baselines near hazards") {
    // the grid mimics an edge's Voronoi cell: narrow enough that the sensing
    // swath of a budget-length path can reach most of it
    const Point2 a{350.0, 500.0}, b{650.0, 500.0};
    SplinePath init = zigzag_path(a, b, 40.0, 1.0);
    init = SplinePath(init.degree(), init.control(), 0.0, init.arc_length() / 11.0);
    const std::vector<Point2> known = {{480.0, 540.0}, {520.0, 552.0}, {560.0, 535.0},
                                       {500.0, 528.0}, {540.0, 548.0}};
    EdgePlanningProblem prob =
        problem_from_init(init, a, b, box_grid(340, 660, 430, 570, 8, 5), known);

    const double gamma_zigzag = objective_gamma(init, init.tf(), prob);
    const auto straight = straight_path(a, b, distance(a, b) / 11.0);
    const double gamma_straight = objective_gamma(straight, straight.tf(), prob);

    const auto planned = plan_edge(prob, init);
    CHECK(planned.feasible);
    CHECK(planned.gamma < gamma_zigzag);
    CHECK(planned.gamma < gamma_straight);
}

TEST_CASE("planner output is deterministic") {
    const Point2 a{300.0, 480.0}, b{620.0, 540.0};
    SplinePath init = zigzag_path(a, b, 30.0, 1.0);
    init = SplinePath(init.degree(), init.control(), 0.0, init.arc_length() / 11.0);
    EdgePlanningProblem prob =
        problem_from_init(init, a, b, box_grid(280, 660, 400, 620, 6, 4),
                          {{450.0, 560.0}});

    const auto first = plan_edge(prob, init);
    const auto second = plan_edge(prob, init);
    REQUIRE(first.path.num_control() == second.path.num_control());
    for (int i = 0; i < first.path.num_control(); ++i) {
        CHECK(first.path.control()[i].x == second.path.control()[i].x);
        CHECK(first.path.control()[i].y == second.path.control()[i].y);
    }
    CHECK(first.t_f == second.t_f);
    CHECK(first.gamma == second.gamma);
}

TEST_CASE("iteration cap returns the initial path with a warning") {
    const Point2 a{300.0, 500.0}, b{600.0, 500.0};
    const auto init = straight_path(a, b, distance(a, b) / 11.0);
    EdgePlanningProblem prob =
        problem_from_init(init, a, b, box_grid(300, 600, 450, 550, 4, 2), {});
    OptimizerConfig cfg;
    cfg.max_outer = 0;

    const auto planned = plan_edge(prob, init, cfg);
    CHECK(planned.hit_iteration_limit);
    for (int i = 0; i < init.num_control(); ++i) {
        CHECK(planned.path.control()[i].x == init.control()[i].x);
        CHECK(planned.path.control()[i].y == init.control()[i].y);
    }
}

TEST_CASE("initial paths far off budget are rejected") {
    const Point2 a{300.0, 500.0}, b{600.0, 500.0};
    const auto init = straight_path(a, b, distance(a, b) / 11.0);
    EdgePlanningProblem prob =
        problem_from_init(init, a, b, box_grid(300, 600, 450, 550, 4, 2), {});
    prob.budget = 2.0 * init.arc_length();
    CHECK_THROWS_AS(plan_edge(prob, init), InfeasibleInit);
}

TEST_CASE("reported residuals match the independent verifier") {
    const Point2 a{300.0, 500.0}, b{640.0, 520.0};
    SplinePath init = zigzag_path(a, b, 25.0, 1.0);
    init = SplinePath(init.degree(), init.control(), 0.0, init.arc_length() / 11.0);
    EdgePlanningProblem prob =
        problem_from_init(init, a, b, box_grid(280, 660, 420, 600, 5, 3), {});

    const auto planned = plan_edge(prob, init);
    const auto recomputed = verify_trajectory(planned.path, prob);
    CHECK(planned.residuals.endpoint_pos == recomputed.endpoint_pos);
    CHECK(planned.residuals.endpoint_vel == recomputed.endpoint_vel);
    CHECK(planned.residuals.speed == recomputed.speed);
    CHECK(planned.residuals.turn_rate == recomputed.turn_rate);
    CHECK(planned.residuals.curvature == recomputed.curvature);
    CHECK(planned.residuals.budget == recomputed.budget);
}

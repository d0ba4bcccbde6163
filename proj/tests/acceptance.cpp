// end-to-end acceptance checks, one printed verdict per criterion; the
// process exit code is the number of failed criteria
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hazmon/budget.hpp"
#include "hazmon/config.hpp"
#include "hazmon/experiment.hpp"
#include "hazmon/hazard.hpp"
#include "hazmon/optimizer.hpp"
#include "hazmon/routing.hpp"
#include "hazmon/rng.hpp"
#include "hazmon/sim.hpp"
#include "hazmon/spline.hpp"

#include "stat_helpers.hpp"

using namespace hazmon;

namespace {

int g_failures = 0;

struct Verdict {
    bool pass = false;
    std::string detail;
};

using clock_type = std::chrono::steady_clock;

void report(int index, const char* name, const Verdict& v, double seconds) {
    std::printf("criterion %d (%s): %s  %s  [%.1f s]\n", index, name,
                v.pass ? "PASS" : "FAIL", v.detail.c_str(), seconds);
    std::fflush(stdout);
    if (!v.pass) ++g_failures;
}

template <typename F>
void run_criterion(int index, const char* name, F&& f) {
    const auto start = clock_type::now();
    Verdict v;
    try {
        v = f();
    } catch (const std::exception& e) {
        v.pass = false;
        v.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(clock_type::now() - start).count();
    report(index, name, v, secs);
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

// ---- criterion 1: coverage ordering across the route-construction methods

Verdict coverage_ordering() {
    Rng pick(derive_seed(20240816, 1));
    std::vector<double> ecr_orig, ecr_node, ecr_edge;
    for (int trial = 0; trial < 100; ++trial) {
        ScenarioSpec spec;
        spec.n_known = 5 + static_cast<int>(pick.uniform_index(11));
        spec.n_pseudo = 1 + static_cast<int>(pick.uniform_index(5));
        spec.n_unknown = 0;
        spec.total_budget = 5000.0;
        const Scenario sc = generate_scenario(spec, derive_seed(20240816, 100 + trial));

        PipelineConfig cfg;
        cfg.methods = MethodSet{false, false, false, true, true, true};
        for (const TrialResult& r : run_pipeline(sc, cfg)) {
            if (r.method == Method::Original) ecr_orig.push_back(r.ecr);
            if (r.method == Method::NodeCvt) ecr_node.push_back(r.ecr);
            if (r.method == Method::EdgeCvt) ecr_edge.push_back(r.ecr);
        }
    }
    const double m_orig = mean_std(ecr_orig).mean;
    const double m_node = mean_std(ecr_node).mean;
    const double m_edge = mean_std(ecr_edge).mean;
    Verdict v;
    v.pass = m_edge > m_node && m_node > m_orig && m_edge >= 1.4 * m_orig;
    v.detail = "mean ECR original=" + fmt("%.4f", m_orig) + " node=" + fmt("%.4f", m_node) +
               " edge=" + fmt("%.4f", m_edge) + " ratio=" + fmt("%.2f", m_edge / m_orig) +
               " (need edge>node>original and ratio>=1.40, 100 trials)";
    return v;
}

// ---- criterion 2: discovery ordering across traversal methods

RunConfig discovery_sweep_config() {
    RunConfig cfg;
    cfg.known_nodes = {5, 10, 15};
    cfg.pseudo_nodes = {0, 1, 2, 3};
    cfg.trials = 20;
    cfg.seed = 42;
    cfg.unknown_nodes = 50;
    cfg.total_budget = 5000.0;
    cfg.methods = MethodSet{true, true, true, false, false, false};
    cfg.plots = false;
    return cfg;
}

struct DiscoverySweep {
    SweepOutcome outcome;
    std::string csv;
};

DiscoverySweep run_discovery_sweep(int jobs) {
    RunConfig cfg = discovery_sweep_config();
    cfg.jobs = jobs;
    DiscoverySweep out;
    out.outcome = run_sweep(cfg);
    std::ostringstream os;
    write_results_csv(out.outcome, os);
    out.csv = os.str();
    return out;
}

Verdict discovery_ordering(const DiscoverySweep& sweep) {
    const RunConfig cfg = discovery_sweep_config();
    std::vector<double> all_opt, all_straight;
    bool ordered = true;
    std::string worst;
    for (const SweepCell cell : sweep_cells(cfg)) {
        std::vector<double> opt, lawn, straight;
        for (const TrialRecord& rec : sweep.outcome.records) {
            if (rec.failed || rec.known != cell.known || rec.pseudo != cell.pseudo) continue;
            for (const TrialResult& r : rec.results) {
                if (r.method == Method::Optimized) opt.push_back(r.discovered);
                if (r.method == Method::Lawnmower) lawn.push_back(r.discovered);
                if (r.method == Method::Straight) straight.push_back(r.discovered);
            }
        }
        if (opt.size() != 20 || lawn.size() != 20 || straight.size() != 20) {
            ordered = false;
            worst = " incomplete cell known=" + std::to_string(cell.known) +
                    " pseudo=" + std::to_string(cell.pseudo);
            continue;
        }
        const double m_opt = mean_std(opt).mean;
        const double m_lawn = mean_std(lawn).mean;
        const double m_straight = mean_std(straight).mean;
        if (!(m_opt > m_lawn && m_lawn > m_straight)) {
            ordered = false;
            worst += " [known=" + std::to_string(cell.known) +
                     " pseudo=" + std::to_string(cell.pseudo) + ": opt=" + fmt("%.2f", m_opt) +
                     " lawn=" + fmt("%.2f", m_lawn) + " straight=" + fmt("%.2f", m_straight) +
                     "]";
        }
        all_opt.insert(all_opt.end(), opt.begin(), opt.end());
        all_straight.insert(all_straight.end(), straight.begin(), straight.end());
    }
    const double p = stats::paired_t_pvalue_greater(all_opt, all_straight);
    Verdict v;
    v.pass = ordered && p < 0.05;
    v.detail = "optimized>lawnmower>straight in " + std::string(ordered ? "all" : "NOT all") +
               " 12 cells, paired p=" + fmt("%.2e", p) +
               " (need <0.05, 20 trials/cell)" + worst;
    return v;
}

// ---- criterion 3: routing heuristic vs exhaustive optimum

Verdict vrp_oracle() {
    Rng rng(derive_seed(20240816, 3));
    double worst_ratio = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const int n = 2 + static_cast<int>(rng.uniform_index(7));
        const int vehicles = 1 + static_cast<int>(rng.uniform_index(2));
        std::vector<Point2> nodes;
        for (int i = 0; i < n; ++i)
            nodes.push_back({rng.uniform(0.0, 1000.0), rng.uniform(0.0, 1000.0)});
        const NodeSet set(Point2{500.0, 500.0}, nodes);
        const FleetSpec fleet{vehicles, 6000.0};

        const Route heur = solve_vrp(set, fleet, SolverConfig{rng.next_u64(), 20});
        const Route exact = solve_vrp_exact(set, fleet);
        worst_ratio = std::max(worst_ratio, heur.total_length / exact.total_length);
    }
    Verdict v;
    v.pass = worst_ratio <= 1.02;
    v.detail = "worst heuristic/exact length ratio=" + fmt("%.5f", worst_ratio) +
               " over 50 instances (need <=1.02)";
    return v;
}

// ---- criterion 4: posterior equals a sequential single-update oracle

Verdict bayes_oracle() {
    Rng rng(derive_seed(20240816, 4));
    double worst = 0.0;
    bool zero_exact = true;
    for (int rep = 0; rep < 1000; ++rep) {
        HazardParams params;
        params.p_h = rng.uniform(0.05, 0.6);
        params.lambda_corr = rng.uniform(5e-5, 5e-4);
        params.beta_sense = rng.uniform(5e-4, 5e-3);
        params.p_fa = rng.uniform(0.01, 0.2);

        const int n_known = 1 + static_cast<int>(rng.uniform_index(5));
        std::vector<Point2> known;
        for (int i = 0; i < n_known; ++i)
            known.push_back({rng.uniform(0.0, 1000.0), rng.uniform(0.0, 1000.0)});

        // cross the direct-product / log-space switchover
        const int n_samples = static_cast<int>(rng.uniform_index(81));
        std::vector<Point2> samples;
        for (int i = 0; i < n_samples; ++i)
            samples.push_back({rng.uniform(0.0, 1000.0), rng.uniform(0.0, 1000.0)});

        const Point2 x{rng.uniform(0.0, 1000.0), rng.uniform(0.0, 1000.0)};
        const HazardField base(known, params);
        const HazardField field = base.with_samples(samples);

        if (base.posterior(x) != base.prior(x)) zero_exact = false;

        double p = base.prior(x);
        for (const Point2& s : samples) {
            const double pd = detect_prob(s, x, params.beta_sense);
            p = p * (1.0 - pd) / (p * (1.0 - pd) + (1.0 - p) * (1.0 - params.p_fa));
        }
        worst = std::max(worst, std::abs(field.posterior(x) - p));
    }
    Verdict v;
    v.pass = worst <= 1e-12 && zero_exact;
    v.detail = "worst |batch - sequential|=" + fmt("%.2e", worst) +
               " over 1000 cases (need <=1e-12), zero-sample posterior " +
               (zero_exact ? "equals" : "DIFFERS from") + " the prior exactly";
    return v;
}

// ---- criterion 5: spline basis, derivatives, and arc length

Verdict spline_checks() {
    Rng rng(derive_seed(20240816, 5));

    // constant control points expose the basis sum directly
    double worst_pu = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const int degree = 1 + static_cast<int>(rng.uniform_index(7));
        const int n_control = degree + 1 + static_cast<int>(rng.uniform_index(10));
        const double tf = rng.uniform(1.0, 60.0);
        const SplinePath unit(degree, std::vector<Point2>(n_control, Point2{1.0, 1.0}), 0.0,
                              tf);
        const double t = rng.uniform(0.0, tf);
        const Point2 p = unit.eval(t);
        worst_pu = std::max({worst_pu, std::abs(p.x - 1.0), std::abs(p.y - 1.0)});
    }

    double worst_d1 = 0.0;
    double worst_d2 = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const int n_control = 8 + static_cast<int>(rng.uniform_index(6));
        std::vector<Point2> control;
        Point2 cursor{rng.uniform(0.0, 200.0), rng.uniform(0.0, 200.0)};
        for (int i = 0; i < n_control; ++i) {
            control.push_back(cursor);
            cursor = cursor + Point2{rng.uniform(20.0, 80.0), rng.uniform(-60.0, 60.0)};
        }
        const double tf = rng.uniform(10.0, 40.0);
        const SplinePath path(3, control, 0.0, tf);
        const double h = 1e-3;
        for (int k = 0; k < 5; ++k) {
            const double t = rng.uniform(2.0 * h, tf - 2.0 * h);
            const auto [d1, d2] = path.derivatives(t);
            const Point2 lo = path.eval(t - h);
            const Point2 hi = path.eval(t + h);
            const Point2 mid = path.eval(t);
            const Point2 n1 = (1.0 / (2.0 * h)) * (hi - lo);
            const Point2 n2 = (1.0 / (h * h)) * (hi - 2.0 * mid + lo);
            worst_d1 = std::max(worst_d1, norm(n1 - d1) / std::max(norm(n1), 1e-9));
            worst_d2 = std::max(worst_d2, norm(n2 - d2) / std::max(norm(n2), 1e-9));
        }
    }

    double worst_len = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const Point2 a{rng.uniform(0.0, 1000.0), rng.uniform(0.0, 1000.0)};
        const double theta = rng.uniform(0.0, 6.283185307179586);
        const Point2 b = a + Point2{10.0 * std::cos(theta), 10.0 * std::sin(theta)};
        const SplinePath seg(1, {a, b}, 0.0, rng.uniform(0.5, 5.0));
        worst_len = std::max(worst_len, std::abs(seg.arc_length() - 10.0));
    }

    Verdict v;
    v.pass = worst_pu <= 1e-12 && worst_d1 <= 1e-5 && worst_d2 <= 1e-5 && worst_len <= 1e-6;
    v.detail = "partition-of-unity err=" + fmt("%.1e", worst_pu) +
               " (<=1e-12), derivative rel err=" + fmt("%.1e", std::max(worst_d1, worst_d2)) +
               " (<=1e-5), 10 m arc-length err=" + fmt("%.1e", worst_len) + " (<=1e-6)";
    return v;
}

// ---- criterion 6: edge planner contract on random problems

Verdict optimizer_contract() {
    Rng rng(derive_seed(20240816, 6));
    const double v_nominal = 11.0;
    const double rung_spacing = std::sqrt(std::log(10.0) / HazardParams{}.beta_sense);
    int descents = 0;
    int feasible = 0;
    double worst_grad = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const Point2 a{rng.uniform(250.0, 650.0), rng.uniform(250.0, 650.0)};
        const double theta = rng.uniform(0.0, 6.283185307179586);
        const double len = rng.uniform(90.0, 220.0);
        const Point2 dir{std::cos(theta), std::sin(theta)};
        const Point2 b = a + len * dir;

        EdgePlanningProblem prob;
        prob.x0 = a;
        prob.xf = b;
        prob.v0 = v_nominal * dir;
        prob.vf = v_nominal * dir;
        prob.budget = len * rng.uniform(1.15, 1.6);

        // evaluation grid in a corridor around the edge, as the pipeline does
        const Point2 perp{-dir.y, dir.x};
        for (int i = 0; i < 9; ++i)
            for (int j = -2; j <= 2; ++j)
                prob.grid_points.push_back(a + (len * i / 8.0) * dir + (28.0 * j) * perp);

        std::vector<Point2> known;
        const int n_known = static_cast<int>(rng.uniform_index(3));
        for (int k = 0; k < n_known; ++k)
            known.push_back(a + rng.uniform(0.2, 0.8) * len * dir +
                            rng.uniform(-50.0, 50.0) * perp);
        prob.field = HazardField(known, HazardParams{});

        const SplinePath init = detail::lawnmower_init(a, b, prob.budget, rung_spacing,
                                                       prob.budget / v_nominal);
        const double init_gamma = objective_gamma(init, init.tf(), prob);
        const PlannedTrajectory planned = plan_edge(prob, init);
        if (planned.gamma <= init_gamma + 1e-12) ++descents;
        if (planned.residuals.within_tolerance()) ++feasible;

        // analytic objective gradient against central differences at the
        // initial path
        const auto grad = gradient_gamma(init, init.tf(), prob);
        const std::vector<Point2>& control = init.control();
        const double h = 1e-6;
        std::vector<double> analytic, numeric;
        for (std::size_t i = 0; i < control.size(); ++i) {
            for (int axis = 0; axis < 2; ++axis) {
                auto lo = control;
                auto hi = control;
                (axis == 0 ? lo[i].x : lo[i].y) -= h;
                (axis == 0 ? hi[i].x : hi[i].y) += h;
                const double f_lo = objective_gamma(
                    SplinePath(init.degree(), lo, 0.0, init.tf()), init.tf(), prob);
                const double f_hi = objective_gamma(
                    SplinePath(init.degree(), hi, 0.0, init.tf()), init.tf(), prob);
                numeric.push_back((f_hi - f_lo) / (2.0 * h));
                analytic.push_back(axis == 0 ? grad.d_control[i].x : grad.d_control[i].y);
            }
        }
        const double f_tlo =
            objective_gamma(SplinePath(init.degree(), control, 0.0, init.tf() - h),
                            init.tf() - h, prob);
        const double f_thi =
            objective_gamma(SplinePath(init.degree(), control, 0.0, init.tf() + h),
                            init.tf() + h, prob);
        numeric.push_back((f_thi - f_tlo) / (2.0 * h));
        analytic.push_back(grad.d_t_f);

        double diff2 = 0.0;
        double norm2 = 0.0;
        for (std::size_t i = 0; i < numeric.size(); ++i) {
            diff2 += (numeric[i] - analytic[i]) * (numeric[i] - analytic[i]);
            norm2 += numeric[i] * numeric[i];
        }
        worst_grad = std::max(worst_grad,
                              std::sqrt(diff2) / std::max(std::sqrt(norm2), 1e-9));
    }
    Verdict v;
    v.pass = descents == 20 && feasible == 20 && worst_grad <= 1e-4;
    v.detail = "gamma descent " + std::to_string(descents) + "/20, residuals in tolerance " +
               std::to_string(feasible) + "/20, gradient rel err=" + fmt("%.1e", worst_grad) +
               " (<=1e-4)";
    return v;
}

// ---- criterion 7: budget and area conservation

Verdict conservation() {
    Rng rng(derive_seed(20240816, 7));
    const RectDomain domain{0.0, 1000.0, 0.0, 1000.0};
    double worst_budget = 0.0;
    bool areas_exact = true;
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 3 + static_cast<int>(rng.uniform_index(8));
        const int vehicles = 1 + static_cast<int>(rng.uniform_index(2));
        std::vector<Point2> nodes;
        for (int i = 0; i < n; ++i)
            nodes.push_back({rng.uniform(0.0, 1000.0), rng.uniform(0.0, 1000.0)});
        const FleetSpec fleet{vehicles, 6000.0};
        const Route route =
            solve_vrp(NodeSet(Point2{500.0, 500.0}, nodes), fleet, SolverConfig{rng.next_u64(), 8});

        const std::vector<Segment> edges = route_edges(route);
        const SegmentVoronoi sv = build_segment_voronoi(edges, domain, 200);
        double area_sum = 0.0;
        for (double a : sv.areas) area_sum += a;
        if (area_sum != domain.area()) areas_exact = false;

        const std::vector<double> budgets = planner_budgets(route, fleet, sv);
        std::size_t offset = 0;
        for (const auto& seq : route.sequences) {
            const std::size_t count = seq.size() - 1;
            double sum = 0.0;
            for (std::size_t k = 0; k < count; ++k) sum += budgets[offset + k];
            worst_budget = std::max(worst_budget, std::abs(sum - fleet.max_distance));
            offset += count;
        }
    }
    Verdict v;
    v.pass = worst_budget <= 1e-6 && areas_exact;
    v.detail = "worst |sum(B_k) - D_m|=" + fmt("%.1e", worst_budget) +
               " over 100 routes (need <=1e-6), Voronoi areas sum to |domain| " +
               (areas_exact ? "exactly" : "INEXACTLY");
    return v;
}

// ---- criterion 8: sweep determinism

Verdict determinism(const DiscoverySweep& first) {
    const DiscoverySweep second = run_discovery_sweep(2);
    Verdict v;
    v.pass = first.csv == second.csv;
    v.detail = std::string("rerun results.csv is ") +
               (v.pass ? "byte-identical" : "DIFFERENT") + " (" +
               std::to_string(first.csv.size()) + " bytes, second run used 2 workers)";
    return v;
}

}  // namespace

int main() {
    std::printf("acceptance checks\n");

    run_criterion(1, "coverage ordering", coverage_ordering);

    DiscoverySweep sweep;
    run_criterion(2, "discovery ordering", [&] {
        sweep = run_discovery_sweep(1);
        return discovery_ordering(sweep);
    });

    run_criterion(3, "routing oracle", vrp_oracle);
    run_criterion(4, "posterior oracle", bayes_oracle);
    run_criterion(5, "spline correctness", spline_checks);
    run_criterion(6, "planner contract", optimizer_contract);
    run_criterion(7, "conservation", conservation);
    run_criterion(8, "determinism", [&] { return determinism(sweep); });

    if (g_failures == 0) std::printf("all criteria passed\n");
    else
        std::printf("%d criteria failed\n", g_failures);
    return g_failures;
}

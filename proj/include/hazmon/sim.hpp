#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hazmon/budget.hpp"
#include "hazmon/cvt.hpp"
#include "hazmon/geometry.hpp"
#include "hazmon/hazard.hpp"
#include "hazmon/metrics.hpp"
#include "hazmon/optimizer.hpp"
#include "hazmon/routing.hpp"
#include "hazmon/rng.hpp"
#include "hazmon/spline.hpp"

namespace hazmon {

struct ScenarioSpec {
    RectDomain domain{0.0, 1000.0, 0.0, 1000.0};
    Point2 depot{500.0, 500.0};
    int n_known = 5;
    int n_unknown = 50;
    int n_pseudo = 1;
    int num_vehicles = 1;
    double total_budget = 5000.0;
    HazardParams hazard;
    CvtConfig cvt;

    void validate() const {
        if (n_known < 1) throw std::invalid_argument("scenario needs at least one known hazard");
        if (n_unknown < 0) throw std::invalid_argument("n_unknown must be non-negative");
        if (n_pseudo < 0) throw std::invalid_argument("n_pseudo must be non-negative");
        if (num_vehicles < 1) throw std::invalid_argument("scenario needs at least one vehicle");
        if (!(total_budget > 0.0)) throw std::invalid_argument("total budget must be positive");
        if (!(domain.x_max > domain.x_min && domain.y_max > domain.y_min))
            throw std::invalid_argument("scenario domain is empty");
        if (!domain.contains(depot)) throw std::invalid_argument("depot outside the domain");
        hazard.validate();
    }
};

struct Scenario {
    RectDomain domain{0.0, 1000.0, 0.0, 1000.0};
    Point2 depot{500.0, 500.0};
    std::vector<Point2> known;
    std::vector<Point2> unknown;
    FleetSpec fleet;
    double total_budget = 0.0;
    HazardParams hazard;
    CvtConfig cvt;
    int n_pseudo = 0;
    std::uint64_t seed = 0;
};

namespace detail {

// seed streams for the independent random choices inside one trial
inline constexpr std::uint64_t kStreamKnown = 1;
inline constexpr std::uint64_t kStreamUnknown = 2;
inline constexpr std::uint64_t kStreamVrpBase = 3;
inline constexpr std::uint64_t kStreamPseudoInit = 4;
inline constexpr std::uint64_t kStreamCvtNode = 5;
inline constexpr std::uint64_t kStreamCvtEdge = 6;
inline constexpr std::uint64_t kStreamVrpNode = 7;
inline constexpr std::uint64_t kStreamVrpEdge = 8;
inline constexpr std::uint64_t kStreamDetectOptimized = 9;
inline constexpr std::uint64_t kStreamDetectLawnmower = 10;
inline constexpr std::uint64_t kStreamDetectStraight = 11;

template <typename F>
auto pipeline_stage(const char* stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string(stage) + ": " + e.what());
    }
}

}  // namespace detail

inline Scenario generate_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
    spec.validate();
    Scenario sc;
    sc.domain = spec.domain;
    sc.depot = spec.depot;
    sc.fleet = FleetSpec{spec.num_vehicles, spec.total_budget / spec.num_vehicles};
    sc.total_budget = spec.total_budget;
    sc.hazard = spec.hazard;
    sc.cvt = spec.cvt;
    sc.cvt.n_pseudo = std::max(1, spec.n_pseudo);
    sc.cvt.seed = derive_seed(seed, detail::kStreamCvtNode);
    sc.n_pseudo = spec.n_pseudo;
    sc.seed = seed;

    Rng rng(derive_seed(seed, detail::kStreamKnown));
    sc.known.reserve(static_cast<std::size_t>(spec.n_known));
    while (sc.known.size() < static_cast<std::size_t>(spec.n_known)) {
        Point2 p{rng.uniform(spec.domain.x_min, spec.domain.x_max),
                 rng.uniform(spec.domain.y_min, spec.domain.y_max)};
        // the router requires nodes distinct from the depot
        if (squared_distance(p, spec.depot) < 1.0) continue;
        sc.known.push_back(p);
    }
    sc.unknown = sample_unknown_hazards(sc.known, spec.hazard, spec.domain, spec.n_unknown,
                                        derive_seed(seed, detail::kStreamUnknown));
    return sc;
}

// Back-and-forth sweep between two nodes: rungs perpendicular to the connecting
// segment, rung spacing chosen by the caller, width set so the polyline length
// equals the budget exactly.
inline std::vector<Point2> lawnmower_path(Point2 start, Point2 end, double budget,
                                          double rung_spacing) {
    const double len = distance(start, end);
    if (!(len > 0.0)) throw std::invalid_argument("lawnmower endpoints coincide");
    if (!(rung_spacing > 0.0)) throw std::invalid_argument("rung spacing must be positive");
    if (budget < len) throw std::invalid_argument("budget below the segment length");

    const double extra = budget - len;
    if (extra <= 1e-9 * budget) return {start, end};

    const Point2 axis = (1.0 / len) * (end - start);
    const Point2 normal{-axis.y, axis.x};
    const auto local = [&](double along, double across) {
        return start + along * axis + across * normal;
    };

    const int rungs = std::max(1, static_cast<int>(std::lround(len / rung_spacing)));
    const double amplitude = 0.5 * extra / rungs;

    std::vector<Point2> pts;
    pts.reserve(static_cast<std::size_t>(2 * rungs) + 2);
    pts.push_back(start);
    double side = 1.0;
    for (int i = 0; i < rungs; ++i) {
        pts.push_back(local(len * i / rungs, side * amplitude));
        pts.push_back(local(len * (i + 1) / rungs, side * amplitude));
        side = -side;
    }
    pts.push_back(end);
    return pts;
}

struct TraversalResult {
    std::vector<int> discovered;
    std::vector<Point2> samples;
};

namespace detail {

// one detection round per sample location against every still-hidden hazard
inline void detect_at(const std::vector<Point2>& positions, const std::vector<Point2>& unknown,
                      double beta_sense, Rng& rng, std::vector<char>& found,
                      std::vector<int>& discovered) {
    for (const auto& pos : positions) {
        for (std::size_t j = 0; j < unknown.size(); ++j) {
            if (found[j]) continue;
            if (rng.bernoulli(detect_prob(pos, unknown[j], beta_sense))) {
                found[j] = 1;
                discovered.push_back(static_cast<int>(j));
            }
        }
    }
}

// positions along a polyline traversed at constant speed, one per sample instant
inline std::vector<Point2> polyline_samples(const std::vector<Point2>& poly, double speed,
                                            double delta_s) {
    std::vector<double> cum(poly.size(), 0.0);
    for (std::size_t i = 1; i < poly.size(); ++i)
        cum[i] = cum[i - 1] + distance(poly[i], poly[i - 1]);
    const double total = cum.back();

    std::vector<Point2> out;
    std::size_t seg = 0;
    for (double t : sampling_times(0.0, total / speed, delta_s)) {
        const double target = std::min(total, speed * t);
        while (seg + 2 < poly.size() && cum[seg + 1] < target) ++seg;
        const double seg_len = cum[seg + 1] - cum[seg];
        const double f = seg_len > 0.0 ? (target - cum[seg]) / seg_len : 0.0;
        out.push_back(poly[seg] + f * (poly[seg + 1] - poly[seg]));
    }
    return out;
}

inline std::vector<Point2> spline_samples(const SplinePath& path, double delta_s) {
    std::vector<Point2> out;
    for (double t : sampling_times(path.t0(), path.tf(), delta_s)) out.push_back(path.eval(t));
    return out;
}

}  // namespace detail

inline TraversalResult traverse_and_detect(const SplinePath& path,
                                           const std::vector<Point2>& unknown,
                                           const HazardParams& params, std::uint64_t seed) {
    params.validate();
    TraversalResult out;
    out.samples = detail::spline_samples(path, params.delta_s);
    Rng rng(seed);
    std::vector<char> found(unknown.size(), 0);
    detail::detect_at(out.samples, unknown, params.beta_sense, rng, found, out.discovered);
    return out;
}

inline double mean_posterior(const HazardField& field, const std::vector<Point2>& grid) {
    if (grid.empty()) throw std::invalid_argument("posterior mean needs grid points");
    double total = 0.0;
    for (const auto& g : grid) total += field.posterior(g);
    return total / static_cast<double>(grid.size());
}

enum class Method { Optimized, Lawnmower, Straight, NodeCvt, EdgeCvt, Original };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::Optimized: return "optimized";
        case Method::Lawnmower: return "lawnmower";
        case Method::Straight: return "straight";
        case Method::NodeCvt: return "node-cvt";
        case Method::EdgeCvt: return "edge-cvt";
        case Method::Original: return "original";
    }
    throw std::invalid_argument("unknown method");
}

struct MethodSet {
    bool optimized = true;
    bool lawnmower = true;
    bool straight = true;
    bool node_cvt = true;
    bool edge_cvt = true;
    bool original = true;

    bool any_path() const { return optimized || lawnmower || straight; }
};

struct TrialResult {
    Method method = Method::Original;
    double ecr = 0.0;
    double edv = 0.0;
    int discovered = 0;
    double total_length = 0.0;
    double wall_time = 0.0;
    bool timed_out = false;
};

struct PipelineConfig {
    MethodSet methods;
    int coverage_nx = 50;
    int coverage_ny = 50;
    int voronoi_resolution = 200;
    int grid_per_cell = 15;
    int vrp_restarts = 20;
    double v_lb = 2.0;
    double v_ub = 20.0;
    double u_lb = -1.0;
    double u_ub = 1.0;
    double kappa_ub = 0.2;
    OptimizerConfig optimizer;
    double trial_time_limit = 60.0;
};

// per-edge record kept for plotting and per-edge inspection
struct EdgePlanRecord {
    Segment edge;
    double budget = 0.0;
    std::vector<Point2> grid_points;
    std::optional<PlannedTrajectory> optimized;
    // size of the accumulated sample history the edge's field started from
    std::size_t past_samples = 0;
    std::vector<Point2> optimized_samples;
    std::vector<Point2> lawnmower_samples;
    std::vector<Point2> straight_samples;
    double gamma_optimized = 0.0;
    double gamma_lawnmower = 0.0;
    double gamma_straight = 0.0;
};

struct PipelineRun {
    std::vector<TrialResult> results;
    Route base_route;
    Route node_route;
    Route edge_route;
    Route working_route;
    std::vector<double> budgets;
    std::vector<EdgePlanRecord> edges;
};

namespace detail {

struct EdgeTask {
    Segment edge;
    Point2 v0{0, 0};
    Point2 vf{0, 0};
    double budget = 0.0;
    std::size_t vehicle = 0;
    bool first_of_vehicle = false;
};

// unit directions chained so each junction heading points at the following node
inline std::vector<EdgeTask> edge_tasks(const Route& route, const std::vector<double>& budgets,
                                        double v_nominal) {
    std::vector<EdgeTask> tasks;
    std::size_t base = 0;
    for (std::size_t v = 0; v < route.sequences.size(); ++v) {
        const auto& seq = route.sequences[v];
        const std::size_t n_edges = seq.size() - 1;
        std::vector<Point2> dirs(n_edges);
        for (std::size_t e = 0; e < n_edges; ++e) {
            const Point2 d = route.points[seq[e + 1]] - route.points[seq[e]];
            dirs[e] = (1.0 / norm(d)) * d;
        }
        for (std::size_t e = 0; e < n_edges; ++e) {
            tasks.push_back(
                EdgeTask{Segment{route.points[seq[e]], route.points[seq[e + 1]]},
                         v_nominal * dirs[e],
                         v_nominal * (e + 1 < n_edges ? dirs[e + 1] : dirs[e]),
                         budgets[base + e], v, e == 0});
        }
        base += n_edges;
    }
    // entry velocity continues the previous edge's exit heading
    for (std::size_t i = 1; i < tasks.size(); ++i)
        if (!tasks[i].first_of_vehicle) tasks[i].v0 = tasks[i - 1].vf;
    return tasks;
}

// evaluation points of one edge's Voronoi region: a lattice over the region's
// bounding box, masked to cells assigned to the edge
inline std::vector<Point2> edge_grid_points(const SegmentVoronoi& sv, int edge_index,
                                            int per_side) {
    double x_min = std::numeric_limits<double>::infinity();
    double x_max = -x_min, y_min = x_min, y_max = -x_min;
    for (int c = 0; c < sv.grid.num_cells(); ++c) {
        if (sv.assignment[c] != edge_index) continue;
        const RectDomain b = sv.grid.cell_bounds(c % sv.grid.nx, c / sv.grid.nx);
        x_min = std::min(x_min, b.x_min);
        x_max = std::max(x_max, b.x_max);
        y_min = std::min(y_min, b.y_min);
        y_max = std::max(y_max, b.y_max);
    }
    std::vector<Point2> out;
    if (!(x_max > x_min && y_max > y_min)) return out;

    for (int i = 0; i < per_side; ++i) {
        for (int j = 0; j < per_side; ++j) {
            const Point2 p{x_min + (i + 0.5) * (x_max - x_min) / per_side,
                           y_min + (j + 0.5) * (y_max - y_min) / per_side};
            if (sv.assignment[sv.grid.cell_containing(p)] == edge_index) out.push_back(p);
        }
    }
    if (!out.empty()) return out;

    // thin regions can slip between lattice points; fall back to the assigned
    // cell centers, strided down to the lattice size
    std::vector<Point2> centers;
    for (int c = 0; c < sv.grid.num_cells(); ++c)
        if (sv.assignment[c] == edge_index) centers.push_back(sv.grid.cell_center(c));
    const std::size_t cap = static_cast<std::size_t>(per_side) * per_side;
    const std::size_t stride = std::max<std::size_t>(1, centers.size() / cap);
    for (std::size_t i = 0; i < centers.size(); i += stride) out.push_back(centers[i]);
    return out;
}

// Fit a spline to a lawnmower sweep, inflating the polyline budget until the
// smoothed fit's arc length lands on the target. The rung count is capped so
// the control polygon stays tractable for the optimizer.
inline SplinePath lawnmower_init(Point2 a, Point2 b, double budget, double rung_spacing,
                                 double horizon, int degree = 3) {
    const double len = distance(a, b);
    int rungs = std::max(1, static_cast<int>(std::lround(len / rung_spacing)));
    constexpr int kMaxRungs = 18;
    rungs = std::min(rungs, kMaxRungs);
    const double spacing = len / rungs;
    const int n_control = std::max(degree + 1, 2 * rungs + 6);
    const int n_waypoints = std::max(8 * n_control, 240);

    const auto fit_at = [&](double poly_budget) {
        const auto poly = lawnmower_path(a, b, std::max(poly_budget, len), spacing);
        if (poly.size() == 2) {
            return fit_to_polyline(resample_polyline(poly, n_waypoints), degree,
                                   std::min(n_control, degree + 2), horizon);
        }
        return fit_to_polyline(resample_polyline(poly, n_waypoints), degree, n_control, horizon);
    };

    // the fit must stay inside the planner's budget band so it can stand in
    // for the optimized path when a solve fails to reach feasibility
    const double tol = 0.0025 * budget;
    double b0 = budget;
    SplinePath best = fit_at(b0);
    double f0 = best.arc_length() - budget;
    double best_err = std::abs(f0);
    if (best_err <= tol) return best;

    // smoothing only shortens, so start the secant from a proportional inflation
    double b1 = budget + std::max(0.0, -f0) + 1e-6 * budget;
    for (int it = 0; it < 10; ++it) {
        SplinePath trial = fit_at(b1);
        const double f1 = trial.arc_length() - budget;
        if (std::abs(f1) < best_err) {
            best = trial;
            best_err = std::abs(f1);
        }
        if (best_err <= tol) break;
        const double denom = f1 - f0;
        double b2 = std::abs(denom) > 1e-12 ? b1 - f1 * (b1 - b0) / denom : b1 - f1;
        b2 = std::clamp(b2, len, 3.0 * budget);
        b0 = b1;
        f0 = f1;
        b1 = b2;
    }
    return best;
}

inline CoverageReport path_coverage(const std::vector<std::vector<Point2>>& per_vehicle,
                                    const UniformGrid& grid) {
    std::vector<Segment> segs;
    for (const auto& chain : per_vehicle) {
        for (std::size_t i = 1; i < chain.size(); ++i) {
            // the final sample instant can land on top of the previous one
            if (squared_distance(chain[i - 1], chain[i]) < 1e-12) continue;
            segs.push_back(Segment{chain[i - 1], chain[i]});
        }
    }
    return edge_coverage(segs, grid);
}

}  // namespace detail

inline PipelineRun run_pipeline_detailed(const Scenario& sc, const PipelineConfig& cfg = {}) {
    using clock = std::chrono::steady_clock;
    const auto trial_start = clock::now();
    const auto elapsed = [&] {
        return std::chrono::duration<double>(clock::now() - trial_start).count();
    };

    sc.fleet.validate();
    sc.hazard.validate();
    PipelineRun run;
    const UniformGrid coverage_grid(sc.domain, cfg.coverage_nx, cfg.coverage_ny);

    const auto route_result = [&](Method m, const Route& r, double seconds) {
        const CoverageReport rep = edge_coverage(route_edges(r), coverage_grid);
        TrialResult t;
        t.method = m;
        t.ecr = rep.ecr;
        t.edv = rep.edv;
        t.total_length = r.total_length;
        t.wall_time = seconds;
        t.timed_out = elapsed() > cfg.trial_time_limit;
        return t;
    };

    auto base_start = clock::now();
    run.base_route = detail::pipeline_stage("vrp-known", [&] {
        return solve_vrp(NodeSet(sc.depot, sc.known), sc.fleet,
                         SolverConfig{derive_seed(sc.seed, detail::kStreamVrpBase),
                                      cfg.vrp_restarts});
    });
    const double base_seconds = std::chrono::duration<double>(clock::now() - base_start).count();

    const bool want_aug = sc.n_pseudo > 0;
    std::vector<Point2> init_pseudo;
    if (want_aug && (cfg.methods.node_cvt || cfg.methods.edge_cvt || cfg.methods.any_path())) {
        init_pseudo = detail::pipeline_stage("pseudo-init", [&] {
            return place_initial_pseudo_nodes(sc.known, sc.domain, sc.n_pseudo,
                                              derive_seed(sc.seed, detail::kStreamPseudoInit));
        });
    }

    const auto augmented_route = [&](const std::vector<Point2>& pseudo, std::uint64_t vrp_seed,
                                     const char* stage) {
        std::vector<Point2> nodes = sc.known;
        std::vector<NodeKind> kinds(nodes.size(), NodeKind::KnownHazard);
        nodes.insert(nodes.end(), pseudo.begin(), pseudo.end());
        kinds.insert(kinds.end(), pseudo.size(), NodeKind::Pseudo);
        return detail::pipeline_stage(stage, [&] {
            return solve_vrp(NodeSet(sc.depot, std::move(nodes), std::move(kinds)), sc.fleet,
                             SolverConfig{vrp_seed, cfg.vrp_restarts});
        });
    };

    double node_seconds = 0.0;
    if (cfg.methods.node_cvt) {
        const auto t0 = clock::now();
        if (want_aug) {
            CvtConfig node_cfg = sc.cvt;
            node_cfg.n_pseudo = sc.n_pseudo;
            node_cfg.beta_density = 0.0;
            node_cfg.seed = derive_seed(sc.seed, detail::kStreamCvtNode);
            const CvtResult cvt = detail::pipeline_stage("cvt-node", [&] {
                return run_cvt(GeneratorSet{sc.known, init_pseudo}, {}, sc.domain, node_cfg);
            });
            run.node_route = augmented_route(cvt.generators.adaptive,
                                             derive_seed(sc.seed, detail::kStreamVrpNode),
                                             "vrp-node-cvt");
        } else {
            run.node_route = run.base_route;
        }
        node_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    }

    double edge_seconds = 0.0;
    const bool need_edge_route = cfg.methods.edge_cvt || cfg.methods.any_path();
    if (need_edge_route) {
        const auto t0 = clock::now();
        if (want_aug) {
            CvtConfig edge_cfg = sc.cvt;
            edge_cfg.n_pseudo = sc.n_pseudo;
            edge_cfg.seed = derive_seed(sc.seed, detail::kStreamCvtEdge);
            const CvtResult cvt = detail::pipeline_stage("cvt-edge", [&] {
                return run_cvt(GeneratorSet{sc.known, init_pseudo}, route_edges(run.base_route),
                               sc.domain, edge_cfg);
            });
            run.edge_route = augmented_route(cvt.generators.adaptive,
                                             derive_seed(sc.seed, detail::kStreamVrpEdge),
                                             "vrp-edge-cvt");
        } else {
            run.edge_route = run.base_route;
        }
        edge_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    }
    run.working_route = need_edge_route ? run.edge_route : run.base_route;

    if (cfg.methods.original)
        run.results.push_back(route_result(Method::Original, run.base_route, base_seconds));
    if (cfg.methods.node_cvt)
        run.results.push_back(
            route_result(Method::NodeCvt, run.node_route, base_seconds + node_seconds));
    if (cfg.methods.edge_cvt)
        run.results.push_back(
            route_result(Method::EdgeCvt, run.edge_route, base_seconds + edge_seconds));

    if (!cfg.methods.any_path()) return run;

    const std::vector<Segment> edges = route_edges(run.working_route);
    const SegmentVoronoi sv = detail::pipeline_stage("segment-voronoi", [&] {
        return build_segment_voronoi(edges, sc.domain, cfg.voronoi_resolution);
    });
    run.budgets = detail::pipeline_stage("budget-allocation", [&] {
        return planner_budgets(run.working_route, sc.fleet, sv);
    });

    const double v_nominal = 0.5 * (cfg.v_lb + cfg.v_ub);
    const double rung_spacing = std::sqrt(std::log(10.0) / sc.hazard.beta_sense);
    const std::vector<detail::EdgeTask> tasks =
        detail::edge_tasks(run.working_route, run.budgets, v_nominal);

    run.edges.reserve(tasks.size());
    for (std::size_t k = 0; k < tasks.size(); ++k)
        run.edges.push_back(
            EdgePlanRecord{tasks[k].edge, tasks[k].budget,
                           detail::edge_grid_points(sv, static_cast<int>(k),
                                                    cfg.grid_per_cell)});

    const HazardField base_field(sc.known, sc.hazard);
    const std::size_t n_vehicles = run.working_route.sequences.size();

    struct PathMethodState {
        std::vector<std::vector<Point2>> per_vehicle;
        std::vector<char> found;
        std::vector<int> discovered;
        double total_length = 0.0;
    };

    const auto traverse_edge = [&](PathMethodState& st, const detail::EdgeTask& task,
                                   std::vector<Point2> samples, Rng& rng) {
        // the junction instant is sampled once: later edges drop their start sample
        if (!task.first_of_vehicle && !samples.empty()) samples.erase(samples.begin());
        detail::detect_at(samples, sc.unknown, sc.hazard.beta_sense, rng, st.found,
                          st.discovered);
        auto& chain = st.per_vehicle[task.vehicle];
        chain.insert(chain.end(), samples.begin(), samples.end());
        return samples;
    };

    const auto finish_path_result = [&](Method m, const PathMethodState& st, double seconds) {
        const CoverageReport rep = detail::path_coverage(st.per_vehicle, coverage_grid);
        TrialResult t;
        t.method = m;
        t.ecr = rep.ecr;
        t.edv = rep.edv;
        t.discovered = static_cast<int>(st.discovered.size());
        t.total_length = st.total_length;
        t.wall_time = seconds;
        t.timed_out = elapsed() > cfg.trial_time_limit;
        return t;
    };

    const auto fresh_state = [&] {
        PathMethodState st;
        st.per_vehicle.resize(n_vehicles);
        st.found.assign(sc.unknown.size(), 0);
        return st;
    };

    if (cfg.methods.optimized) {
        const auto t0 = clock::now();
        Rng rng(derive_seed(sc.seed, detail::kStreamDetectOptimized));
        PathMethodState st = fresh_state();
        std::vector<Point2> accumulated;
        for (std::size_t k = 0; k < tasks.size(); ++k) {
            const detail::EdgeTask& task = tasks[k];
            EdgePlanningProblem prob;
            prob.x0 = task.edge.a;
            prob.xf = task.edge.b;
            prob.v0 = task.v0;
            prob.vf = task.vf;
            prob.v_lb = cfg.v_lb;
            prob.v_ub = cfg.v_ub;
            prob.u_lb = cfg.u_lb;
            prob.u_ub = cfg.u_ub;
            prob.kappa_ub = cfg.kappa_ub;
            prob.budget = task.budget;
            prob.grid_points = run.edges[k].grid_points;
            prob.field = base_field.with_samples(accumulated);
            run.edges[k].past_samples = prob.field.samples().size();

            const SplinePath init = detail::pipeline_stage("plan-init", [&] {
                return detail::lawnmower_init(task.edge.a, task.edge.b, task.budget,
                                              rung_spacing, task.budget / v_nominal);
            });
            const auto fly_init = [&] {
                const ConstraintResiduals res = verify_trajectory(init, prob);
                const double gamma = prob.grid_points.empty()
                                         ? 0.0
                                         : objective_gamma(init, init.tf(), prob);
                return PlannedTrajectory{init,
                                         init.tf(),
                                         gamma,
                                         res,
                                         sampling_times(init.t0(), init.tf(),
                                                        sc.hazard.delta_s),
                                         res.within_tolerance(),
                                         false};
            };
            // a duplicated route edge can lose its whole Voronoi region to the
            // tie-break; there is nothing to optimize over, so fly the sweep
            PlannedTrajectory planned = prob.grid_points.empty()
                                            ? fly_init()
                                            : detail::pipeline_stage("plan-edge", [&] {
                                                  return plan_edge(prob, init, cfg.optimizer);
                                              });
            // budget is the hard resource: a failed solve must not spend more
            // than the edge's allocation, so fall back to the sweep it started from
            if (planned.path.arc_length() > task.budget * 1.005) planned = fly_init();

            const std::vector<Point2> raw =
                detail::spline_samples(planned.path, sc.hazard.delta_s);
            const std::vector<Point2> kept = traverse_edge(st, task, raw, rng);
            accumulated.insert(accumulated.end(), kept.begin(), kept.end());
            st.total_length += planned.path.arc_length();

            run.edges[k].gamma_optimized = planned.gamma;
            run.edges[k].optimized_samples = raw;
            run.edges[k].optimized = std::move(planned);
        }
        const double secs = std::chrono::duration<double>(clock::now() - t0).count();
        run.results.push_back(finish_path_result(Method::Optimized, st, secs));
    }

    if (cfg.methods.lawnmower) {
        const auto t0 = clock::now();
        Rng rng(derive_seed(sc.seed, detail::kStreamDetectLawnmower));
        PathMethodState st = fresh_state();
        std::vector<Point2> accumulated;
        for (std::size_t k = 0; k < tasks.size(); ++k) {
            const detail::EdgeTask& task = tasks[k];
            const auto poly = detail::pipeline_stage("lawnmower", [&] {
                return lawnmower_path(task.edge.a, task.edge.b, task.budget, rung_spacing);
            });
            const std::vector<Point2> raw =
                detail::polyline_samples(poly, v_nominal, sc.hazard.delta_s);
            const std::vector<Point2> kept = traverse_edge(st, task, raw, rng);
            st.total_length += task.budget;

            run.edges[k].lawnmower_samples = raw;
            if (!run.edges[k].grid_points.empty())
                run.edges[k].gamma_lawnmower = mean_posterior(
                    base_field.with_samples(accumulated).with_samples(raw),
                    run.edges[k].grid_points);
            accumulated.insert(accumulated.end(), kept.begin(), kept.end());
        }
        const double secs = std::chrono::duration<double>(clock::now() - t0).count();
        run.results.push_back(finish_path_result(Method::Lawnmower, st, secs));
    }

    if (cfg.methods.straight) {
        const auto t0 = clock::now();
        Rng rng(derive_seed(sc.seed, detail::kStreamDetectStraight));
        PathMethodState st = fresh_state();
        std::vector<Point2> accumulated;
        for (std::size_t k = 0; k < tasks.size(); ++k) {
            const detail::EdgeTask& task = tasks[k];
            const std::vector<Point2> poly{task.edge.a, task.edge.b};
            const std::vector<Point2> raw =
                detail::polyline_samples(poly, v_nominal, sc.hazard.delta_s);
            const std::vector<Point2> kept = traverse_edge(st, task, raw, rng);
            st.total_length += task.edge.length();

            run.edges[k].straight_samples = raw;
            if (!run.edges[k].grid_points.empty())
                run.edges[k].gamma_straight = mean_posterior(
                    base_field.with_samples(accumulated).with_samples(raw),
                    run.edges[k].grid_points);
            accumulated.insert(accumulated.end(), kept.begin(), kept.end());
        }
        const double secs = std::chrono::duration<double>(clock::now() - t0).count();
        run.results.push_back(finish_path_result(Method::Straight, st, secs));
    }

    return run;
}

inline std::vector<TrialResult> run_pipeline(const Scenario& sc, const PipelineConfig& cfg = {}) {
    return run_pipeline_detailed(sc, cfg).results;
}

}  // namespace hazmon

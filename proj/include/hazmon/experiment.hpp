#pragma once

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "hazmon/config.hpp"
#include "hazmon/sim.hpp"
#include "hazmon/svg.hpp"

namespace hazmon {

struct SweepCell {
    int known = 0;
    int pseudo = 0;
};

inline std::vector<SweepCell> sweep_cells(const RunConfig& cfg) {
    std::vector<SweepCell> cells;
    cells.reserve(cfg.known_nodes.size() * cfg.pseudo_nodes.size());
    for (int k : cfg.known_nodes)
        for (int p : cfg.pseudo_nodes) cells.push_back({k, p});
    return cells;
}

// trials with the same known-node count share scenarios across pseudo-node
// settings, so the sweep compares methods on identical hazard draws
inline std::uint64_t trial_seed(const RunConfig& cfg, int known, int trial) {
    return derive_seed(cfg.seed, (static_cast<std::uint64_t>(known) << 16) |
                                     static_cast<std::uint64_t>(trial));
}

struct TrialRecord {
    int known = 0;
    int pseudo = 0;
    int trial = 0;
    std::uint64_t seed = 0;
    std::vector<TrialResult> results;
    bool failed = false;
    std::string error;
};

class TrialError : public std::runtime_error {
public:
    explicit TrialError(TrialRecord rec)
        : std::runtime_error("trial failed (known=" + std::to_string(rec.known) +
                             " pseudo=" + std::to_string(rec.pseudo) +
                             " trial=" + std::to_string(rec.trial) +
                             " seed=" + std::to_string(rec.seed) + "): " + rec.error),
          record_(std::move(rec)) {}

    const TrialRecord& record() const { return record_; }

private:
    TrialRecord record_;
};

struct SweepOutcome {
    std::vector<TrialRecord> records;
};

// called once per finished trial, serialized by an internal lock; heavy
// per-trial state is only alive for the duration of the call
using TrialObserver =
    std::function<void(const TrialRecord&, const Scenario&, const PipelineRun&)>;

inline SweepOutcome run_sweep(const RunConfig& cfg, const TrialObserver& observe = {}) {
    const std::vector<SweepCell> cells = sweep_cells(cfg);
    const std::size_t n_tasks = cells.size() * static_cast<std::size_t>(cfg.trials);
    std::vector<TrialRecord> records(n_tasks);

    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex observe_mutex;

    const auto worker = [&] {
        while (true) {
            const std::size_t task = next.fetch_add(1);
            if (task >= n_tasks || stop.load()) return;
            const SweepCell cell = cells[task / cfg.trials];
            const int trial = static_cast<int>(task % cfg.trials);

            TrialRecord& rec = records[task];
            rec.known = cell.known;
            rec.pseudo = cell.pseudo;
            rec.trial = trial;
            rec.seed = trial_seed(cfg, cell.known, trial);
            try {
                const Scenario sc = generate_scenario(
                    cfg.scenario_spec(cell.known, cell.pseudo), rec.seed);
                const PipelineRun run = run_pipeline_detailed(sc, cfg.pipeline_config());
                rec.results = run.results;
                if (observe) {
                    std::lock_guard<std::mutex> lock(observe_mutex);
                    observe(rec, sc, run);
                }
            } catch (const std::exception& e) {
                rec.failed = true;
                rec.error = e.what();
                if (!cfg.keep_going) stop.store(true);
                if (observe) {
                    std::lock_guard<std::mutex> lock(observe_mutex);
                    observe(rec, Scenario{}, PipelineRun{});
                }
            }
        }
    };

    const int n_threads = std::min<int>(cfg.jobs, static_cast<int>(n_tasks));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    if (!cfg.keep_going) {
        for (const TrialRecord& rec : records)
            if (rec.failed) throw TrialError(rec);
    }
    // a stop request may leave later tasks unstarted; drop their empty slots
    SweepOutcome out;
    out.records.reserve(n_tasks);
    for (TrialRecord& rec : records)
        if (rec.failed || !rec.results.empty()) out.records.push_back(std::move(rec));
    return out;
}

namespace detail {

// shortest decimal form that parses back to the same double
inline std::string round_trip(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

inline constexpr const char* kResultsSchemaComment = "# results-schema v1";

// one row per trial and method; excludes wall-clock fields so reruns with the
// same seed are byte-identical
inline void write_results_csv(const SweepOutcome& out, std::ostream& os) {
    os << kResultsSchemaComment << "\r\n";
    os << "known,pseudo,trial,seed,method,ecr,edv,discovered,total_length\r\n";
    for (const TrialRecord& rec : out.records) {
        if (rec.failed) continue;
        for (const TrialResult& r : rec.results) {
            os << rec.known << ',' << rec.pseudo << ',' << rec.trial << ',' << rec.seed << ','
               << method_name(r.method) << ',' << detail::round_trip(r.ecr) << ','
               << detail::round_trip(r.edv) << ',' << r.discovered << ','
               << detail::round_trip(r.total_length) << "\r\n";
        }
    }
}

inline void write_results_csv_file(const SweepOutcome& out, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write results file '" + path + "'");
    write_results_csv(out, os);
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
    int n = 0;
};

inline MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd m;
    m.n = static_cast<int>(xs.size());
    if (m.n == 0) return m;
    double sum = 0.0;
    for (double x : xs) sum += x;
    m.mean = sum / m.n;
    if (m.n > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - m.mean) * (x - m.mean);
        m.std = std::sqrt(ss / (m.n - 1));
    }
    return m;
}

namespace detail {

inline std::vector<Method> enabled_methods(const MethodSet& m) {
    std::vector<Method> out;
    if (m.original) out.push_back(Method::Original);
    if (m.node_cvt) out.push_back(Method::NodeCvt);
    if (m.edge_cvt) out.push_back(Method::EdgeCvt);
    if (m.optimized) out.push_back(Method::Optimized);
    if (m.lawnmower) out.push_back(Method::Lawnmower);
    if (m.straight) out.push_back(Method::Straight);
    return out;
}

inline nlohmann::ordered_json stats_json(const MeanStd& m) {
    return {{"mean", m.mean}, {"std", m.std}, {"n", m.n}};
}

struct MethodSamples {
    std::vector<double> ecr, edv, discovered, total_length, wall_time;
    int timeouts = 0;

    void add(const TrialResult& r) {
        ecr.push_back(r.ecr);
        edv.push_back(r.edv);
        discovered.push_back(static_cast<double>(r.discovered));
        total_length.push_back(r.total_length);
        wall_time.push_back(r.wall_time);
        if (r.timed_out) ++timeouts;
    }

    nlohmann::ordered_json json() const {
        nlohmann::ordered_json j;
        j["ecr"] = stats_json(mean_std(ecr));
        j["edv"] = stats_json(mean_std(edv));
        j["discovered"] = stats_json(mean_std(discovered));
        j["total_length"] = stats_json(mean_std(total_length));
        j["wall_time"] = stats_json(mean_std(wall_time));
        j["timeouts"] = timeouts;
        return j;
    }
};

}  // namespace detail

inline nlohmann::ordered_json summary_json(const RunConfig& cfg, const SweepOutcome& out) {
    const std::vector<Method> methods = detail::enabled_methods(cfg.methods);

    nlohmann::ordered_json j;
    j["schema"] = "summary-v1";
    j["seed"] = cfg.seed;
    j["trials_per_cell"] = cfg.trials;
    j["known_nodes"] = cfg.known_nodes;
    j["pseudo_nodes"] = cfg.pseudo_nodes;
    {
        nlohmann::ordered_json names = nlohmann::ordered_json::array();
        for (Method m : methods) names.push_back(method_name(m));
        j["methods"] = names;
    }

    std::map<Method, detail::MethodSamples> overall;
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const SweepCell cell : sweep_cells(cfg)) {
        std::map<Method, detail::MethodSamples> per_method;
        int ok = 0;
        int failed = 0;
        for (const TrialRecord& rec : out.records) {
            if (rec.known != cell.known || rec.pseudo != cell.pseudo) continue;
            if (rec.failed) {
                ++failed;
                continue;
            }
            ++ok;
            for (const TrialResult& r : rec.results) {
                per_method[r.method].add(r);
                overall[r.method].add(r);
            }
        }
        nlohmann::ordered_json cj;
        cj["known"] = cell.known;
        cj["pseudo"] = cell.pseudo;
        cj["trials_ok"] = ok;
        cj["trials_failed"] = failed;
        nlohmann::ordered_json stats;
        for (Method m : methods)
            if (per_method.count(m)) stats[method_name(m)] = per_method[m].json();
        cj["stats"] = std::move(stats);
        cells.push_back(std::move(cj));
    }
    j["cells"] = std::move(cells);

    nlohmann::ordered_json overall_j;
    for (Method m : methods)
        if (overall.count(m)) overall_j[method_name(m)] = overall[m].json();
    j["overall"] = std::move(overall_j);

    nlohmann::ordered_json failures = nlohmann::ordered_json::array();
    for (const TrialRecord& rec : out.records) {
        if (!rec.failed) continue;
        failures.push_back({{"known", rec.known},
                            {"pseudo", rec.pseudo},
                            {"trial", rec.trial},
                            {"seed", rec.seed},
                            {"error", rec.error}});
    }
    j["failures"] = std::move(failures);
    return j;
}

inline void write_summary_json_file(const RunConfig& cfg, const SweepOutcome& out,
                                    const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write summary file '" + path + "'");
    os << summary_json(cfg, out).dump(2) << "\n";
}

namespace detail {

inline const char* vehicle_color(std::size_t vehicle) {
    static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                              "#9467bd", "#8c564b", "#e377c2"};
    return palette[vehicle % (sizeof(palette) / sizeof(palette[0]))];
}

inline std::vector<Point2> route_polyline(const Route& r, std::size_t vehicle) {
    std::vector<Point2> pts;
    if (vehicle >= r.sequences.size()) return pts;
    for (int idx : r.sequences[vehicle]) pts.push_back(r.points[static_cast<std::size_t>(idx)]);
    return pts;
}

inline bool near_any(Point2 p, const std::vector<Point2>& set) {
    for (const auto& q : set) {
        const double dx = p.x - q.x;
        const double dy = p.y - q.y;
        if (dx * dx + dy * dy < 1e-12) return true;
    }
    return false;
}

}  // namespace detail

// planned tour over the augmented node set: known hazards as filled circles,
// pseudo-nodes as squares, one stroke color per vehicle
inline void write_route_figure(const Scenario& sc, const PipelineRun& run,
                               const std::string& path) {
    SvgCanvas canvas(sc.domain, 640.0);
    canvas.frame();
    const Route& route = run.working_route;
    for (std::size_t v = 0; v < route.sequences.size(); ++v)
        canvas.polyline(detail::route_polyline(route, v), detail::vehicle_color(v), 2.0, 0.9);
    for (std::size_t i = 1; i < route.points.size(); ++i) {
        const Point2 p = route.points[i];
        if (detail::near_any(p, sc.known)) continue;
        canvas.square(p, 4.0, "#ff8c00");
    }
    for (const Point2& p : sc.known) canvas.circle(p, 4.5, "#b22222");
    canvas.circle(sc.depot, 6.0, "#111111", "#ffffff");
    canvas.text_px(canvas.width_px() / 2.0, 22.0,
                   "route  known=" + std::to_string(sc.known.size()) +
                       "  pseudo=" + std::to_string(sc.n_pseudo) +
                       "  seed=" + std::to_string(sc.seed),
                   14.0, "middle");
    canvas.write(path);
}

// mean discovered unknown hazards per pseudo-node count, one bar series per
// traversal method, error bars one sample standard deviation
inline void write_discovery_figure(const RunConfig& cfg, const SweepOutcome& out, int known,
                                   const std::string& path) {
    struct SeriesDef {
        Method method;
        const char* color;
    };
    std::vector<SeriesDef> defs;
    if (cfg.methods.optimized) defs.push_back({Method::Optimized, "#1f77b4"});
    if (cfg.methods.lawnmower) defs.push_back({Method::Lawnmower, "#ff7f0e"});
    if (cfg.methods.straight) defs.push_back({Method::Straight, "#2ca02c"});
    if (defs.empty()) return;

    BarChart chart;
    chart.title = "discovered hazards, known=" + std::to_string(known);
    chart.x_label = "pseudo-nodes";
    chart.y_label = "mean discovered";
    for (int p : cfg.pseudo_nodes) chart.group_labels.push_back(std::to_string(p));
    for (const SeriesDef& def : defs) {
        chart.series_names.push_back(method_name(def.method));
        chart.series_colors.push_back(def.color);
        std::vector<double> means, stds;
        for (int p : cfg.pseudo_nodes) {
            std::vector<double> xs;
            for (const TrialRecord& rec : out.records) {
                if (rec.failed || rec.known != known || rec.pseudo != p) continue;
                for (const TrialResult& r : rec.results)
                    if (r.method == def.method) xs.push_back(r.discovered);
            }
            const MeanStd m = mean_std(xs);
            means.push_back(m.mean);
            stds.push_back(m.std);
        }
        chart.values.push_back(std::move(means));
        chart.errors.push_back(std::move(stds));
    }
    write_bar_chart(chart, path);
}

// posterior heatmap after the optimized traversal up to and including the
// selected edge, with the three candidate paths overlaid
inline void write_plan_figure(const Scenario& sc, const PipelineRun& run, int edge_k,
                              const std::string& path) {
    const EdgePlanRecord& rec = run.edges.at(static_cast<std::size_t>(edge_k));

    std::vector<Point2> samples;
    for (int j = 0; j <= edge_k; ++j) {
        const auto& s = run.edges[static_cast<std::size_t>(j)].optimized_samples;
        samples.insert(samples.end(), s.begin(), s.end());
    }
    const HazardField field = HazardField(sc.known, sc.hazard).with_samples(samples);

    SvgCanvas canvas(sc.domain, 720.0);
    const UniformGrid grid(sc.domain, 120, 120);
    std::vector<double> values(static_cast<std::size_t>(grid.num_cells()));
    double v_min = 1.0;
    double v_max = 0.0;
    for (int c = 0; c < grid.num_cells(); ++c) {
        const double v = field.posterior(grid.cell_center(c));
        values[static_cast<std::size_t>(c)] = v;
        v_min = std::min(v_min, v);
        v_max = std::max(v_max, v);
    }
    draw_heatmap(canvas, grid, values, v_min, v_max);
    canvas.frame();

    for (const EdgePlanRecord& other : run.edges)
        canvas.line(other.edge.a, other.edge.b, "#dddddd", 1.0);
    canvas.line(rec.edge.a, rec.edge.b, "#ffffff", 2.0);
    for (const Point2& g : rec.grid_points) canvas.circle(g, 1.2, "#ffffff");
    canvas.polyline(rec.straight_samples, "#2ca02c", 1.5, 0.9);
    canvas.polyline(rec.lawnmower_samples, "#ff7f0e", 1.5, 0.9);
    canvas.polyline(rec.optimized_samples, "#66ccff", 2.0);
    for (const Point2& p : sc.known) canvas.circle(p, 4.0, "#b22222", "#ffffff");
    canvas.circle(sc.depot, 5.0, "#111111", "#ffffff");
    canvas.text_px(canvas.width_px() / 2.0, 22.0,
                   "edge " + std::to_string(edge_k) + "  posterior after traversal", 14.0,
                   "middle", "#111");
    canvas.write(path);
}

}  // namespace hazmon

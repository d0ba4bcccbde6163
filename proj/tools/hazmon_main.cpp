#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "hazmon/config.hpp"
#include "hazmon/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitTrialFailure = 3;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    bool keep_going = false;
    bool no_plots = false;
    std::optional<std::string> out;
};

// precedence: --out flag, then HAZMON_OUT, then the config file
void apply_overrides(hazmon::RunConfig& cfg, const Overrides& ov) {
    if (const char* env = std::getenv("HAZMON_OUT"); env && *env) cfg.out = env;
    if (ov.out) cfg.out = *ov.out;
    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.jobs) cfg.jobs = *ov.jobs;
    if (ov.keep_going) cfg.keep_going = true;
    if (ov.no_plots) cfg.plots = false;
}

std::string out_path(const hazmon::RunConfig& cfg, const std::string& name) {
    return (std::filesystem::path(cfg.out) / name).string();
}

int cmd_run(const std::string& config_path, const Overrides& ov) {
    hazmon::RunConfig cfg;
    try {
        cfg = hazmon::parse_run_config_file(config_path);
    } catch (const hazmon::ConfigError& e) {
        std::fprintf(stderr, "%s: %s\n", config_path.c_str(), e.what());
        return kExitUsage;
    }
    apply_overrides(cfg, ov);
    std::filesystem::create_directories(cfg.out);

    const std::size_t n_tasks = hazmon::sweep_cells(cfg).size() * cfg.trials;
    std::size_t done = 0;
    const hazmon::TrialObserver observe = [&](const hazmon::TrialRecord& rec,
                                              const hazmon::Scenario& sc,
                                              const hazmon::PipelineRun& run) {
        ++done;
        if (rec.failed) {
            std::fprintf(stderr, "[%zu/%zu] known=%d pseudo=%d trial=%d FAILED: %s\n", done,
                         n_tasks, rec.known, rec.pseudo, rec.trial, rec.error.c_str());
            return;
        }
        std::fprintf(stderr, "[%zu/%zu] known=%d pseudo=%d trial=%d ok\n", done, n_tasks,
                     rec.known, rec.pseudo, rec.trial);
        if (cfg.plots && rec.trial == 0) {
            const std::string name = "route_known" + std::to_string(rec.known) + "_pseudo" +
                                     std::to_string(rec.pseudo) + ".svg";
            hazmon::write_route_figure(sc, run, out_path(cfg, name));
        }
    };

    hazmon::SweepOutcome outcome;
    try {
        outcome = hazmon::run_sweep(cfg, observe);
    } catch (const hazmon::TrialError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        std::fprintf(stderr, "rerun with --keep-going to skip failing trials\n");
        return kExitTrialFailure;
    }

    const std::string csv_path = out_path(cfg, "results.csv");
    const std::string json_path = out_path(cfg, "summary.json");
    hazmon::write_results_csv_file(outcome, csv_path);
    hazmon::write_summary_json_file(cfg, outcome, json_path);
    std::printf("wrote %s\n", csv_path.c_str());
    std::printf("wrote %s\n", json_path.c_str());

    if (cfg.plots) {
        for (int known : cfg.known_nodes) {
            const std::string name = "discovery_known" + std::to_string(known) + ".svg";
            hazmon::write_discovery_figure(cfg, outcome, known, out_path(cfg, name));
            std::printf("wrote %s\n", out_path(cfg, name).c_str());
        }
    }
    return kExitOk;
}

int cmd_plan(const std::string& scenario_path, int edge_k, const Overrides& ov) {
    hazmon::RunConfig cfg;
    try {
        cfg = hazmon::parse_run_config_file(scenario_path);
    } catch (const hazmon::ConfigError& e) {
        std::fprintf(stderr, "%s: %s\n", scenario_path.c_str(), e.what());
        return kExitUsage;
    }
    apply_overrides(cfg, ov);

    // the gamma report needs all three traversal methods regardless of the
    // configured run methods
    cfg.methods.optimized = true;
    cfg.methods.lawnmower = true;
    cfg.methods.straight = true;

    const int known = cfg.known_nodes.front();
    const int pseudo = cfg.pseudo_nodes.front();
    const std::uint64_t seed = hazmon::trial_seed(cfg, known, 0);

    hazmon::Scenario sc;
    hazmon::PipelineRun run;
    try {
        sc = hazmon::generate_scenario(cfg.scenario_spec(known, pseudo), seed);
        run = hazmon::run_pipeline_detailed(sc, cfg.pipeline_config());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "planning failed: %s\n", e.what());
        return kExitTrialFailure;
    }

    const int n_edges = static_cast<int>(run.edges.size());
    if (edge_k < 0 || edge_k >= n_edges) {
        std::fprintf(stderr, "edge %d out of range: route has %d edges (0..%d)\n", edge_k,
                     n_edges, n_edges - 1);
        return kExitUsage;
    }

    const hazmon::EdgePlanRecord& rec = run.edges[static_cast<std::size_t>(edge_k)];
    std::printf("edges=%d\n", n_edges);
    std::printf("edge=%d from=(%s,%s) to=(%s,%s) length=%s budget=%s\n", edge_k,
                hazmon::detail::round_trip(rec.edge.a.x).c_str(),
                hazmon::detail::round_trip(rec.edge.a.y).c_str(),
                hazmon::detail::round_trip(rec.edge.b.x).c_str(),
                hazmon::detail::round_trip(rec.edge.b.y).c_str(),
                hazmon::detail::round_trip(rec.edge.length()).c_str(),
                hazmon::detail::round_trip(rec.budget).c_str());
    std::printf("gamma_optimized=%s\n", hazmon::detail::round_trip(rec.gamma_optimized).c_str());
    std::printf("gamma_lawnmower=%s\n", hazmon::detail::round_trip(rec.gamma_lawnmower).c_str());
    std::printf("gamma_straight=%s\n", hazmon::detail::round_trip(rec.gamma_straight).c_str());

    if (cfg.plots) {
        std::filesystem::create_directories(cfg.out);
        const std::string name = "plan_edge" + std::to_string(edge_k) + ".svg";
        hazmon::write_plan_figure(sc, run, edge_k, out_path(cfg, name));
        std::printf("wrote %s\n", out_path(cfg, name).c_str());
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bi-level hazard monitoring planner"};
    app.require_subcommand(1);

    Overrides ov;
    std::string config_path;
    std::string scenario_path;
    int edge_k = 0;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", ov.seed, "override the base random seed");
        sub->add_option("--jobs", ov.jobs, "worker threads for trials")
            ->check(CLI::PositiveNumber);
        sub->add_flag("--keep-going", ov.keep_going, "record trial failures and continue");
        sub->add_flag("--no-plots", ov.no_plots, "skip SVG output");
        sub->add_option("--out", ov.out, "output directory");
    };

    CLI::App* run = app.add_subcommand("run", "run a monitoring experiment sweep");
    run->add_option("config", config_path, "experiment config file")->required();
    add_common(run);

    CLI::App* plan = app.add_subcommand("plan", "plan one route edge and report gamma");
    plan->add_option("scenario", scenario_path, "scenario config file")->required();
    plan->add_option("--edge", edge_k, "route edge index to inspect")->required();
    add_common(plan);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (run->parsed()) return cmd_run(config_path, ov);
        return cmd_plan(scenario_path, edge_k, ov);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hazmon/geometry.hpp"
#include "hazmon/hazard.hpp"
#include "hazmon/sim.hpp"

namespace hazmon {

// configuration file violation; line 0 means the problem is not tied to a
// single line (for example a missing file)
class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, const std::string& what)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    int line() const { return line_; }

private:
    int line_;
};

// everything a `run` invocation needs, with defaults matching the reference
// experiment setup; also reused by `plan`, which takes the first value of
// each sweep axis
struct RunConfig {
    std::vector<int> known_nodes{5, 10, 15};
    std::vector<int> pseudo_nodes{0, 1, 2, 3};
    int trials = 20;
    std::uint64_t seed = 42;
    MethodSet methods;
    int unknown_nodes = 50;
    int vehicles = 1;
    double total_budget = 5000.0;
    RectDomain domain{0.0, 1000.0, 0.0, 1000.0};
    Point2 depot{500.0, 500.0};
    HazardParams hazard;
    double alpha = 0.1;
    double beta_density = 0.9;
    int cvt_samples = 20000;
    int cvt_max_iter = 50;
    double cvt_move_tol = 1.0;
    int coverage_grid = 50;
    int voronoi_grid = 200;
    int edge_grid = 15;
    int vrp_restarts = 20;
    double v_min = 2.0;
    double v_max = 20.0;
    double u_min = -1.0;
    double u_max = 1.0;
    double kappa_max = 0.2;
    int opt_max_outer = 8;
    int opt_max_inner = 60;
    double trial_time_limit = 60.0;
    std::string out = "results";
    bool plots = true;
    int jobs = 1;
    bool keep_going = false;

    ScenarioSpec scenario_spec(int known, int pseudo) const {
        ScenarioSpec s;
        s.domain = domain;
        s.depot = depot;
        s.n_known = known;
        s.n_unknown = unknown_nodes;
        s.n_pseudo = pseudo;
        s.num_vehicles = vehicles;
        s.total_budget = total_budget;
        s.hazard = hazard;
        s.cvt.n_pseudo = pseudo;
        s.cvt.alpha = alpha;
        s.cvt.beta_density = beta_density;
        s.cvt.n_samples = cvt_samples;
        s.cvt.max_iter = cvt_max_iter;
        s.cvt.move_tol = cvt_move_tol;
        return s;
    }

    PipelineConfig pipeline_config() const {
        PipelineConfig p;
        p.methods = methods;
        p.coverage_nx = coverage_grid;
        p.coverage_ny = coverage_grid;
        p.voronoi_resolution = voronoi_grid;
        p.grid_per_cell = edge_grid;
        p.vrp_restarts = vrp_restarts;
        p.v_lb = v_min;
        p.v_ub = v_max;
        p.u_lb = u_min;
        p.u_ub = u_max;
        p.kappa_ub = kappa_max;
        p.optimizer.max_outer = opt_max_outer;
        p.optimizer.max_inner = opt_max_inner;
        p.trial_time_limit = trial_time_limit;
        return p;
    }
};

namespace detail {

inline std::string trim_copy(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split_tokens(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

inline long long parse_ll(const std::string& tok, const std::string& key, int line) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw ConfigError(line, "key '" + key + "': expected an integer, got '" + tok + "'");
    return v;
}

inline std::uint64_t parse_u64(const std::string& tok, const std::string& key, int line) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw ConfigError(line,
                          "key '" + key + "': expected a non-negative integer, got '" + tok + "'");
    return v;
}

inline double parse_real(const std::string& tok, const std::string& key, int line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used == tok.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(line, "key '" + key + "': expected a number, got '" + tok + "'");
}

inline bool parse_flag(const std::string& tok, const std::string& key, int line) {
    if (tok == "true" || tok == "on" || tok == "1" || tok == "yes") return true;
    if (tok == "false" || tok == "off" || tok == "0" || tok == "no") return false;
    throw ConfigError(line, "key '" + key + "': expected true or false, got '" + tok + "'");
}

inline std::string single_token(const std::vector<std::string>& toks, const std::string& key,
                                int line) {
    if (toks.size() != 1)
        throw ConfigError(line, "key '" + key + "' takes exactly one value");
    return toks.front();
}

inline std::vector<int> int_list(const std::vector<std::string>& toks, const std::string& key,
                                 int line) {
    if (toks.empty()) throw ConfigError(line, "key '" + key + "' needs at least one value");
    std::vector<int> out;
    out.reserve(toks.size());
    for (const auto& t : toks) out.push_back(static_cast<int>(parse_ll(t, key, line)));
    return out;
}

inline MethodSet parse_methods(const std::vector<std::string>& toks, int line) {
    if (toks.empty()) throw ConfigError(line, "key 'methods' needs at least one value");
    MethodSet m{false, false, false, false, false, false};
    for (const auto& t : toks) {
        if (t == "optimized") m.optimized = true;
        else if (t == "lawnmower") m.lawnmower = true;
        else if (t == "straight") m.straight = true;
        else if (t == "node-cvt") m.node_cvt = true;
        else if (t == "edge-cvt") m.edge_cvt = true;
        else if (t == "original") m.original = true;
        else
            throw ConfigError(line, "key 'methods': unknown method '" + t + "'");
    }
    return m;
}

inline void apply_config_key(RunConfig& c, const std::string& key, const std::string& value,
                             int line) {
    const std::vector<std::string> toks = split_tokens(value);
    const auto one = [&] { return single_token(toks, key, line); };
    const auto as_int = [&](int lo, const char* why) {
        const long long v = parse_ll(one(), key, line);
        if (v < lo) throw ConfigError(line, "key '" + key + "': " + why);
        return static_cast<int>(v);
    };
    const auto as_real = [&] { return parse_real(one(), key, line); };

    if (key == "known_nodes") c.known_nodes = int_list(toks, key, line);
    else if (key == "pseudo_nodes") c.pseudo_nodes = int_list(toks, key, line);
    else if (key == "trials") c.trials = as_int(1, "needs at least one trial");
    else if (key == "seed") c.seed = parse_u64(one(), key, line);
    else if (key == "methods") c.methods = parse_methods(toks, line);
    else if (key == "unknown_nodes") c.unknown_nodes = as_int(0, "must be non-negative");
    else if (key == "vehicles") c.vehicles = as_int(1, "needs at least one vehicle");
    else if (key == "total_budget") c.total_budget = as_real();
    else if (key == "domain") {
        if (toks.size() != 4)
            throw ConfigError(line, "key 'domain' takes four values: x_min x_max y_min y_max");
        const double x0 = parse_real(toks[0], key, line);
        const double x1 = parse_real(toks[1], key, line);
        const double y0 = parse_real(toks[2], key, line);
        const double y1 = parse_real(toks[3], key, line);
        if (!(x0 < x1) || !(y0 < y1))
            throw ConfigError(line, "key 'domain': extent is empty");
        c.domain = RectDomain(x0, x1, y0, y1);
    } else if (key == "depot") {
        if (toks.size() != 2) throw ConfigError(line, "key 'depot' takes two values: x y");
        c.depot = Point2{parse_real(toks[0], key, line), parse_real(toks[1], key, line)};
    } else if (key == "p_h") c.hazard.p_h = as_real();
    else if (key == "lambda_corr") c.hazard.lambda_corr = as_real();
    else if (key == "beta_sense") c.hazard.beta_sense = as_real();
    else if (key == "p_fa") c.hazard.p_fa = as_real();
    else if (key == "delta_s") c.hazard.delta_s = as_real();
    else if (key == "alpha") c.alpha = as_real();
    else if (key == "beta_density") c.beta_density = as_real();
    else if (key == "cvt_samples") c.cvt_samples = as_int(1, "needs at least one sample");
    else if (key == "cvt_max_iter") c.cvt_max_iter = as_int(1, "needs at least one iteration");
    else if (key == "cvt_move_tol") c.cvt_move_tol = as_real();
    else if (key == "coverage_grid") c.coverage_grid = as_int(1, "needs at least one cell");
    else if (key == "voronoi_grid") c.voronoi_grid = as_int(1, "needs at least one cell");
    else if (key == "edge_grid") c.edge_grid = as_int(1, "needs at least one point per side");
    else if (key == "vrp_restarts") c.vrp_restarts = as_int(1, "needs at least one restart");
    else if (key == "v_min") c.v_min = as_real();
    else if (key == "v_max") c.v_max = as_real();
    else if (key == "u_min") c.u_min = as_real();
    else if (key == "u_max") c.u_max = as_real();
    else if (key == "kappa_max") c.kappa_max = as_real();
    else if (key == "opt_max_outer") c.opt_max_outer = as_int(1, "needs at least one iteration");
    else if (key == "opt_max_inner") c.opt_max_inner = as_int(1, "needs at least one iteration");
    else if (key == "trial_time_limit") c.trial_time_limit = as_real();
    else if (key == "out") {
        if (value.empty()) throw ConfigError(line, "key 'out' needs a directory name");
        c.out = value;
    } else if (key == "plots") c.plots = parse_flag(one(), key, line);
    else if (key == "jobs") c.jobs = as_int(1, "needs at least one worker");
    else if (key == "keep_going") c.keep_going = parse_flag(one(), key, line);
    else
        throw ConfigError(line, "unknown key '" + key + "'");
}

// returns the line the key was set on, or 0 when the default is in effect
inline int key_line(const std::map<std::string, int>& seen, const std::string& key) {
    const auto it = seen.find(key);
    return it == seen.end() ? 0 : it->second;
}

inline void validate_config(const RunConfig& c, const std::map<std::string, int>& seen) {
    const auto fail = [&](const std::string& key, const std::string& why) {
        throw ConfigError(key_line(seen, key), "key '" + key + "': " + why);
    };
    for (int k : c.known_nodes)
        if (k < 1) fail("known_nodes", "each count must be at least 1");
    for (int p : c.pseudo_nodes)
        if (p < 0) fail("pseudo_nodes", "counts must be non-negative");
    if (c.trials > 65535) fail("trials", "at most 65535 trials per cell");
    if (!(c.total_budget > 0.0)) fail("total_budget", "must be positive");
    if (!c.domain.contains(c.depot))
        throw ConfigError(key_line(seen, "depot") ? key_line(seen, "depot")
                                                  : key_line(seen, "domain"),
                          "key 'depot': outside the domain");
    if (!(c.hazard.p_h >= 0.0 && c.hazard.p_h < 1.0)) fail("p_h", "must be in [0, 1)");
    if (!(c.hazard.lambda_corr > 0.0)) fail("lambda_corr", "must be positive");
    if (!(c.hazard.beta_sense > 0.0)) fail("beta_sense", "must be positive");
    if (!(c.hazard.p_fa >= 0.0 && c.hazard.p_fa < 1.0)) fail("p_fa", "must be in [0, 1)");
    if (!(c.hazard.delta_s > 0.0)) fail("delta_s", "must be positive");
    if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) fail("alpha", "must be in [0, 1]");
    if (!(c.beta_density >= 0.0 && c.beta_density <= 1.0))
        fail("beta_density", "must be in [0, 1]");
    if (!(c.cvt_move_tol >= 0.0)) fail("cvt_move_tol", "must be non-negative");
    if (!(c.v_min > 0.0)) fail("v_min", "must be positive");
    if (!(c.v_max > c.v_min)) fail("v_max", "must exceed v_min");
    if (!(c.u_min < c.u_max)) fail("u_max", "must exceed u_min");
    if (!(c.kappa_max > 0.0)) fail("kappa_max", "must be positive");
    if (!(c.trial_time_limit > 0.0)) fail("trial_time_limit", "must be positive");
    if (!(c.methods.optimized || c.methods.lawnmower || c.methods.straight ||
          c.methods.node_cvt || c.methods.edge_cvt || c.methods.original))
        fail("methods", "needs at least one method");
}

}  // namespace detail

inline RunConfig parse_run_config(std::istream& in) {
    RunConfig cfg;
    std::map<std::string, int> seen;
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim_copy(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(lineno, "expected 'key = value'");
        const std::string key = detail::trim_copy(line.substr(0, eq));
        const std::string value = detail::trim_copy(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(lineno, "missing key before '='");
        if (!seen.emplace(key, lineno).second)
            throw ConfigError(lineno, "duplicate key '" + key + "'");
        detail::apply_config_key(cfg, key, value, lineno);
    }
    detail::validate_config(cfg, seen);
    return cfg;
}

inline RunConfig parse_run_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "cannot open config file '" + path + "'");
    return parse_run_config(in);
}

}  // namespace hazmon

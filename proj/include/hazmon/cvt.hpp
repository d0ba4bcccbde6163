#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hazmon/geometry.hpp"
#include "hazmon/rng.hpp"

namespace hazmon {

struct CvtConfig {
    int n_pseudo = 1;
    double alpha = 0.1;
    double beta_density = 0.9;
    int n_samples = 20000;
    int max_iter = 50;
    double move_tol = 1.0;
    std::uint64_t seed = 0;
};

struct GeneratorSet {
    std::vector<Point2> fixed;
    std::vector<Point2> adaptive;
};

struct CvtResult {
    GeneratorSet generators;
    int iterations = 0;
    int reinitialized = 0;
    bool converged = false;
};

inline double density(const Point2& p, const std::vector<Segment>& edges, double alpha,
                      double beta_density) {
    if (!(alpha > 0.0)) throw std::invalid_argument("density offset alpha must be positive");
    if (beta_density < 0.0) throw std::invalid_argument("density slope must be non-negative");
    if (beta_density == 0.0) return alpha;
    if (edges.empty())
        throw std::invalid_argument("density with a distance slope needs a non-empty edge set");
    return alpha + beta_density * min_distance_to_edge_set(p, edges);
}

namespace detail {

inline std::size_t nearest_generator(const Point2& p, const GeneratorSet& gens) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    std::size_t i = 0;
    for (const auto& g : gens.fixed) {
        const double d = squared_distance(p, g);
        if (d < best) {
            best = d;
            best_i = i;
        }
        ++i;
    }
    for (const auto& g : gens.adaptive) {
        const double d = squared_distance(p, g);
        if (d < best) {
            best = d;
            best_i = i;
        }
        ++i;
    }
    return best_i;
}

struct CentroidAccumulator {
    std::vector<double> w, wx, wy;

    explicit CentroidAccumulator(std::size_t n) : w(n, 0.0), wx(n, 0.0), wy(n, 0.0) {}

    void add(std::size_t cell, const Point2& p, double weight) {
        w[cell] += weight;
        wx[cell] += weight * p.x;
        wy[cell] += weight * p.y;
    }
};

}  // namespace detail

// One weighted Lloyd update on a fixed sample set. Adaptive generators whose
// cells caught no samples stay where they are.
inline std::vector<Point2> lloyd_step(const GeneratorSet& gens,
                                      const std::vector<Point2>& samples,
                                      const std::vector<Segment>& edges, double alpha,
                                      double beta_density) {
    const std::size_t n_fixed = gens.fixed.size();
    const std::size_t n_adaptive = gens.adaptive.size();
    detail::CentroidAccumulator acc(n_fixed + n_adaptive);
    for (const auto& s : samples)
        acc.add(detail::nearest_generator(s, gens), s, density(s, edges, alpha, beta_density));

    std::vector<Point2> updated = gens.adaptive;
    for (std::size_t j = 0; j < n_adaptive; ++j) {
        const std::size_t cell = n_fixed + j;
        if (acc.w[cell] > 0.0)
            updated[j] = {acc.wx[cell] / acc.w[cell], acc.wy[cell] / acc.w[cell]};
    }
    return updated;
}

inline CvtResult run_cvt(const GeneratorSet& generators, const std::vector<Segment>& edges,
                         const RectDomain& domain, const CvtConfig& cfg) {
    if (generators.adaptive.empty())
        throw std::invalid_argument("cvt needs at least one adaptive generator");
    if (!(cfg.alpha > 0.0)) throw std::invalid_argument("cvt alpha must be positive");
    if (cfg.beta_density < 0.0) throw std::invalid_argument("cvt density slope must be non-negative");
    if (cfg.max_iter < 1) throw std::invalid_argument("cvt needs at least one iteration");
    if (!(cfg.move_tol > 0.0)) throw std::invalid_argument("cvt move tolerance must be positive");
    const std::size_t n_gens = generators.fixed.size() + generators.adaptive.size();
    if (cfg.n_samples < static_cast<int>(10 * n_gens))
        throw std::invalid_argument("cvt needs at least 10 samples per generator");
    if (cfg.beta_density > 0.0 && edges.empty())
        throw std::invalid_argument("edge-based cvt needs a non-empty edge set");

    CvtResult result;
    result.generators = generators;
    Rng rng(cfg.seed);
    GeneratorSet& gens = result.generators;
    const std::size_t n_fixed = gens.fixed.size();

    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        detail::CentroidAccumulator acc(n_gens);
        for (int s = 0; s < cfg.n_samples; ++s) {
            const Point2 p{rng.uniform(domain.x_min, domain.x_max),
                           rng.uniform(domain.y_min, domain.y_max)};
            acc.add(detail::nearest_generator(p, gens), p,
                    density(p, edges, cfg.alpha, cfg.beta_density));
        }

        double max_move = 0.0;
        for (std::size_t j = 0; j < gens.adaptive.size(); ++j) {
            const std::size_t cell = n_fixed + j;
            Point2 next;
            if (acc.w[cell] > 0.0) {
                next = {acc.wx[cell] / acc.w[cell], acc.wy[cell] / acc.w[cell]};
            } else {
                next = {rng.uniform(domain.x_min, domain.x_max),
                        rng.uniform(domain.y_min, domain.y_max)};
                ++result.reinitialized;
            }
            max_move = std::max(max_move, distance(next, gens.adaptive[j]));
            gens.adaptive[j] = next;
        }

        result.iterations = iter + 1;
        if (max_move < cfg.move_tol) {
            result.converged = true;
            break;
        }
    }
    return result;
}

inline std::vector<Point2> place_initial_pseudo_nodes(const std::vector<Point2>& known,
                                                      const RectDomain& domain, int n_pseudo,
                                                      std::uint64_t seed) {
    if (n_pseudo < 1) throw std::invalid_argument("need at least one pseudo-node");
    Rng rng(seed);
    std::vector<Point2> out;
    out.reserve(n_pseudo);
    long rejects = 0;
    while (out.size() < static_cast<std::size_t>(n_pseudo)) {
        const Point2 p{rng.uniform(domain.x_min, domain.x_max),
                       rng.uniform(domain.y_min, domain.y_max)};
        bool collides = false;
        for (const auto& k : known)
            if (distance(p, k) < 1.0) {
                collides = true;
                break;
            }
        if (!collides) {
            out.push_back(p);
        } else if (++rejects >= 1'000'000) {
            throw std::runtime_error("pseudo-node placement stalled: domain saturated");
        }
    }
    return out;
}

}  // namespace hazmon

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hazmon/geometry.hpp"
#include "hazmon/rng.hpp"

namespace hazmon {

struct HazardParams {
    double lambda_corr = 0.00015;
    double p_h = 0.3;
    double beta_sense = 0.002;
    double p_fa = 0.05;
    double delta_s = 0.1;

    void validate() const {
        if (!(lambda_corr > 0.0)) throw std::invalid_argument("lambda_corr must be positive");
        if (!(beta_sense > 0.0)) throw std::invalid_argument("beta_sense must be positive");
        if (!(delta_s > 0.0)) throw std::invalid_argument("delta_s must be positive");
        if (!(p_h >= 0.0 && p_h <= 1.0)) throw std::invalid_argument("p_h must be in [0,1]");
        if (!(p_fa >= 0.0 && p_fa <= 1.0)) throw std::invalid_argument("p_fa must be in [0,1]");
    }
};

inline double pair_prior(const Point2& x_u, const Point2& x_k, double lambda_corr) {
    return std::exp(-lambda_corr * squared_distance(x_u, x_k));
}

inline double detect_prob(const Point2& x_s, const Point2& x_u, double beta_sense) {
    return std::exp(-beta_sense * squared_distance(x_s, x_u));
}

inline double combined_prior(const Point2& x_u, const std::vector<Point2>& known,
                             const HazardParams& params) {
    double miss = 1.0 - params.p_h;
    for (const auto& x_k : known) miss *= 1.0 - pair_prior(x_u, x_k, params.lambda_corr);
    return 1.0 - miss;
}

// Prior field plus an accumulated list of no-detection sample locations.
// Immutable; extending the sample history produces a new field.
class HazardField {
public:
    HazardField(std::vector<Point2> known, HazardParams params)
        : known_(std::move(known)), params_(params) {
        params_.validate();
    }

    const std::vector<Point2>& known() const { return known_; }
    const std::vector<Point2>& samples() const { return samples_; }
    const HazardParams& params() const { return params_; }

    HazardField with_samples(const std::vector<Point2>& more) const {
        HazardField out = *this;
        out.samples_.insert(out.samples_.end(), more.begin(), more.end());
        return out;
    }

    double prior(const Point2& x_u) const { return combined_prior(x_u, known_, params_); }

    double posterior(const Point2& x_u) const {
        const double p = prior(x_u);
        const std::size_t n = samples_.size();
        if (n == 0) return p;

        // products of (1 - detect_prob) underflow along long sample histories,
        // so switch to log accumulation past a modest count
        if (n <= 50) {
            double miss = 1.0;
            for (const auto& s : samples_) miss *= 1.0 - detect_prob(s, x_u, params_.beta_sense);
            const double num = p * miss;
            const double alt = (1.0 - p) * std::pow(1.0 - params_.p_fa, static_cast<double>(n));
            const double evidence = num + alt;
            if (evidence <= 0.0)
                throw std::domain_error("posterior evidence is zero");
            return num / evidence;
        }

        if (p <= 0.0) {
            if (params_.p_fa >= 1.0) throw std::domain_error("posterior evidence is zero");
            return 0.0;
        }
        double log_miss = 0.0;
        for (const auto& s : samples_) {
            const double d = detect_prob(s, x_u, params_.beta_sense);
            if (d >= 1.0) {
                log_miss = -std::numeric_limits<double>::infinity();
                break;
            }
            log_miss += std::log1p(-d);
        }
        const double log_num = std::log(p) + log_miss;
        if (p >= 1.0) {
            if (!std::isfinite(log_num)) throw std::domain_error("posterior evidence is zero");
            return 1.0;
        }
        if (params_.p_fa >= 1.0) {
            if (!std::isfinite(log_num)) throw std::domain_error("posterior evidence is zero");
            return 1.0;
        }
        const double log_alt =
            std::log1p(-p) + static_cast<double>(n) * std::log1p(-params_.p_fa);
        // quotient num / (num + alt) without leaving log space
        return 1.0 / (1.0 + std::exp(log_alt - log_num));
    }

private:
    std::vector<Point2> known_;
    std::vector<Point2> samples_;
    HazardParams params_;
};

// Rejection sampling from the combined prior over the domain.
inline std::vector<Point2> sample_unknown_hazards(const std::vector<Point2>& known,
                                                  const HazardParams& params,
                                                  const RectDomain& domain, int n_unknown,
                                                  std::uint64_t seed) {
    if (n_unknown < 0) throw std::invalid_argument("n_unknown must be non-negative");
    params.validate();
    Rng rng(seed);
    std::vector<Point2> out;
    out.reserve(static_cast<std::size_t>(n_unknown));
    long consecutive_rejects = 0;
    while (out.size() < static_cast<std::size_t>(n_unknown)) {
        Point2 candidate{rng.uniform(domain.x_min, domain.x_max),
                         rng.uniform(domain.y_min, domain.y_max)};
        if (rng.uniform01() < combined_prior(candidate, known, params)) {
            out.push_back(candidate);
            consecutive_rejects = 0;
        } else if (++consecutive_rejects >= 1'000'000) {
            throw std::runtime_error(
                "hazard sampling stalled: 1000000 consecutive rejections");
        }
    }
    return out;
}

}  // namespace hazmon

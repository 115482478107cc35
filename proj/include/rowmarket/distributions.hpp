#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "rowmarket/numeric.hpp"

namespace rowmarket {

/// Standard-normal 75th-percentile deviate.
inline constexpr double kUpperQuartileZ = 0.674489750196081743;

/// Three published quantiles of a positive quantity.
struct QuantileSpec {
    double median = 0.0;
    double lower_quartile = 0.0;
    double upper_quartile = 0.0;

    void validate() const {
        const bool finite = std::isfinite(median) && std::isfinite(lower_quartile) &&
                            std::isfinite(upper_quartile);
        if (!finite || !(lower_quartile > 0.0) || !(lower_quartile < median) ||
            !(median < upper_quartile)) {
            throw invalid_input("quantiles must satisfy 0 < lower_quartile < median < upper_quartile");
        }
    }
};

/// Log-space location and scale of a log-normal distribution.
struct LogNormalParams {
    double mu = 0.0;
    double sigma = 1.0;

    void validate() const {
        if (!std::isfinite(mu) || !std::isfinite(sigma) || !(sigma > 0.0)) {
            throw invalid_input("log-normal parameters need finite mu and sigma > 0");
        }
    }

    [[nodiscard]] double median() const { return std::exp(mu); }
    [[nodiscard]] double mean() const { return std::exp(mu + 0.5 * sigma * sigma); }

    /// Parameters with a given arithmetic mean and log-space scale.
    static LogNormalParams from_mean(double mean, double sigma) {
        if (!(mean > 0.0) || !(sigma > 0.0)) {
            throw invalid_input("from_mean: mean and sigma must be positive");
        }
        return {std::log(mean) - 0.5 * sigma * sigma, sigma};
    }

    friend bool operator==(const LogNormalParams&, const LogNormalParams&) = default;
};

/// Value-of-time (cents/s) and time-saving (s) distributions of the driving population.
struct PopulationModel {
    LogNormalParams vot;
    LogNormalParams time_saving;

    void validate() const {
        vot.validate();
        time_saving.validate();
    }

    friend bool operator==(const PopulationModel&, const PopulationModel&) = default;
};

/// Symmetrized fit: the median is kept exactly and sigma averages the two
/// one-sided log-quartile distances.
inline LogNormalParams fit_from_quantiles(const QuantileSpec& spec) {
    spec.validate();
    const double mu = std::log(spec.median);
    const double spread = std::log(spec.upper_quartile / spec.median) +
                          std::log(spec.median / spec.lower_quartile);
    return {mu, spread / (2.0 * kUpperQuartileZ)};
}

inline double pdf(const LogNormalParams& p, double x) {
    if (!(x > 0.0)) {
        throw invalid_input("pdf: x must be positive");
    }
    const double z = (std::log(x) - p.mu) / p.sigma;
    return std::exp(-0.5 * z * z) / (x * p.sigma * std::sqrt(2.0 * std::numbers::pi));
}

inline double cdf(const LogNormalParams& p, double x) {
    if (!(x > 0.0)) {
        throw invalid_input("cdf: x must be positive");
    }
    return numeric::normal_cdf((std::log(x) - p.mu) / p.sigma);
}

inline double quantile(const LogNormalParams& p, double prob) {
    return std::exp(p.mu + p.sigma * numeric::normal_quantile(prob));
}

template <typename Engine>
std::vector<double> sample(const LogNormalParams& p, Engine& engine, std::size_t n) {
    p.validate();
    std::lognormal_distribution<double> dist(p.mu, p.sigma);
    std::vector<double> out(n);
    for (auto& x : out) {
        x = dist(engine);
    }
    return out;
}

/// Published VOT quartiles in cents per second.
inline QuantileSpec default_vot_quantiles() {
    return {0.8, 0.6, 1.2};
}

inline constexpr double kDefaultTimeMean = 2.0;
inline constexpr double kDefaultTimeSigma = 0.5;

inline PopulationModel default_population() {
    return {fit_from_quantiles(default_vot_quantiles()),
            LogNormalParams::from_mean(kDefaultTimeMean, kDefaultTimeSigma)};
}

}  // namespace rowmarket

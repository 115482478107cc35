#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rowmarket/distributions.hpp"
#include "rowmarket/experiments.hpp"
#include "rowmarket/random.hpp"

// Flat key = value run configuration. Lines are "key = value"; '#' starts a
// comment. Flags override file values, which override defaults. Every key is
// validated here so error messages can name the offending field.

namespace rowmarket::cli {

class config_error : public invalid_input {
public:
    using invalid_input::invalid_input;
};

struct KeyInfo {
    std::string_view name;
    std::string_view fallback;  // empty: no default
    std::string_view help;
};

// Output order of the resolved config, and the set of accepted keys.
inline constexpr KeyInfo kKeys[] = {
    {"seed", "", "root random seed (required)"},
    {"route", "quad", "numeric route: mc, quad or both"},
    {"samples", "100000", "Monte Carlo samples per curve cell"},
    {"grid", "101", "VOT rows per curve"},
    {"quadrature_nodes", "64", "Gauss-Legendre nodes per dimension and piece"},
    {"workers", "1", "worker threads (0 = hardware concurrency)"},
    {"outdir", "out", "output directory"},
    {"vot_median", "0.8", "median VOT, cents/s"},
    {"vot_lower_quartile", "0.6", "lower VOT quartile, cents/s"},
    {"vot_upper_quartile", "1.2", "upper VOT quartile, cents/s"},
    {"time_mean", "2", "mean time saving, s"},
    {"time_sigma", "0.5", "log-space sigma of the time saving"},
    {"p_priority_a", "0.5", "chance A gets priority without a game"},
    {"credit_loss_rate", "0.1", "trading loss as a share of the credit"},
    {"chi", "both", "transaction split rules: 0, 1 or both"},
    {"dynamics_grid", "64", "VOT levels in the strategy dynamics"},
    {"report_candidates", "64", "candidate reports per best response"},
    {"opponent_nodes", "96", "opponent quadrature nodes in the dynamics"},
    {"max_iter", "50", "sweep cap for the dynamics"},
    {"damping", "0.5", "weight of the best response in report updates"},
    {"cycle_window", "8", "longest cycle period detected"},
};

using ValueMap = std::map<std::string, std::string, std::less<>>;

inline bool is_known_key(std::string_view key) {
    for (const auto& k : kKeys) {
        if (k.name == key) {
            return true;
        }
    }
    return false;
}

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string describe(std::string_view key, std::string_view value, std::string_view what) {
    return std::string(key) + ": invalid value '" + std::string(value) + "' (" + std::string(what) + ")";
}

inline double parse_double(std::string_view key, std::string_view text) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw config_error(describe(key, text, "expected a finite number"));
    }
    return v;
}

inline std::uint64_t parse_uint(std::string_view key, std::string_view text) {
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw config_error(describe(key, text, "expected a nonnegative integer"));
    }
    return v;
}

inline std::string canonical_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

/// Parses config text. Unknown and repeated keys are errors.
inline ValueMap parse_config_text(std::string_view text, std::string_view source = "config") {
    ValueMap out;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        const std::string body = detail::trim(std::string_view(line).substr(0, hash));
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        const std::string where = std::string(source) + ":" + std::to_string(lineno);
        if (eq == std::string::npos) {
            throw config_error(where + ": expected 'key = value'");
        }
        const std::string key = detail::trim(std::string_view(body).substr(0, eq));
        const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
        if (!is_known_key(key)) {
            throw config_error(where + ": unknown key '" + key + "'");
        }
        if (value.empty()) {
            throw config_error(where + ": " + key + " has no value");
        }
        if (!out.emplace(key, value).second) {
            throw config_error(where + ": " + key + " given twice");
        }
    }
    return out;
}

inline ValueMap parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw config_error("cannot read config file '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

/// Fully resolved, typed run configuration.
struct RunConfig {
    std::uint64_t seed = 0;
    NumericRoute route = NumericRoute::quadrature;
    std::size_t samples = 100000;
    std::size_t grid = 101;
    int quadrature_nodes = 64;
    unsigned workers = 1;
    std::string outdir = "out";
    QuantileSpec vot_quantiles = default_vot_quantiles();
    double time_mean = kDefaultTimeMean;
    double time_sigma = kDefaultTimeSigma;
    double p_priority_a = 0.5;
    double credit_loss_rate = 0.1;
    std::string chi = "both";
    DynamicsOptions dynamics;

    [[nodiscard]] PopulationModel population() const {
        return {fit_from_quantiles(vot_quantiles), LogNormalParams::from_mean(time_mean, time_sigma)};
    }

    [[nodiscard]] std::vector<MechanismSpec> mechanisms(Scenario s) const {
        std::vector<MechanismSpec> out;
        for (MechanismSpec m : default_mechanisms(s)) {
            if (m.kind == MechanismKind::direct_transaction && chi != "both" &&
                std::to_string(m.chi) != chi) {
                continue;
            }
            m.p_priority_a = p_priority_a;
            m.credit_loss_rate = credit_loss_rate;
            out.push_back(m);
        }
        return out;
    }

    [[nodiscard]] ScenarioConfig scenario(Scenario s) const {
        ScenarioConfig c;
        c.scenario = s;
        c.mechanisms = mechanisms(s);
        c.population = population();
        c.curve_grid = grid;
        c.samples = samples;
        c.seed = seed;
        c.route = route;
        c.quadrature.nodes = quadrature_nodes;
        c.dynamics = dynamics;
        c.workers = numeric::resolve_workers(workers);
        return c;
    }

    /// Canonical key = value pairs in schema order.
    [[nodiscard]] std::vector<std::pair<std::string, std::string>> resolved() const {
        using detail::canonical_double;
        return {
            {"seed", std::to_string(seed)},
            {"route", to_string(route)},
            {"samples", std::to_string(samples)},
            {"grid", std::to_string(grid)},
            {"quadrature_nodes", std::to_string(quadrature_nodes)},
            {"workers", std::to_string(workers)},
            {"outdir", outdir},
            {"vot_median", canonical_double(vot_quantiles.median)},
            {"vot_lower_quartile", canonical_double(vot_quantiles.lower_quartile)},
            {"vot_upper_quartile", canonical_double(vot_quantiles.upper_quartile)},
            {"time_mean", canonical_double(time_mean)},
            {"time_sigma", canonical_double(time_sigma)},
            {"p_priority_a", canonical_double(p_priority_a)},
            {"credit_loss_rate", canonical_double(credit_loss_rate)},
            {"chi", chi},
            {"dynamics_grid", std::to_string(dynamics.grid_size)},
            {"report_candidates", std::to_string(dynamics.report_candidates)},
            {"opponent_nodes", std::to_string(dynamics.opponent_nodes)},
            {"max_iter", std::to_string(dynamics.max_iter)},
            {"damping", canonical_double(dynamics.damping)},
            {"cycle_window", std::to_string(dynamics.cycle_window)},
        };
    }

    /// Digest of everything that can change an output cell. Worker count and
    /// output location are excluded: they never change results.
    [[nodiscard]] std::uint64_t digest() const {
        std::string text;
        for (const auto& [k, v] : resolved()) {
            if (k == "workers" || k == "outdir") {
                continue;
            }
            text += k + "=" + v + "\n";
        }
        return fnv1a64(text);
    }
};

inline std::string hex_digest(std::uint64_t d) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(d));
    return buf;
}

/// Applies defaults, then the file, then flags, and checks every field.
inline RunConfig resolve_config(const ValueMap& file, const ValueMap& flags) {
    ValueMap v;
    for (const auto& k : kKeys) {
        if (!k.fallback.empty()) {
            v[std::string(k.name)] = std::string(k.fallback);
        }
    }
    for (const ValueMap* layer : {&file, &flags}) {
        for (const auto& [key, value] : *layer) {
            if (!is_known_key(key)) {
                throw config_error("unknown key '" + key + "'");
            }
            v[key] = value;
        }
    }
    if (!v.contains("seed")) {
        throw config_error("seed: required (set it in the config file or pass --seed)");
    }
    using detail::describe;
    using detail::parse_double;
    using detail::parse_uint;
    auto count = [&](const char* key, std::uint64_t lo, std::uint64_t hi) {
        const std::uint64_t n = parse_uint(key, v.at(key));
        if (n < lo || n > hi) {
            throw config_error(describe(key, v.at(key),
                                        "must lie in [" + std::to_string(lo) + ", " +
                                            std::to_string(hi) + "]"));
        }
        return n;
    };
    auto real = [&](const char* key, auto&& ok, const char* what) {
        const double x = parse_double(key, v.at(key));
        if (!ok(x)) {
            throw config_error(describe(key, v.at(key), what));
        }
        return x;
    };
    auto positive = [](double x) { return x > 0.0; };

    RunConfig c;
    c.seed = parse_uint("seed", v.at("seed"));
    const std::string& route = v.at("route");
    if (route == "mc") {
        c.route = NumericRoute::monte_carlo;
    } else if (route == "quad") {
        c.route = NumericRoute::quadrature;
    } else if (route == "both") {
        c.route = NumericRoute::both;
    } else {
        throw config_error(describe("route", route, "expected mc, quad or both"));
    }
    c.samples = count("samples", kMinMonteCarloSamples, 1000000000ULL);
    c.grid = count("grid", 3, 100000);
    c.quadrature_nodes = static_cast<int>(count("quadrature_nodes", 64, 4096));
    c.workers = static_cast<unsigned>(count("workers", 0, 1024));
    c.outdir = v.at("outdir");
    c.vot_quantiles.median = real("vot_median", positive, "must be positive");
    c.vot_quantiles.lower_quartile = real("vot_lower_quartile", positive, "must be positive");
    c.vot_quantiles.upper_quartile = real("vot_upper_quartile", positive, "must be positive");
    if (!(c.vot_quantiles.lower_quartile < c.vot_quantiles.median &&
          c.vot_quantiles.median < c.vot_quantiles.upper_quartile)) {
        throw config_error("vot_lower_quartile < vot_median < vot_upper_quartile is required");
    }
    c.time_mean = real("time_mean", positive, "must be positive");
    c.time_sigma = real("time_sigma", positive, "must be positive");
    c.p_priority_a =
        real("p_priority_a", [](double x) { return x >= 0.0 && x <= 1.0; }, "must lie in [0,1]");
    c.credit_loss_rate =
        real("credit_loss_rate", [](double x) { return x >= 0.0 && x < 1.0; }, "must lie in [0,1)");
    c.chi = v.at("chi");
    if (c.chi != "0" && c.chi != "1" && c.chi != "both") {
        throw config_error(describe("chi", c.chi, "expected 0, 1 or both"));
    }
    c.dynamics.grid_size = count("dynamics_grid", 32, 100000);
    c.dynamics.report_candidates = count("report_candidates", 32, 100000);
    c.dynamics.opponent_nodes = static_cast<int>(count("opponent_nodes", 16, 4096));
    c.dynamics.max_iter = static_cast<int>(count("max_iter", 20, 1000000));
    c.dynamics.damping = real(
        "damping", [](double x) { return x > 0.0 && x <= 1.0; }, "must lie in (0,1]");
    c.dynamics.cycle_window = count("cycle_window", 2, 1000);
    return c;
}

}  // namespace rowmarket::cli

#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "rowmarket/config.hpp"
#include "rowmarket/experiments.hpp"

// Run driver behind the rowmarket tool: scenario selection, CSV and manifest
// output, exit codes.

namespace rowmarket::cli {

inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kConfigError = 1, kNonConvergence = 2 };

/// Decimal text with 12 significant digits; "nan" for missing cells.
inline std::string format_cell(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

/// Header vot,vot_cdf,<mechanisms...>; Monte Carlo tables add one
/// <mechanism>_se column per mechanism after the estimates.
inline std::string render_csv(const CurveTable& t) {
    std::ostringstream out;
    out << "vot,vot_cdf";
    for (const auto& c : t.columns) {
        out << ',' << c.label;
    }
    const bool with_se = t.route == NumericRoute::monte_carlo;
    if (with_se) {
        for (const auto& c : t.columns) {
            out << ',' << c.label << "_se";
        }
    }
    out << '\n';
    for (std::size_t i = 0; i < t.vot.size(); ++i) {
        out << format_cell(t.vot[i]) << ',' << format_cell(t.vot_cdf[i]);
        for (const auto& c : t.columns) {
            out << ',' << format_cell(c.value[i]);
        }
        if (with_se) {
            for (const auto& c : t.columns) {
                out << ',' << format_cell(c.std_error[i]);
            }
        }
        out << '\n';
    }
    return out.str();
}

/// Digest of the mechanism set (labels and their parameters).
inline std::string mechanism_set_digest(const std::vector<MechanismSpec>& mechs) {
    std::string text;
    for (const auto& m : mechs) {
        text += m.label() + ":" + detail::canonical_double(m.credit_loss_rate) + ":" +
                detail::canonical_double(m.p_priority_a) + ";";
    }
    return hex_digest(fnv1a64(text)).substr(0, 12);
}

inline std::string csv_name(Scenario s, NumericRoute table_route, NumericRoute config_route,
                            const std::string& digest) {
    std::string name = to_string(s);
    if (config_route == NumericRoute::both) {
        name += std::string("_") + to_string(table_route);
    }
    return name + "_" + digest + ".csv";
}

inline std::vector<Scenario> scenarios_for(std::string_view command) {
    if (command == "honest") return {Scenario::honest};
    if (command == "abandonment") return {Scenario::abandonment};
    if (command == "dishonest") return {Scenario::dishonest};
    if (command == "all") return {Scenario::honest, Scenario::abandonment, Scenario::dishonest};
    throw config_error("unknown command '" + std::string(command) +
                       "' (expected honest, abandonment, dishonest or all)");
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point tp) {
    const std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline nlohmann::ordered_json summarize(const ScenarioResult& r) {
    nlohmann::ordered_json j;
    j["scenario"] = to_string(r.scenario);
    j["complete"] = r.complete;
    if (!r.dynamics.empty()) {
        auto& arr = j["dynamics"] = nlohmann::ordered_json::array();
        for (const auto& d : r.dynamics) {
            nlohmann::ordered_json e;
            e["mechanism"] = d.label;
            e["terminal"] = to_string(d.terminal);
            e["period"] = d.period;
            e["sweeps"] = d.sweeps;
            if (r.scenario == Scenario::abandonment) {
                e["participation_fraction"] = d.participation_fraction;
            } else {
                e["mean_report_ratio"] = d.mean_report_ratio;
            }
            arr.push_back(e);
        }
    }
    if (!r.discrepancies.empty()) {
        auto& arr = j["route_discrepancy"] = nlohmann::ordered_json::array();
        for (const auto& d : r.discrepancies) {
            arr.push_back({{"mechanism", d.label},
                           {"max_abs", d.max_abs},
                           {"max_std_errors", std::isfinite(d.max_in_std_errors)
                                                  ? nlohmann::ordered_json(d.max_in_std_errors)
                                                  : nlohmann::ordered_json("inf")}});
        }
    }
    return j;
}

/// Runs the command, writes CSVs and manifest.json into cfg.outdir and
/// returns the process exit code. Config problems throw config_error.
inline int run_command(std::string_view command, const RunConfig& cfg, std::ostream& log) {
    const std::vector<Scenario> scenarios = scenarios_for(command);
    const auto started = std::chrono::system_clock::now();
    const auto t0 = std::chrono::steady_clock::now();

    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(cfg.outdir, ec);
    if (ec || !fs::is_directory(cfg.outdir)) {
        throw config_error("outdir: cannot create '" + cfg.outdir + "'");
    }

    nlohmann::ordered_json manifest;
    manifest["tool"] = "rowmarket";
    manifest["tool_version"] = kToolVersion;
    manifest["command"] = std::string(command);
    manifest["config_digest"] = hex_digest(cfg.digest());
    manifest["seed"] = cfg.seed;
    auto& resolved = manifest["config"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : cfg.resolved()) {
        resolved[k] = v;
    }
    auto& outputs = manifest["outputs"] = nlohmann::ordered_json::array();
    auto& results = manifest["results"] = nlohmann::ordered_json::array();

    bool complete = true;
    for (Scenario s : scenarios) {
        const ScenarioConfig sc = cfg.scenario(s);
        log << "running " << to_string(s) << " (" << sc.mechanisms.size() << " mechanisms, route "
            << to_string(sc.route) << ")\n";
        const ScenarioResult r = run_scenario(sc);
        const std::string digest = mechanism_set_digest(sc.mechanisms);
        for (const CurveTable& t : r.tables) {
            const std::string name = csv_name(s, t.route, sc.route, digest);
            const fs::path path = fs::path(cfg.outdir) / name;
            const std::string body = render_csv(t);
            std::ofstream out(path, std::ios::binary);
            out << body;
            out.close();
            if (!out) {
                throw config_error("outdir: cannot write '" + path.string() + "'");
            }
            outputs.push_back({{"file", name},
                               {"scenario", to_string(s)},
                               {"route", to_string(t.route)},
                               {"rows", t.vot.size()},
                               {"content_digest", hex_digest(fnv1a64(body))}});
            log << "  wrote " << path.string() << '\n';
        }
        for (const auto& d : r.dynamics) {
            log << "  " << d.label << ": " << to_string(d.terminal) << " after " << d.sweeps
                << " sweeps\n";
        }
        results.push_back(summarize(r));
        complete = complete && r.complete;
    }

    const auto finished = std::chrono::system_clock::now();
    manifest["complete"] = complete;
    manifest["started"] = utc_timestamp(started);
    manifest["finished"] = utc_timestamp(finished);
    manifest["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const fs::path mpath = fs::path(cfg.outdir) / "manifest.json";
    std::ofstream m(mpath);
    m << manifest.dump(2) << '\n';
    m.close();
    if (!m) {
        throw config_error("outdir: cannot write '" + mpath.string() + "'");
    }
    if (!complete) {
        log << "dynamics did not settle within max_iter; output is partial\n";
        return kNonConvergence;
    }
    return kOk;
}

}  // namespace rowmarket::cli

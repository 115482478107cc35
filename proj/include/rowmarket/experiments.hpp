#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rowmarket/distributions.hpp"
#include "rowmarket/dynamics.hpp"
#include "rowmarket/expectation.hpp"
#include "rowmarket/mechanisms.hpp"
#include "rowmarket/random.hpp"
#include "rowmarket/strategy.hpp"

// Scenario runner. Each scenario produces one extra-benefit curve per
// mechanism over a log-spaced VOT grid. For abandonment and dishonest play the
// terminal strategy profile of the dynamics is handed back to the expectation
// routes, so curves never reuse the dynamics' own payoff evaluator.

namespace rowmarket {

enum class Scenario { honest, abandonment, dishonest };
enum class NumericRoute { monte_carlo, quadrature, both };

inline const char* to_string(Scenario s) {
    switch (s) {
        case Scenario::honest: return "honest";
        case Scenario::abandonment: return "abandonment";
        case Scenario::dishonest: return "dishonest";
    }
    return "unknown";
}

inline const char* to_string(NumericRoute r) {
    switch (r) {
        case NumericRoute::monte_carlo: return "mc";
        case NumericRoute::quadrature: return "quad";
        case NumericRoute::both: return "both";
    }
    return "unknown";
}

/// Mechanism columns in output order. Abandonment adds the joiners-only
/// credit variant right after the all-travelers one.
inline std::vector<MechanismSpec> default_mechanisms(Scenario s) {
    std::vector<MechanismSpec> m{MechanismSpec::first_price(), MechanismSpec::second_price(),
                                 MechanismSpec::credit(CreditPolicy::all_travelers)};
    if (s == Scenario::abandonment) {
        m.push_back(MechanismSpec::credit(CreditPolicy::joiners_only));
    }
    m.push_back(MechanismSpec::transaction(0));
    m.push_back(MechanismSpec::transaction(1));
    return m;
}

struct ScenarioConfig {
    Scenario scenario = Scenario::honest;
    std::vector<MechanismSpec> mechanisms = default_mechanisms(Scenario::honest);
    PopulationModel population = default_population();
    std::size_t curve_grid = 101;
    std::size_t samples = 100000;
    std::uint64_t seed = 0;
    NumericRoute route = NumericRoute::quadrature;
    QuadratureOptions quadrature;
    DynamicsOptions dynamics;
    unsigned workers = 1;

    [[nodiscard]] bool uses_mc() const { return route != NumericRoute::quadrature; }
    [[nodiscard]] bool uses_quad() const { return route != NumericRoute::monte_carlo; }

    void validate() const {
        if (curve_grid < 3) {
            throw invalid_input("curve_grid must be at least 3");
        }
        if (uses_mc() && samples < kMinMonteCarloSamples) {
            throw invalid_input("samples must be at least 1000 for the Monte Carlo route");
        }
        if (mechanisms.empty()) {
            throw invalid_input("at least one mechanism is required");
        }
        for (const auto& m : mechanisms) {
            m.validate();
        }
        population.validate();
        if (uses_quad()) {
            quadrature.validate();
        }
        if (scenario == Scenario::abandonment) {
            dynamics.validate(DynamicsKind::abandonment);
        } else if (scenario == Scenario::dishonest) {
            dynamics.validate(DynamicsKind::dishonest);
        }
    }

    /// Rows of every curve: f_v quantiles 0.5%..99.5%, log-spaced.
    [[nodiscard]] VotGrid curve_vots() const {
        return VotGrid::log_spaced(population.vot, curve_grid, 0.005, 0.995);
    }
};

struct CurveColumn {
    std::string label;
    std::vector<double> value;      // NaN where the dynamics did not settle
    std::vector<double> std_error;  // Monte Carlo only
};

struct CurveTable {
    NumericRoute route = NumericRoute::quadrature;  // monte_carlo or quadrature
    std::vector<double> vot;
    std::vector<double> vot_cdf;
    std::vector<CurveColumn> columns;

    [[nodiscard]] const CurveColumn& column(const std::string& label) const {
        for (const auto& c : columns) {
            if (c.label == label) {
                return c;
            }
        }
        throw invalid_input("no column '" + label + "'");
    }
};

struct DynamicsSummary {
    std::string label;
    Terminal terminal = Terminal::iteration_cap;
    std::size_t period = 0;
    int sweeps = 0;
    double participation_fraction = 1.0;  // of the last profile, abandonment only
    double mean_report_ratio = 1.0;       // grid-average reported/true VOT, dishonest only
};

/// Largest |MC - quadrature| per column, in MC standard errors.
struct RouteDiscrepancy {
    std::string label;
    double max_abs = 0.0;
    double max_in_std_errors = 0.0;
};

struct ScenarioResult {
    Scenario scenario = Scenario::honest;
    std::vector<CurveTable> tables;  // one per route actually run
    std::vector<DynamicsSummary> dynamics;
    std::vector<RouteDiscrepancy> discrepancies;
    bool complete = true;  // false when some dynamics hit the iteration cap

    [[nodiscard]] const CurveTable& table(NumericRoute r) const {
        for (const auto& t : tables) {
            if (t.route == r) {
                return t;
            }
        }
        throw invalid_input(std::string("no table for route ") + to_string(r));
    }
};

namespace detail {

/// Regimes a curve averages over: honest, or the terminal fixed point or cycle.
struct CurvePlan {
    std::vector<Regime> regimes;
    std::optional<DynamicsSummary> summary;
};

inline CurvePlan plan_curve(const ScenarioConfig& cfg, const MechanismSpec& mech) {
    CurvePlan plan;
    if (cfg.scenario == Scenario::honest) {
        plan.regimes.emplace_back(HonestRegime{});
        return plan;
    }
    DynamicsOptions opts = cfg.dynamics;
    opts.workers = cfg.workers;
    const DynamicsKind kind =
        cfg.scenario == Scenario::abandonment ? DynamicsKind::abandonment : DynamicsKind::dishonest;
    const DynamicsReport report = kind == DynamicsKind::abandonment
                                      ? abandonment_equilibrium(mech, cfg.population, opts)
                                      : dishonest_iteration(mech, cfg.population, opts);
    DynamicsSummary s;
    s.label = mech.label();
    s.terminal = report.terminal;
    s.period = report.period;
    s.sweeps = report.sweeps();
    const StrategyProfile& last = report.last();
    s.participation_fraction = last.participation_fraction(cfg.population.vot);
    double ratio = 0.0;
    for (std::size_t i = 0; i < last.grid.size(); ++i) {
        ratio += last.reported_vot[i] / last.grid[i];
    }
    s.mean_report_ratio = ratio / static_cast<double>(last.grid.size());
    plan.summary = s;
    if (report.terminal != Terminal::iteration_cap) {
        for (const auto& p : report.terminal_profiles()) {
            plan.regimes.push_back(p.regime(kind));
        }
    }
    return plan;
}

inline CurveColumn quadrature_column(const ScenarioConfig& cfg, const MechanismSpec& mech,
                                     const std::vector<Regime>& regimes,
                                     const std::vector<double>& rows) {
    CurveColumn col{mech.label(), std::vector<double>(rows.size(), 0.0), {}};
    if (regimes.empty()) {
        col.value.assign(rows.size(), std::numeric_limits<double>::quiet_NaN());
        return col;
    }
    for (const Regime& regime : regimes) {
        std::optional<CreditAccounts> credit;
        if (mech.kind == MechanismKind::credit_second_price) {
            credit = compute_credit_accounts_quadrature(mech, cfg.population, regime, cfg.quadrature);
        }
        std::vector<double> part(rows.size());
        numeric::parallel_for(rows.size(), cfg.workers, [&](std::size_t i) {
            const ExpectedBenefitQuery q{rows[i], mech, cfg.population, regime};
            part[i] = expected_extra_benefit_quadrature(q, cfg.quadrature, credit);
        });
        for (std::size_t i = 0; i < rows.size(); ++i) {
            col.value[i] += part[i];
        }
    }
    for (double& v : col.value) {
        v /= static_cast<double>(regimes.size());
    }
    return col;
}

inline CurveColumn monte_carlo_column(const ScenarioConfig& cfg, const MechanismSpec& mech,
                                      const std::vector<Regime>& regimes,
                                      const std::vector<double>& rows) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CurveColumn col{mech.label(), std::vector<double>(rows.size(), 0.0),
                    std::vector<double>(rows.size(), 0.0)};
    if (regimes.empty()) {
        col.value.assign(rows.size(), nan);
        col.std_error.assign(rows.size(), nan);
        return col;
    }
    const Substream base = Substream(cfg.seed)
                               .child(to_string(cfg.scenario))
                               .child(mech.label());
    std::vector<double> variance(rows.size(), 0.0);
    for (std::size_t m = 0; m < regimes.size(); ++m) {
        const Regime& regime = regimes[m];
        const Substream member = base.child("member" + std::to_string(m));
        std::optional<CreditAccounts> credit;
        if (mech.kind == MechanismKind::credit_second_price) {
            credit = compute_credit_accounts_mc(mech, cfg.population, regime, cfg.samples,
                                                member.child("credit"), cfg.workers);
        }
        std::vector<Estimate> part(rows.size());
        numeric::parallel_for(rows.size(), cfg.workers, [&](std::size_t i) {
            const ExpectedBenefitQuery q{rows[i], mech, cfg.population, regime};
            part[i] = expected_extra_benefit_mc(q, cfg.samples,
                                                member.child("row" + std::to_string(i)), 1, credit);
        });
        for (std::size_t i = 0; i < rows.size(); ++i) {
            col.value[i] += part[i].value;
            variance[i] += part[i].std_error * part[i].std_error;
        }
    }
    const double k = static_cast<double>(regimes.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        col.value[i] /= k;
        col.std_error[i] = std::sqrt(variance[i]) / k;
    }
    return col;
}

}  // namespace detail

/// Runs the configured scenario. Dynamics that hit the iteration cap leave a
/// NaN column and mark the result incomplete instead of throwing.
inline ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    ScenarioResult result;
    result.scenario = cfg.scenario;
    const VotGrid grid = cfg.curve_vots();
    const std::vector<double>& rows = grid.values();
    std::vector<double> cdfs(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        cdfs[i] = cdf(cfg.population.vot, rows[i]);
    }
    CurveTable mc{NumericRoute::monte_carlo, rows, cdfs, {}};
    CurveTable quad{NumericRoute::quadrature, rows, cdfs, {}};
    for (const MechanismSpec& mech : cfg.mechanisms) {
        const detail::CurvePlan plan = detail::plan_curve(cfg, mech);
        if (plan.summary) {
            result.dynamics.push_back(*plan.summary);
        }
        if (plan.regimes.empty()) {
            result.complete = false;
        }
        if (cfg.uses_quad()) {
            quad.columns.push_back(detail::quadrature_column(cfg, mech, plan.regimes, rows));
        }
        if (cfg.uses_mc()) {
            mc.columns.push_back(detail::monte_carlo_column(cfg, mech, plan.regimes, rows));
        }
    }
    if (cfg.uses_mc()) {
        result.tables.push_back(std::move(mc));
    }
    if (cfg.uses_quad()) {
        result.tables.push_back(std::move(quad));
    }
    if (cfg.route == NumericRoute::both) {
        const CurveTable& m = result.table(NumericRoute::monte_carlo);
        const CurveTable& q = result.table(NumericRoute::quadrature);
        for (std::size_t c = 0; c < m.columns.size(); ++c) {
            RouteDiscrepancy d{m.columns[c].label, 0.0, 0.0};
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const double diff = std::abs(m.columns[c].value[i] - q.columns[c].value[i]);
                if (!std::isfinite(diff)) {
                    continue;
                }
                d.max_abs = std::max(d.max_abs, diff);
                const double se = m.columns[c].std_error[i];
                if (se > 0.0) {
                    d.max_in_std_errors = std::max(d.max_in_std_errors, diff / se);
                } else if (diff > 0.0) {
                    d.max_in_std_errors = std::numeric_limits<double>::infinity();
                }
            }
            result.discrepancies.push_back(d);
        }
    }
    return result;
}

namespace detail {

inline void require_scenario(const ScenarioConfig& cfg, Scenario s) {
    if (cfg.scenario != s) {
        throw invalid_input(std::string("config is for the ") + to_string(cfg.scenario) +
                            " scenario, not " + to_string(s));
    }
}

}  // namespace detail

inline ScenarioResult run_honest(const ScenarioConfig& cfg) {
    detail::require_scenario(cfg, Scenario::honest);
    return run_scenario(cfg);
}

inline ScenarioResult run_abandonment(const ScenarioConfig& cfg) {
    detail::require_scenario(cfg, Scenario::abandonment);
    return run_scenario(cfg);
}

inline ScenarioResult run_dishonest(const ScenarioConfig& cfg) {
    detail::require_scenario(cfg, Scenario::dishonest);
    return run_scenario(cfg);
}

}  // namespace rowmarket

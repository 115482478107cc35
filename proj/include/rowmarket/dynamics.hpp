#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rowmarket/distributions.hpp"
#include "rowmarket/mechanisms.hpp"
#include "rowmarket/numeric.hpp"
#include "rowmarket/pair_kernel.hpp"
#include "rowmarket/strategy.hpp"

// Population strategy dynamics on a discretized VOT grid.
//
// Play is mean-field: every grid level best-responds to the opponent
// distribution induced by the current profile (opponent VOT integrated by
// Gauss-Legendre in standard-normal space, time savings through PairKernel).
// Updates are synchronous. The abandonment dynamic picks gamma per level,
// the dishonest dynamic picks a reported VOT per level with convex damping.

namespace rowmarket {

class non_convergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DynamicsKind { abandonment, dishonest };
enum class Terminal { converged, cycle, iteration_cap };

inline const char* to_string(Terminal t) {
    switch (t) {
        case Terminal::converged: return "converged";
        case Terminal::cycle: return "cycle";
        case Terminal::iteration_cap: return "iteration_cap";
    }
    return "unknown";
}

struct DynamicsOptions {
    std::size_t grid_size = 64;          // VOT levels, log-spaced over the 0.5%-99.5% quantiles
    std::size_t report_candidates = 64;  // log-spaced over the 0.1%-99.9% quantiles
    int opponent_nodes = 96;             // per smooth piece of the opponent VOT axis
    int max_iter = 50;
    double damping = 0.5;
    std::size_t cycle_window = 8;
    double report_quantum = 1e-9;
    double tie_tolerance = 1e-12;  // cents
    unsigned workers = 1;

    void validate(DynamicsKind kind) const {
        if (grid_size < 32) {
            throw invalid_input("dynamics grid needs at least 32 levels");
        }
        if (opponent_nodes < 16) {
            throw invalid_input("dynamics needs at least 16 opponent nodes");
        }
        if (cycle_window < 2) {
            throw invalid_input("cycle window must be at least 2");
        }
        if (kind == DynamicsKind::abandonment) {
            if (max_iter < 1) {
                throw invalid_input("abandonment dynamics need max_iter >= 1");
            }
            return;
        }
        if (report_candidates < 32) {
            throw invalid_input("dishonest dynamics need at least 32 report candidates");
        }
        if (max_iter < 20) {
            throw invalid_input("dishonest dynamics need max_iter >= 20");
        }
        if (!(damping > 0.0 && damping <= 1.0)) {
            throw invalid_input("damping must lie in (0,1]");
        }
    }
};

struct StrategyProfile {
    VotGrid grid;
    std::vector<std::uint8_t> participation;
    std::vector<double> reported_vot;
    int iteration = 0;

    /// Exact match after rounding reports to the quantum.
    [[nodiscard]] bool same_strategies(const StrategyProfile& o, double quantum) const {
        if (participation != o.participation || reported_vot.size() != o.reported_vot.size()) {
            return false;
        }
        for (std::size_t i = 0; i < reported_vot.size(); ++i) {
            if (numeric::round_to(reported_vot[i], quantum) !=
                numeric::round_to(o.reported_vot[i], quantum)) {
                return false;
            }
        }
        return true;
    }

    [[nodiscard]] ParticipationMap participation_map() const { return {grid, participation}; }
    [[nodiscard]] ReportMap report_map() const { return {grid, reported_vot}; }

    [[nodiscard]] Regime regime(DynamicsKind kind) const {
        if (kind == DynamicsKind::abandonment) {
            return AbandonmentRegime{participation_map()};
        }
        return DishonestRegime{report_map()};
    }

    /// Population share choosing to play.
    [[nodiscard]] double participation_fraction(const LogNormalParams& vot) const {
        return participation_map().participating_mass(vot);
    }
};

struct DynamicsReport {
    DynamicsKind kind = DynamicsKind::abandonment;
    MechanismSpec mechanism;
    PopulationModel population;
    DynamicsOptions options;
    std::vector<StrategyProfile> history;               // history[0] is the initial profile
    std::vector<std::vector<double>> extra_benefits;    // per profile, per grid level
    Terminal terminal = Terminal::iteration_cap;
    std::size_t period = 0;  // 1 when converged

    [[nodiscard]] const StrategyProfile& last() const { return history.back(); }
    [[nodiscard]] int sweeps() const { return static_cast<int>(history.size()) - 1; }

    /// Profiles of the terminal fixed point or cycle.
    [[nodiscard]] std::vector<StrategyProfile> terminal_profiles() const {
        if (terminal == Terminal::iteration_cap) {
            throw non_convergence(mechanism.label() + ": dynamics hit the iteration cap after " +
                                  std::to_string(sweeps()) + " sweeps");
        }
        return {history.end() - static_cast<std::ptrdiff_t>(period), history.end()};
    }
};

/// Best-response machinery for one mechanism and population.
class MeanFieldGame {
public:
    MeanFieldGame(DynamicsKind kind, MechanismSpec mech, PopulationModel pop, DynamicsOptions opts)
        : kind_(kind),
          mech_(mech),
          pop_(pop),
          opts_(opts),
          kernel_(pop.time_saving),
          grid_(VotGrid::log_spaced(pop.vot, opts.grid_size, 0.005, 0.995)) {
        mech_.validate();
        pop_.validate();
        opts_.validate(kind_);
        if (kind_ == DynamicsKind::dishonest) {
            const VotGrid c =
                VotGrid::log_spaced(pop_.vot, opts_.report_candidates, 0.001, 0.999);
            candidates_ = c.values();
        }
    }

    [[nodiscard]] const VotGrid& grid() const { return grid_; }
    [[nodiscard]] const std::vector<double>& candidates() const { return candidates_; }
    [[nodiscard]] const PairKernel& kernel() const { return kernel_; }
    [[nodiscard]] DynamicsKind kind() const { return kind_; }

    /// Everyone plays truthfully.
    [[nodiscard]] StrategyProfile initial_profile() const {
        return {grid_, std::vector<std::uint8_t>(grid_.size(), 1), grid_.values(), 0};
    }

    [[nodiscard]] double basic_benefit(double v) const {
        return mech_.p_priority_a * v * kernel_.mean_time();
    }

    /// Credit per recipient under the profile; zero for other mechanisms.
    [[nodiscard]] double per_capita_credit(const StrategyProfile& p) const {
        if (mech_.kind != MechanismKind::credit_second_price) {
            return 0.0;
        }
        const Opponents opp = opponents(p);
        double payment = 0.0;
        for (std::size_t i = 0; i < opp.vot.size(); ++i) {
            double inner = 0.0;
            for (std::size_t k = 0; k < opp.vot.size(); ++k) {
                inner += opp.weight[k] * kernel_.auction_payment(opp.report[i], opp.report[k]);
            }
            payment += opp.weight[i] * inner;
        }
        double fraction = 1.0;
        if (mech_.credit_policy == CreditPolicy::joiners_only && kind_ == DynamicsKind::abandonment) {
            fraction = p.participation_fraction(pop_.vot);
        }
        return fraction > 0.0 ? payment / fraction : 0.0;
    }

    /// Benefit of playing over abandoning, per grid level (abandonment only).
    [[nodiscard]] std::vector<double> participation_gains(const StrategyProfile& p) const {
        require(DynamicsKind::abandonment);
        const Opponents opp = opponents(p);
        const double bonus = joiner_bonus(p);
        std::vector<double> gains(grid_.size());
        numeric::parallel_for(grid_.size(), opts_.workers, [&](std::size_t i) {
            gains[i] = game_gain(grid_[i], opp) + bonus;
        });
        return gains;
    }

    /// Largest strict improvement any candidate report offers over the current
    /// report, per grid level (dishonest only).
    [[nodiscard]] std::vector<double> report_improvements(const StrategyProfile& p) const {
        require(DynamicsKind::dishonest);
        const Opponents opp = opponents(p);
        std::vector<double> out(grid_.size());
        numeric::parallel_for(grid_.size(), opts_.workers, [&](std::size_t i) {
            const Choice c = best_report(grid_[i], p.reported_vot[i], opp);
            out[i] = c.value - c.current_value;
        });
        return out;
    }

    /// One synchronous best-response sweep.
    [[nodiscard]] StrategyProfile sweep(const StrategyProfile& p) const {
        StrategyProfile next = p;
        next.iteration = p.iteration + 1;
        if (kind_ == DynamicsKind::abandonment) {
            const std::vector<double> gains = participation_gains(p);
            for (std::size_t i = 0; i < gains.size(); ++i) {
                next.participation[i] = gains[i] > opts_.tie_tolerance ? 1 : 0;
            }
            return next;
        }
        const Opponents opp = opponents(p);
        numeric::parallel_for(grid_.size(), opts_.workers, [&](std::size_t i) {
            const double current = p.reported_vot[i];
            const Choice c = best_report(grid_[i], current, opp);
            if (!c.improves) {
                return;  // keep the current report untouched
            }
            const double damped = opts_.damping * c.report + (1.0 - opts_.damping) * current;
            next.reported_vot[i] =
                std::max(opts_.report_quantum, numeric::round_to(damped, opts_.report_quantum));
        });
        return next;
    }

    /// Expected extra benefit at arbitrary VOT rows under the profile. Rows use
    /// the strategy of the grid cell (abandonment) or the interpolated report.
    [[nodiscard]] std::vector<double> extra_benefits(const StrategyProfile& p,
                                                     const std::vector<double>& rows) const {
        const Opponents opp = opponents(p);
        const double credit = per_capita_credit(p);
        const double keep = 1.0 - mech_.credit_loss_rate;
        const bool credit_all = mech_.kind == MechanismKind::credit_second_price &&
                                mech_.credit_policy == CreditPolicy::all_travelers;
        const bool credit_joiners = mech_.kind == MechanismKind::credit_second_price &&
                                    mech_.credit_policy == CreditPolicy::joiners_only;
        std::vector<double> out(rows.size());
        if (kind_ == DynamicsKind::abandonment) {
            const ParticipationMap map = p.participation_map();
            numeric::parallel_for(rows.size(), opts_.workers, [&](std::size_t i) {
                const double v = rows[i];
                double extra = credit_all ? credit * keep : 0.0;
                if (map.at(v)) {
                    extra += game_gain(v, opp) + (credit_joiners ? credit * keep : 0.0);
                }
                out[i] = extra;
            });
            return out;
        }
        const ReportMap reports = p.report_map();
        numeric::parallel_for(rows.size(), opts_.workers, [&](std::size_t i) {
            const double v = rows[i];
            out[i] = expected_payoff(v, reports.at(v), opp) + credit * keep - basic_benefit(v);
        });
        return out;
    }

    [[nodiscard]] std::vector<double> extra_benefits(const StrategyProfile& p) const {
        return extra_benefits(p, grid_.values());
    }

    /// E[benefit in one game] for true VOT v reporting c against the profile's
    /// opponents, credit excluded (dishonest).
    [[nodiscard]] double expected_game_benefit(const StrategyProfile& p, double v, double c) const {
        return expected_payoff(v, c, opponents(p));
    }

private:
    struct Opponents {
        std::vector<double> vot;
        std::vector<double> report;
        std::vector<double> weight;
    };

    struct Choice {
        double report;
        double value;
        double current_value;
        bool improves;
    };

    void require(DynamicsKind k) const {
        if (kind_ != k) {
            throw invalid_input("operation does not apply to this dynamic");
        }
    }

    /// Opponent quadrature: participating VOT only (abandonment) or the whole
    /// population with interpolated reports (dishonest), split where the
    /// strategy stops being smooth.
    [[nodiscard]] Opponents opponents(const StrategyProfile& p) const {
        const LogNormalParams& V = pop_.vot;
        const Regime regime = p.regime(kind_);
        const numeric::NormalNodes nodes =
            piecewise_normal_nodes(smooth_pieces(regime, V), opts_.opponent_nodes);
        const auto* reports = std::get_if<DishonestRegime>(&regime);
        const auto* joins = std::get_if<AbandonmentRegime>(&regime);
        Opponents opp;
        for (std::size_t k = 0; k < nodes.z.size(); ++k) {
            const double v = std::exp(V.mu + V.sigma * nodes.z[k]);
            if (joins && !joins->participation.at(v)) {
                continue;
            }
            opp.vot.push_back(v);
            opp.report.push_back(reports ? reports->reports.at(v) : v);
            opp.weight.push_back(nodes.w[k]);
        }
        return opp;
    }

    [[nodiscard]] double expected_payoff(double v, double c, const Opponents& opp) const {
        double sum = 0.0;
        for (std::size_t k = 0; k < opp.vot.size(); ++k) {
            sum += opp.weight[k] * kernel_.game_benefit(mech_, v, c, opp.report[k]);
        }
        return sum;
    }

    /// Gain in game benefit from playing against the participating opponents
    /// instead of taking the priority coin flip against them.
    [[nodiscard]] double game_gain(double v, const Opponents& participating) const {
        const double coin = basic_benefit(v);
        double sum = 0.0;
        for (std::size_t k = 0; k < participating.vot.size(); ++k) {
            sum += participating.weight[k] *
                   (kernel_.game_benefit(mech_, v, v, participating.report[k]) - coin);
        }
        return sum;
    }

    [[nodiscard]] double joiner_bonus(const StrategyProfile& p) const {
        if (mech_.kind != MechanismKind::credit_second_price ||
            mech_.credit_policy != CreditPolicy::joiners_only) {
            return 0.0;
        }
        return per_capita_credit(p) * (1.0 - mech_.credit_loss_rate);
    }

    /// Best report among the candidates and the true VOT; ties keep the first.
    [[nodiscard]] Choice best_report(double v, double current, const Opponents& opp) const {
        Choice c{current, 0.0, expected_payoff(v, current, opp), false};
        c.value = c.current_value;
        bool first = true;
        auto consider = [&](double r) {
            const double u = expected_payoff(v, r, opp);
            if (first || u > c.value) {
                c.report = r;
                c.value = u;
                first = false;
            }
        };
        for (double r : candidates_) {
            consider(r);
        }
        consider(v);
        const double tol = opts_.tie_tolerance * std::max(1.0, std::abs(c.current_value));
        c.improves = c.value > c.current_value + tol;
        if (!c.improves) {
            c.report = current;
            c.value = c.current_value;
        }
        return c;
    }

    DynamicsKind kind_;
    MechanismSpec mech_;
    PopulationModel pop_;
    DynamicsOptions opts_;
    PairKernel kernel_;
    VotGrid grid_;
    std::vector<double> candidates_;
};

namespace detail {

inline DynamicsReport iterate(const MeanFieldGame& game, const MechanismSpec& mech,
                              const PopulationModel& pop, const DynamicsOptions& opts,
                              std::optional<StrategyProfile> initial) {
    DynamicsReport report;
    report.kind = game.kind();
    report.mechanism = mech;
    report.population = pop;
    report.options = opts;
    StrategyProfile start = initial ? *initial : game.initial_profile();
    if (!(start.grid == game.grid())) {
        throw invalid_input("initial profile must use the dynamics grid");
    }
    report.extra_benefits.push_back(game.extra_benefits(start));
    report.history.push_back(std::move(start));
    for (int it = 0; it < opts.max_iter; ++it) {
        StrategyProfile next = game.sweep(report.history.back());
        report.extra_benefits.push_back(game.extra_benefits(next));
        report.history.push_back(std::move(next));
        const std::size_t n = report.history.size();
        for (std::size_t p = 1; p <= opts.cycle_window && p < n; ++p) {
            if (report.history[n - 1].same_strategies(report.history[n - 1 - p], opts.report_quantum)) {
                report.terminal = p == 1 ? Terminal::converged : Terminal::cycle;
                report.period = p;
                return report;
            }
        }
    }
    report.terminal = Terminal::iteration_cap;
    report.period = 0;
    return report;
}

}  // namespace detail

/// Synchronous best response over participation choices, starting from full
/// participation. A level plays only if that strictly beats abandoning.
inline DynamicsReport abandonment_equilibrium(const MechanismSpec& mech, const PopulationModel& pop,
                                              const DynamicsOptions& opts = {},
                                              std::optional<StrategyProfile> initial = std::nullopt) {
    const MeanFieldGame game(DynamicsKind::abandonment, mech, pop, opts);
    return detail::iterate(game, mech, pop, opts, std::move(initial));
}

/// Damped synchronous best response over reported VOTs, starting truthful.
inline DynamicsReport dishonest_iteration(const MechanismSpec& mech, const PopulationModel& pop,
                                          const DynamicsOptions& opts = {},
                                          std::optional<StrategyProfile> initial = std::nullopt) {
    const MeanFieldGame game(DynamicsKind::dishonest, mech, pop, opts);
    return detail::iterate(game, mech, pop, opts, std::move(initial));
}

/// Extra benefit at the fixed point, or averaged over the cycle. Throws
/// non_convergence when the dynamics hit the iteration cap.
inline std::vector<double> equilibrium_extra_benefit_curve(const DynamicsReport& report,
                                                           const std::vector<double>& rows) {
    const std::vector<StrategyProfile> members = report.terminal_profiles();
    const MeanFieldGame game(report.kind, report.mechanism, report.population, report.options);
    std::vector<double> mean(rows.size(), 0.0);
    for (const auto& p : members) {
        const std::vector<double> e = game.extra_benefits(p, rows);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            mean[i] += e[i];
        }
    }
    for (double& m : mean) {
        m /= static_cast<double>(members.size());
    }
    return mean;
}

inline std::vector<double> equilibrium_extra_benefit_curve(const DynamicsReport& report) {
    return equilibrium_extra_benefit_curve(report, report.history.front().grid.values());
}

}  // namespace rowmarket

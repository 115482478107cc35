#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <variant>
#include <vector>

#include "rowmarket/distributions.hpp"
#include "rowmarket/mechanisms.hpp"
#include "rowmarket/numeric.hpp"
#include "rowmarket/random.hpp"
#include "rowmarket/strategy.hpp"

// Expected benefit of a subject vehicle A with a fixed VOT, by two independent
// routes: Monte Carlo over (T_A, V_B, T_B) and tensor-product Gauss-Legendre
// quadrature over the same variables. Quadrature runs in standard-normal
// space truncated at the 1e-6 tail quantiles. The T_B axis is split where the
// bids tie and the V_B axis where the opponent's participation changes, so
// every sub-integrand is smooth.

namespace rowmarket {

struct ExpectedBenefitQuery {
    double vot_a = 0.0;
    MechanismSpec mechanism;
    PopulationModel population;
    Regime regime = HonestRegime{};

    void validate() const {
        if (!(vot_a > 0.0) || !std::isfinite(vot_a)) {
            throw invalid_input("query: fixed VOT of A must be positive");
        }
        mechanism.validate();
        population.validate();
    }
};

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Out-of-game credit flows for the credit scheme, in cents per traveler per game.
struct CreditAccounts {
    double per_capita_credit = 0.0;
    double expected_trading_loss = 0.0;
    double recipient_fraction = 1.0;  // population share that receives credit
    double std_error = 0.0;           // of per_capita_credit (Monte Carlo only)

    [[nodiscard]] double net_topup() const { return per_capita_credit - expected_trading_loss; }
};

struct QuadratureOptions {
    int nodes = 64;  // per dimension and per smooth piece

    void validate() const {
        if (nodes < 64) {
            throw invalid_input("quadrature needs at least 64 nodes per dimension");
        }
    }
};

inline constexpr std::size_t kMinMonteCarloSamples = 1000;

namespace detail {

struct Strategy {
    double reported;
    bool participates;
};

inline Strategy strategy_at(const Regime& regime, double vot) {
    if (const auto* a = std::get_if<AbandonmentRegime>(&regime)) {
        return {vot, a->participation.at(vot)};
    }
    if (const auto* d = std::get_if<DishonestRegime>(&regime)) {
        return {d->reports.at(vot), true};
    }
    return {vot, true};
}

inline Settlement settle_with(const Regime& regime, const MechanismSpec& mech, double va,
                              const Strategy& sa, double ta, double vb, const Strategy& sb,
                              double tb) {
    const GameInstance game{{va, sa.reported, ta, sa.participates},
                            {vb, sb.reported, tb, sb.participates}};
    switch (regime.index()) {
        case 1: return settle_abandonment(game, mech);
        case 2: return settle_dishonest(game, mech);
        default: return settle_honest(game, mech);
    }
}

inline Settlement settle_in_regime(const Regime& regime, const MechanismSpec& mech, double va,
                                   double ta, double vb, double tb) {
    return settle_with(regime, mech, va, strategy_at(regime, va), ta, vb, strategy_at(regime, vb),
                       tb);
}

inline numeric::NormalNodes vot_nodes(const Regime& regime, const LogNormalParams& vot, int n) {
    return piecewise_normal_nodes(smooth_pieces(regime, vot), n);
}

/// Quadrature of f(settlement) over (T_A, V_B, T_B) for fixed v_A.
template <typename F>
double integrate_fixed_a(double va, const MechanismSpec& mech, const PopulationModel& pop,
                         const Regime& regime, int n, F&& f) {
    const double zmax = numeric::tail_cutoff();
    const LogNormalParams& T = pop.time_saving;
    const numeric::NormalNodes ta_nodes = numeric::normal_nodes(-zmax, zmax, n);
    const numeric::NormalNodes vb_nodes = vot_nodes(regime, pop.vot, n);
    const Strategy sa = strategy_at(regime, va);
    const double ra = sa.reported;
    numeric::NormalNodes tb_nodes;
    tb_nodes.z.reserve(2 * n);
    tb_nodes.w.reserve(2 * n);
    double total = 0.0;
    for (std::size_t i = 0; i < ta_nodes.z.size(); ++i) {
        const double ta = std::exp(T.mu + T.sigma * ta_nodes.z[i]);
        double sum_vb = 0.0;
        for (std::size_t j = 0; j < vb_nodes.z.size(); ++j) {
            const double vb = std::exp(pop.vot.mu + pop.vot.sigma * vb_nodes.z[j]);
            const Strategy sb = strategy_at(regime, vb);
            const double rb = sb.reported;
            // A wins iff t_b <= ra * ta / rb.
            const double zb = std::clamp((std::log(ra * ta / rb) - T.mu) / T.sigma, -zmax, zmax);
            tb_nodes.z.clear();
            tb_nodes.w.clear();
            numeric::append_normal_nodes(tb_nodes, -zmax, zb, n);
            numeric::append_normal_nodes(tb_nodes, zb, zmax, n);
            double sum_tb = 0.0;
            for (std::size_t k = 0; k < tb_nodes.z.size(); ++k) {
                const double tb = std::exp(T.mu + T.sigma * tb_nodes.z[k]);
                sum_tb += tb_nodes.w[k] * f(settle_with(regime, mech, va, sa, ta, vb, sb, tb));
            }
            sum_vb += vb_nodes.w[j] * sum_tb;
        }
        total += ta_nodes.w[i] * sum_vb;
    }
    return total;
}

/// Quadrature of f(v_A, settlement) over all four random variables.
template <typename F>
double integrate_population(const MechanismSpec& mech, const PopulationModel& pop,
                            const Regime& regime, int n, F&& f) {
    const numeric::NormalNodes va_nodes = vot_nodes(regime, pop.vot, n);
    double total = 0.0;
    for (std::size_t i = 0; i < va_nodes.z.size(); ++i) {
        const double va = std::exp(pop.vot.mu + pop.vot.sigma * va_nodes.z[i]);
        total += va_nodes.w[i] *
                 integrate_fixed_a(va, mech, pop, regime, n,
                                   [&](const Settlement& s) { return f(va, s); });
    }
    return total;
}

struct RunningMoments {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }

    void merge(const RunningMoments& o) {
        if (o.n == 0) {
            return;
        }
        const double na = static_cast<double>(n);
        const double nb = static_cast<double>(o.n);
        const double d = o.mean - mean;
        const double tot = na + nb;
        mean += d * nb / tot;
        m2 += o.m2 + d * d * na * nb / tot;
        n += o.n;
    }
};

inline constexpr std::size_t kChunkSize = 1u << 15;

/// Sample mean of draw(engine) over n draws, split into fixed chunks with one
/// engine each so the result does not depend on the worker count.
template <typename Draw>
Estimate monte_carlo(std::size_t n, const Substream& stream, unsigned workers, Draw&& draw) {
    const std::size_t chunks = (n + kChunkSize - 1) / kChunkSize;
    std::vector<RunningMoments> parts(chunks);
    numeric::parallel_for(chunks, workers, [&](std::size_t c) {
        auto engine = stream.engine(c);
        const std::size_t count = std::min(kChunkSize, n - c * kChunkSize);
        RunningMoments m;
        for (std::size_t i = 0; i < count; ++i) {
            m.add(draw(engine));
        }
        parts[c] = m;
    });
    RunningMoments total;
    for (const auto& p : parts) {
        total.merge(p);
    }
    const double var = total.n > 1 ? total.m2 / static_cast<double>(total.n - 1) : 0.0;
    return {total.mean, std::sqrt(std::max(var, 0.0) / static_cast<double>(total.n))};
}

/// A traveler who opts out takes the priority coin against every opponent, so
/// its game benefit is p_A * v * E[T] in closed form.
inline bool abstains(const Regime& regime, double vot) {
    return regime.index() == 1 && !strategy_at(regime, vot).participates;
}

inline bool receives_credit(const MechanismSpec& mech, const Regime& regime, double vot) {
    if (mech.credit_policy == CreditPolicy::all_travelers) {
        return true;
    }
    return strategy_at(regime, vot).participates;
}

inline double recipient_fraction(const MechanismSpec& mech, const PopulationModel& pop,
                                 const Regime& regime) {
    if (mech.credit_policy == CreditPolicy::all_travelers) {
        return 1.0;
    }
    if (const auto* a = std::get_if<AbandonmentRegime>(&regime)) {
        return a->participation.participating_mass(pop.vot);
    }
    return 1.0;
}

inline CreditAccounts make_accounts(const MechanismSpec& mech, double fraction,
                                    double mean_payment, double payment_se) {
    CreditAccounts acc;
    acc.recipient_fraction = fraction;
    if (fraction > 0.0) {
        acc.per_capita_credit = mean_payment / fraction;
        acc.std_error = payment_se / fraction;
    }
    acc.expected_trading_loss = mech.credit_loss_rate * acc.per_capita_credit;
    return acc;
}

inline void require_credit(const MechanismSpec& mech) {
    if (mech.kind != MechanismKind::credit_second_price) {
        throw invalid_input("credit accounts exist only for the credit scheme");
    }
}

inline void require_samples(std::size_t n) {
    if (n < kMinMonteCarloSamples) {
        throw invalid_input("Monte Carlo needs at least 1000 samples");
    }
}

}  // namespace detail

/// Credit per traveler equals the population-mean operator payment per
/// traveler-game, shared among recipients (everyone, or joiners only).
inline CreditAccounts compute_credit_accounts_quadrature(const MechanismSpec& mech,
                                                         const PopulationModel& pop,
                                                         const Regime& regime,
                                                         const QuadratureOptions& opts = {}) {
    detail::require_credit(mech);
    mech.validate();
    pop.validate();
    opts.validate();
    const double fraction = detail::recipient_fraction(mech, pop, regime);
    const double payment = detail::integrate_population(
        mech, pop, regime, opts.nodes,
        [](double, const Settlement& s) { return s.payment_by_a(); });
    return detail::make_accounts(mech, fraction, payment, 0.0);
}

inline CreditAccounts compute_credit_accounts_mc(const MechanismSpec& mech,
                                                 const PopulationModel& pop, const Regime& regime,
                                                 std::size_t n, const Substream& stream,
                                                 unsigned workers = 1) {
    detail::require_credit(mech);
    detail::require_samples(n);
    mech.validate();
    pop.validate();
    const double fraction = detail::recipient_fraction(mech, pop, regime);
    const Estimate payment = detail::monte_carlo(n, stream, workers, [&](std::mt19937_64& eng) {
        std::lognormal_distribution<double> V(pop.vot.mu, pop.vot.sigma);
        std::lognormal_distribution<double> T(pop.time_saving.mu, pop.time_saving.sigma);
        const double va = V(eng);
        const double ta = T(eng);
        const double vb = V(eng);
        const double tb = T(eng);
        return detail::settle_in_regime(regime, mech, va, ta, vb, tb).payment_by_a();
    });
    return detail::make_accounts(mech, fraction, payment.value, payment.std_error);
}

/// Population-mean operator revenue per game, integrated at game level.
inline double mean_operator_revenue_per_game(const MechanismSpec& mech, const PopulationModel& pop,
                                             const Regime& regime,
                                             const QuadratureOptions& opts = {}) {
    mech.validate();
    pop.validate();
    opts.validate();
    return detail::integrate_population(
        mech, pop, regime, opts.nodes,
        [](double, const Settlement& s) { return s.operator_revenue; });
}

inline double expected_basic_benefit(double vot_a, const PopulationModel& pop, double p_a) {
    if (!(vot_a > 0.0)) {
        throw invalid_input("expected_basic_benefit: VOT must be positive");
    }
    if (!(p_a >= 0.0 && p_a <= 1.0)) {
        throw invalid_input("expected_basic_benefit: p_A must lie in [0,1]");
    }
    pop.validate();
    return p_a * vot_a * pop.time_saving.mean();
}

/// Expected benefit of A by quadrature, including credit flows for the credit
/// scheme. Pass precomputed accounts to avoid re-integrating them per query.
inline double expected_benefit_quadrature(const ExpectedBenefitQuery& q,
                                          const QuadratureOptions& opts = {},
                                          std::optional<CreditAccounts> credit = std::nullopt) {
    q.validate();
    opts.validate();
    double value =
        detail::abstains(q.regime, q.vot_a)
            ? q.mechanism.p_priority_a * q.vot_a * q.population.time_saving.mean()
            : detail::integrate_fixed_a(q.vot_a, q.mechanism, q.population, q.regime, opts.nodes,
                                        [](const Settlement& s) { return s.benefit_a; });
    if (q.mechanism.kind == MechanismKind::credit_second_price) {
        if (!credit) {
            credit = compute_credit_accounts_quadrature(q.mechanism, q.population, q.regime, opts);
        }
        if (detail::receives_credit(q.mechanism, q.regime, q.vot_a)) {
            value += credit->net_topup();
        }
    }
    return value;
}

inline Estimate expected_benefit_mc(const ExpectedBenefitQuery& q, std::size_t n,
                                    const Substream& stream, unsigned workers = 1,
                                    std::optional<CreditAccounts> credit = std::nullopt) {
    q.validate();
    detail::require_samples(n);
    const auto& pop = q.population;
    Estimate est;
    if (detail::abstains(q.regime, q.vot_a)) {
        est.value = q.mechanism.p_priority_a * q.vot_a * pop.time_saving.mean();
    } else {
        est = detail::monte_carlo(n, stream, workers, [&](std::mt19937_64& eng) {
            std::lognormal_distribution<double> V(pop.vot.mu, pop.vot.sigma);
            std::lognormal_distribution<double> T(pop.time_saving.mu, pop.time_saving.sigma);
            const double ta = T(eng);
            const double vb = V(eng);
            const double tb = T(eng);
            return detail::settle_in_regime(q.regime, q.mechanism, q.vot_a, ta, vb, tb).benefit_a;
        });
    }
    if (q.mechanism.kind == MechanismKind::credit_second_price) {
        if (!credit) {
            credit = compute_credit_accounts_mc(q.mechanism, pop, q.regime, n,
                                                stream.child("credit"), workers);
        }
        if (detail::receives_credit(q.mechanism, q.regime, q.vot_a)) {
            const double keep = 1.0 - q.mechanism.credit_loss_rate;
            est.value += credit->net_topup();
            est.std_error = std::hypot(est.std_error, keep * credit->std_error);
        }
    }
    return est;
}

/// Expected benefit minus the basic benefit p_A * v_A * E[T].
inline double expected_extra_benefit(double expected_benefit, const ExpectedBenefitQuery& q,
                                     std::optional<double> baseline_p_a = std::nullopt) {
    return expected_benefit -
           expected_basic_benefit(q.vot_a, q.population,
                                  baseline_p_a.value_or(q.mechanism.p_priority_a));
}

inline double expected_extra_benefit_quadrature(const ExpectedBenefitQuery& q,
                                                const QuadratureOptions& opts = {},
                                                std::optional<CreditAccounts> credit = std::nullopt) {
    return expected_extra_benefit(expected_benefit_quadrature(q, opts, credit), q);
}

inline Estimate expected_extra_benefit_mc(const ExpectedBenefitQuery& q, std::size_t n,
                                          const Substream& stream, unsigned workers = 1,
                                          std::optional<CreditAccounts> credit = std::nullopt) {
    Estimate e = expected_benefit_mc(q, n, stream, workers, credit);
    e.value = expected_extra_benefit(e.value, q);
    return e;
}

/// P(v_A T_A >= V_B T_B) under honest play.
inline double win_probability_quadrature(double vot_a, const PopulationModel& pop,
                                         const QuadratureOptions& opts = {}) {
    opts.validate();
    pop.validate();
    const HonestRegime honest;
    return detail::integrate_fixed_a(vot_a, MechanismSpec::first_price(), pop, honest, opts.nodes,
                                     [](const Settlement& s) { return s.a_won ? 1.0 : 0.0; });
}

}  // namespace rowmarket

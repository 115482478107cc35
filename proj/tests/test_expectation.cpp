#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rowmarket/expectation.hpp"
#include "rowmarket/pair_kernel.hpp"

using namespace rowmarket;

namespace {

// Quadrature drops the 1e-6 tails of each axis; first moments of a log-normal
// lose up to about 2e-5 of their value that way.
constexpr double kTruncation = 5e-5;

const PopulationModel kPop = default_population();

ExpectedBenefitQuery query(double v, MechanismSpec m, Regime r = HonestRegime{}) {
    return {v, m, kPop, std::move(r)};
}

ParticipationMap upper_half_participates() {
    const VotGrid g = VotGrid::log_spaced(kPop.vot, 40, 0.005, 0.995);
    std::vector<std::uint8_t> flags(g.size(), 0);
    for (std::size_t i = g.size() / 2; i < g.size(); ++i) {
        flags[i] = 1;
    }
    return {g, flags};
}

ReportMap shaded_reports(double factor) {
    const VotGrid g = VotGrid::log_spaced(kPop.vot, 40, 0.005, 0.995);
    std::vector<double> r(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        r[i] = g[i] * factor;
    }
    return {g, r};
}

}  // namespace

TEST(ExpectedBenefit, FirstPriceHonestIsZero) {
    const auto q = query(1.1, MechanismSpec::first_price());
    EXPECT_EQ(expected_benefit_quadrature(q), 0.0);
    const auto e = expected_benefit_mc(q, 5000, Substream(1));
    EXPECT_EQ(e.value, 0.0);
    EXPECT_EQ(e.std_error, 0.0);
}

TEST(ExpectedBenefit, SecondPriceAgainstPointMassOpponent) {
    // A nearly degenerate opponent: V_B T_B concentrated at 0.05 cents, far
    // below v_A T_A, so A always wins and pays that constant. Monte Carlo has
    // no truncation and reproduces it to the width of the distribution.
    PopulationModel pop{{std::log(0.05), 1e-9}, {0.0, 1e-9}};
    const ExpectedBenefitQuery q{3.0, MechanismSpec::second_price(), pop, HonestRegime{}};
    const double expected = 3.0 * pop.time_saving.mean() - 0.05;
    EXPECT_NEAR(expected_benefit_quadrature(q), expected, kTruncation * expected);
    EXPECT_NEAR(expected_benefit_mc(q, 2000, Substream(2)).value, expected, 1e-7);
}

TEST(ExpectedBenefit, SecondPriceMatchesIndependentOracle) {
    for (double v : {0.3, 0.8, 1.5, 3.0}) {
        const double ref = oracle::second_price_benefit(v, kPop.vot.mu, kPop.vot.sigma,
                                                        kPop.time_saving.mu, kPop.time_saving.sigma);
        EXPECT_NEAR(expected_benefit_quadrature(query(v, MechanismSpec::second_price())), ref,
                    kTruncation * std::max(1.0, std::abs(ref)))
            << v;
    }
}

TEST(ExpectedBenefit, EqualSplitMatchesIndependentOracle) {
    for (double v : {0.4, 0.8, 2.0}) {
        const double ref = oracle::equal_split_benefit(v, kPop.vot.mu, kPop.vot.sigma,
                                                       kPop.time_saving.mu, kPop.time_saving.sigma);
        EXPECT_NEAR(expected_benefit_quadrature(query(v, MechanismSpec::transaction(0))), ref,
                    kTruncation * ref);
    }
}

TEST(ExpectedBenefit, MonteCarloAgreesWithQuadratureAtMedian) {
    const auto q = query(0.8, MechanismSpec::second_price());
    const auto mc = expected_benefit_mc(q, 400000, Substream(8, "sp"));
    EXPECT_LE(std::abs(mc.value - expected_benefit_quadrature(q)), 3.0 * mc.std_error);
    EXPECT_GT(mc.std_error, 0.0);
}

TEST(ExpectedBenefit, EqualSplitBeatsBaselineAtMedian) {
    const auto q = query(quantile(kPop.vot, 0.5), MechanismSpec::transaction(0));
    EXPECT_GT(expected_extra_benefit_quadrature(q), 0.0);
}

TEST(ExpectedBenefit, QuadratureConvergesWithNodes) {
    for (const auto& m : {MechanismSpec::second_price(), MechanismSpec::transaction(1)}) {
        const auto q = query(1.0, m);
        const double a = expected_benefit_quadrature(q, {128});
        const double b = expected_benefit_quadrature(q, {256});
        EXPECT_LT(std::abs(a - b), 1e-4 * std::abs(b)) << m.label();
    }
}

TEST(ExpectedBenefit, RejectsInvalidQueries) {
    EXPECT_THROW(expected_benefit_quadrature(query(0.0, MechanismSpec::second_price())), invalid_input);
    EXPECT_THROW(expected_benefit_quadrature(query(1.0, MechanismSpec::second_price()), {32}),
                 invalid_input);
    EXPECT_THROW(expected_benefit_mc(query(1.0, MechanismSpec::second_price()), 999, Substream(1)),
                 invalid_input);
    auto bad = query(1.0, MechanismSpec::transaction(0));
    bad.mechanism.chi = 5;
    EXPECT_THROW(expected_benefit_quadrature(bad), invalid_input);
}

TEST(ExpectedBenefit, MonteCarloIndependentOfWorkerCount) {
    const auto q = query(0.9, MechanismSpec::transaction(1));
    const auto a = expected_benefit_mc(q, 100000, Substream(5), 1);
    const auto b = expected_benefit_mc(q, 100000, Substream(5), 4);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.std_error, b.std_error);
}

TEST(BasicBenefit, Examples) {
    EXPECT_EQ(expected_basic_benefit(0.8, kPop, 0.0), 0.0);
    EXPECT_NEAR(expected_basic_benefit(0.8, kPop, 0.5), 0.8, 1e-14);
    EXPECT_NEAR(expected_basic_benefit(1.0, kPop, 1.0), kPop.time_saving.mean(), 1e-15);
    EXPECT_THROW(expected_basic_benefit(1.0, kPop, 1.5), invalid_input);
    EXPECT_THROW(expected_basic_benefit(-1.0, kPop, 0.5), invalid_input);
}

TEST(ExtraBenefit, FirstPriceIsMinusBasic) {
    for (double v : {0.2, 0.8, 2.5}) {
        const auto q = query(v, MechanismSpec::first_price());
        EXPECT_EQ(expected_extra_benefit_quadrature(q), -expected_basic_benefit(v, kPop, 0.5));
    }
}

TEST(ExtraBenefit, DecompositionIsExact) {
    const auto q = query(1.3, MechanismSpec::transaction(1));
    const double b = expected_benefit_quadrature(q);
    EXPECT_EQ(expected_extra_benefit_quadrature(q), b - expected_basic_benefit(1.3, kPop, 0.5));
    EXPECT_EQ(expected_extra_benefit(b, q, 0.25), b - expected_basic_benefit(1.3, kPop, 0.25));
}

TEST(ExtraBenefit, SecondPricePositiveAtUpperDecile) {
    EXPECT_GT(expected_extra_benefit_quadrature(
                  query(quantile(kPop.vot, 0.9), MechanismSpec::second_price())),
              0.0);
}

TEST(ExtraBenefit, CreditIsSecondPricePlusNetCredit) {
    const auto credit = compute_credit_accounts_quadrature(MechanismSpec::credit(), kPop, HonestRegime{});
    for (double v : {0.3, 0.8, 2.0}) {
        const double sp = expected_extra_benefit_quadrature(query(v, MechanismSpec::second_price()));
        const double cr = expected_extra_benefit_quadrature(query(v, MechanismSpec::credit()), {}, credit);
        EXPECT_NEAR(cr - sp, credit.per_capita_credit * 0.9, 1e-12);
    }
}

TEST(CreditAccounts, HonestCreditMatchesClosedForm) {
    const auto acc = compute_credit_accounts_quadrature(MechanismSpec::credit(), kPop, HonestRegime{});
    const double revenue = oracle::mean_second_price_revenue(kPop.vot.mu, kPop.vot.sigma,
                                                             kPop.time_saving.mu, kPop.time_saving.sigma);
    // Each traveler pays in half of its games on average.
    EXPECT_NEAR(acc.per_capita_credit, 0.5 * revenue, kTruncation * revenue);
    EXPECT_NEAR(acc.expected_trading_loss, 0.1 * acc.per_capita_credit, 1e-15);
    EXPECT_EQ(acc.recipient_fraction, 1.0);
    const auto mc = compute_credit_accounts_mc(MechanismSpec::credit(), kPop, HonestRegime{}, 400000,
                                               Substream(3, "credit"));
    EXPECT_LE(std::abs(mc.per_capita_credit - acc.per_capita_credit), 3.0 * mc.std_error);
}

TEST(CreditAccounts, RevenueNeutral) {
    const auto m = MechanismSpec::credit();
    const auto acc = compute_credit_accounts_quadrature(m, kPop, HonestRegime{});
    const double revenue = mean_operator_revenue_per_game(m, kPop, HonestRegime{});
    // Every traveler takes part in games as A and as B: credit paid out per
    // traveler-game is half the revenue per game.
    EXPECT_NEAR(2.0 * acc.per_capita_credit * acc.recipient_fraction, revenue, 1e-9 * revenue);
}

TEST(CreditAccounts, EdgeCases) {
    auto m = MechanismSpec::credit(CreditPolicy::joiners_only);
    const VotGrid g = VotGrid::log_spaced(kPop.vot, 32, 0.005, 0.995);
    const AbandonmentRegime nobody{ParticipationMap(g, std::vector<std::uint8_t>(g.size(), 0))};
    const auto acc = compute_credit_accounts_quadrature(m, kPop, nobody);
    EXPECT_EQ(acc.per_capita_credit, 0.0);
    EXPECT_EQ(acc.recipient_fraction, 0.0);
    m.credit_loss_rate = 0.0;
    EXPECT_EQ(compute_credit_accounts_quadrature(m, kPop, HonestRegime{}).expected_trading_loss, 0.0);
    EXPECT_THROW(compute_credit_accounts_quadrature(MechanismSpec::second_price(), kPop, HonestRegime{}),
                 invalid_input);
}

TEST(CreditAccounts, JoinersShareAmongParticipants) {
    const AbandonmentRegime regime{upper_half_participates()};
    const auto all = compute_credit_accounts_quadrature(MechanismSpec::credit(CreditPolicy::all_travelers),
                                                        kPop, regime);
    const auto joiners = compute_credit_accounts_quadrature(
        MechanismSpec::credit(CreditPolicy::joiners_only), kPop, regime);
    EXPECT_NEAR(joiners.recipient_fraction, 0.5, 0.02);
    EXPECT_NEAR(joiners.per_capita_credit * joiners.recipient_fraction, all.per_capita_credit, 1e-12);
    // A non-joiner receives nothing under the joiners-only policy.
    const double low = quantile(kPop.vot, 0.1);
    const ExpectedBenefitQuery q{low, MechanismSpec::credit(CreditPolicy::joiners_only), kPop, regime};
    EXPECT_EQ(expected_extra_benefit_quadrature(q, {}, joiners), 0.0);
}

TEST(Abandonment, NonParticipantEarnsBaseline) {
    const AbandonmentRegime regime{upper_half_participates()};
    for (const auto& m : {MechanismSpec::second_price(), MechanismSpec::transaction(0)}) {
        const ExpectedBenefitQuery q{0.4, m, kPop, regime};
        EXPECT_EQ(expected_extra_benefit_quadrature(q), 0.0);
        EXPECT_EQ(expected_extra_benefit_mc(q, 2000, Substream(1)).value, 0.0);
    }
}

TEST(Abandonment, ParticipantMatchesMonteCarlo) {
    const AbandonmentRegime regime{upper_half_participates()};
    const ExpectedBenefitQuery q{1.4, MechanismSpec::second_price(), kPop, regime};
    const auto mc = expected_benefit_mc(q, 400000, Substream(4, "ab"));
    EXPECT_LE(std::abs(mc.value - expected_benefit_quadrature(q)), 3.0 * mc.std_error);
}

TEST(Dishonest, TruthfulReportsMatchHonest) {
    const DishonestRegime regime{shaded_reports(1.0)};
    for (const auto& m : {MechanismSpec::second_price(), MechanismSpec::transaction(1)}) {
        const ExpectedBenefitQuery d{0.9, m, kPop, regime};
        EXPECT_NEAR(expected_benefit_quadrature(d), expected_benefit_quadrature(query(0.9, m)), 1e-12);
    }
}

TEST(Dishonest, QuadratureMatchesMonteCarlo) {
    const DishonestRegime regime{shaded_reports(0.6)};
    const ExpectedBenefitQuery q{1.0, MechanismSpec::first_price(), kPop, regime};
    const auto mc = expected_benefit_mc(q, 400000, Substream(6, "dis"));
    EXPECT_LE(std::abs(mc.value - expected_benefit_quadrature(q)), 3.0 * mc.std_error);
    EXPECT_GT(expected_benefit_quadrature(q), 0.0);
}

TEST(WinProbability, MonotoneInVot) {
    double prev = 0.0;
    for (double p = 0.01; p < 1.0; p += 0.07) {
        const double w = win_probability_quadrature(quantile(kPop.vot, p), kPop);
        EXPECT_GE(w, prev);
        prev = w;
    }
    EXPECT_NEAR(win_probability_quadrature(quantile(kPop.vot, 0.5), kPop), 0.5, 1e-5);
}

TEST(PairKernel, MatchesExpectationQuadrature) {
    const PairKernel k(kPop.time_saving);
    // Against a fixed opponent VOT the kernel is exact; integrate it over V_B
    // and compare with the three-dimensional quadrature.
    auto integrate = [&](const MechanismSpec& m, double v, double c, double factor) {
        return oracle::normal_expectation([&](double z) {
            const double vb = std::exp(kPop.vot.mu + kPop.vot.sigma * z);
            return k.game_benefit(m, v, c, factor * vb);
        });
    };
    for (const auto& m : {MechanismSpec::first_price(), MechanismSpec::second_price(),
                          MechanismSpec::transaction(0), MechanismSpec::transaction(1)}) {
        const ExpectedBenefitQuery honest{1.1, m, kPop, HonestRegime{}};
        EXPECT_NEAR(integrate(m, 1.1, 1.1, 1.0), expected_benefit_quadrature(honest), kTruncation) << m.label();
        // Everyone shades to 70% of their VOT.
        const VotGrid g = VotGrid::log_spaced(kPop.vot, 40, 0.005, 0.995);
        std::vector<double> rep(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            rep[i] = 0.7 * g[i];
        }
        const ReportMap reports(g, rep);
        const double ca = reports.at(1.1);
        EXPECT_NEAR(ca, 0.77, 1e-12);
        const ExpectedBenefitQuery dis{1.1, m, kPop, DishonestRegime{reports}};
        EXPECT_NEAR(integrate(m, 1.1, ca, 0.7), expected_benefit_quadrature(dis), kTruncation) << m.label();
    }
}

TEST(PairKernel, HarmonicTableMatchesDirect) {
    const PairKernel k(kPop.time_saving);
    for (double lr = -3.0; lr <= 3.0; lr += 0.0371) {
        const double direct = k.harmonic(lr, false) - k.harmonic(lr, true);
        EXPECT_NEAR(k.harmonic_net(lr), direct, 1e-10);
    }
    EXPECT_NEAR(k.harmonic_net(20.0), k.harmonic(20.0, false) - k.harmonic(20.0, true), 1e-15);
    EXPECT_NEAR(k.win_probability(0.0), 0.5, 1e-15);
    EXPECT_NEAR(k.winner_time(-50.0), k.mean_time(), 1e-12);
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "rowmarket/mechanisms.hpp"

using namespace rowmarket;

namespace {

const MechanismSpec kAll[] = {MechanismSpec::first_price(), MechanismSpec::second_price(),
                              MechanismSpec::credit(), MechanismSpec::transaction(0),
                              MechanismSpec::transaction(1)};

GameInstance random_game(std::mt19937_64& eng) {
    std::lognormal_distribution<double> v(std::log(0.8), 0.5);
    std::lognormal_distribution<double> t(0.57, 0.5);
    return GameInstance::honest(v(eng), t(eng), v(eng), t(eng));
}

GameInstance with_reports(GameInstance g, double ra, double rb) {
    g.a.reported_vot = ra;
    g.b.reported_vot = rb;
    return g;
}

void expect_same(const Settlement& x, const Settlement& y) {
    const double scale = 1e-12 * std::max({1.0, std::abs(x.benefit_a), std::abs(x.benefit_b)});
    EXPECT_NEAR(x.benefit_a, y.benefit_a, scale);
    EXPECT_NEAR(x.benefit_b, y.benefit_b, scale);
    EXPECT_NEAR(x.operator_revenue, y.operator_revenue, scale);
    EXPECT_EQ(x.a_won, y.a_won);
}

}  // namespace

TEST(AlphaSecondPrice, Examples) {
    EXPECT_EQ(alpha_second_price(4.0, 1.0), 0.75);
    EXPECT_EQ(alpha_second_price(2.5, 2.5), 0.0);
    EXPECT_DOUBLE_EQ(alpha_second_price(5.0, 2.0), 0.6);
    EXPECT_EQ(alpha_second_price(3.0, 0.0), 1.0);
}

TEST(AlphaSecondPrice, Errors) {
    EXPECT_THROW(alpha_second_price(0.0, 0.0), invalid_input);
    EXPECT_THROW(alpha_second_price(-1.0, 0.0), invalid_input);
    EXPECT_THROW(alpha_second_price(1.0, 2.0), invalid_input);
    EXPECT_THROW(alpha_second_price(1.0, -0.5), invalid_input);
}

TEST(AlphaTransaction, Examples) {
    EXPECT_EQ(alpha_transaction(0, 4.0, 1.0), 0.5);
    EXPECT_EQ(alpha_transaction(0, 0.1, 9.0), 0.5);
    EXPECT_EQ(alpha_transaction(1, 3.0, 3.0), 0.5);
    EXPECT_DOUBLE_EQ(alpha_transaction(1, 4.0, 1.0), 0.8);
}

TEST(AlphaTransaction, MatchesAmalgamatedFormula) {
    std::mt19937_64 eng(3);
    std::uniform_real_distribution<double> u(0.01, 10.0);
    for (int chi : {0, 1}) {
        for (int i = 0; i < 100; ++i) {
            const double a = u(eng);
            const double b = u(eng);
            const double formula = ((a - 1.0) * chi + 1.0) / ((a + b - 2.0) * chi + 2.0);
            EXPECT_NEAR(alpha_transaction(chi, a, b), formula, 1e-12);
        }
    }
    EXPECT_THROW(alpha_transaction(2, 1.0, 1.0), invalid_input);
    EXPECT_THROW(alpha_transaction(1, 0.0, 1.0), invalid_input);
}

TEST(SettleHonest, SecondPriceWorkedExample) {
    const auto s = settle_honest(GameInstance::honest(2.0, 2.0, 0.5, 2.0), MechanismSpec::second_price());
    EXPECT_EQ(s.benefit_a, 3.0);
    EXPECT_EQ(s.benefit_b, 0.0);
    EXPECT_EQ(s.operator_revenue, 1.0);
    EXPECT_TRUE(s.a_won);
}

TEST(SettleHonest, FirstPriceWinnerSurrendersEverything) {
    const auto s = settle_honest(GameInstance::honest(1.0, 1.0, 2.0, 2.0), MechanismSpec::first_price());
    EXPECT_EQ(s.benefit_a, 0.0);
    EXPECT_EQ(s.benefit_b, 0.0);
    EXPECT_EQ(s.operator_revenue, 4.0);
    EXPECT_FALSE(s.a_won);
}

TEST(SettleHonest, EqualSplitTransaction) {
    const auto s = settle_honest(GameInstance::honest(2.0, 2.0, 0.5, 2.0), MechanismSpec::transaction(0));
    EXPECT_EQ(s.benefit_a, 2.0);
    EXPECT_EQ(s.benefit_b, 2.0);
    EXPECT_EQ(s.operator_revenue, 0.0);
}

TEST(SettleHonest, ProportionalTransactionUsesValueShares) {
    // A: 4, B: 1; A keeps 4/5 of 4 and pays B 1/5 of 4.
    const auto s = settle_honest(GameInstance::honest(2.0, 2.0, 0.5, 2.0), MechanismSpec::transaction(1));
    EXPECT_DOUBLE_EQ(s.benefit_a, 3.2);
    EXPECT_DOUBLE_EQ(s.benefit_b, 0.8);
    // B wins: A (value 1) receives 1/5 of B's value 4.
    const auto t = settle_honest(GameInstance::honest(0.5, 2.0, 2.0, 2.0), MechanismSpec::transaction(1));
    EXPECT_FALSE(t.a_won);
    EXPECT_DOUBLE_EQ(t.benefit_a, 0.8);
    EXPECT_DOUBLE_EQ(t.benefit_b, 3.2);
}

TEST(SettleHonest, TiesGoToA) {
    for (const auto& m : kAll) {
        EXPECT_TRUE(settle_honest(GameInstance::honest(1.0, 2.0, 2.0, 1.0), m).a_won);
    }
}

TEST(SettleHonest, RejectsNonPositiveInputs) {
    EXPECT_THROW(settle_honest(GameInstance::honest(0.0, 1.0, 1.0, 1.0), MechanismSpec::second_price()),
                 invalid_input);
    EXPECT_THROW(settle_honest(GameInstance::honest(1.0, -1.0, 1.0, 1.0), MechanismSpec::second_price()),
                 invalid_input);
}

TEST(SettleHonest, ConservationAndSigns) {
    std::mt19937_64 eng(77);
    for (int i = 0; i < 20000; ++i) {
        const auto g = random_game(eng);
        const double w = std::max(g.a.value(), g.b.value());
        const double l = std::min(g.a.value(), g.b.value());
        for (const auto& m : kAll) {
            const auto s = settle_honest(g, m);
            const double total = s.benefit_a + s.benefit_b + s.operator_revenue;
            EXPECT_LE(std::abs(total - w), 1e-9 * w);
            EXPECT_GE(s.benefit_a, 0.0);
            EXPECT_GE(s.benefit_b, 0.0);
            if (m.kind == MechanismKind::direct_transaction) {
                EXPECT_EQ(s.operator_revenue, 0.0);
            }
            if (m.kind == MechanismKind::second_price) {
                const double winner = s.a_won ? s.benefit_a : s.benefit_b;
                const double loser = s.a_won ? s.benefit_b : s.benefit_a;
                EXPECT_NEAR(winner, w - l, 1e-12 * w);
                EXPECT_EQ(loser, 0.0);
            }
        }
    }
}

TEST(SettleHonest, ArgmaxInvariantUnderCommonScaling) {
    std::mt19937_64 eng(78);
    std::uniform_real_distribution<double> k(0.01, 100.0);
    for (int i = 0; i < 2000; ++i) {
        const auto g = random_game(eng);
        const double c = k(eng);
        GameInstance scaled = g;
        scaled.a.true_vot *= c;
        scaled.a.reported_vot *= c;
        scaled.b.true_vot *= c;
        scaled.b.reported_vot *= c;
        for (const auto& m : kAll) {
            EXPECT_EQ(settle_honest(g, m).a_won, settle_honest(scaled, m).a_won);
            EXPECT_EQ(settle_dishonest(g, m).a_won, settle_dishonest(scaled, m).a_won);
            EXPECT_EQ(settle_abandonment(g, m, true).a_won, settle_abandonment(scaled, m, true).a_won);
        }
    }
}

TEST(SettleAbandonment, CoinFlipMeans) {
    auto m = MechanismSpec::first_price();
    const auto g = GameInstance::honest(2.0, 2.0, 0.5, 2.0);
    const auto s = settle_abandonment(g, m, false);
    EXPECT_EQ(s.benefit_a, 2.0);
    EXPECT_EQ(s.benefit_b, 0.5);
    EXPECT_EQ(s.operator_revenue, 0.0);
    m.p_priority_a = 1.0;
    const auto t = settle_abandonment(g, m, false);
    EXPECT_EQ(t.benefit_a, 4.0);
    EXPECT_EQ(t.benefit_b, 0.0);
    EXPECT_EQ(t.operator_revenue, 0.0);
}

TEST(SettleAbandonment, GammaOneEqualsHonest) {
    std::mt19937_64 eng(79);
    for (int i = 0; i < 2000; ++i) {
        const auto g = random_game(eng);
        for (const auto& m : kAll) {
            expect_same(settle_abandonment(g, m, true), settle_honest(g, m));
            expect_same(settle_abandonment(g, m), settle_honest(g, m));
        }
    }
}

TEST(SettleAbandonment, OptOutForcesCoin) {
    auto g = GameInstance::honest(2.0, 2.0, 0.5, 2.0);
    g.b.participates = false;
    const auto s = settle_abandonment(g, MechanismSpec::second_price());
    EXPECT_EQ(s.benefit_a, 2.0);
    EXPECT_EQ(s.operator_revenue, 0.0);
    EXPECT_THROW(settle_abandonment(g, MechanismSpec::second_price(), true), invalid_input);
}

TEST(SettleDishonest, FirstPriceShading) {
    const auto honest = settle_dishonest(with_reports(GameInstance::honest(2.0, 2.0, 0.5, 2.0), 2.0, 0.5),
                                         MechanismSpec::first_price());
    EXPECT_EQ(honest.benefit_a, 0.0);
    const auto shaded = settle_dishonest(with_reports(GameInstance::honest(2.0, 2.0, 0.5, 2.0), 1.0, 0.5),
                                         MechanismSpec::first_price());
    EXPECT_TRUE(shaded.a_won);
    EXPECT_EQ(shaded.benefit_a, 2.0);
    EXPECT_EQ(shaded.operator_revenue, 2.0);
}

TEST(SettleDishonest, SecondPriceWinnerPaysLoserBid) {
    // v_A = 2, report 3, t_A = 2; B's reported bid is 1 cent.
    const auto s = settle_dishonest(with_reports(GameInstance::honest(2.0, 2.0, 0.5, 2.0), 3.0, 0.5),
                                    MechanismSpec::second_price());
    EXPECT_TRUE(s.a_won);
    EXPECT_NEAR(s.benefit_a, 3.0, 1e-12);
    EXPECT_NEAR(s.operator_revenue, 1.0, 1e-12);
    EXPECT_NEAR((2.0 - (1.0 / 6.0) * 3.0) * 2.0, s.benefit_a, 1e-12);
}

TEST(SettleDishonest, OverbiddingCanLose) {
    // A overstates, wins, and pays more than its value is worth.
    const auto s = settle_dishonest(with_reports(GameInstance::honest(0.5, 2.0, 1.0, 2.0), 2.0, 1.0),
                                    MechanismSpec::second_price());
    EXPECT_TRUE(s.a_won);
    EXPECT_NEAR(s.benefit_a, 1.0 - 2.0, 1e-12);
}

TEST(SettleDishonest, TransactionUsesReportedShares) {
    // Reported bids: A 4, B 1. chi = 1: A keeps its value minus (1/5) of its bid.
    const auto s = settle_dishonest(with_reports(GameInstance::honest(1.5, 2.0, 0.5, 2.0), 2.0, 0.5),
                                    MechanismSpec::transaction(1));
    EXPECT_TRUE(s.a_won);
    EXPECT_NEAR(s.benefit_b, 0.8, 1e-12);
    EXPECT_NEAR(s.benefit_a, 3.0 - 0.8, 1e-12);
    EXPECT_EQ(s.operator_revenue, 0.0);
    // B wins on reports: A receives alpha_A (its share) of B's bid.
    const auto t = settle_dishonest(with_reports(GameInstance::honest(1.5, 2.0, 0.5, 2.0), 0.25, 0.5),
                                    MechanismSpec::transaction(1));
    EXPECT_FALSE(t.a_won);
    EXPECT_NEAR(t.benefit_a, (0.5 / 1.5) * 1.0, 1e-12);
    EXPECT_NEAR(t.benefit_b, 0.5 * 2.0 - (0.5 / 1.5) * 1.0, 1e-12);
}

TEST(SettleDishonest, TruthfulReportsEqualHonest) {
    std::mt19937_64 eng(80);
    for (int i = 0; i < 2000; ++i) {
        const auto g = random_game(eng);
        for (const auto& m : kAll) {
            expect_same(settle_dishonest(g, m), settle_honest(g, m));
        }
    }
}

TEST(MechanismSpec, LabelsRoundTripAndValidation) {
    for (const char* label : {"first_price", "second_price", "credit_all", "credit_joiners",
                              "transaction_chi0", "transaction_chi1"}) {
        EXPECT_EQ(mechanism_from_label(label).label(), label);
    }
    EXPECT_THROW(mechanism_from_label("dutch"), invalid_input);
    MechanismSpec m = MechanismSpec::transaction(1);
    m.chi = 3;
    EXPECT_THROW(m.validate(), invalid_input);
    m = MechanismSpec::credit();
    m.credit_loss_rate = 1.0;
    EXPECT_THROW(m.validate(), invalid_input);
    m.credit_loss_rate = 0.1;
    m.p_priority_a = -0.1;
    EXPECT_THROW(m.validate(), invalid_input);
}

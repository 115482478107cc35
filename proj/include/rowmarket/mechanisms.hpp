#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "rowmarket/numeric.hpp"

// Per-game settlement rules for the four right-of-way instruments.
//
// Values are products v*t in cents. In every regime the vehicle whose (reported)
// value is at least the other's wins, so exact ties go to vehicle A.

namespace rowmarket {

enum class MechanismKind { first_price, second_price, credit_second_price, direct_transaction };

/// credit(0) distributes to every traveler, credit(1) only to joiners.
enum class CreditPolicy { all_travelers, joiners_only };

struct MechanismSpec {
    MechanismKind kind = MechanismKind::second_price;
    int chi = 0;  // split rule for direct transactions: 0 equal, 1 proportional
    CreditPolicy credit_policy = CreditPolicy::all_travelers;
    double credit_loss_rate = 0.10;
    double p_priority_a = 0.5;  // chance A gets priority when no game is played

    void validate() const {
        if (chi != 0 && chi != 1) {
            throw invalid_input("chi must be 0 or 1");
        }
        if (!(credit_loss_rate >= 0.0 && credit_loss_rate < 1.0)) {
            throw invalid_input("credit_loss_rate must lie in [0,1)");
        }
        if (!(p_priority_a >= 0.0 && p_priority_a <= 1.0)) {
            throw invalid_input("p_priority_a must lie in [0,1]");
        }
    }

    [[nodiscard]] bool is_auction() const {
        return kind == MechanismKind::second_price || kind == MechanismKind::credit_second_price;
    }

    /// Column label used in output tables.
    [[nodiscard]] std::string label() const {
        switch (kind) {
            case MechanismKind::first_price: return "first_price";
            case MechanismKind::second_price: return "second_price";
            case MechanismKind::credit_second_price:
                return credit_policy == CreditPolicy::all_travelers ? "credit_all" : "credit_joiners";
            case MechanismKind::direct_transaction:
                return chi == 0 ? "transaction_chi0" : "transaction_chi1";
        }
        return "unknown";
    }

    friend bool operator==(const MechanismSpec&, const MechanismSpec&) = default;

    static MechanismSpec first_price() { return {MechanismKind::first_price}; }
    static MechanismSpec second_price() { return {MechanismKind::second_price}; }
    static MechanismSpec credit(CreditPolicy policy = CreditPolicy::all_travelers) {
        MechanismSpec m{MechanismKind::credit_second_price};
        m.credit_policy = policy;
        return m;
    }
    static MechanismSpec transaction(int chi) {
        MechanismSpec m{MechanismKind::direct_transaction};
        m.chi = chi;
        return m;
    }
};

inline MechanismSpec mechanism_from_label(std::string_view label) {
    if (label == "first_price") return MechanismSpec::first_price();
    if (label == "second_price") return MechanismSpec::second_price();
    if (label == "credit_all") return MechanismSpec::credit(CreditPolicy::all_travelers);
    if (label == "credit_joiners") return MechanismSpec::credit(CreditPolicy::joiners_only);
    if (label == "transaction_chi0") return MechanismSpec::transaction(0);
    if (label == "transaction_chi1") return MechanismSpec::transaction(1);
    throw invalid_input("unknown mechanism '" + std::string(label) + "'");
}

struct VehicleState {
    double true_vot = 0.0;      // cents/s
    double reported_vot = 0.0;  // cents/s
    double time_saving = 0.0;   // s
    bool participates = true;

    [[nodiscard]] double value() const { return true_vot * time_saving; }
    [[nodiscard]] double bid() const { return reported_vot * time_saving; }
};

struct GameInstance {
    VehicleState a;
    VehicleState b;

    static GameInstance honest(double vot_a, double time_a, double vot_b, double time_b) {
        return {{vot_a, vot_a, time_a, true}, {vot_b, vot_b, time_b, true}};
    }

    void validate() const {
        for (const VehicleState* v : {&a, &b}) {
            if (!(v->true_vot > 0.0) || !(v->reported_vot > 0.0) || !(v->time_saving > 0.0)) {
                throw invalid_input("vehicle VOT, reported VOT and time saving must be positive");
            }
        }
    }
};

/// Monetary-equivalent outcome of one game, in cents.
struct Settlement {
    double benefit_a = 0.0;
    double benefit_b = 0.0;
    double operator_revenue = 0.0;
    bool a_won = false;

    /// What A paid to the operator (zero unless A won an auction).
    [[nodiscard]] double payment_by_a() const { return a_won ? operator_revenue : 0.0; }
};

/// Return rate of the winner in a second-price auction.
inline double alpha_second_price(double winner_value, double loser_value) {
    if (!(winner_value > 0.0)) {
        throw invalid_input("alpha_second_price: winner value must be positive");
    }
    if (!(loser_value >= 0.0)) {
        throw invalid_input("alpha_second_price: loser value must be nonnegative");
    }
    if (winner_value < loser_value) {
        throw invalid_input("alpha_second_price: winner value below loser value");
    }
    return (winner_value - loser_value) / winner_value;
}

/// Share of the winner's value that goes to vehicle A in a direct transaction:
/// one half for chi = 0, value_a / (value_a + value_b) for chi = 1.
inline double alpha_transaction(int chi, double value_a, double value_b) {
    if (chi != 0 && chi != 1) {
        throw invalid_input("alpha_transaction: chi must be 0 or 1");
    }
    if (!(value_a > 0.0) || !(value_b > 0.0)) {
        throw invalid_input("alpha_transaction: values must be positive");
    }
    // Same as ((a - 1) chi + 1) / ((a + b - 2) chi + 2) without the cancellation.
    return chi == 0 ? 0.5 : value_a / (value_a + value_b);
}

namespace detail {

inline Settlement assign(bool a_won, double winner, double loser, double op) {
    return a_won ? Settlement{winner, loser, op, true} : Settlement{loser, winner, op, false};
}

}  // namespace detail

/// Both vehicles report truthfully and play.
inline Settlement settle_honest(const GameInstance& game, const MechanismSpec& spec) {
    game.validate();
    const double va = game.a.value();
    const double vb = game.b.value();
    const bool a_won = va >= vb;
    const double w = a_won ? va : vb;
    const double l = a_won ? vb : va;
    switch (spec.kind) {
        case MechanismKind::first_price:
            return detail::assign(a_won, 0.0, 0.0, w);
        case MechanismKind::second_price:
        case MechanismKind::credit_second_price: {
            const double alpha = alpha_second_price(w, l);
            return detail::assign(a_won, alpha * w, 0.0, (1.0 - alpha) * w);
        }
        case MechanismKind::direct_transaction: {
            // A receives alpha_A of the winner's value whether it wins or loses.
            const double alpha_a = alpha_transaction(spec.chi, va, vb);
            return {alpha_a * w, (1.0 - alpha_a) * w, 0.0, a_won};
        }
    }
    throw invalid_input("settle_honest: unknown mechanism");
}

/// Mean settlement when either vehicle may opt out. With gamma = 0 no game is
/// played and priority goes to A with probability p_priority_a; the returned
/// benefits are the probability-weighted means. a_won then records only
/// which value was larger.
inline Settlement settle_abandonment(const GameInstance& game, const MechanismSpec& spec,
                                     bool gamma) {
    game.validate();
    if (gamma && !(game.a.participates && game.b.participates)) {
        throw invalid_input("settle_abandonment: gamma = 1 requires both vehicles to participate");
    }
    if (gamma) {
        return settle_honest(game, spec);
    }
    const double va = game.a.value();
    const double vb = game.b.value();
    return {spec.p_priority_a * va, (1.0 - spec.p_priority_a) * vb, 0.0, va >= vb};
}

inline Settlement settle_abandonment(const GameInstance& game, const MechanismSpec& spec) {
    return settle_abandonment(game, spec, game.a.participates && game.b.participates);
}

/// Winner and payments follow reported VOTs; time savings are valued at true VOT.
inline Settlement settle_dishonest(const GameInstance& game, const MechanismSpec& spec) {
    game.validate();
    const double bid_a = game.a.bid();
    const double bid_b = game.b.bid();
    const bool a_won = bid_a >= bid_b;
    const VehicleState& winner = a_won ? game.a : game.b;
    const double w_bid = a_won ? bid_a : bid_b;
    const double l_bid = a_won ? bid_b : bid_a;
    const double w_value = winner.value();
    switch (spec.kind) {
        case MechanismKind::first_price:
            return detail::assign(a_won, w_value - w_bid, 0.0, w_bid);
        case MechanismKind::second_price:
        case MechanismKind::credit_second_price: {
            const double beta = 1.0 - alpha_second_price(w_bid, l_bid);
            return detail::assign(a_won, w_value - beta * w_bid, 0.0, beta * w_bid);
        }
        case MechanismKind::direct_transaction: {
            // alpha_A is evaluated on A's reported value as in the honest rule,
            // so A's transfer is alpha_A of the winner's bid when A loses and
            // the winner keeps the rest.
            const double alpha_a = alpha_transaction(spec.chi, bid_a, bid_b);
            const double to_loser = a_won ? (1.0 - alpha_a) * w_bid : alpha_a * w_bid;
            return detail::assign(a_won, w_value - to_loser, to_loser, 0.0);
        }
    }
    throw invalid_input("settle_dishonest: unknown mechanism");
}

}  // namespace rowmarket

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "rowmarket/distributions.hpp"
#include "rowmarket/mechanisms.hpp"
#include "rowmarket/numeric.hpp"

namespace rowmarket {

/// Expectations over two independent time savings T_A, T_B ~ LogNormal(mu, sigma)
/// restricted to the event T_A >= rho * T_B, indexed by log_rho = ln(rho).
///
/// With D = ln T_A - ln T_B ~ N(0, 2 sigma^2), tilting by T_A or T_B shifts the
/// mean of D by +sigma^2 or -sigma^2, which gives the indicator moments in
/// closed form. The harmonic terms used by the proportional transaction split
/// reduce to one-dimensional integrals over D.
class PairKernel {
public:
    explicit PairKernel(const LogNormalParams& time, int nodes = 48)
        : sigma2_(time.sigma * time.sigma),
          scale_(time.sigma * std::numbers::sqrt2),
          mean_(time.mean()),
          nodes_(nodes) {
        time.validate();
        net_table_.resize(kTableSize);
        for (std::size_t i = 0; i < kTableSize; ++i) {
            const double lr = -kTableReach + kTableStep * static_cast<double>(i);
            net_table_[i] = harmonic(lr, false) - harmonic(lr, true);
        }
    }

    [[nodiscard]] double mean_time() const { return mean_; }

    /// P(T_A >= rho T_B)
    [[nodiscard]] double win_probability(double log_rho) const {
        return numeric::normal_cdf(-log_rho / scale_);
    }
    /// E[T_A; T_A >= rho T_B]
    [[nodiscard]] double winner_time(double log_rho) const {
        return mean_ * numeric::normal_cdf((sigma2_ - log_rho) / scale_);
    }
    /// E[T_B; T_A >= rho T_B]
    [[nodiscard]] double opponent_time_when_won(double log_rho) const {
        return mean_ * numeric::normal_cdf((-sigma2_ - log_rho) / scale_);
    }
    /// E[T_A rho T_B / (T_A + rho T_B); T_A >= rho T_B] (won) or on the complement.
    [[nodiscard]] double harmonic(double log_rho, bool won) const {
        // Under the T_B tilt, D ~ N(-sigma^2, 2 sigma^2); write D = -sigma^2 + scale * x.
        constexpr double kReach = 8.5;
        const double cut = std::clamp((log_rho + sigma2_) / scale_, -kReach, kReach);
        const double lo = won ? cut : -kReach;
        const double hi = won ? kReach : cut;
        if (!(hi > lo)) {
            return 0.0;
        }
        const numeric::GaussRule& rule = numeric::gauss_legendre(nodes_);
        const double half = 0.5 * (hi - lo);
        const double mid = 0.5 * (hi + lo);
        double sum = 0.0;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
            const double x = mid + half * rule.nodes[k];
            const double d = -sigma2_ + scale_ * x;
            // rho e^D / (e^D + rho)
            const double g = 1.0 / (std::exp(-d) + std::exp(-log_rho));
            sum += rule.weights[k] * numeric::normal_pdf(x) * g;
        }
        return mean_ * half * sum;
    }

    /// harmonic(log_rho, false) - harmonic(log_rho, true), interpolated from a
    /// fine table (four-point Lagrange) inside |log_rho| < 12.
    [[nodiscard]] double harmonic_net(double log_rho) const {
        const double pos = (log_rho + kTableReach) / kTableStep;
        const auto base = static_cast<std::ptrdiff_t>(std::floor(pos)) - 1;
        if (base < 0 || base + 3 >= static_cast<std::ptrdiff_t>(kTableSize)) {
            return harmonic(log_rho, false) - harmonic(log_rho, true);
        }
        const double t = pos - static_cast<double>(base + 1);  // in [0, 1)
        const double* f = &net_table_[static_cast<std::size_t>(base)];
        return -t * (t - 1.0) * (t - 2.0) / 6.0 * f[0] + (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0 * f[1] -
               (t + 1.0) * t * (t - 2.0) / 2.0 * f[2] + (t + 1.0) * t * (t - 1.0) / 6.0 * f[3];
    }

    /// E over (T_A, T_B) of A's benefit in one game when A has true VOT v and
    /// reports c against an opponent reporting r. Honest play is c = v, r = v_B.
    [[nodiscard]] double game_benefit(const MechanismSpec& mech, double v, double c, double r) const {
        const double log_rho = std::log(r / c);
        switch (mech.kind) {
            case MechanismKind::first_price:
                return (v - c) * winner_time(log_rho);
            case MechanismKind::second_price:
            case MechanismKind::credit_second_price:
                return v * winner_time(log_rho) - r * opponent_time_when_won(log_rho);
            case MechanismKind::direct_transaction:
                if (mech.chi == 0) {
                    return (v - 0.5 * c) * winner_time(log_rho) +
                           0.5 * r * (mean_ - opponent_time_when_won(log_rho));
                }
                return v * winner_time(log_rho) + c * harmonic_net(log_rho);
        }
        return 0.0;
    }

    /// E over (T_A, T_B) of what A pays the operator in a second-price game.
    [[nodiscard]] double auction_payment(double c, double r) const {
        return r * opponent_time_when_won(std::log(r / c));
    }

private:
    static constexpr double kTableReach = 12.0;
    static constexpr double kTableStep = 1.0 / 256.0;
    static constexpr std::size_t kTableSize = 6145;  // 2 * reach / step + 1

    double sigma2_;
    double scale_;
    double mean_;
    int nodes_;
    std::vector<double> net_table_;
};

}  // namespace rowmarket

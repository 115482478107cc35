#pragma once

// Reference computations written independently of the library: plain
// composite Simpson rules and closed forms derived by hand. Tests compare the
// library against these, never against itself.

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n % 2 != 0) {
        ++n;
    }
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) {
        s += (i % 2 == 1 ? 4.0 : 2.0) * f(a + i * h);
    }
    return s * h / 3.0;
}

inline double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

inline double Phi(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double lognormal_pdf(double mu, double sigma, double x) {
    const double z = (std::log(x) - mu) / sigma;
    return std::exp(-0.5 * z * z) / (x * sigma * std::sqrt(2.0 * std::numbers::pi));
}

/// CDF by integrating the density in u = ln x from far in the left tail.
inline double lognormal_cdf_by_integration(double mu, double sigma, double x) {
    const double lo = mu - 12.0 * sigma;
    const double hi = std::log(x);
    return simpson([&](double u) { return lognormal_pdf(mu, sigma, std::exp(u)) * std::exp(u); }, lo,
                   hi, 20000);
}

/// E over Z ~ N(0,1) of g(Z), Simpson on [-10, 10].
inline double normal_expectation(const std::function<double(double)>& g, int n = 4000) {
    return simpson([&](double z) { return phi(z) * g(z); }, -10.0, 10.0, n);
}

/// Second-price honest benefit of A with VOT v: integrate over V_B with the
/// time savings handled in closed form. For fixed a = v, b = V_B and
/// T ~ LogNormal(mt, st) iid, with lr = ln(b / a) and s = st * sqrt 2:
///   E[a T_A; a T_A >= b T_B] = a ET Phi((st^2 - lr)/s)
///   E[b T_B; a T_A >= b T_B] = b ET Phi((-st^2 - lr)/s)
inline double second_price_benefit(double v, double mv, double sv, double mt, double st) {
    const double et = std::exp(mt + 0.5 * st * st);
    const double s = st * std::numbers::sqrt2;
    return normal_expectation([&](double z) {
        const double b = std::exp(mv + sv * z);
        const double lr = std::log(b / v);
        return v * et * Phi((st * st - lr) / s) - b * et * Phi((-st * st - lr) / s);
    });
}

/// Equal-split transaction benefit: (1/2) of whichever value wins.
inline double equal_split_benefit(double v, double mv, double sv, double mt, double st) {
    const double et = std::exp(mt + 0.5 * st * st);
    const double s = st * std::numbers::sqrt2;
    return normal_expectation([&](double z) {
        const double b = std::exp(mv + sv * z);
        const double lr = std::log(b / v);
        const double a_wins = v * et * Phi((st * st - lr) / s);
        const double b_wins = b * et * (1.0 - Phi((-st * st - lr) / s));
        return 0.5 * (a_wins + b_wins);
    });
}

/// Mean second-price revenue per game: E[min(V_A T_A, V_B T_B)]. The product
/// of two lognormals is lognormal, so X = V T ~ LogNormal(mv + mt, sqrt(sv^2 + st^2)),
/// and for iid X1, X2 with log-sd w, E[min] = 2 E[X] Phi(-w / sqrt 2).
inline double mean_second_price_revenue(double mv, double sv, double mt, double st) {
    const double w = std::sqrt(sv * sv + st * st);
    const double ex = std::exp(mv + mt + 0.5 * w * w);
    return 2.0 * ex * Phi(-w / std::numbers::sqrt2);
}

}  // namespace oracle

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

namespace rowmarket {

/// Raised for any argument that violates an operation's precondition.
class invalid_input : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace numeric {

/// Probability left in each tail when an integral over a log-normal
/// variable is truncated to a finite range.
inline constexpr double kTailProbability = 1e-6;

inline double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw invalid_input("normal_quantile: p must lie in (0,1), got " + std::to_string(p));
    }
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

/// Standard-normal deviate bounding the central 1 - 2*kTailProbability mass.
inline double tail_cutoff() {
    static const double z = normal_quantile(1.0 - kTailProbability);
    return z;
}

struct GaussRule {
    std::vector<double> nodes;   // on [-1, 1]
    std::vector<double> weights;
};

namespace detail {

inline GaussRule make_gauss_legendre(int n) {
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

}  // namespace detail

/// Gauss-Legendre rule with n points on [-1, 1]; rules are cached.
inline const GaussRule& gauss_legendre(int n) {
    if (n < 1) {
        throw invalid_input("gauss_legendre: need at least one node");
    }
    static std::mutex mutex;
    static std::map<int, GaussRule> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) {
        it = cache.emplace(n, detail::make_gauss_legendre(n)).first;
    }
    return it->second;
}

/// Quadrature points (z, weight) for the standard normal density restricted
/// to [lo, hi]; weights already include phi(z).
struct NormalNodes {
    std::vector<double> z;
    std::vector<double> w;
};

inline void append_normal_nodes(NormalNodes& out, double lo, double hi, int n) {
    if (!(hi > lo)) {
        return;
    }
    const GaussRule& rule = gauss_legendre(n);
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    for (int k = 0; k < n; ++k) {
        const double z = mid + half * rule.nodes[k];
        out.z.push_back(z);
        out.w.push_back(half * rule.weights[k] * normal_pdf(z));
    }
}

inline NormalNodes normal_nodes(double lo, double hi, int n) {
    NormalNodes out;
    out.z.reserve(n);
    out.w.reserve(n);
    append_normal_nodes(out, lo, hi, n);
    return out;
}

inline double round_to(double x, double quantum) {
    return std::round(x / quantum) * quantum;
}

inline unsigned resolve_workers(unsigned requested) {
    if (requested > 0) {
        return requested;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n). Each index must write only its own output slot,
/// which keeps results independent of the worker count.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
    workers = std::min<std::size_t>(resolve_workers(workers), std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

}  // namespace numeric
}  // namespace rowmarket

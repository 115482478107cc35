#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <utility>
#include <variant>
#include <vector>

#include "rowmarket/distributions.hpp"
#include "rowmarket/numeric.hpp"

namespace rowmarket {

/// Strictly increasing VOT levels. Level j stands for the cell between the
/// geometric midpoints to its neighbours; the outer cells extend to 0 and
/// infinity.
class VotGrid {
public:
    VotGrid() = default;

    explicit VotGrid(std::vector<double> values) : values_(std::move(values)) {
        if (values_.size() < 2) {
            throw invalid_input("VotGrid: need at least two levels");
        }
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!(values_[i] > 0.0) || !std::isfinite(values_[i]) ||
                (i > 0 && !(values_[i] > values_[i - 1]))) {
                throw invalid_input("VotGrid: levels must be positive and strictly increasing");
            }
        }
        bounds_.resize(values_.size() - 1);
        for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
            bounds_[i] = std::sqrt(values_[i] * values_[i + 1]);
        }
    }

    /// n levels log-spaced between the p_lo and p_hi quantiles of dist.
    static VotGrid log_spaced(const LogNormalParams& dist, std::size_t n, double p_lo, double p_hi) {
        if (n < 2) {
            throw invalid_input("VotGrid: need at least two levels");
        }
        const double lo = std::log(quantile(dist, p_lo));
        const double hi = std::log(quantile(dist, p_hi));
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
        }
        return VotGrid(std::move(v));
    }

    [[nodiscard]] std::size_t size() const { return values_.size(); }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }
    [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }

    /// Lower edge of cell j (0 for the first cell).
    [[nodiscard]] double cell_lower(std::size_t j) const { return j == 0 ? 0.0 : bounds_[j - 1]; }
    /// Upper edge of cell j (infinity for the last cell).
    [[nodiscard]] double cell_upper(std::size_t j) const {
        return j + 1 == values_.size() ? std::numeric_limits<double>::infinity() : bounds_[j];
    }

    [[nodiscard]] std::size_t cell_of(double v) const {
        return static_cast<std::size_t>(std::upper_bound(bounds_.begin(), bounds_.end(), v) -
                                        bounds_.begin());
    }

    /// Probability mass of cell j under dist.
    [[nodiscard]] double cell_mass(const LogNormalParams& dist, std::size_t j) const {
        const double lo = j == 0 ? 0.0 : cdf(dist, bounds_[j - 1]);
        const double hi = j + 1 == values_.size() ? 1.0 : cdf(dist, bounds_[j]);
        return hi - lo;
    }

    friend bool operator==(const VotGrid&, const VotGrid&) = default;

private:
    std::vector<double> values_;
    std::vector<double> bounds_;
};

/// Participation choice per VOT cell, constant within each cell.
struct ParticipationMap {
    VotGrid grid;
    std::vector<std::uint8_t> participates;

    ParticipationMap() = default;
    ParticipationMap(VotGrid g, std::vector<std::uint8_t> flags)
        : grid(std::move(g)), participates(std::move(flags)) {
        if (participates.size() != grid.size()) {
            throw invalid_input("ParticipationMap: one flag per grid level required");
        }
        for (auto f : participates) {
            if (f > 1) {
                throw invalid_input("ParticipationMap: flags must be 0 or 1");
            }
        }
    }

    [[nodiscard]] bool at(double vot) const { return participates[grid.cell_of(vot)] != 0; }

    /// Population mass of participating cells.
    [[nodiscard]] double participating_mass(const LogNormalParams& dist) const {
        double m = 0.0;
        for (std::size_t j = 0; j < grid.size(); ++j) {
            if (participates[j]) {
                m += grid.cell_mass(dist, j);
            }
        }
        return m;
    }

    /// Maximal runs of cells sharing one choice, as [lower, upper) VOT intervals.
    struct Segment {
        double lower;
        double upper;
        bool participates;
    };

    [[nodiscard]] std::vector<Segment> segments() const {
        std::vector<Segment> out;
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const bool p = participates[j] != 0;
            if (!out.empty() && out.back().participates == p) {
                out.back().upper = grid.cell_upper(j);
            } else {
                out.push_back({grid.cell_lower(j), grid.cell_upper(j), p});
            }
        }
        return out;
    }
};

/// Reported VOT per grid level. Between levels the log of report/true VOT is
/// interpolated linearly in log VOT; beyond the ends the ratio is held.
struct ReportMap {
    VotGrid grid;
    std::vector<double> reported;

    ReportMap() = default;
    ReportMap(VotGrid g, std::vector<double> reports)
        : grid(std::move(g)), reported(std::move(reports)) {
        if (reported.size() != grid.size()) {
            throw invalid_input("ReportMap: one report per grid level required");
        }
        log_ratio_.resize(reported.size());
        log_grid_.resize(reported.size());
        for (std::size_t j = 0; j < reported.size(); ++j) {
            if (!(reported[j] > 0.0) || !std::isfinite(reported[j])) {
                throw invalid_input("ReportMap: reported VOT must be positive");
            }
            log_grid_[j] = std::log(grid[j]);
            log_ratio_[j] = std::log(reported[j] / grid[j]);
        }
    }

    static ReportMap truthful(const VotGrid& g) { return ReportMap(g, g.values()); }

    /// VOT levels where the interpolated report bends: the slope of the log
    /// ratio changes there (flat extensions count as slope zero).
    [[nodiscard]] std::vector<double> kinks() const {
        std::vector<double> out;
        const std::size_t n = log_grid_.size();
        double before = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double after = j + 1 < n ? (log_ratio_[j + 1] - log_ratio_[j]) /
                                                 (log_grid_[j + 1] - log_grid_[j])
                                           : 0.0;
            if (std::abs(after - before) > 1e-12) {
                out.push_back(grid[j]);
            }
            before = after;
        }
        return out;
    }

    [[nodiscard]] double at(double vot) const {
        const double x = std::log(vot);
        if (x <= log_grid_.front()) {
            return vot * std::exp(log_ratio_.front());
        }
        if (x >= log_grid_.back()) {
            return vot * std::exp(log_ratio_.back());
        }
        const auto hi = static_cast<std::size_t>(
            std::upper_bound(log_grid_.begin(), log_grid_.end(), x) - log_grid_.begin());
        const std::size_t lo = hi - 1;
        const double t = (x - log_grid_[lo]) / (log_grid_[hi] - log_grid_[lo]);
        const double lr = log_ratio_[lo] + t * (log_ratio_[hi] - log_ratio_[lo]);
        return lr == 0.0 ? vot : vot * std::exp(lr);
    }

private:
    std::vector<double> log_grid_;
    std::vector<double> log_ratio_;
};

struct HonestRegime {};
struct AbandonmentRegime {
    ParticipationMap participation;
};
struct DishonestRegime {
    ReportMap reports;
};

using Regime = std::variant<HonestRegime, AbandonmentRegime, DishonestRegime>;

/// Split of the truncated standard-normal range of a VOT variable into pieces
/// on which the regime's strategy is smooth: participation runs for
/// abandonment, spans between report kinks for dishonest play.
inline std::vector<std::pair<double, double>> smooth_pieces(const Regime& regime,
                                                            const LogNormalParams& vot) {
    const double zmax = numeric::tail_cutoff();
    auto to_z = [&](double v) {
        if (!(v > 0.0)) {
            return -zmax;
        }
        if (!std::isfinite(v)) {
            return zmax;
        }
        return std::clamp((std::log(v) - vot.mu) / vot.sigma, -zmax, zmax);
    };
    std::vector<std::pair<double, double>> out;
    if (const auto* a = std::get_if<AbandonmentRegime>(&regime)) {
        for (const auto& seg : a->participation.segments()) {
            const double lo = to_z(seg.lower);
            const double hi = to_z(seg.upper);
            if (hi > lo) {
                out.emplace_back(lo, hi);
            }
        }
        return out;
    }
    double lo = -zmax;
    if (const auto* d = std::get_if<DishonestRegime>(&regime)) {
        for (double k : d->reports.kinks()) {
            const double z = to_z(k);
            if (z > lo && z < zmax) {
                out.emplace_back(lo, z);
                lo = z;
            }
        }
    }
    out.emplace_back(lo, zmax);
    return out;
}

/// Gauss-Legendre nodes for the pieces: n on a single piece, otherwise at
/// least four per piece and never fewer than n in total.
inline numeric::NormalNodes piecewise_normal_nodes(const std::vector<std::pair<double, double>>& pieces,
                                                   int n) {
    const auto p = static_cast<int>(pieces.size());
    const int per = p <= 1 ? n : std::max(4, (n + std::min(p, 16) - 1) / std::min(p, 16));
    numeric::NormalNodes nodes;
    for (const auto& [lo, hi] : pieces) {
        numeric::append_normal_nodes(nodes, lo, hi, per);
    }
    return nodes;
}

}  // namespace rowmarket

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ranksel/error.hpp"
#include "ranksel/loss_panel.hpp"
#include "ranksel/rng.hpp"

// Generalized rank-sum statistics over pairs of loss columns.
//
// For a reference loss vector a and a competitor b (both length n, evaluated
// on the same points) the statistic is
//
//     u = n^-2 * sum_{k,l} 1{a_k < b_l}
//
// over ALL ordered pairs, diagonal included. Exact ties a_k == b_l are settled
// by a fair coin drawn from the supplied stream, in (k, l) lexicographic order.
// The fast path below consumes coins in exactly that order, so it reproduces
// the O(n^2) double loop bit for bit when given the same stream.
//
// Scale convention used throughout: u and mu = u - 1/2 are O(1) means, se is
// the standard error of mu, and sqrt(n) factors are applied only by the
// bootstrap test statistic.

namespace ranksel {

enum class Projection {
    row_only,    ///< literal per-row bracket: mean over l of xi(k, l), centered
    symmetrized  ///< full Hajek projection: row part plus column part
};

inline const char* to_string(Projection p)
{
    return p == Projection::row_only ? "row_only" : "symmetrized";
}

/// Lower bound on the per-observation variance before dividing or taking sqrt.
inline constexpr double kVarianceFloor = 1e-6;

namespace detail {

inline void check_finite(std::span<const double> v, const char* what)
{
    for (std::size_t i = 0; i < v.size(); ++i)
        reject_if(!std::isfinite(v[i]),
                  std::string(what) + ": non-finite value at index " + std::to_string(i));
}

/// Indices of v sorted by value; equal values keep ascending index order.
inline std::vector<std::size_t> stable_order(std::span<const double> v)
{
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    return idx;
}

/// Integer pair counts behind u: row[k] = #{l : a_k beats b_l}, col[l] =
/// #{k : a_k beats b_l}, where "beats" means strictly smaller or a won coin.
struct PairCounts {
    std::vector<std::int64_t> row;
    std::vector<std::int64_t> col;
    std::int64_t total = 0;
};

inline PairCounts pair_counts(std::span<const double> a, std::span<const double> b, Engine& ties)
{
    const std::size_t n = a.size();
    PairCounts out;
    out.row.assign(n, 0);
    out.col.assign(n, 0);

    const auto order_b = stable_order(b);
    std::vector<double> sorted_b(n);
    for (std::size_t i = 0; i < n; ++i) sorted_b[i] = b[order_b[i]];
    std::vector<double> sorted_a(a.begin(), a.end());
    std::sort(sorted_a.begin(), sorted_a.end());

    for (std::size_t k = 0; k < n; ++k) {
        const auto [lo, hi] = std::equal_range(sorted_b.begin(), sorted_b.end(), a[k]);
        std::int64_t wins = static_cast<std::int64_t>(sorted_b.end() - hi);
        for (auto it = lo; it != hi; ++it) {
            if (coin(ties)) {
                ++wins;
                ++out.col[order_b[static_cast<std::size_t>(it - sorted_b.begin())]];
            }
        }
        out.row[k] = wins;
        out.total += wins;
    }
    for (std::size_t l = 0; l < n; ++l) {
        out.col[l] += static_cast<std::int64_t>(
            std::lower_bound(sorted_a.begin(), sorted_a.end(), b[l]) - sorted_a.begin());
    }
    return out;
}

} // namespace detail

/// Rank-sum statistic n^-2 sum_{k,l} 1{a_k < b_l} in O(n log n).
inline double ranksum_u(std::span<const double> a, std::span<const double> b, Engine& ties)
{
    detail::require(a.size() == b.size(), "ranksum_u: length mismatch");
    detail::require(!a.empty(), "ranksum_u: empty input");
    detail::check_finite(a, "ranksum_u");
    detail::check_finite(b, "ranksum_u");
    const auto counts = detail::pair_counts(a, b, ties);
    const double n = static_cast<double>(a.size());
    return static_cast<double>(counts.total) / (n * n);
}

/// Single kernel element 1{a < b} - 1/2 with a coin on exact ties.
inline double xi_element(double a, double b, Engine& ties)
{
    detail::reject_if(!std::isfinite(a) || !std::isfinite(b), "xi_element: non-finite input");
    if (a < b) return 0.5;
    if (b < a) return -0.5;
    return coin(ties) ? 0.5 : -0.5;
}

/// Right-closed empirical CDF: F(x) = #{v <= x} / n.
class EmpiricalCdf {
public:
    explicit EmpiricalCdf(std::span<const double> values) : sorted_(values.begin(), values.end())
    {
        detail::require(!sorted_.empty(), "EmpiricalCdf: empty sample");
        std::sort(sorted_.begin(), sorted_.end());
    }

    double operator()(double x) const
    {
        const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
        return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
    }

    const std::vector<double>& sorted_values() const { return sorted_; }

private:
    std::vector<double> sorted_;
};

/// Standard error of mu for the pair (a = reference losses, b = competitor
/// losses): sqrt(max(floor, 1/6 - 2 c) / n), where c is the 1/n-normalized
/// covariance between F_a(b_i) and F_b(a_i).
inline double se_ranksum(std::span<const double> a, std::span<const double> b)
{
    detail::require(a.size() == b.size(), "se_ranksum: length mismatch");
    detail::require(a.size() >= 4, "se_ranksum: need n >= 4");
    const std::size_t n = a.size();
    const EmpiricalCdf fa(a);
    const EmpiricalCdf fb(b);
    double s1 = 0.0, s2 = 0.0, s12 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = fa(b[i]);
        const double y = fb(a[i]);
        s1 += x;
        s2 += y;
        s12 += x * y;
    }
    const double dn = static_cast<double>(n);
    const double cov = s12 / dn - (s1 / dn) * (s2 / dn);
    const double var = std::max(kVarianceFloor, 1.0 / 6.0 - 2.0 * cov);
    return std::sqrt(var / dn);
}

/// Statistics of one reference model against every competitor.
struct PairStats {
    std::size_t reference = 0;
    std::vector<std::size_t> competitors;  ///< panel column of each entry below
    std::vector<double> u;
    std::vector<double> mu;                ///< u - 1/2
    std::vector<double> se;
    Eigen::MatrixXd psi;                   ///< n x competitors, mean-zero columns
};

/// Tie stream for the pair (reference m, competitor j) under a master seed.
inline Engine pair_tie_stream(std::uint64_t seed, std::size_t m, std::size_t j)
{
    return make_engine(seed, {stream::ties, m, j});
}

/// Rank-sum statistics, standard errors and bootstrap projection scores of
/// reference model m against every other model in the panel.
inline PairStats pair_stats(const LossPanel& panel, std::size_t m, Projection projection,
                            std::uint64_t tie_seed)
{
    const std::size_t n = panel.n();
    const std::size_t models = panel.models();
    detail::require(m < models, "pair_stats: reference index out of range");
    detail::require(n >= 4, "pair_stats: need n >= 4");

    PairStats out;
    out.reference = m;
    out.psi.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(models - 1));
    const auto a = panel.column(m);
    const double dn = static_cast<double>(n);

    for (std::size_t j = 0, c = 0; j < models; ++j) {
        if (j == m) continue;
        const auto b = panel.column(j);
        Engine ties = pair_tie_stream(tie_seed, m, j);
        const auto counts = detail::pair_counts(a, b, ties);
        const double u = static_cast<double>(counts.total) / (dn * dn);
        const double mu = u - 0.5;

        auto col = out.psi.col(static_cast<Eigen::Index>(c));
        for (std::size_t k = 0; k < n; ++k) {
            const double row_mean = static_cast<double>(counts.row[k]) / dn - 0.5;
            if (projection == Projection::row_only) {
                col(static_cast<Eigen::Index>(k)) = row_mean - mu;
            } else {
                const double col_mean = static_cast<double>(counts.col[k]) / dn - 0.5;
                col(static_cast<Eigen::Index>(k)) = row_mean + col_mean - 2.0 * mu;
            }
        }
        out.competitors.push_back(j);
        out.u.push_back(u);
        out.mu.push_back(mu);
        out.se.push_back(se_ranksum(a, b));
        ++c;
    }
    return out;
}

/// Fraction of reference losses strictly below one held-out competitor loss
/// (ties by coin). A single-point conformal rank; diagnostic only.
inline double conformal_pvalue_single(std::span<const double> reference_losses,
                                      double holdout_loss, Engine& ties)
{
    detail::require(!reference_losses.empty(), "conformal_pvalue_single: empty sample");
    detail::check_finite(reference_losses, "conformal_pvalue_single");
    detail::reject_if(!std::isfinite(holdout_loss), "conformal_pvalue_single: non-finite holdout");
    std::size_t below = 0;
    for (double v : reference_losses) {
        if (v < holdout_loss || (v == holdout_loss && coin(ties))) ++below;
    }
    return static_cast<double>(below) / static_cast<double>(reference_losses.size());
}

/// Empirical first-order projections of a two-sample kernel matrix
/// K(k, l) = h(U_k, V_l): row means and column means, each minus the grand mean.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> projection_estimates(const Eigen::MatrixXd& kernel)
{
    detail::require(kernel.rows() == kernel.cols() && kernel.rows() > 0,
                    "projection_estimates: kernel matrix must be square and nonempty");
    detail::reject_if(!kernel.allFinite(), "projection_estimates: non-finite kernel value");
    const double grand = kernel.mean();
    Eigen::VectorXd g1 = kernel.rowwise().mean().array() - grand;
    Eigen::VectorXd g2 = kernel.colwise().mean().transpose().array() - grand;
    return {std::move(g1), std::move(g2)};
}

/// Covariance estimate of the projected scores: (1/n) sum_i s_i s_i^T with
/// s_i = g1_i + g2_i (rows are observations, columns coordinates).
inline Eigen::MatrixXd gamma_hat(const Eigen::MatrixXd& g1, const Eigen::MatrixXd& g2)
{
    detail::require(g1.rows() == g2.rows() && g1.cols() == g2.cols() && g1.rows() > 0,
                    "gamma_hat: shape mismatch");
    const Eigen::MatrixXd s = g1 + g2;
    Eigen::MatrixXd out = (s.transpose() * s) / static_cast<double>(s.rows());
    return 0.5 * (out + out.transpose());
}

} // namespace ranksel

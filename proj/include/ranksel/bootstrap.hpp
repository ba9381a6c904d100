#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ranksel/error.hpp"
#include "ranksel/rng.hpp"

namespace ranksel {

struct BootstrapConfig {
    std::size_t draws = 500;  ///< B
    std::uint64_t seed = 0;
};

inline constexpr std::size_t kMinBootstrapDraws = 100;

struct BootstrapResult {
    double t_obs = 0.0;
    std::vector<double> draws;
    double p_value = 0.0;
};

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

namespace detail {

// Acklam's rational approximation for the lower half, q in (0, 1/2].
inline double normal_quantile_lower(double q)
{
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double q_low = 0.02425;

    double x;
    if (q < q_low) {
        const double t = std::sqrt(-2.0 * std::log(q));
        x = (((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]) /
            ((((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1.0);
    } else {
        const double t = q - 0.5;
        const double r = t * t;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * t /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    // One Newton step against the erfc-based CDF.
    const double density = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    x -= (normal_cdf(x) - q) / density;
    return x;
}

} // namespace detail

/// Inverse standard normal CDF on (0, 1).
inline double normal_quantile(double q)
{
    detail::reject_if(!(q > 0.0 && q < 1.0), "normal_quantile: q must lie in (0, 1)");
    if (q == 0.5) return 0.0;
    if (q > 0.5) return -detail::normal_quantile_lower(1.0 - q);
    return detail::normal_quantile_lower(q);
}

/// Multiplier vector e (length n) for bootstrap draw b; a pure function of
/// (seed, b).
inline Eigen::VectorXd bootstrap_multipliers(std::uint64_t seed, std::size_t b, std::size_t n)
{
    Engine eng = make_engine(seed, {stream::bootstrap, b});
    std::normal_distribution<double> gauss;
    Eigen::VectorXd e(static_cast<Eigen::Index>(n));
    for (Eigen::Index k = 0; k < e.size(); ++k) e(k) = gauss(eng);
    return e;
}

/// Gaussian multiplier bootstrap for the minimum of column means:
/// T_b = min_j n^-1/2 sum_k psi(k, j) e_k, one multiplier vector per draw
/// shared by all columns.
inline std::vector<double> multiplier_min_bootstrap(const Eigen::MatrixXd& psi,
                                                    const BootstrapConfig& config)
{
    const auto n = psi.rows();
    const auto p = psi.cols();
    detail::require(n >= 2, "multiplier_min_bootstrap: need n >= 2");
    detail::require(p >= 1, "multiplier_min_bootstrap: need at least one column");
    detail::require(config.draws >= 1, "multiplier_min_bootstrap: need B >= 1");
    for (Eigen::Index j = 0; j < p; ++j) {
        const double scale = std::max(1.0, psi.col(j).cwiseAbs().maxCoeff());
        detail::require(std::abs(psi.col(j).mean()) <= 1e-12 * static_cast<double>(n) * scale,
                        "multiplier_min_bootstrap: score columns must be centered");
    }

    const std::size_t draws = config.draws;
    Eigen::MatrixXd e(n, static_cast<Eigen::Index>(draws));
    for (std::size_t b = 0; b < draws; ++b)
        e.col(static_cast<Eigen::Index>(b)) = bootstrap_multipliers(config.seed, b, static_cast<std::size_t>(n));

    const Eigen::MatrixXd sums = psi.transpose() * e;  // p x B
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<double> out(draws);
    for (std::size_t b = 0; b < draws; ++b)
        out[b] = sums.col(static_cast<Eigen::Index>(b)).minCoeff() * scale;
    return out;
}

/// B^-1 #{b : draws[b] < t_obs}. Draws equal to t_obs do not count.
inline double p_value(double t_obs, std::span<const double> draws)
{
    detail::require(!draws.empty(), "p_value: no bootstrap draws");
    std::size_t below = 0;
    for (double t : draws)
        if (t < t_obs) ++below;
    return static_cast<double>(below) / static_cast<double>(draws.size());
}

/// Observed statistic sqrt(n) * min_j mean_j and its bootstrap p-value.
inline BootstrapResult min_statistic_test(std::span<const double> means, const Eigen::MatrixXd& psi,
                                          const BootstrapConfig& config)
{
    detail::require(!means.empty(), "min_statistic_test: no coordinates");
    detail::require(static_cast<Eigen::Index>(means.size()) == psi.cols(),
                    "min_statistic_test: means/score column mismatch");
    BootstrapResult out;
    out.t_obs = std::sqrt(static_cast<double>(psi.rows())) *
                *std::min_element(means.begin(), means.end());
    out.draws = multiplier_min_bootstrap(psi, config);
    out.p_value = p_value(out.t_obs, out.draws);
    return out;
}

} // namespace ranksel

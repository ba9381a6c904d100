#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ranksel/error.hpp"

namespace ranksel {

/// Design matrix (no intercept column) and response.
struct Dataset {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;

    std::size_t n() const { return static_cast<std::size_t>(y.size()); }
    std::size_t d() const { return static_cast<std::size_t>(x.cols()); }

    void validate() const
    {
        detail::reject_if(x.rows() != y.size(), "dataset: design and response row counts differ");
        detail::reject_if(n() < 2, "dataset: need at least 2 observations");
        detail::reject_if(d() < 1, "dataset: need at least 1 covariate");
        detail::reject_if(!x.allFinite() || !y.allFinite(), "dataset: non-finite entry");
    }

    Dataset rows(std::span<const std::size_t> idx) const
    {
        Dataset out;
        out.x.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
        out.y.resize(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const auto src = static_cast<Eigen::Index>(idx[i]);
            out.x.row(static_cast<Eigen::Index>(i)) = x.row(src);
            out.y(static_cast<Eigen::Index>(i)) = y(src);
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Losses

struct LossFn {
    enum class Kind { squared, absolute, huber };
    Kind kind = Kind::squared;
    double tau = 1.0;  ///< Huber knot; ignored otherwise

    static LossFn squared() { return {Kind::squared, 1.0}; }
    static LossFn absolute() { return {Kind::absolute, 1.0}; }
    static LossFn huber(double tau)
    {
        detail::reject_if(!(std::isfinite(tau) && tau > 0.0), "huber loss: tau must be finite and positive");
        return {Kind::huber, tau};
    }
};

inline const char* to_string(LossFn::Kind k)
{
    switch (k) {
    case LossFn::Kind::squared: return "squared";
    case LossFn::Kind::absolute: return "absolute";
    case LossFn::Kind::huber: return "huber";
    }
    return "?";
}

inline double huber_loss(double r, double tau)
{
    const double a = std::abs(r);
    return a <= tau ? 0.5 * r * r : tau * a - 0.5 * tau * tau;
}

/// Derivative of the Huber loss: r clipped to [-tau, tau].
inline double huber_score(double r, double tau) { return std::clamp(r, -tau, tau); }

inline double loss_eval(const LossFn& fn, double residual)
{
    switch (fn.kind) {
    case LossFn::Kind::squared: return residual * residual;
    case LossFn::Kind::absolute: return std::abs(residual);
    case LossFn::Kind::huber: return huber_loss(residual, fn.tau);
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Fitted linear predictors

enum class FitStatus { ok, not_converged, failed };

inline const char* to_string(FitStatus s)
{
    switch (s) {
    case FitStatus::ok: return "ok";
    case FitStatus::not_converged: return "not_converged";
    case FitStatus::failed: return "failed";
    }
    return "?";
}

struct FittedLinear {
    double intercept = 0.0;
    Eigen::VectorXd coef;
    std::string learner;
    double tau = std::numeric_limits<double>::quiet_NaN();
    double lambda = std::numeric_limits<double>::quiet_NaN();
    FitStatus status = FitStatus::ok;
    int iterations = 0;

    bool usable() const
    {
        return status != FitStatus::failed && std::isfinite(intercept) && coef.allFinite();
    }

    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const
    {
        detail::require(x.cols() == coef.size(), "predict: covariate count mismatch");
        Eigen::VectorXd out = x * coef;
        out.array() += intercept;
        return out;
    }

    std::size_t nonzeros() const
    {
        return static_cast<std::size_t>((coef.array() != 0.0).count());
    }
};

namespace detail {

inline double median(std::vector<double> v)
{
    require(!v.empty(), "median of empty sample");
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    double hi = *mid;
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

inline double median(const Eigen::VectorXd& v)
{
    return median(std::vector<double>(v.data(), v.data() + v.size()));
}

/// Normal-consistent median absolute deviation about the median.
inline double mad_scale(const Eigen::VectorXd& r)
{
    const double med = median(r);
    return 1.4826 * median(Eigen::VectorXd((r.array() - med).abs()));
}

/// [1 X]
inline Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x)
{
    Eigen::MatrixXd a(x.rows(), x.cols() + 1);
    a.col(0).setOnes();
    a.rightCols(x.cols()) = x;
    return a;
}

/// Weighted least squares via column-pivoted QR; empty on rank deficiency.
inline bool solve_weighted(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& w, Eigen::VectorXd& theta)
{
    const Eigen::VectorXd sw = w.array().sqrt();
    const Eigen::MatrixXd aw = sw.asDiagonal() * a;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(aw);
    if (qr.rank() < a.cols()) return false;
    theta = qr.solve(Eigen::VectorXd(sw.cwiseProduct(y)));
    return theta.allFinite();
}

inline FittedLinear unpack(const Eigen::VectorXd& theta, std::string learner)
{
    FittedLinear f;
    f.intercept = theta(0);
    f.coef = theta.tail(theta.size() - 1);
    f.learner = std::move(learner);
    return f;
}

inline FittedLinear failed_fit(std::size_t d, std::string learner)
{
    FittedLinear f;
    f.coef = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    f.learner = std::move(learner);
    f.status = FitStatus::failed;
    return f;
}

// IRLS for the Huber loss. tau_rule(residuals) gives the knot for the next
// weighted solve.
template <class TauRule>
FittedLinear huber_irls(const Dataset& data, TauRule tau_rule, std::string learner)
{
    constexpr int kMaxIter = 200;
    constexpr double kTol = 1e-8;
    const std::size_t d = data.d();
    if (data.n() <= d + 1) return failed_fit(d, std::move(learner));

    const Eigen::MatrixXd a = with_intercept(data.x);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(a.cols());
    theta(0) = median(data.y);
    const double tau_floor = 1e-10 * (1.0 + data.y.cwiseAbs().maxCoeff());

    double tau = 0.0;
    for (int it = 1; it <= kMaxIter; ++it) {
        const Eigen::VectorXd r = data.y - a * theta;
        tau = std::max(tau_rule(r), tau_floor);
        Eigen::VectorXd w(r.size());
        for (Eigen::Index i = 0; i < r.size(); ++i) {
            const double ar = std::abs(r(i));
            w(i) = ar <= tau ? 1.0 : tau / ar;
        }
        Eigen::VectorXd next;
        if (!solve_weighted(a, data.y, w, next)) return failed_fit(d, std::move(learner));
        const double change = (next - theta).norm() / std::max(1.0, theta.norm());
        theta = std::move(next);
        if (change <= kTol) {
            auto fit = unpack(theta, std::move(learner));
            fit.tau = tau;
            fit.iterations = it;
            return fit;
        }
    }
    auto fit = unpack(theta, std::move(learner));
    fit.tau = tau;
    fit.iterations = kMaxIter;
    fit.status = FitStatus::not_converged;
    return fit;
}

} // namespace detail

/// Ordinary least squares with intercept. Flags rank-deficient designs as failed.
inline FittedLinear fit_ols(const Dataset& data)
{
    const std::size_t d = data.d();
    if (data.n() <= d + 1) return detail::failed_fit(d, "ols");
    const Eigen::MatrixXd a = detail::with_intercept(data.x);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < a.cols()) return detail::failed_fit(d, "ols");
    const Eigen::VectorXd theta = qr.solve(data.y);
    if (!theta.allFinite()) return detail::failed_fit(d, "ols");
    return detail::unpack(theta, "ols");
}

/// Huber regression with a fixed knot tau.
inline FittedLinear fit_huber(const Dataset& data, double tau)
{
    detail::reject_if(!(tau > 0.0 && std::isfinite(tau)), "fit_huber: tau must be positive");
    return detail::huber_irls(data, [tau](const Eigen::VectorXd&) { return tau; }, "huber");
}

inline constexpr double kHuberEfficiency = 1.345;

/// Adaptive knot 1.345 * scale * sqrt(n / (d + log n)).
inline double adaptive_tau(double scale, std::size_t n, std::size_t d)
{
    const double dn = static_cast<double>(n);
    return kHuberEfficiency * scale * std::sqrt(dn / (static_cast<double>(d) + std::log(dn)));
}

/// Knot from the intercept-only model: MAD of the response, scaled for n and d.
inline double null_model_tau(const Dataset& data)
{
    return adaptive_tau(detail::mad_scale(data.y), data.n(), data.d());
}

/// Tuning-free Huber regression: IRLS where the knot is recomputed every
/// iteration from the MAD of the current residuals.
inline FittedLinear fit_huber_adaptive(const Dataset& data)
{
    const std::size_t n = data.n();
    const std::size_t d = data.d();
    return detail::huber_irls(
        data, [n, d](const Eigen::VectorXd& r) { return adaptive_tau(detail::mad_scale(r), n, d); },
        "huber");
}

/// Huber M-estimate of location (intercept-only Huber fit).
inline double huber_location(const Eigen::VectorXd& y, double tau)
{
    Dataset loc;
    loc.x.resize(y.size(), 0);
    loc.y = y;
    const auto fit = fit_huber(loc, tau);
    return fit.usable() ? fit.intercept : detail::median(y);
}

// ---------------------------------------------------------------------------
// l1-penalized Huber regression

/// Smallest lambda whose solution has all slopes at zero, with the intercept
/// at the Huber location of y.
inline double lambda_max(const Dataset& data, double tau)
{
    const double b0 = huber_location(data.y, tau);
    Eigen::VectorXd score(data.y.size());
    for (Eigen::Index i = 0; i < score.size(); ++i) score(i) = huber_score(data.y(i) - b0, tau);
    return (data.x.transpose() * score).cwiseAbs().maxCoeff() / static_cast<double>(data.n());
}

struct HuberLassoOptions {
    int max_iter = 2000;
    double tol = 1e-9;                          ///< relative objective change
    const FittedLinear* warm_start = nullptr;
    std::vector<double>* objective_trace = nullptr;
};

/// Minimizes (1/n) sum huber_tau(y_i - b0 - x_i'beta) + lambda * |beta|_1 by
/// proximal gradient with backtracking. The intercept is not penalized.
inline FittedLinear fit_huber_lasso(const Dataset& data, double lambda, double tau,
                                    const HuberLassoOptions& opts = {})
{
    detail::reject_if(!(lambda > 0.0 && std::isfinite(lambda)), "fit_huber_lasso: lambda must be positive");
    detail::reject_if(!(tau > 0.0 && std::isfinite(tau)), "fit_huber_lasso: tau must be positive");
    const auto n = data.x.rows();
    const auto d = data.x.cols();
    const double dn = static_cast<double>(n);

    auto finish = [&](double b0, Eigen::VectorXd beta, int iters, FitStatus status) {
        FittedLinear f;
        f.intercept = b0;
        f.coef = std::move(beta);
        f.learner = "huber_lasso";
        f.tau = tau;
        f.lambda = lambda;
        f.iterations = iters;
        f.status = status;
        return f;
    };

    if (d == 0 || lambda >= lambda_max(data, tau))
        return finish(huber_location(data.y, tau), Eigen::VectorXd::Zero(d), 0, FitStatus::ok);

    double b0;
    Eigen::VectorXd beta;
    if (opts.warm_start && opts.warm_start->coef.size() == d && opts.warm_start->usable()) {
        b0 = opts.warm_start->intercept;
        beta = opts.warm_start->coef;
    } else {
        b0 = huber_location(data.y, tau);
        beta = Eigen::VectorXd::Zero(d);
    }

    auto smooth = [&](const Eigen::VectorXd& r) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) s += huber_loss(r(i), tau);
        return s / dn;
    };
    auto soft = [](double v, double t) { return v > t ? v - t : (v < -t ? v + t : 0.0); };

    Eigen::VectorXd r = data.y - data.x * beta;
    r.array() -= b0;
    double f = smooth(r);
    double obj = f + lambda * beta.lpNorm<1>();
    if (opts.objective_trace) opts.objective_trace->push_back(obj);

    double step = 1.0;
    Eigen::VectorXd score(n), beta_next(d), r_next(n);
    for (int it = 1; it <= opts.max_iter; ++it) {
        for (Eigen::Index i = 0; i < n; ++i) score(i) = huber_score(r(i), tau);
        const double g0 = -score.sum() / dn;
        const Eigen::VectorXd g = -(data.x.transpose() * score) / dn;

        double b0_next = b0, f_next = f;
        for (;;) {
            b0_next = b0 - step * g0;
            for (Eigen::Index j = 0; j < d; ++j) beta_next(j) = soft(beta(j) - step * g(j), step * lambda);
            r_next = data.y - data.x * beta_next;
            r_next.array() -= b0_next;
            f_next = smooth(r_next);
            const double db0 = b0_next - b0;
            const Eigen::VectorXd dbeta = beta_next - beta;
            const double model = f + g0 * db0 + g.dot(dbeta) +
                                 (db0 * db0 + dbeta.squaredNorm()) / (2.0 * step);
            if (f_next <= model + 1e-15 * std::abs(f)) break;
            step *= 0.5;
            if (step < 1e-300) return finish(b0, beta, it, FitStatus::failed);
        }

        const double obj_next = f_next + lambda * beta_next.lpNorm<1>();
        const double change = (obj - obj_next) / std::max(std::abs(obj), 1e-300);
        b0 = b0_next;
        beta.swap(beta_next);
        r.swap(r_next);
        f = f_next;
        obj = obj_next;
        if (opts.objective_trace) opts.objective_trace->push_back(obj);
        if (change <= opts.tol) return finish(b0, std::move(beta), it, FitStatus::ok);
        step *= 1.25;
    }
    return finish(b0, std::move(beta), opts.max_iter, FitStatus::not_converged);
}

/// Log-equispaced, strictly decreasing penalties from lambda_max down to
/// 0.01 * lambda_max.
inline std::vector<double> lambda_path(const Dataset& data, double tau, std::size_t k_path = 50)
{
    detail::reject_if(k_path < 1, "lambda_path: need at least one value");
    detail::reject_if(data.d() < 1 || data.n() < 1, "lambda_path: empty design");
    const double top = lambda_max(data, tau);
    detail::reject_if(!(top > 0.0) || !std::isfinite(top),
                      "lambda_path: degenerate design (lambda_max is zero)");
    constexpr double kRatio = 0.01;
    std::vector<double> path(k_path);
    path[0] = top;
    for (std::size_t i = 1; i < k_path; ++i) {
        const double frac = static_cast<double>(i) / static_cast<double>(k_path - 1);
        path[i] = top * std::exp(std::log(kRatio) * frac);
    }
    if (k_path > 1) path.back() = top * kRatio;
    return path;
}

/// Rescale a penalty chosen on (K-1)/K of the data to the full sample.
inline double lambda_fold_correction(double lambda, std::size_t folds)
{
    detail::reject_if(folds < 2, "lambda_fold_correction: need K >= 2");
    detail::reject_if(!(lambda > 0.0), "lambda_fold_correction: lambda must be positive");
    return lambda * std::sqrt(1.0 - 1.0 / static_cast<double>(folds));
}

// ---------------------------------------------------------------------------
// Subset enumeration

struct SubsetModel {
    std::uint32_t mask = 0;            ///< bit i set <=> covariate i included
    std::vector<std::size_t> columns;
};

inline constexpr std::size_t kMaxSubsetDimension = 20;

/// All 2^d covariate subsets (each implicitly with an intercept), ordered by
/// inclusion mask.
inline std::vector<SubsetModel> enumerate_subsets(std::size_t d)
{
    detail::reject_if(d < 1, "enumerate_subsets: need d >= 1");
    detail::reject_if(d > kMaxSubsetDimension, "enumerate_subsets: d > 20 is not supported");
    const std::uint32_t count = 1u << d;
    std::vector<SubsetModel> out(count);
    for (std::uint32_t mask = 0; mask < count; ++mask) {
        out[mask].mask = mask;
        for (std::size_t i = 0; i < d; ++i)
            if (mask & (1u << i)) out[mask].columns.push_back(i);
    }
    return out;
}

/// Fit `fit` on a column subset and expand coefficients back to full width.
template <class Fit>
FittedLinear fit_on_columns(const Dataset& data, std::span<const std::size_t> columns, Fit&& fit)
{
    Dataset sub;
    sub.y = data.y;
    sub.x.resize(data.x.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c)
        sub.x.col(static_cast<Eigen::Index>(c)) = data.x.col(static_cast<Eigen::Index>(columns[c]));
    FittedLinear f = fit(sub);
    Eigen::VectorXd full = Eigen::VectorXd::Zero(data.x.cols());
    if (f.coef.size() == static_cast<Eigen::Index>(columns.size()))
        for (std::size_t c = 0; c < columns.size(); ++c)
            full(static_cast<Eigen::Index>(columns[c])) = f.coef(static_cast<Eigen::Index>(c));
    f.coef = std::move(full);
    return f;
}

} // namespace ranksel

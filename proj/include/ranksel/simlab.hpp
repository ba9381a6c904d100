#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ranksel/error.hpp"
#include "ranksel/models.hpp"
#include "ranksel/parallel.hpp"
#include "ranksel/rng.hpp"
#include "ranksel/select.hpp"

namespace ranksel {

// ---------------------------------------------------------------------------
// Generators

/// Student-t draw (normal over scaled chi-square).
inline double sample_student_t(double df, Engine& eng)
{
    detail::reject_if(!(df > 0.0), "sample_student_t: df must be positive");
    std::student_t_distribution<double> t(df);
    return t(eng);
}

/// One draw from N(0, Sigma) with Sigma_ij = rho^|i-j| via the AR(1) recursion.
inline Eigen::VectorXd sample_ar1_gaussian(std::size_t p, double rho, Engine& eng)
{
    detail::reject_if(!(std::abs(rho) < 1.0), "sample_ar1_gaussian: |rho| must be < 1");
    std::normal_distribution<double> z;
    Eigen::VectorXd x(static_cast<Eigen::Index>(p));
    if (p == 0) return x;
    const double innov = std::sqrt(1.0 - rho * rho);
    x(0) = z(eng);
    for (Eigen::Index j = 1; j < x.size(); ++j) x(j) = rho * x(j - 1) + innov * z(eng);
    return x;
}

// ---------------------------------------------------------------------------
// Reports

struct MethodOutcome {
    Method method = Method::rsr_vfold;
    std::size_t set_size = 0;
    bool correct = false;                  ///< case 1: true model in the set
    std::size_t chosen = 0;                ///< case 2: chosen path index
    double lambda = std::numeric_limits<double>::quiet_NaN();
    std::size_t nonzeros = 0;
    bool covered = false;                  ///< supp(beta_hat) contains supp(beta*)
    bool oracle = false;                   ///< supp(beta_hat) equals supp(beta*)
    double cv_error = std::numeric_limits<double>::quiet_NaN();
    std::size_t bootstrap_columns = 0;
};

struct ReplicateReport {
    std::size_t replicate = 0;
    std::size_t failed_fits = 0;
    std::vector<MethodOutcome> outcomes;   ///< one per configured method, same order
};

struct MetricSummary {
    double mean = 0.0;
    double se = 0.0;  ///< Monte-Carlo standard error
};

struct MethodAggregate {
    Method method = Method::rsr_vfold;
    std::map<std::string, MetricSummary> metrics;
};

struct AggregateReport {
    std::string design;
    std::size_t reps = 0;
    std::size_t n = 0;
    std::vector<MethodAggregate> methods;
    double failed_fit_mean = 0.0;

    const MethodAggregate& method(Method m) const
    {
        for (const auto& a : methods)
            if (a.method == m) return a;
        throw ContractViolation(std::string("aggregate has no method ") + to_string(m));
    }
    double mean(Method m, const std::string& metric) const { return method(m).metrics.at(metric).mean; }
};

struct CaseResult {
    AggregateReport aggregate;
    std::vector<ReplicateReport> replicates;
};

/// Display names used in configs and reports; rsr_vfold is shown as "rsr".
inline std::string method_label(Method m) { return m == Method::rsr_vfold ? "rsr" : to_string(m); }

inline Method parse_method(const std::string& s)
{
    if (s == "rsr" || s == "rsr_vfold") return Method::rsr_vfold;
    if (s == "rsr_split") return Method::rsr_split;
    if (s == "cv") return Method::cv;
    if (s == "pcv") return Method::pcv;
    if (s == "cvc" || s == "cvc_style") return Method::cvc_style;
    throw InvalidInput("unknown method '" + s + "' (expected cv, cvc_style, pcv, rsr, rsr_split)");
}

namespace detail {

inline MetricSummary summarize(const std::vector<double>& v)
{
    MetricSummary s;
    if (v.empty()) return s;
    const double n = static_cast<double>(v.size());
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / n;
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.se = std::sqrt(ss / (n - 1.0) / n);
    }
    return s;
}

using MetricFn = double (*)(const MethodOutcome&);

inline AggregateReport aggregate(const std::string& design, std::size_t n,
                                 const std::vector<Method>& methods,
                                 const std::vector<ReplicateReport>& reps,
                                 const std::vector<std::pair<std::string, MetricFn>>& metrics)
{
    AggregateReport out;
    out.design = design;
    out.reps = reps.size();
    out.n = n;
    std::vector<double> failed;
    for (const auto& r : reps) failed.push_back(static_cast<double>(r.failed_fits));
    out.failed_fit_mean = summarize(failed).mean;
    for (std::size_t k = 0; k < methods.size(); ++k) {
        MethodAggregate agg;
        agg.method = methods[k];
        for (const auto& [name, fn] : metrics) {
            std::vector<double> vals;
            for (const auto& r : reps) vals.push_back(fn(r.outcomes[k]));
            agg.metrics[name] = summarize(vals);
        }
        out.methods.push_back(std::move(agg));
    }
    return out;
}

inline SelectionConfig replicate_selection(const SelectionConfig& base, std::uint64_t seed, std::size_t rep)
{
    SelectionConfig cfg = base;
    cfg.seed = derive_seed(seed, {stream::bootstrap, rep});
    cfg.threads = 1;
    return cfg;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Case 1: robust subset selection

struct Case1Config {
    std::size_t n = 320;
    double x_df = 3.0;
    std::size_t reps = 100;
    double alpha = 0.1;
    std::uint64_t seed = 1;
    std::vector<Method> methods{Method::cv, Method::cvc_style, Method::pcv, Method::rsr_vfold};
    std::size_t B = 500;
    std::size_t folds = 5;
    bool screening = false;
    double alpha_screen = 0.1;
    double s = 0.01;
    Projection projection = Projection::symmetrized;
    unsigned threads = 1;

    void validate() const
    {
        detail::reject_if(n < 2 * folds || n < 8, "case1: n too small for the fold count");
        detail::reject_if(!(x_df > 0.0), "case1: x_df must be positive");
        detail::reject_if(reps < 1, "case1: reps must be positive");
        detail::reject_if(methods.empty(), "case1: no methods");
        detail::reject_if(folds < 2, "case1: folds must be >= 2");
    }
};

/// Coefficients of the Case 1 design: intercept 1, slopes (0, 3, 4, 0).
inline constexpr double kCase1Intercept = 1.0;
inline const std::vector<double> kCase1Slopes{0.0, 3.0, 4.0, 0.0};
/// Inclusion mask of the true subset model (second and third covariates).
inline constexpr std::uint32_t kCase1TrueMask = 0b0110;
/// Bootstrap columns summed over references when nothing is screened: 16 * 15.
inline constexpr double kCase1FullColumns = 240.0;

inline Dataset case1_data(std::size_t n, double x_df, Engine& eng)
{
    Dataset d;
    d.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kCase1Slopes.size()));
    d.y.resize(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
        double y = kCase1Intercept;
        for (Eigen::Index j = 0; j < d.x.cols(); ++j) {
            d.x(i, j) = sample_student_t(x_df, eng);
            y += kCase1Slopes[static_cast<std::size_t>(j)] * d.x(i, j);
        }
        d.y(i) = y + sample_student_t(1.0, eng);
    }
    return d;
}

/// The 2^d subset models, each fit by adaptive Huber regression.
inline LearnerSuite subset_suite(std::size_t d)
{
    LearnerSuite suite;
    for (const auto& sm : enumerate_subsets(d)) {
        std::string id = "subset_";
        for (std::size_t i = 0; i < d; ++i) id += (sm.mask & (1u << i)) ? '1' : '0';
        suite.push_back({id, [cols = sm.columns](const Dataset& data) {
                             return fit_on_columns(data, cols, [](const Dataset& s) { return fit_huber_adaptive(s); });
                         }});
    }
    return suite;
}

inline ReplicateReport run_case1_replicate(const Case1Config& cfg, std::size_t rep)
{
    Engine eng = make_engine(cfg.seed, {stream::data, rep});
    const Dataset data = case1_data(cfg.n, cfg.x_df, eng);
    const LearnerSuite suite = subset_suite(kCase1Slopes.size());
    std::vector<std::string> ids;
    for (const auto& l : suite) ids.push_back(l.id);

    const auto held = vfold_predictions(suite, data, cfg.folds, derive_seed(cfg.seed, {stream::split, rep}), 1);

    // Each candidate's knot comes from its adaptive fit on all data. A
    // reference model is tested on losses scored with its own knot; CV ranks
    // everything with the full model's knot.
    const auto subsets = enumerate_subsets(kCase1Slopes.size());
    std::vector<double> knots(subsets.size());
    for (std::size_t c = 0; c < subsets.size(); ++c) {
        const FittedLinear f =
            fit_on_columns(data, subsets[c].columns, [](const Dataset& s) { return fit_huber_adaptive(s); });
        knots[c] = f.usable() && f.tau > 0.0 ? f.tau : null_model_tau(data);
    }
    const double tau = knots.back();
    const CandidatePanel cp = make_candidate_panel(held, data.y, LossFn::huber(tau), ids);
    std::vector<LossPanel> reference_panels;
    if (cp.panel)
        for (auto c : cp.columns)
            reference_panels.push_back(*make_candidate_panel(held, data.y, LossFn::huber(knots[c]), ids).panel);

    SelectionConfig base;
    base.alpha = cfg.alpha;
    base.alpha_screen = cfg.alpha_screen;
    base.s = cfg.s;
    base.B = cfg.B;
    base.V = cfg.folds;
    base.projection = cfg.projection;
    base.screening = cfg.screening;
    base.loss = LossFn::huber(tau);
    const SelectionConfig sel = detail::replicate_selection(base, cfg.seed, rep);

    ReplicateReport out;
    out.replicate = rep;
    for (bool f : cp.failed) out.failed_fits += f ? 1 : 0;
    for (Method m : cfg.methods) {
        std::optional<ConfidenceSet> inner;
        if (cp.panel)
            inner = m == Method::cv ? select_on_panel(*cp.panel, sel, m)
                                    : select_per_reference(reference_panels, sel, m);
        const ConfidenceSet cs = lift_to_candidates(cp, inner, m, cfg.alpha, ids);
        MethodOutcome o;
        o.method = m;
        o.set_size = cs.selected.size();
        o.correct = cs.contains(kCase1TrueMask);
        o.bootstrap_columns = cs.total_bootstrap_columns();
        out.outcomes.push_back(o);
    }
    return out;
}

inline CaseResult run_case1(const Case1Config& cfg)
{
    cfg.validate();
    CaseResult res;
    res.replicates.resize(cfg.reps);
    parallel_for(cfg.reps, cfg.threads, [&](std::size_t r) { res.replicates[r] = run_case1_replicate(cfg, r); });
    res.aggregate = detail::aggregate(
        "case1", cfg.n, cfg.methods, res.replicates,
        {{"set_size", [](const MethodOutcome& o) { return static_cast<double>(o.set_size); }},
         {"correct_rate", [](const MethodOutcome& o) { return o.correct ? 1.0 : 0.0; }},
         {"bootstrap_columns", [](const MethodOutcome& o) { return static_cast<double>(o.bootstrap_columns); }},
         {"screening_reduced_rate", [](const MethodOutcome& o) {
              return o.bootstrap_columns > 0 && static_cast<double>(o.bootstrap_columns) < kCase1FullColumns ? 1.0 : 0.0;
          }}});
    return res;
}

// ---------------------------------------------------------------------------
// Case 2: choosing the lasso penalty for penalized Huber regression

struct Case2Config {
    std::size_t n = 200;
    std::size_t p = 200;
    double noise_df = 3.0;
    double rho = 0.25;
    std::size_t reps = 100;
    std::size_t folds = 5;   ///< K
    std::size_t k_path = 50;
    double alpha = 0.1;
    std::uint64_t seed = 1;
    std::vector<Method> methods{Method::cv, Method::cvc_style, Method::pcv, Method::rsr_vfold};
    std::size_t B = 500;
    bool screening = false;
    double alpha_screen = 0.1;
    double s = 0.01;
    Projection projection = Projection::symmetrized;
    unsigned threads = 1;

    void validate() const
    {
        const bool known = (n == 200 && p == 200) || (n == 400 && p == 2000);
        detail::reject_if(!known, "case2: (n, p) must be (200, 200) or (400, 2000)");
        detail::reject_if(!(noise_df > 0.0), "case2: noise_df must be positive");
        detail::reject_if(!(std::abs(rho) < 1.0), "case2: |rho| must be < 1");
        detail::reject_if(reps < 1, "case2: reps must be positive");
        detail::reject_if(folds < 2, "case2: folds must be >= 2");
        detail::reject_if(k_path < 2, "case2: k_path must be >= 2");
        detail::reject_if(methods.empty(), "case2: no methods");
    }
};

/// Support of beta* = (1, 1, 0, 0, 0, 1, 1, 0, ..., 0).
inline const std::vector<std::size_t> kCase2Support{0, 1, 5, 6};

inline Dataset case2_data(const Case2Config& cfg, Engine& eng)
{
    Dataset d;
    d.x.resize(static_cast<Eigen::Index>(cfg.n), static_cast<Eigen::Index>(cfg.p));
    d.y.resize(static_cast<Eigen::Index>(cfg.n));
    for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
        d.x.row(i) = sample_ar1_gaussian(cfg.p, cfg.rho, eng).transpose();
        double y = 0.0;
        for (auto j : kCase2Support) y += d.x(i, static_cast<Eigen::Index>(j));
        d.y(i) = y + sample_student_t(cfg.noise_df, eng);
    }
    return d;
}

/// Warm-started fits along a decreasing penalty path.
inline std::vector<FittedLinear> fit_lasso_path(const Dataset& data, const std::vector<double>& path, double tau)
{
    std::vector<FittedLinear> fits;
    fits.reserve(path.size());
    for (double lambda : path) {
        HuberLassoOptions opts;
        if (!fits.empty()) opts.warm_start = &fits.back();
        fits.push_back(fit_huber_lasso(data, lambda, tau, opts));
    }
    return fits;
}

inline ReplicateReport run_case2_replicate(const Case2Config& cfg, std::size_t rep)
{
    Engine eng = make_engine(cfg.seed, {stream::data, rep});
    const Dataset data = case2_data(cfg, eng);
    const double tau = null_model_tau(data);
    const auto path = lambda_path(data, tau, cfg.k_path);
    const std::size_t k = path.size();

    // Out-of-fold predictions for the whole path.
    const auto label = fold_assignment(data.n(), cfg.folds, derive_seed(cfg.seed, {stream::split, rep}));
    HeldOutPredictions held;
    held.rows.resize(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) held.rows[i] = i;
    held.predictions.setZero(static_cast<Eigen::Index>(data.n()), static_cast<Eigen::Index>(k));
    held.failed.assign(k, false);
    for (std::size_t v = 0; v < cfg.folds; ++v) {
        std::vector<std::size_t> train_idx, eval_idx;
        for (std::size_t i = 0; i < data.n(); ++i) (label[i] == v ? eval_idx : train_idx).push_back(i);
        const Dataset train = data.rows(train_idx);
        const Dataset eval = data.rows(eval_idx);
        const auto fits = fit_lasso_path(train, path, tau);
        for (std::size_t c = 0; c < k; ++c) {
            if (!fits[c].usable()) {
                held.failed[c] = true;
                continue;
            }
            const Eigen::VectorXd pred = fits[c].predict(eval.x);
            for (std::size_t i = 0; i < eval_idx.size(); ++i)
                held.predictions(static_cast<Eigen::Index>(eval_idx[i]), static_cast<Eigen::Index>(c)) =
                    pred(static_cast<Eigen::Index>(i));
        }
    }

    std::vector<std::string> ids;
    for (std::size_t c = 0; c < k; ++c) ids.push_back("lambda_" + std::to_string(c));
    const CandidatePanel cp = make_candidate_panel(held, data.y, LossFn::huber(tau), ids);
    const CandidatePanel sq = make_candidate_panel(held, data.y, LossFn::squared(), ids);

    SelectionConfig base;
    base.alpha = cfg.alpha;
    base.alpha_screen = cfg.alpha_screen;
    base.s = cfg.s;
    base.B = cfg.B;
    base.V = cfg.folds;
    base.projection = cfg.projection;
    base.screening = cfg.screening;
    base.loss = LossFn::huber(tau);
    const SelectionConfig sel = detail::replicate_selection(base, cfg.seed, rep);

    ReplicateReport out;
    out.replicate = rep;
    for (bool f : cp.failed) out.failed_fits += f ? 1 : 0;

    std::map<std::size_t, FittedLinear> refits;
    for (Method m : cfg.methods) {
        std::optional<ConfidenceSet> inner;
        if (cp.panel) inner = select_on_panel(*cp.panel, sel, m);
        const ConfidenceSet cs = lift_to_candidates(cp, inner, m, cfg.alpha, ids);

        // Sparsest member of the set: the largest lambda, i.e. the smallest index.
        std::size_t chosen = k;
        if (!cs.selected.empty()) {
            chosen = cs.selected.front();
        } else {
            double best = -1.0;
            for (std::size_t c = 0; c < k; ++c)
                if (!cs.flagged[c] && cs.p_values[c] > best) best = cs.p_values[c], chosen = c;
        }
        MethodOutcome o;
        o.method = m;
        o.set_size = cs.selected.size();
        o.bootstrap_columns = cs.total_bootstrap_columns();
        if (chosen < k) {
            o.chosen = chosen;
            o.lambda = path[chosen];
            auto it = refits.find(chosen);
            if (it == refits.end())
                it = refits.emplace(chosen, fit_huber_lasso(data, lambda_fold_correction(path[chosen], cfg.folds), tau))
                         .first;
            const FittedLinear& fit = it->second;
            o.nonzeros = fit.nonzeros();
            bool covered = true;
            for (auto j : kCase2Support) covered = covered && fit.coef(static_cast<Eigen::Index>(j)) != 0.0;
            o.covered = covered;
            o.oracle = covered && o.nonzeros == kCase2Support.size();
            if (sq.panel) {
                for (std::size_t pcol = 0; pcol < sq.columns.size(); ++pcol)
                    if (sq.columns[pcol] == chosen) o.cv_error = sq.panel->matrix().col(static_cast<Eigen::Index>(pcol)).mean();
            }
        }
        out.outcomes.push_back(o);
    }
    return out;
}

inline CaseResult run_case2(const Case2Config& cfg)
{
    cfg.validate();
    CaseResult res;
    res.replicates.resize(cfg.reps);
    parallel_for(cfg.reps, cfg.threads, [&](std::size_t r) { res.replicates[r] = run_case2_replicate(cfg, r); });
    res.aggregate = detail::aggregate(
        "case2", cfg.n, cfg.methods, res.replicates,
        {{"set_size", [](const MethodOutcome& o) { return static_cast<double>(o.set_size); }},
         {"nonzeros", [](const MethodOutcome& o) { return static_cast<double>(o.nonzeros); }},
         {"coverage_rate", [](const MethodOutcome& o) { return o.covered ? 1.0 : 0.0; }},
         {"oracle_rate", [](const MethodOutcome& o) { return o.oracle ? 1.0 : 0.0; }},
         {"cv_error", [](const MethodOutcome& o) { return o.cv_error; }},
         {"lambda", [](const MethodOutcome& o) { return o.lambda; }}});
    return res;
}

} // namespace ranksel

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ranksel/bootstrap.hpp"
#include "ranksel/error.hpp"
#include "ranksel/loss_panel.hpp"
#include "ranksel/models.hpp"
#include "ranksel/parallel.hpp"
#include "ranksel/ranksum.hpp"
#include "ranksel/rng.hpp"

namespace ranksel {

enum class Method { rsr_split, rsr_vfold, cv, pcv, cvc_style };

inline const char* to_string(Method m)
{
    switch (m) {
    case Method::rsr_split: return "rsr_split";
    case Method::rsr_vfold: return "rsr_vfold";
    case Method::cv: return "cv";
    case Method::pcv: return "pcv";
    case Method::cvc_style: return "cvc_style";
    }
    return "?";
}

struct SelectionConfig {
    double alpha = 0.1;
    double alpha_screen = 0.1;  ///< alpha' of the screening threshold
    double s = 0.01;            ///< screening exponent
    std::size_t B = 500;
    std::size_t V = 5;          ///< folds; 0 selects plain sample splitting
    std::uint64_t seed = 0;
    Projection projection = Projection::symmetrized;
    bool screening = false;
    LossFn loss = LossFn::huber(kHuberEfficiency);
    unsigned threads = 1;

    void validate() const
    {
        detail::reject_if(!(alpha > 0.0 && alpha < 1.0), "alpha must lie in (0, 1)");
        detail::reject_if(!(alpha_screen > 0.0 && alpha_screen < 1.0), "alpha_screen must lie in (0, 1)");
        detail::reject_if(!(s > 0.0), "screening exponent s must be positive");
        detail::reject_if(B < kMinBootstrapDraws, "B must be at least 100");
        detail::reject_if(V == 1, "folds must be 0 (sample splitting) or >= 2");
    }
};

/// Per-reference details kept for reports.
struct ReferenceDiagnostics {
    std::vector<std::size_t> competitors;
    std::vector<double> mu;
    std::vector<double> se;
    std::vector<bool> survived;
    double t_obs = 0.0;
};

struct ConfidenceSet {
    Method method = Method::rsr_vfold;
    double alpha = 0.1;
    std::vector<std::string> model_ids;
    std::vector<double> p_values;
    std::vector<std::size_t> selected;
    std::vector<std::vector<std::size_t>> screened_out;  ///< per reference
    std::vector<std::size_t> bootstrap_columns;          ///< per reference
    std::vector<bool> flagged;                            ///< failed fit or non-finite statistic
    std::vector<ReferenceDiagnostics> diagnostics;

    bool contains(std::size_t m) const
    {
        return std::find(selected.begin(), selected.end(), m) != selected.end();
    }

    std::size_t total_bootstrap_columns() const
    {
        return std::accumulate(bootstrap_columns.begin(), bootstrap_columns.end(), std::size_t{0});
    }
};

// ---------------------------------------------------------------------------
// Screening

/// 2 * Phi^-1(1 - alpha' / (M-1)^(1+s)).
inline double screening_threshold(std::size_t models, double alpha_screen, double s)
{
    detail::require(models >= 2, "screening_threshold: need M >= 2");
    const double denom = std::pow(static_cast<double>(models - 1), 1.0 + s);
    return 2.0 * normal_quantile(1.0 - alpha_screen / denom);
}

/// Competitor positions whose z-score mu/se does not exceed the threshold.
/// se is the standard error of mu, so mu/se already carries the sqrt(n).
inline std::vector<std::size_t> screen(std::span<const double> mu, std::span<const double> se,
                                       std::size_t models, double alpha_screen, double s)
{
    detail::require(mu.size() == se.size(), "screen: mu/se length mismatch");
    const double cut = screening_threshold(models, alpha_screen, s);
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < mu.size(); ++j) {
        detail::require(se[j] > 0.0, "screen: standard errors must be positive");
        if (mu[j] / se[j] <= cut) keep.push_back(j);
    }
    return keep;
}

namespace detail {

inline ConfidenceSet empty_set(Method method, const SelectionConfig& cfg, const LossPanel& panel)
{
    ConfidenceSet out;
    out.method = method;
    out.alpha = cfg.alpha;
    out.model_ids = panel.ids();
    const std::size_t m = panel.models();
    out.p_values.assign(m, 0.0);
    out.screened_out.assign(m, {});
    out.bootstrap_columns.assign(m, 0);
    out.flagged.assign(m, false);
    out.diagnostics.assign(m, {});
    return out;
}

inline void assemble(ConfidenceSet& cs)
{
    cs.selected.clear();
    for (std::size_t m = 0; m < cs.p_values.size(); ++m)
        if (!cs.flagged[m] && cs.p_values[m] >= cs.alpha) cs.selected.push_back(m);
}

inline BootstrapConfig bootstrap_for(const SelectionConfig& cfg, std::size_t reference)
{
    return {cfg.B, derive_seed(cfg.seed, {stream::bootstrap, reference})};
}

} // namespace detail

// ---------------------------------------------------------------------------
// Selection on a precomputed loss panel

namespace detail {

inline void rsr_reference(const LossPanel& panel, const SelectionConfig& cfg, std::size_t m, ConfidenceSet& cs)
{
    const std::size_t models = panel.models();
    const PairStats st = pair_stats(panel, m, cfg.projection, cfg.seed);
    std::vector<std::size_t> keep;
    if (cfg.screening) {
        keep = screen(st.mu, st.se, models, cfg.alpha_screen, cfg.s);
    } else {
        keep.resize(st.mu.size());
        std::iota(keep.begin(), keep.end(), std::size_t{0});
    }

    auto& diag = cs.diagnostics[m];
    diag.competitors = st.competitors;
    diag.mu = st.mu;
    diag.se = st.se;
    diag.survived.assign(st.mu.size(), false);
    for (auto j : keep) diag.survived[j] = true;
    for (std::size_t j = 0; j < st.mu.size(); ++j)
        if (!diag.survived[j]) cs.screened_out[m].push_back(st.competitors[j]);
    cs.bootstrap_columns[m] = keep.size();

    if (keep.empty()) {
        // Every competitor is clearly worse: the minimum over an empty set.
        diag.t_obs = std::numeric_limits<double>::infinity();
        cs.p_values[m] = 1.0;
        return;
    }
    Eigen::MatrixXd psi(st.psi.rows(), static_cast<Eigen::Index>(keep.size()));
    std::vector<double> means(keep.size());
    for (std::size_t c = 0; c < keep.size(); ++c) {
        psi.col(static_cast<Eigen::Index>(c)) = st.psi.col(static_cast<Eigen::Index>(keep[c]));
        means[c] = st.mu[keep[c]];
    }
    const auto res = min_statistic_test(means, psi, detail::bootstrap_for(cfg, m));
    diag.t_obs = res.t_obs;
    cs.p_values[m] = res.p_value;
}

} // namespace detail

/// Rank-sum confidence set: for each reference m, test H0: min_j mu_mj >= 0
/// with the multiplier bootstrap and keep m when p >= alpha.
inline ConfidenceSet rsr_select(const LossPanel& panel, const SelectionConfig& cfg,
                                Method tag = Method::rsr_vfold)
{
    cfg.validate();
    ConfidenceSet cs = detail::empty_set(tag, cfg, panel);
    const std::size_t models = panel.models();
    parallel_for(models, cfg.threads, [&](std::size_t m) { detail::rsr_reference(panel, cfg, m, cs); });
    detail::assemble(cs);
    return cs;
}

namespace detail {

inline void pcv_reference(const LossPanel& panel, const SelectionConfig& cfg, std::size_t m, ConfidenceSet& cs)
{
    const std::size_t models = panel.models();
    const auto n = static_cast<Eigen::Index>(panel.n());
    const auto a = panel.column(m);
    Eigen::MatrixXd psi(n, static_cast<Eigen::Index>(models - 1));
    std::vector<double> stat;
    auto& diag = cs.diagnostics[m];
    for (std::size_t j = 0, c = 0; j < models; ++j) {
        if (j == m) continue;
        const auto b = panel.column(j);
        Engine ties = make_engine(cfg.seed, {stream::paired, m, j});
        auto col = psi.col(static_cast<Eigen::Index>(c));
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto k = static_cast<std::size_t>(i);
            const bool win = a[k] < b[k] || (a[k] == b[k] && coin(ties));
            col(i) = win ? 1.0 : 0.0;
        }
        const double mean = col.mean();
        col.array() -= mean;
        stat.push_back(mean - 0.5);
        diag.competitors.push_back(j);
        ++c;
    }
    diag.mu = stat;
    diag.survived.assign(stat.size(), true);
    cs.bootstrap_columns[m] = stat.size();
    const auto res = min_statistic_test(stat, psi, detail::bootstrap_for(cfg, m));
    diag.t_obs = res.t_obs;
    cs.p_values[m] = res.p_value;
}

} // namespace detail

/// Paired-comparison confidence set: per pair, the mean of
/// 1{l_m(i) < l_j(i)} - 1/2 over the same observation i (coin on ties).
inline ConfidenceSet pcv_select(const LossPanel& panel, const SelectionConfig& cfg)
{
    cfg.validate();
    ConfidenceSet cs = detail::empty_set(Method::pcv, cfg, panel);
    const std::size_t models = panel.models();
    parallel_for(models, cfg.threads, [&](std::size_t m) { detail::pcv_reference(panel, cfg, m, cs); });
    detail::assemble(cs);
    return cs;
}

namespace detail {

inline void cvc_style_reference(const LossPanel& panel, const SelectionConfig& cfg, std::size_t m, ConfidenceSet& cs)
{
    const std::size_t models = panel.models();
    const auto n = static_cast<Eigen::Index>(panel.n());
    const double dn = static_cast<double>(n);
    const auto a = panel.column(m);
    auto& diag = cs.diagnostics[m];
    std::vector<Eigen::VectorXd> cols;
    std::vector<double> stat;
    bool beaten = false;
    for (std::size_t j = 0; j < models; ++j) {
        if (j == m) continue;
        const auto b = panel.column(j);
        Eigen::VectorXd d(n);
        for (Eigen::Index i = 0; i < n; ++i)
            d(i) = b[static_cast<std::size_t>(i)] - a[static_cast<std::size_t>(i)];
        const double mean = d.mean();
        d.array() -= mean;
        const double sd = std::sqrt(d.squaredNorm() / (dn - 1.0));
        diag.competitors.push_back(j);
        diag.mu.push_back(mean);
        diag.se.push_back(sd / std::sqrt(dn));
        if (!std::isfinite(mean) || !std::isfinite(sd)) {
            cs.flagged[m] = true;
            diag.survived.push_back(false);
            continue;
        }
        if (sd == 0.0) {
            // Constant difference: an exact tie or a deterministic ordering.
            if (mean < 0.0) beaten = true;
            diag.survived.push_back(false);
            continue;
        }
        diag.survived.push_back(true);
        cols.push_back(d / sd);
        stat.push_back(mean / sd);
    }
    cs.bootstrap_columns[m] = cols.size();
    if (cs.flagged[m] || beaten) {
        cs.p_values[m] = 0.0;
        return;
    }
    if (cols.empty()) {
        cs.p_values[m] = 1.0;
        diag.t_obs = std::numeric_limits<double>::infinity();
        return;
    }
    Eigen::MatrixXd psi(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) psi.col(static_cast<Eigen::Index>(c)) = cols[c];
    const auto res = min_statistic_test(stat, psi, detail::bootstrap_for(cfg, m));
    diag.t_obs = res.t_obs;
    cs.p_values[m] = res.p_value;
}

} // namespace detail

/// Mean-difference baseline in the spirit of cross-validation with
/// confidence: studentized mean of d_i = l_j(i) - l_m(i) per competitor,
/// multiplier bootstrap on the centered studentized differences. Not robust
/// to heavy-tailed losses; kept for contrast.
inline ConfidenceSet cvc_style_select(const LossPanel& panel, const SelectionConfig& cfg)
{
    cfg.validate();
    ConfidenceSet cs = detail::empty_set(Method::cvc_style, cfg, panel);
    const std::size_t models = panel.models();
    parallel_for(models, cfg.threads, [&](std::size_t m) { detail::cvc_style_reference(panel, cfg, m, cs); });
    detail::assemble(cs);
    return cs;
}

/// Index of the smallest risk; ties go to the smallest index.
inline std::size_t argmin_risk(std::span<const double> risks)
{
    detail::require(!risks.empty(), "cv_select: no models");
    for (double r : risks) detail::reject_if(!std::isfinite(r), "cv_select: non-finite risk");
    return static_cast<std::size_t>(std::min_element(risks.begin(), risks.end()) - risks.begin());
}

/// Classical cross-validation: singleton set {argmin risk}. p-values are 1
/// for the chosen model and 0 otherwise.
inline ConfidenceSet cv_select(std::span<const double> risks, std::vector<std::string> ids = {})
{
    const std::size_t best = argmin_risk(risks);
    ConfidenceSet cs;
    cs.method = Method::cv;
    cs.alpha = 0.0;
    if (ids.empty())
        for (std::size_t j = 0; j < risks.size(); ++j) ids.push_back(std::to_string(j));
    cs.model_ids = std::move(ids);
    cs.p_values.assign(risks.size(), 0.0);
    cs.p_values[best] = 1.0;
    cs.selected = {best};
    cs.screened_out.assign(risks.size(), {});
    cs.bootstrap_columns.assign(risks.size(), 0);
    cs.flagged.assign(risks.size(), false);
    cs.diagnostics.assign(risks.size(), {});
    return cs;
}

inline ConfidenceSet cv_select(const LossPanel& panel)
{
    const auto risks = panel.mean_losses();
    return cv_select(risks, panel.ids());
}

/// Dispatch on method. rsr_split and rsr_vfold share the panel-level procedure.
inline ConfidenceSet select_on_panel(const LossPanel& panel, const SelectionConfig& cfg, Method method)
{
    switch (method) {
    case Method::rsr_split:
    case Method::rsr_vfold: return rsr_select(panel, cfg, method);
    case Method::pcv: return pcv_select(panel, cfg);
    case Method::cvc_style: return cvc_style_select(panel, cfg);
    case Method::cv: return cv_select(panel);
    }
    throw ContractViolation("select_on_panel: unknown method");
}

/// Like select_on_panel, but reference m is tested on panels[m]. All panels
/// must share shape and ids; they may differ in how losses are scored.
inline ConfidenceSet select_per_reference(std::span<const LossPanel> panels, const SelectionConfig& cfg,
                                          Method method)
{
    cfg.validate();
    detail::require(!panels.empty() && panels.size() == panels.front().models(),
                    "select_per_reference: need one panel per model");
    for (const auto& p : panels)
        detail::require(p.n() == panels.front().n() && p.ids() == panels.front().ids(),
                        "select_per_reference: panels differ in shape or ids");
    void (*reference)(const LossPanel&, const SelectionConfig&, std::size_t, ConfidenceSet&) = nullptr;
    switch (method) {
    case Method::rsr_split:
    case Method::rsr_vfold: reference = detail::rsr_reference; break;
    case Method::pcv: reference = detail::pcv_reference; break;
    case Method::cvc_style: reference = detail::cvc_style_reference; break;
    case Method::cv: throw ContractViolation("select_per_reference: cv has no reference model");
    }
    ConfidenceSet cs = detail::empty_set(method, cfg, panels.front());
    parallel_for(panels.size(), cfg.threads, [&](std::size_t m) { reference(panels[m], cfg, m, cs); });
    detail::assemble(cs);
    return cs;
}

// ---------------------------------------------------------------------------
// Learners and panel construction

struct Learner {
    std::string id;
    std::function<FittedLinear(const Dataset&)> fit;
};

using LearnerSuite = std::vector<Learner>;

/// Seeded permutation of 0..n-1.
inline std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed)
{
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Engine eng = make_engine(seed, {stream::split});
    std::shuffle(perm.begin(), perm.end(), eng);
    return perm;
}

/// Fold label of every observation: V near-equal folds over a seeded
/// permutation, earlier folds taking the remainder.
inline std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed)
{
    detail::require(folds >= 2 && n >= folds, "fold_assignment: need 2 <= V <= n");
    const auto perm = seeded_permutation(n, seed);
    std::vector<std::size_t> label(n);
    const std::size_t base = n / folds, extra = n % folds;
    std::size_t pos = 0;
    for (std::size_t v = 0; v < folds; ++v) {
        const std::size_t size = base + (v < extra ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i) label[perm[pos++]] = v;
    }
    return label;
}

/// Sample split: first ceil(N/2) permuted indices train, the rest evaluate.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                                  std::uint64_t seed)
{
    const auto perm = seeded_permutation(n, seed);
    const std::size_t train = n - n / 2;
    std::vector<std::size_t> i1(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(train));
    std::vector<std::size_t> i2(perm.begin() + static_cast<std::ptrdiff_t>(train), perm.end());
    std::sort(i1.begin(), i1.end());
    std::sort(i2.begin(), i2.end());
    return {std::move(i1), std::move(i2)};
}

/// Held-out predictions of every candidate.
struct HeldOutPredictions {
    Eigen::MatrixXd predictions;     ///< rows x candidates
    std::vector<std::size_t> rows;   ///< dataset row of each prediction row
    std::vector<bool> failed;        ///< per candidate
};

inline HeldOutPredictions split_predictions(const LearnerSuite& suite, const Dataset& data,
                                            std::uint64_t seed, unsigned threads)
{
    const auto [train_idx, eval_idx] = split_indices(data.n(), seed);
    const Dataset train = data.rows(train_idx);
    const Dataset eval = data.rows(eval_idx);
    HeldOutPredictions out;
    out.rows = eval_idx;
    out.predictions.setZero(static_cast<Eigen::Index>(eval_idx.size()),
                            static_cast<Eigen::Index>(suite.size()));
    std::vector<char> failed(suite.size(), 0);
    parallel_for(suite.size(), threads, [&](std::size_t c) {
        const FittedLinear f = suite[c].fit(train);
        if (!f.usable()) {
            failed[c] = 1;
            return;
        }
        const Eigen::VectorXd pred = f.predict(eval.x);
        if (!pred.allFinite()) failed[c] = 1;
        else out.predictions.col(static_cast<Eigen::Index>(c)) = pred;
    });
    out.failed.assign(failed.begin(), failed.end());
    return out;
}

inline HeldOutPredictions vfold_predictions(const LearnerSuite& suite, const Dataset& data,
                                            std::size_t folds, std::uint64_t seed, unsigned threads)
{
    const std::size_t n = data.n();
    const auto label = fold_assignment(n, folds, seed);
    std::vector<std::vector<std::size_t>> train_idx(folds), eval_idx(folds);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t v = 0; v < folds; ++v) (label[i] == v ? eval_idx : train_idx)[v].push_back(i);

    HeldOutPredictions out;
    out.rows.resize(n);
    std::iota(out.rows.begin(), out.rows.end(), std::size_t{0});
    out.predictions.setZero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(suite.size()));
    std::vector<char> failed(suite.size() * folds, 0);
    parallel_for(suite.size() * folds, threads, [&](std::size_t task) {
        const std::size_t c = task / folds, v = task % folds;
        const FittedLinear f = suite[c].fit(data.rows(train_idx[v]));
        if (!f.usable()) {
            failed[task] = 1;
            return;
        }
        const Eigen::VectorXd pred = f.predict(data.rows(eval_idx[v]).x);
        if (!pred.allFinite()) {
            failed[task] = 1;
            return;
        }
        for (std::size_t i = 0; i < eval_idx[v].size(); ++i)
            out.predictions(static_cast<Eigen::Index>(eval_idx[v][i]), static_cast<Eigen::Index>(c)) =
                pred(static_cast<Eigen::Index>(i));
    });
    out.failed.assign(suite.size(), false);
    for (std::size_t task = 0; task < failed.size(); ++task)
        if (failed[task]) out.failed[task / folds] = true;
    return out;
}

/// Loss panel over the usable candidates; `columns` maps panel columns back
/// to candidate indices.
struct CandidatePanel {
    std::optional<LossPanel> panel;
    std::vector<std::size_t> columns;
    std::vector<bool> failed;
};

inline CandidatePanel make_candidate_panel(const HeldOutPredictions& held, const Eigen::VectorXd& y,
                                           const LossFn& loss, const std::vector<std::string>& ids)
{
    CandidatePanel out;
    out.failed = held.failed;
    for (std::size_t c = 0; c < held.failed.size(); ++c)
        if (!held.failed[c]) out.columns.push_back(c);
    if (out.columns.size() < 2) return out;
    const auto rows = static_cast<Eigen::Index>(held.rows.size());
    Eigen::MatrixXd losses(rows, static_cast<Eigen::Index>(out.columns.size()));
    std::vector<std::string> panel_ids;
    for (std::size_t p = 0; p < out.columns.size(); ++p) {
        const auto c = static_cast<Eigen::Index>(out.columns[p]);
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double r = y(static_cast<Eigen::Index>(held.rows[static_cast<std::size_t>(i)])) -
                             held.predictions(i, c);
            losses(i, static_cast<Eigen::Index>(p)) = loss_eval(loss, r);
        }
        panel_ids.push_back(ids[out.columns[p]]);
    }
    out.panel.emplace(std::move(losses), std::move(panel_ids));
    return out;
}

/// Map a set computed on the usable-candidate panel back to all candidates.
/// Failed candidates get p = 0 and a flag.
inline ConfidenceSet lift_to_candidates(const CandidatePanel& cp, const std::optional<ConfidenceSet>& on_panel,
                                        Method method, double alpha, const std::vector<std::string>& ids)
{
    const std::size_t count = cp.failed.size();
    ConfidenceSet cs;
    cs.method = method;
    cs.alpha = method == Method::cv ? 0.0 : alpha;
    cs.model_ids = ids;
    cs.p_values.assign(count, 0.0);
    cs.screened_out.assign(count, {});
    cs.bootstrap_columns.assign(count, 0);
    cs.flagged.assign(count, false);
    cs.diagnostics.assign(count, {});
    for (std::size_t c = 0; c < count; ++c) cs.flagged[c] = cp.failed[c];
    if (on_panel) {
        for (std::size_t p = 0; p < cp.columns.size(); ++p) {
            const std::size_t c = cp.columns[p];
            cs.p_values[c] = on_panel->p_values[p];
            cs.flagged[c] = on_panel->flagged[p];
            cs.bootstrap_columns[c] = on_panel->bootstrap_columns[p];
            for (auto j : on_panel->screened_out[p]) cs.screened_out[c].push_back(cp.columns[j]);
            auto diag = on_panel->diagnostics[p];
            for (auto& j : diag.competitors) j = cp.columns[j];
            cs.diagnostics[c] = std::move(diag);
        }
    } else if (cp.columns.size() == 1) {
        cs.p_values[cp.columns[0]] = 1.0;  // the only usable candidate
    }
    for (std::size_t c = 0; c < count; ++c)
        if (!cs.flagged[c] && cs.p_values[c] >= cs.alpha && (method != Method::cv || cs.p_values[c] == 1.0))
            cs.selected.push_back(c);
    return cs;
}

namespace detail {

inline std::vector<std::string> suite_ids(const LearnerSuite& suite)
{
    std::vector<std::string> ids;
    for (const auto& l : suite) ids.push_back(l.id);
    return ids;
}

inline ConfidenceSet select_with_learners(const LearnerSuite& suite, const Dataset& data,
                                          const SelectionConfig& cfg, Method method, bool vfold)
{
    cfg.validate();
    data.validate();
    reject_if(suite.size() < 2, "need at least 2 candidate models");
    const auto ids = suite_ids(suite);
    HeldOutPredictions held;
    if (vfold) {
        reject_if(data.n() < 2 * cfg.V, "V-fold selection needs n >= 2V");
        held = vfold_predictions(suite, data, cfg.V, cfg.seed, cfg.threads);
    } else {
        reject_if(data.n() < 8, "sample-split selection needs at least 8 observations");
        held = split_predictions(suite, data, cfg.seed, cfg.threads);
    }
    const CandidatePanel cp = make_candidate_panel(held, data.y, cfg.loss, ids);
    std::optional<ConfidenceSet> inner;
    if (cp.panel) inner = select_on_panel(*cp.panel, cfg, method);
    return lift_to_candidates(cp, inner, method, cfg.alpha, ids);
}

} // namespace detail

/// Sample-splitting RSR: train on one half, rank-sum inference on the other.
inline ConfidenceSet rsr_split(const LearnerSuite& suite, const Dataset& data, const SelectionConfig& cfg)
{
    return detail::select_with_learners(suite, data, cfg, Method::rsr_split, false);
}

/// V-fold RSR: out-of-fold losses for all observations, then rank-sum inference.
inline ConfidenceSet rsr_vfold(const LearnerSuite& suite, const Dataset& data, const SelectionConfig& cfg)
{
    detail::reject_if(cfg.V < 2, "rsr_vfold: need V >= 2");
    return detail::select_with_learners(suite, data, cfg, Method::rsr_vfold, true);
}

/// Any method on learner-built panels (V = 0 selects sample splitting).
inline ConfidenceSet select_with_learners(const LearnerSuite& suite, const Dataset& data,
                                          const SelectionConfig& cfg, Method method)
{
    if (method == Method::rsr_split) return rsr_split(suite, data, cfg);
    if (method == Method::rsr_vfold) return rsr_vfold(suite, data, cfg);
    return detail::select_with_learners(suite, data, cfg, method, cfg.V >= 2);
}

} // namespace ranksel

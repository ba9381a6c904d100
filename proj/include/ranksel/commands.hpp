#pragma once

#include <chrono>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "ranksel/io.hpp"

namespace ranksel::cli {

inline constexpr const char* kVersion = "0.1.0";

using io::RunConfig;
using io::UsageError;

/// What a command produced, kept in memory for callers and tests.
struct ReportBundle {
    nlohmann::json report;                 ///< deterministic content of the main report
    std::optional<ConfidenceSet> set;      ///< select / panel
    std::vector<AggregateReport> aggregates;  ///< simulate, one per n
    double wall_seconds = 0.0;
};

// ---------------------------------------------------------------------------
// Learner registry

inline std::vector<std::string> known_learners() { return {"ols", "huber", "huber_lasso"}; }

/// Expand learner names into candidates. "huber_lasso" contributes one
/// candidate per penalty on a path computed from the full data.
inline LearnerSuite build_suite(const std::vector<std::string>& names, const Dataset& data, double tau,
                                std::size_t k_path)
{
    if (names.empty()) throw UsageError("--learners: empty candidate list");
    LearnerSuite suite;
    for (const auto& name : names) {
        if (name == "ols") {
            suite.push_back({"ols", fit_ols});
        } else if (name == "huber") {
            suite.push_back({"huber", fit_huber_adaptive});
        } else if (name == "huber_lasso") {
            if (k_path < 1) throw UsageError("k_path must be >= 1");
            const auto path = lambda_path(data, tau, k_path);
            for (std::size_t i = 0; i < path.size(); ++i) {
                const double lambda = path[i];
                suite.push_back({"huber_lasso_" + std::to_string(i),
                                 [lambda, tau](const Dataset& d) { return fit_huber_lasso(d, lambda, tau); }});
            }
        } else {
            throw UsageError("--learners: unknown learner '" + name + "' (known: ols, huber, huber_lasso)");
        }
    }
    for (std::size_t i = 0; i < suite.size(); ++i) {
        std::size_t dup = 1;
        for (std::size_t j = 0; j < i; ++j)
            if (suite[j].id == suite[i].id || suite[j].id.rfind(suite[i].id + "#", 0) == 0) ++dup;
        if (dup > 1) suite[i].id += "#" + std::to_string(dup);
    }
    if (suite.size() < 2) throw UsageError("--learners: need at least 2 candidate models");
    return suite;
}

inline LossFn loss_from(const RunConfig& c, const Dataset* data)
{
    if (c.loss == "squared") return LossFn::squared();
    if (c.loss == "absolute") return LossFn::absolute();
    if (c.loss == "huber") {
        if (c.tau < 0.0) throw UsageError("--tau must be positive (or 0 for the data-driven knot)");
        if (c.tau > 0.0) return LossFn::huber(c.tau);
        return LossFn::huber(data ? null_model_tau(*data) : kHuberEfficiency);
    }
    throw UsageError("--loss must be squared, absolute or huber, got '" + c.loss + "'");
}

// ---------------------------------------------------------------------------
// Outputs

inline std::string pvalues_csv(const ConfidenceSet& cs)
{
    std::ostringstream out;
    out << "model,p_value,selected,flagged\n";
    for (std::size_t m = 0; m < cs.p_values.size(); ++m)
        out << cs.model_ids[m] << ',' << io::format_double(cs.p_values[m]) << ',' << (cs.contains(m) ? 1 : 0)
            << ',' << (cs.flagged[m] ? 1 : 0) << '\n';
    return out.str();
}

/// Config echo without fields that must not influence report bytes.
inline nlohmann::json stable_echo(const RunConfig& c)
{
    RunConfig e = c;
    e.threads = 0;
    e.out.clear();
    return io::echo_json(e);
}

inline void write_run_json(const std::filesystem::path& dir, const RunConfig& c, double seconds)
{
    nlohmann::json j;
    j["version"] = kVersion;
    j["config"] = io::echo_json(c);
    j["wall_seconds"] = seconds;
    io::write_text(dir / "run.json", io::dump(j));
}

inline std::filesystem::path prepare_out(const RunConfig& c)
{
    if (c.out.empty()) throw UsageError("--out is required");
    std::error_code ec;
    std::filesystem::create_directories(c.out, ec);
    if (ec) throw io::DataError("cannot create output directory '" + c.out + "': " + ec.message());
    return c.out;
}

inline ReportBundle finish_selection(const RunConfig& c, ConfidenceSet cs, double seconds)
{
    ReportBundle b;
    b.report["version"] = kVersion;
    b.report["config"] = stable_echo(c);
    b.report["result"] = io::to_json(cs);
    b.wall_seconds = seconds;
    const auto dir = prepare_out(c);
    io::write_text(dir / "report.json", io::dump(b.report));
    io::write_text(dir / "pvalues.csv", pvalues_csv(cs));
    write_run_json(dir, c, seconds);
    b.set = std::move(cs);
    return b;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Commands

inline ReportBundle cmd_select(const RunConfig& c)
{
    const auto t0 = std::chrono::steady_clock::now();
    if (c.data.empty()) throw UsageError("--data is required");
    if (c.response.empty()) throw UsageError("--response is required");
    if (c.learners.empty()) throw UsageError("--learners: empty candidate list");
    io::validate_common(c);
    const Dataset data = io::dataset_from_table(io::read_csv(c.data), c.response);
    if (data.n() < 8) throw io::DataError("data: need at least 8 rows, found " + std::to_string(data.n()));

    const LossFn loss = loss_from(c, &data);
    const double path_tau = c.loss == "huber" ? loss.tau : null_model_tau(data);
    const LearnerSuite suite = build_suite(c.learners, data, path_tau, c.k_path);
    const SelectionConfig cfg = io::selection_config(c, loss);

    Method method = io::parse_method_or_usage(c.method);
    if (method == Method::rsr_vfold && c.folds == 0) method = Method::rsr_split;
    if (method == Method::rsr_split && c.folds != 0) throw UsageError("rsr_split requires --folds 0");
    if (cfg.V >= 2 && data.n() < 2 * cfg.V) throw io::DataError("data: need at least 2 * folds rows");

    ConfidenceSet cs = select_with_learners(suite, data, cfg, method);
    return finish_selection(c, std::move(cs), seconds_since(t0));
}

inline ReportBundle cmd_panel(const RunConfig& c)
{
    const auto t0 = std::chrono::steady_clock::now();
    if (c.losses.empty()) throw UsageError("--losses is required");
    io::validate_common(c);
    const LossPanel panel = io::read_loss_panel(c.losses);
    const SelectionConfig cfg = io::selection_config(c, LossFn::squared());
    Method method = io::parse_method_or_usage(c.method);
    if (method == Method::rsr_split) method = Method::rsr_vfold;  // identical on a fixed panel
    ConfidenceSet cs = select_on_panel(panel, cfg, method);
    return finish_selection(c, std::move(cs), seconds_since(t0));
}

namespace detail {

inline std::string replicates_csv(const std::vector<std::pair<std::size_t, const CaseResult*>>& runs)
{
    std::ostringstream out;
    out << "n,replicate,method,set_size,correct,chosen,lambda,nonzeros,covered,oracle,cv_error,"
           "bootstrap_columns,failed_fits\n";
    for (const auto& [n, res] : runs)
        for (const auto& rep : res->replicates)
            for (const auto& o : rep.outcomes)
                out << n << ',' << rep.replicate << ',' << method_label(o.method) << ',' << o.set_size << ','
                    << (o.correct ? 1 : 0) << ',' << o.chosen << ',' << io::format_double(o.lambda) << ','
                    << o.nonzeros << ',' << (o.covered ? 1 : 0) << ',' << (o.oracle ? 1 : 0) << ','
                    << io::format_double(o.cv_error) << ',' << o.bootstrap_columns << ',' << rep.failed_fits
                    << '\n';
    return out.str();
}

inline std::string dat_header(const char* y) { return std::string("# x=n y=") + y + " series\n"; }

} // namespace detail

inline ReportBundle cmd_simulate(RunConfig c)
{
    const auto t0 = std::chrono::steady_clock::now();
    if (c.design != "case1" && c.design != "case2")
        throw UsageError("simulate: design must be case1 or case2, got '" + c.design + "'");
    io::validate_common(c);
    if (c.reps < 1) throw UsageError("reps must be >= 1");
    if (c.n.empty()) c.n = {c.design == "case1" ? std::size_t{320} : std::size_t{200}};

    std::vector<CaseResult> results;
    if (c.design == "case1") {
        std::vector<Case1Config> cfgs;
        for (auto n : c.n) cfgs.push_back(io::case1_config(c, n));
        for (const auto& k : cfgs) results.push_back(run_case1(k));
    } else {
        results.push_back(run_case2(io::case2_config(c)));
    }

    ReportBundle b;
    b.report["version"] = kVersion;
    b.report["config"] = stable_echo(c);
    b.report["results"] = nlohmann::json::array();
    std::vector<std::pair<std::size_t, const CaseResult*>> runs;
    for (const auto& r : results) {
        b.aggregates.push_back(r.aggregate);
        b.report["results"].push_back(io::to_json(r.aggregate));
        runs.emplace_back(r.aggregate.n, &r);
    }

    std::ostringstream sizes, rates;
    sizes << detail::dat_header("mean_set_size");
    rates << (c.design == "case1" ? detail::dat_header("correct_rate")
                                  : detail::dat_header("rate (series = method:metric)"));
    for (const auto& a : b.aggregates)
        for (const auto& m : a.methods) {
            const auto label = method_label(m.method);
            sizes << a.n << ' ' << io::format_double(m.metrics.at("set_size").mean) << ' ' << label << '\n';
            if (c.design == "case1") {
                rates << a.n << ' ' << io::format_double(m.metrics.at("correct_rate").mean) << ' ' << label
                      << '\n';
            } else {
                for (const char* k : {"coverage_rate", "oracle_rate"})
                    rates << a.n << ' ' << io::format_double(m.metrics.at(k).mean) << ' ' << label << ':' << k
                          << '\n';
            }
        }

    b.wall_seconds = seconds_since(t0);
    const auto dir = prepare_out(c);
    io::write_text(dir / "aggregate.json", io::dump(b.report));
    io::write_text(dir / "replicates.csv", detail::replicates_csv(runs));
    io::write_text(dir / "setsize_vs_n.dat", sizes.str());
    io::write_text(dir / "rates.dat", rates.str());
    write_run_json(dir, c, b.wall_seconds);
    return b;
}

/// Map an exception to the documented exit code.
inline int exit_code_for(const std::exception& e)
{
    if (dynamic_cast<const UsageError*>(&e)) return io::kUsage;
    if (dynamic_cast<const NumericalFailure*>(&e)) return io::kNumerical;
    if (dynamic_cast<const InvalidInput*>(&e) || dynamic_cast<const ContractViolation*>(&e)) return io::kData;
    return io::kData;
}

} // namespace ranksel::cli

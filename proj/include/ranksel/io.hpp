#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ranksel/error.hpp"
#include "ranksel/loss_panel.hpp"
#include "ranksel/select.hpp"
#include "ranksel/simlab.hpp"

namespace ranksel::io {

/// Bad command line or configuration (exit code 2).
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file (exit code 3).
class DataError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kNumerical = 4 };

// ---------------------------------------------------------------------------
// Text helpers

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) return out;
        start = pos + 1;
    }
}

/// Shortest text that survives a round trip is not required; 17 significant
/// digits always does.
inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::optional<double> parse_double(std::string_view s)
{
    const std::string t = trim(s);
    if (t.empty()) return std::nullopt;
    double v = 0.0;
    const char* first = t.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
    return v;
}

template <class Int>
std::optional<Int> parse_int(std::string_view s)
{
    const std::string t = trim(s);
    Int v{};
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
    return v;
}

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
    std::vector<std::string> header;
    Eigen::MatrixXd values;  ///< rows x columns, all finite
};

/// Comma-separated numeric table with a header row.
inline CsvTable parse_csv(std::istream& in, const std::string& source)
{
    CsvTable out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) throw DataError(source + ": empty file (no header row)");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    out.header = split(line, ',');
    const std::size_t cols = out.header.size();

    std::vector<double> cells;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != cols)
            throw DataError(source + ": line " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                            " fields, found " + std::to_string(fields.size()));
        for (std::size_t c = 0; c < cols; ++c) {
            const auto v = parse_double(fields[c]);
            if (!v)
                throw DataError(source + ": line " + std::to_string(line_no) + ": column '" + out.header[c] +
                                "': non-numeric value '" + fields[c] + "'");
            if (!std::isfinite(*v))
                throw DataError(source + ": line " + std::to_string(line_no) + ": column '" + out.header[c] +
                                "': non-finite value '" + fields[c] + "'");
            cells.push_back(*v);
        }
        ++rows;
    }
    out.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = cells[r * cols + c];
    return out;
}

inline CsvTable read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return parse_csv(in, path.string());
}

/// Split a table into a dataset: `response` is y, every other column a feature.
inline Dataset dataset_from_table(const CsvTable& t, const std::string& response)
{
    std::size_t yc = t.header.size();
    for (std::size_t c = 0; c < t.header.size(); ++c)
        if (t.header[c] == response) yc = c;
    if (yc == t.header.size())
        throw UsageError("--response: column '" + response + "' not found in data header");
    if (t.header.size() < 2) throw DataError("data needs at least one feature column besides the response");
    Dataset d;
    d.y = t.values.col(static_cast<Eigen::Index>(yc));
    d.x.resize(t.values.rows(), static_cast<Eigen::Index>(t.header.size() - 1));
    for (std::size_t c = 0, k = 0; c < t.header.size(); ++c)
        if (c != yc) d.x.col(static_cast<Eigen::Index>(k++)) = t.values.col(static_cast<Eigen::Index>(c));
    return d;
}

inline constexpr std::string_view kModelPrefix = "model_";

inline void write_loss_panel(std::ostream& out, const LossPanel& panel)
{
    for (std::size_t j = 0; j < panel.models(); ++j)
        out << (j ? "," : "") << kModelPrefix << panel.ids()[j];
    out << '\n';
    for (std::size_t i = 0; i < panel.n(); ++i) {
        for (std::size_t j = 0; j < panel.models(); ++j)
            out << (j ? "," : "")
                << format_double(panel.matrix()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        out << '\n';
    }
}

inline LossPanel loss_panel_from_table(const CsvTable& t)
{
    if (t.header.size() < 2) throw UsageError("loss panel needs at least 2 model columns");
    if (t.values.rows() < 2) throw DataError("loss panel needs at least 2 rows (found " +
                                             std::to_string(t.values.rows()) + ")");
    std::vector<std::string> ids;
    for (const auto& h : t.header)
        ids.push_back(h.rfind(kModelPrefix, 0) == 0 ? h.substr(kModelPrefix.size()) : h);
    return LossPanel(t.values, std::move(ids));
}

inline LossPanel read_loss_panel(const std::filesystem::path& path) { return loss_panel_from_table(read_csv(path)); }

// ---------------------------------------------------------------------------
// Run configuration: a flat key-value record shared by config files,
// command-line overrides and the echo embedded in every report.

struct RunConfig {
    std::string command;        ///< select | panel | simulate
    std::string design;         ///< simulate: case1 | case2
    std::string data;
    std::string losses;
    std::string config_file;
    std::string out;
    std::string response;
    std::vector<std::string> learners;
    std::string method = "rsr";
    std::string loss = "huber";
    double tau = 0.0;           ///< 0 = data-driven knot
    double alpha = 0.1;
    double alpha_screen = 0.1;
    double s = 0.01;
    std::size_t B = 500;
    std::size_t folds = 5;
    std::size_t k_path = 50;
    std::string projection = "symmetrized";
    bool screening = false;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    // simulation designs
    std::vector<std::size_t> n;
    std::size_t p = 200;
    double x_df = 3.0;
    double noise_df = 3.0;
    double rho = 0.25;
    std::size_t reps = 100;
    std::vector<std::string> methods{"cv", "cvc_style", "pcv", "rsr"};

    bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string join(const std::vector<std::string>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
}

inline std::string join(const std::vector<std::size_t>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

inline double want_double(const std::string& key, const std::string& v)
{
    const auto d = parse_double(v);
    if (!d || !std::isfinite(*d)) throw UsageError("config key '" + key + "': expected a number, got '" + v + "'");
    return *d;
}

template <class Int>
Int want_int(const std::string& key, const std::string& v)
{
    const auto d = parse_int<Int>(v);
    if (!d) throw UsageError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
    return *d;
}

inline bool want_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw UsageError("config key '" + key + "': expected true/false, got '" + v + "'");
}

inline std::vector<std::string> want_list(const std::string& v)
{
    std::vector<std::string> out;
    for (auto& item : split(v, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

} // namespace detail

/// Ordered key-value echo of every field.
inline std::vector<std::pair<std::string, std::string>> to_kv(const RunConfig& c)
{
    using detail::join;
    return {
        {"command", c.command},
        {"design", c.design},
        {"data", c.data},
        {"losses", c.losses},
        {"config_file", c.config_file},
        {"out", c.out},
        {"response", c.response},
        {"learners", join(c.learners)},
        {"method", c.method},
        {"loss", c.loss},
        {"tau", format_double(c.tau)},
        {"alpha", format_double(c.alpha)},
        {"alpha_screen", format_double(c.alpha_screen)},
        {"s", format_double(c.s)},
        {"B", std::to_string(c.B)},
        {"folds", std::to_string(c.folds)},
        {"k_path", std::to_string(c.k_path)},
        {"projection", c.projection},
        {"screening", c.screening ? "true" : "false"},
        {"seed", c.seed ? std::to_string(*c.seed) : ""},
        {"threads", std::to_string(c.threads)},
        {"n", join(c.n)},
        {"p", std::to_string(c.p)},
        {"x_df", format_double(c.x_df)},
        {"noise_df", format_double(c.noise_df)},
        {"rho", format_double(c.rho)},
        {"reps", std::to_string(c.reps)},
        {"methods", join(c.methods)},
    };
}

/// Apply one key = value assignment.
inline void apply_kv(RunConfig& c, const std::string& key, const std::string& v)
{
    using namespace detail;
    if (key == "command") c.command = v;
    else if (key == "design") c.design = v;
    else if (key == "data") c.data = v;
    else if (key == "losses") c.losses = v;
    else if (key == "config_file") c.config_file = v;
    else if (key == "out") c.out = v;
    else if (key == "response") c.response = v;
    else if (key == "learners") c.learners = want_list(v);
    else if (key == "method") c.method = v;
    else if (key == "loss") c.loss = v;
    else if (key == "tau") c.tau = want_double(key, v);
    else if (key == "alpha") c.alpha = want_double(key, v);
    else if (key == "alpha_screen") c.alpha_screen = want_double(key, v);
    else if (key == "s") c.s = want_double(key, v);
    else if (key == "B") c.B = want_int<std::size_t>(key, v);
    else if (key == "folds") c.folds = want_int<std::size_t>(key, v);
    else if (key == "k_path") c.k_path = want_int<std::size_t>(key, v);
    else if (key == "projection") c.projection = v;
    else if (key == "screening") c.screening = want_bool(key, v);
    else if (key == "seed") c.seed = v.empty() ? std::nullopt : std::optional(want_int<std::uint64_t>(key, v));
    else if (key == "threads") c.threads = want_int<unsigned>(key, v);
    else if (key == "n") {
        c.n.clear();
        for (const auto& item : want_list(v)) c.n.push_back(want_int<std::size_t>(key, item));
    }
    else if (key == "p") c.p = want_int<std::size_t>(key, v);
    else if (key == "x_df") c.x_df = want_double(key, v);
    else if (key == "noise_df") c.noise_df = want_double(key, v);
    else if (key == "rho") c.rho = want_double(key, v);
    else if (key == "reps") c.reps = want_int<std::size_t>(key, v);
    else if (key == "methods") c.methods = want_list(v);
    else throw UsageError("unknown config key '" + key + "'");
}

/// Parse "key=value" (as given to --set).
inline void apply_assignment(RunConfig& c, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw UsageError("expected key=value, got '" + assignment + "'");
    apply_kv(c, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

/// Flat config text: one "key = value" per line, '#' starts a comment.
inline void apply_config_text(RunConfig& c, std::istream& in, const std::string& source)
{
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        if (line.find('=') == std::string::npos)
            throw UsageError(source + ": line " + std::to_string(line_no) + ": expected key = value");
        apply_assignment(c, line);
    }
}

inline void apply_config_file(RunConfig& c, const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path.string() + "'");
    apply_config_text(c, in, path.string());
}

inline nlohmann::json echo_json(const RunConfig& c)
{
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : to_kv(c)) j[k] = v;
    return j;
}

inline RunConfig from_echo(const nlohmann::json& j)
{
    RunConfig c;
    c.learners.clear();
    c.methods.clear();
    for (const auto& [k, v] : j.items()) apply_kv(c, k, v.get<std::string>());
    return c;
}

// ---------------------------------------------------------------------------
// Conversions into library configs

inline Projection parse_projection(const std::string& s)
{
    if (s == "symmetrized") return Projection::symmetrized;
    if (s == "row_only") return Projection::row_only;
    throw UsageError("projection must be 'symmetrized' or 'row_only', got '" + s + "'");
}

inline Method parse_method_or_usage(const std::string& s)
{
    try {
        return parse_method(s);
    } catch (const InvalidInput& e) {
        throw UsageError(e.what());
    }
}

inline void validate_common(const RunConfig& c)
{
    if (!c.seed) throw UsageError("--seed is required (runs must be reproducible)");
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw UsageError("--alpha must lie in (0, 1)");
    if (!(c.alpha_screen > 0.0 && c.alpha_screen < 1.0)) throw UsageError("alpha_screen must lie in (0, 1)");
    if (!(c.s > 0.0)) throw UsageError("s must be positive");
    if (c.B < kMinBootstrapDraws) throw UsageError("--B must be at least 100");
    if (c.folds == 1) throw UsageError("--folds must be 0 (sample splitting) or >= 2");
    parse_projection(c.projection);
}

inline SelectionConfig selection_config(const RunConfig& c, LossFn loss)
{
    validate_common(c);
    SelectionConfig s;
    s.alpha = c.alpha;
    s.alpha_screen = c.alpha_screen;
    s.s = c.s;
    s.B = c.B;
    s.V = c.folds;
    s.seed = *c.seed;
    s.projection = parse_projection(c.projection);
    s.screening = c.screening;
    s.loss = loss;
    s.threads = c.threads;
    return s;
}

inline std::vector<Method> methods_of(const RunConfig& c)
{
    if (c.methods.empty()) throw UsageError("methods: empty list");
    std::vector<Method> out;
    for (const auto& m : c.methods) out.push_back(parse_method_or_usage(m));
    return out;
}

inline Case1Config case1_config(const RunConfig& c, std::size_t n)
{
    validate_common(c);
    Case1Config k;
    k.n = n;
    k.x_df = c.x_df;
    k.reps = c.reps;
    k.alpha = c.alpha;
    k.seed = *c.seed;
    k.methods = methods_of(c);
    k.B = c.B;
    k.folds = c.folds;
    k.screening = c.screening;
    k.alpha_screen = c.alpha_screen;
    k.s = c.s;
    k.projection = parse_projection(c.projection);
    k.threads = c.threads;
    if (k.folds < 2) throw UsageError("case1: folds must be >= 2");
    if (n < 2 * k.folds) throw UsageError("case1: n must be at least 2 * folds");
    return k;
}

inline Case2Config case2_config(const RunConfig& c)
{
    validate_common(c);
    if (c.n.size() != 1) throw UsageError("case2: give exactly one n (supported (n, p): (200, 200), (400, 2000))");
    const std::size_t n = c.n.front();
    if (!((n == 200 && c.p == 200) || (n == 400 && c.p == 2000)))
        throw UsageError("case2: unsupported (n, p) = (" + std::to_string(n) + ", " + std::to_string(c.p) +
                         "); supported values are (200, 200) and (400, 2000)");
    Case2Config k;
    k.n = n;
    k.p = c.p;
    k.noise_df = c.noise_df;
    k.rho = c.rho;
    k.reps = c.reps;
    k.folds = c.folds;
    k.k_path = c.k_path;
    k.alpha = c.alpha;
    k.seed = *c.seed;
    k.methods = methods_of(c);
    k.B = c.B;
    k.screening = c.screening;
    k.alpha_screen = c.alpha_screen;
    k.s = c.s;
    k.projection = parse_projection(c.projection);
    k.threads = c.threads;
    if (k.folds < 2) throw UsageError("case2: folds must be >= 2");
    if (!(std::abs(k.rho) < 1.0)) throw UsageError("case2: |rho| must be < 1");
    return k;
}

// ---------------------------------------------------------------------------
// JSON reports

inline nlohmann::json to_json(const ConfidenceSet& cs)
{
    nlohmann::json models = nlohmann::json::array();
    nlohmann::json selected_ids = nlohmann::json::array();
    nlohmann::json screened_counts = nlohmann::json::array();
    for (std::size_t m = 0; m < cs.p_values.size(); ++m) {
        const auto& d = cs.diagnostics[m];
        nlohmann::json comps = nlohmann::json::array();
        for (std::size_t c = 0; c < d.competitors.size(); ++c) {
            nlohmann::json e;
            e["id"] = cs.model_ids[d.competitors[c]];
            if (c < d.mu.size()) e["mu"] = d.mu[c];
            if (c < d.se.size()) e["se"] = d.se[c];
            if (c < d.survived.size()) e["screened_out"] = !d.survived[c];
            comps.push_back(std::move(e));
        }
        nlohmann::json entry;
        entry["id"] = cs.model_ids[m];
        entry["p_value"] = cs.p_values[m];
        entry["selected"] = cs.contains(m);
        entry["flagged"] = static_cast<bool>(cs.flagged[m]);
        entry["bootstrap_columns"] = cs.bootstrap_columns[m];
        entry["screened_count"] = cs.screened_out[m].size();
        entry["competitors"] = std::move(comps);
        if (std::isfinite(d.t_obs)) entry["t_obs"] = d.t_obs;
        models.push_back(std::move(entry));
        screened_counts.push_back(cs.screened_out[m].size());
    }
    for (auto m : cs.selected) selected_ids.push_back(cs.model_ids[m]);
    nlohmann::json j;
    j["method"] = to_string(cs.method);
    j["alpha"] = cs.alpha;
    j["models"] = std::move(models);
    j["selected_ids"] = std::move(selected_ids);
    j["screened_counts"] = std::move(screened_counts);
    return j;
}

inline nlohmann::json to_json(const AggregateReport& a)
{
    nlohmann::json methods = nlohmann::json::object();
    for (const auto& m : a.methods) {
        nlohmann::json metrics = nlohmann::json::object();
        for (const auto& [name, s] : m.metrics) metrics[name] = {{"mean", s.mean}, {"se", s.se}};
        methods[method_label(m.method)] = std::move(metrics);
    }
    return {{"design", a.design},
            {"n", a.n},
            {"reps", a.reps},
            {"failed_fit_mean", a.failed_fit_mean},
            {"methods", std::move(methods)}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
}

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

} // namespace ranksel::io

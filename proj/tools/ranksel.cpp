#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ranksel/commands.hpp"

using namespace ranksel;

namespace {

struct Flags {
    std::string config_file;
    std::vector<std::string> sets;
    std::string learners;
    std::uint64_t seed = 0;
};

void add_selection_flags(CLI::App* app, io::RunConfig& c, Flags& f)
{
    app->add_option("--alpha", c.alpha, "Significance level in (0, 1)");
    app->add_option("--B", c.B, "Bootstrap draws (>= 100)");
    app->add_option("--seed", f.seed, "Random seed (required)");
    app->add_option("--out", c.out, "Output directory")->required();
    app->add_option("--method", c.method, "rsr | rsr_split | cv | pcv | cvc_style");
    app->add_option("--projection", c.projection, "symmetrized | row_only");
    app->add_flag("--screen", c.screening, "Enable competitor screening");
    app->add_option("--alpha-screen", c.alpha_screen, "Screening level alpha'");
    app->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
}

void apply_file_then_overrides(io::RunConfig& c, const Flags& f)
{
    for (const auto& s : f.sets) io::apply_assignment(c, s);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Rank-sum based robust model selection"};
    app.set_version_flag("--version", cli::kVersion);
    app.require_subcommand(1);

    io::RunConfig c;
    Flags f;

    auto* sel = app.add_subcommand("select", "Confidence set of learners fitted on a CSV data set");
    sel->add_option("--data", c.data, "Input CSV with a header row")->required();
    sel->add_option("--response", c.response, "Name of the response column")->required();
    sel->add_option("--learners", f.learners, "Comma-separated learners: ols,huber,huber_lasso")->required();
    sel->add_option("--folds", c.folds, "V-fold count (0 = sample splitting)");
    sel->add_option("--loss", c.loss, "squared | absolute | huber");
    sel->add_option("--tau", c.tau, "Huber knot (0 = data-driven)");
    sel->add_option("--k-path", c.k_path, "Penalty path length for huber_lasso");
    add_selection_flags(sel, c, f);

    auto* pan = app.add_subcommand("panel", "Confidence set from a precomputed loss panel");
    pan->add_option("--losses", c.losses, "CSV of per-observation losses, one column per model")->required();
    add_selection_flags(pan, c, f);

    auto* sim = app.add_subcommand("simulate", "Run a simulation design");
    sim->add_option("design", c.design, "case1 | case2")->required();
    sim->add_option("--config", f.config_file, "Flat key = value config file");
    sim->add_option("--set", f.sets, "Override: key=value (repeatable)");
    sim->add_option("--out", c.out, "Output directory")->required();
    sim->add_option("--threads", c.threads, "Worker threads (0 = all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : io::kUsage;
    }

    for (auto* sub : {sel, pan})
        if (sub->parsed() && sub->count("--seed")) c.seed = f.seed;

    try {
        if (sel->parsed()) {
            c.command = "select";
            c.learners = io::detail::want_list(f.learners);
            cli::cmd_select(c);
        } else if (pan->parsed()) {
            c.command = "panel";
            cli::cmd_panel(c);
        } else {
            // Config file first, then --set, then explicit flags.
            io::RunConfig file_cfg;
            file_cfg.design = c.design;
            if (!f.config_file.empty()) {
                io::apply_config_file(file_cfg, f.config_file);
                file_cfg.config_file = f.config_file;
            }
            file_cfg.command = "simulate";
            file_cfg.design = c.design;
            apply_file_then_overrides(file_cfg, f);
            file_cfg.out = c.out;
            if (sim->count("--threads")) file_cfg.threads = c.threads;
            cli::cmd_simulate(file_cfg);
        }
    } catch (const std::exception& e) {
        std::cerr << "ranksel: error: " << e.what() << '\n';
        return cli::exit_code_for(e);
    }
    return io::kOk;
}

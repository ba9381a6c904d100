#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "ranksel/commands.hpp"

using namespace ranksel;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("ranksel_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

io::RunConfig golden_config()
{
    io::RunConfig c;
    c.command = "simulate";
    c.design = "case1";
    c.config_file = "case1.cfg";
    c.out = "results/case1";
    c.alpha = 0.05;
    c.alpha_screen = 0.2;
    c.B = 1000;
    c.screening = true;
    c.seed = 18446744073709551615ull;
    c.threads = 4;
    c.n = {40, 80, 160, 320};
    c.x_df = 2.5;
    c.reps = 100;
    c.methods = {"rsr", "pcv"};
    c.tau = 0.1;
    return c;
}

void write_toy_data(const fs::path& p, std::size_t n, std::uint64_t seed)
{
    std::ofstream out(p);
    out << "x1,x2,y\n";
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> g;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = g(eng), b = g(eng);
        out << io::format_double(a) << ',' << io::format_double(b) << ',' << io::format_double(1 + 2 * a + g(eng))
            << '\n';
    }
}

int run_cli(const std::string& args, std::string* err = nullptr)
{
    const fs::path log = fs::temp_directory_path() / "ranksel_cli_stderr.txt";
    const std::string cmd = std::string(RANKSEL_CLI) + " " + args + " >/dev/null 2>" + log.string();
    const int status = std::system(cmd.c_str());
    if (err) *err = slurp(log);
    return WEXITSTATUS(status);
}

} // namespace

TEST(Csv, LossPanelRoundTripIsBitExact)
{
    std::mt19937_64 eng(1);
    std::normal_distribution<double> g;
    Eigen::MatrixXd l(25, 3);
    for (Eigen::Index i = 0; i < l.size(); ++i) l.data()[i] = std::exp(g(eng) * 5);
    l(0, 0) = 1e-300;
    l(1, 1) = 0.1;
    const LossPanel panel(l, {"a", "b", "c"});
    std::stringstream s;
    io::write_loss_panel(s, panel);
    const LossPanel back = io::loss_panel_from_table(io::parse_csv(s, "mem"));
    EXPECT_EQ(back.ids(), panel.ids());
    for (Eigen::Index i = 0; i < l.size(); ++i) EXPECT_EQ(back.matrix().data()[i], l.data()[i]);
}

TEST(Csv, ErrorsNameLineAndColumn)
{
    std::stringstream ragged("a,b\n1,2\n3\n");
    try {
        io::parse_csv(ragged, "f.csv");
        FAIL();
    } catch (const io::DataError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
    std::stringstream text("a,b\n1,xyz\n");
    try {
        io::parse_csv(text, "f.csv");
        FAIL();
    } catch (const io::DataError& e) {
        EXPECT_NE(std::string(e.what()).find("column 'b'"), std::string::npos);
    }
    std::stringstream nan("a,b\n1,2\nnan,1\n");
    try {
        io::parse_csv(nan, "f.csv");
        FAIL();
    } catch (const io::DataError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3: column 'a'"), std::string::npos);
    }
}

TEST(Csv, PanelShapeChecks)
{
    std::stringstream one_col("model_a\n1\n2\n");
    EXPECT_THROW(io::loss_panel_from_table(io::parse_csv(one_col, "m")), io::UsageError);
    std::stringstream one_row("model_a,model_b\n1,2\n");
    EXPECT_THROW(io::loss_panel_from_table(io::parse_csv(one_row, "m")), io::DataError);
}

TEST(Config, EchoMatchesGoldenFileAndRoundTrips)
{
    const auto c = golden_config();
    const std::string got = io::dump(io::echo_json(c));
    const std::string want = slurp(fs::path(RANKSEL_TEST_DATA) / "echo_golden.json");
    EXPECT_EQ(got, want);
    EXPECT_EQ(io::from_echo(nlohmann::json::parse(want)), c);
}

TEST(Config, DefaultEchoRoundTrips)
{
    io::RunConfig c;
    c.seed = 0;
    EXPECT_EQ(io::from_echo(io::echo_json(c)), c);
}

TEST(Config, FlatFileAndOverrides)
{
    io::RunConfig c;
    std::stringstream text("# comment\nalpha = 0.2\nn = 40, 320\nmethods = rsr,cv  # trailing\nseed=7\n");
    io::apply_config_text(c, text, "t.cfg");
    io::apply_assignment(c, "alpha=0.3");
    EXPECT_EQ(c.alpha, 0.3);
    EXPECT_EQ(c.n, (std::vector<std::size_t>{40, 320}));
    EXPECT_EQ(c.methods, (std::vector<std::string>{"rsr", "cv"}));
    EXPECT_EQ(*c.seed, 7u);
    EXPECT_THROW(io::apply_assignment(c, "bogus=1"), io::UsageError);
    EXPECT_THROW(io::apply_assignment(c, "B=many"), io::UsageError);
    EXPECT_THROW(io::apply_assignment(c, "novalue"), io::UsageError);
}

TEST(Config, Case2DimensionsListedInError)
{
    io::RunConfig c;
    c.seed = 1;
    c.n = {300};
    try {
        io::case2_config(c);
        FAIL();
    } catch (const io::UsageError& e) {
        EXPECT_NE(std::string(e.what()).find("(200, 200) and (400, 2000)"), std::string::npos);
    }
}

TEST(Commands, PanelMatchesLibraryCall)
{
    const auto dir = scratch_dir("panel");
    std::mt19937_64 eng(3);
    std::exponential_distribution<double> ex;
    Eigen::MatrixXd l(80, 3);
    for (Eigen::Index i = 0; i < 80; ++i) {
        l(i, 0) = ex(eng);
        l(i, 1) = ex(eng) + 0.3;
        l(i, 2) = ex(eng);
    }
    const LossPanel panel(l, {"a", "b", "c"});
    {
        std::ofstream out(dir / "losses.csv");
        io::write_loss_panel(out, panel);
    }
    io::RunConfig c;
    c.losses = (dir / "losses.csv").string();
    c.out = (dir / "out").string();
    c.seed = 11;
    const auto bundle = cli::cmd_panel(c);
    SelectionConfig s;
    s.seed = 11;
    const auto lib = rsr_select(panel, s);
    EXPECT_EQ(bundle.set->p_values, lib.p_values);
    EXPECT_TRUE(fs::exists(dir / "out" / "report.json"));
    EXPECT_TRUE(fs::exists(dir / "out" / "pvalues.csv"));
}

TEST(Commands, DominatedReferencesRejectedLikeLibraryMonteCarlo)
{
    // Column 0 is strictly below the others on every row.
    const auto dir = scratch_dir("dominance");
    std::mt19937_64 eng(4);
    std::normal_distribution<double> g;
    Eigen::MatrixXd l(100, 3);
    for (Eigen::Index i = 0; i < 100; ++i) {
        l(i, 0) = std::abs(g(eng));
        l(i, 1) = l(i, 0) + 1.0 + std::abs(g(eng));
        l(i, 2) = l(i, 0) + 0.5 + std::abs(g(eng));
    }
    {
        std::ofstream out(dir / "losses.csv");
        io::write_loss_panel(out, LossPanel(l));
    }
    io::RunConfig c;
    c.losses = (dir / "losses.csv").string();
    c.out = (dir / "out").string();
    c.seed = 21;
    const auto cs = *cli::cmd_panel(c).set;
    EXPECT_EQ(cs.selected, std::vector<std::size_t>{0});

    int rejected = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        SelectionConfig s;
        s.seed = seed;
        const auto lib = rsr_select(LossPanel(l), s);
        rejected += !lib.contains(1) && !lib.contains(2);
    }
    EXPECT_EQ(rejected, 50);
}

TEST(Commands, SelectIsByteDeterministicAndKeepsExchangeableModels)
{
    const auto dir = scratch_dir("select");
    write_toy_data(dir / "toy.csv", 60, 5);
    io::RunConfig c;
    c.data = (dir / "toy.csv").string();
    c.response = "y";
    c.learners = {"ols", "ols"};
    c.seed = 9;
    c.out = (dir / "a").string();
    const auto a = cli::cmd_select(c);
    EXPECT_EQ(a.set->selected.size(), 2u);
    EXPECT_EQ(a.set->model_ids, (std::vector<std::string>{"ols", "ols#2"}));
    c.out = (dir / "b").string();
    c.threads = 3;
    cli::cmd_select(c);
    EXPECT_EQ(slurp(dir / "a" / "report.json"), slurp(dir / "b" / "report.json"));
    EXPECT_EQ(slurp(dir / "a" / "pvalues.csv"), slurp(dir / "b" / "pvalues.csv"));
}

TEST(Commands, SelectWithLassoPathAndSplitting)
{
    const auto dir = scratch_dir("select_lasso");
    write_toy_data(dir / "toy.csv", 80, 6);
    io::RunConfig c;
    c.data = (dir / "toy.csv").string();
    c.response = "y";
    c.learners = {"huber", "huber_lasso"};
    c.k_path = 4;
    c.folds = 0;
    c.seed = 1;
    c.out = (dir / "out").string();
    const auto b = cli::cmd_select(c);
    EXPECT_EQ(b.set->method, Method::rsr_split);
    EXPECT_EQ(b.set->model_ids.size(), 5u);
    const auto report = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
    EXPECT_EQ(report["result"]["models"].size(), 5u);
    EXPECT_TRUE(report["result"]["models"][0].contains("competitors"));
}

TEST(Commands, SimulateSmokeWritesParsableOutputs)
{
    const auto dir = scratch_dir("simulate");
    io::RunConfig c;
    c.design = "case1";
    c.n = {40};
    c.reps = 2;
    c.B = 100;
    c.seed = 3;
    c.out = dir.string();
    const auto b = cli::cmd_simulate(c);
    const auto agg = nlohmann::json::parse(slurp(dir / "aggregate.json"));
    EXPECT_EQ(agg["results"][0]["reps"], 2);
    EXPECT_TRUE(agg["results"][0]["methods"]["rsr"].contains("correct_rate"));
    std::ifstream rep(dir / "replicates.csv");
    std::string line;
    int lines = 0;
    while (std::getline(rep, line)) ++lines;
    EXPECT_EQ(lines, 1 + 2 * 4);
    for (const char* f : {"setsize_vs_n.dat", "rates.dat"}) {
        std::ifstream in(dir / f);
        int rows = 0;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::istringstream s(line);
            double x, y;
            std::string series;
            ASSERT_TRUE(static_cast<bool>(s >> x >> y >> series)) << line;
            ++rows;
        }
        EXPECT_EQ(rows, 4);
    }
    EXPECT_FALSE(slurp(dir / "aggregate.json").find("wall") != std::string::npos);
}

TEST(Cli, ExitCodes)
{
    const auto dir = scratch_dir("cli");
    write_toy_data(dir / "toy.csv", 40, 7);
    const std::string data = (dir / "toy.csv").string();
    const std::string out = (dir / "out").string();
    std::string err;

    EXPECT_EQ(run_cli("select --data " + data + " --response y --learners ols,huber --seed 1 --out " + out), 0);
    EXPECT_EQ(run_cli("select --data " + data + " --response missing --learners ols,huber --seed 1 --out " + out, &err), 2);
    EXPECT_NE(err.find("--response"), std::string::npos);
    EXPECT_EQ(run_cli("select --data " + data + " --learners ols --seed 1 --out " + out, &err), 2);
    EXPECT_NE(err.find("--response"), std::string::npos);
    EXPECT_EQ(run_cli("select --data " + data + " --response y --learners ols,huber --out " + out, &err), 2);
    EXPECT_NE(err.find("--seed"), std::string::npos);
    EXPECT_EQ(run_cli("select --data " + data + " --response y --learners \"\" --seed 1 --out " + out), 2);
    EXPECT_EQ(run_cli("select --data " + data + " --response y --learners ols,knn --seed 1 --out " + out), 2);
    EXPECT_EQ(run_cli("select --data /nonexistent.csv --response y --learners ols,huber --seed 1 --out " + out), 3);

    {
        std::ofstream bad(dir / "bad.csv");
        bad << "model_a,model_b\n1,2\n3,nan\n";
    }
    EXPECT_EQ(run_cli("panel --losses " + (dir / "bad.csv").string() + " --seed 1 --out " + out, &err), 3);
    EXPECT_NE(err.find("line 3"), std::string::npos);
    {
        std::ofstream single(dir / "single.csv");
        single << "model_a,model_b\n1,2\n";
    }
    EXPECT_EQ(run_cli("panel --losses " + (dir / "single.csv").string() + " --seed 1 --out " + out), 3);
    {
        std::ofstream narrow(dir / "narrow.csv");
        narrow << "model_a\n1\n2\n";
    }
    EXPECT_EQ(run_cli("panel --losses " + (dir / "narrow.csv").string() + " --seed 1 --out " + out), 2);

    EXPECT_EQ(run_cli("simulate case2 --set n=300 --set seed=1 --out " + out, &err), 2);
    EXPECT_NE(err.find("(400, 2000)"), std::string::npos);
    EXPECT_EQ(run_cli("simulate case3 --set seed=1 --out " + out), 2);
    EXPECT_EQ(run_cli("simulate case1 --config /nonexistent.cfg --out " + out), 2);
    EXPECT_EQ(run_cli("frobnicate"), 2);
}

TEST(Cli, ExitCodeMapping)
{
    EXPECT_EQ(cli::exit_code_for(io::UsageError("x")), 2);
    EXPECT_EQ(cli::exit_code_for(io::DataError("x")), 3);
    EXPECT_EQ(cli::exit_code_for(InvalidInput("x")), 3);
    EXPECT_EQ(cli::exit_code_for(NumericalFailure("x")), 4);
}

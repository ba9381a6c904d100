#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ranksel/select.hpp"
#include "ranksel/simlab.hpp"

using namespace ranksel;

namespace {

SelectionConfig config(std::uint64_t seed, double alpha = 0.1)
{
    SelectionConfig c;
    c.seed = seed;
    c.alpha = alpha;
    c.B = 300;
    return c;
}

LossPanel t_panel(std::size_t n, std::size_t models, std::uint64_t seed, const std::vector<double>& shift = {})
{
    Engine eng = make_engine(seed, {stream::data});
    Eigen::MatrixXd l(n, models);
    for (std::size_t i = 0; i < n; ++i) {
        const double common = sample_student_t(2.0, eng);
        for (std::size_t j = 0; j < models; ++j)
            l(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                std::abs(common + sample_student_t(2.0, eng)) + (j < shift.size() ? shift[j] : 0.0);
    }
    return LossPanel(l);
}

} // namespace

TEST(Screening, ThresholdAndElimination)
{
    const double cut = screening_threshold(16, 0.1, 0.01);
    EXPECT_DOUBLE_EQ(cut, 2.0 * normal_quantile(1.0 - 0.1 / std::pow(15.0, 1.01)));
    std::vector<double> mu(15, 0.0), se(15, 0.01);
    EXPECT_EQ(screen(mu, se, 16, 0.1, 0.01).size(), 15u);
    mu[4] = 1e4;  // z = 1e6
    const auto keep = screen(mu, se, 16, 0.1, 0.01);
    ASSERT_EQ(keep.size(), 14u);
    EXPECT_EQ(std::count(keep.begin(), keep.end(), 4u), 0);
}

TEST(Screening, NoEffectWhenNothingExceedsThreshold)
{
    const LossPanel panel = t_panel(150, 4, 3);
    auto on = config(5);
    on.screening = true;
    const auto a = rsr_select(panel, config(5));
    const auto b = rsr_select(panel, on);
    EXPECT_EQ(a.p_values, b.p_values);
}

TEST(Screening, EmptySurvivorSetKeepsReference)
{
    const LossPanel panel = t_panel(300, 3, 4, {0.0, 50.0, 50.0});
    auto cfg = config(6);
    cfg.screening = true;
    const auto cs = rsr_select(panel, cfg);
    EXPECT_EQ(cs.bootstrap_columns[0], 0u);
    EXPECT_EQ(cs.p_values[0], 1.0);
    EXPECT_TRUE(cs.contains(0));
}

TEST(CvSelect, ArgminWithFirstIndexTies)
{
    const std::vector<double> r{3, 1, 2};
    EXPECT_EQ(cv_select(r).selected, std::vector<std::size_t>{1});
    const std::vector<double> eq{2, 2, 2};
    EXPECT_EQ(cv_select(eq).selected, std::vector<std::size_t>{0});
}

TEST(Pcv, IdenticalColumnsAndStrictDominance)
{
    Engine gen(1);
    std::uniform_int_distribution<int> v(0, 5);
    const Eigen::Index n = 400;
    Eigen::MatrixXd l(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) l(i, 0) = l(i, 1) = v(gen);
    const auto tie = pcv_select(LossPanel(l), config(2));
    EXPECT_LE(std::abs(tie.diagnostics[0].mu[0]), 2.0 / std::sqrt(static_cast<double>(n)));

    l.col(1).array() += 1.0;
    const auto dom = pcv_select(LossPanel(l), config(2));
    EXPECT_EQ(dom.diagnostics[0].mu[0], 0.5);
    EXPECT_TRUE(dom.contains(0));
    EXPECT_FALSE(dom.contains(1));
}

TEST(CvcStyle, IdenticalColumnsRetained)
{
    const LossPanel base = t_panel(100, 1 + 1, 8);
    Eigen::MatrixXd l = base.matrix();
    l.col(1) = l.col(0);
    const auto cs = cvc_style_select(LossPanel(l), config(3));
    EXPECT_EQ(cs.diagnostics[0].mu[0], 0.0);
    EXPECT_TRUE(cs.contains(0));
    EXPECT_TRUE(cs.contains(1));
}

TEST(CvcStyle, PowerGrowsWithSampleSize)
{
    int rejected_small = 0, rejected_large = 0;
    for (int r = 0; r < 30; ++r) {
        for (const auto n : {40, 800}) {
            Engine eng = make_engine(r, {stream::data, static_cast<std::uint64_t>(n)});
            std::normal_distribution<double> g;
            Eigen::MatrixXd l(n, 2);
            for (int i = 0; i < n; ++i) {
                l(i, 0) = g(eng);
                l(i, 1) = g(eng) + 0.25;
            }
            const bool rej = !cvc_style_select(LossPanel(l), config(r)).contains(1);
            (n == 40 ? rejected_small : rejected_large) += rej;
        }
    }
    EXPECT_GE(rejected_large, 28);
    EXPECT_LT(rejected_small, rejected_large);
}

TEST(CvcStyle, NonFiniteDifferencesAreFlagged)
{
    Eigen::MatrixXd l = t_panel(50, 2, 9).matrix();
    l(0, 1) = 1e308;
    l(1, 1) = 1e308;
    const auto cs = cvc_style_select(LossPanel(l), config(3));
    EXPECT_TRUE(cs.flagged[0] || cs.flagged[1] || cs.p_values[1] < 1.0);
}

TEST(Rsr, DominatedModelRejected)
{
    int rejected = 0;
    for (int r = 0; r < 40; ++r) {
        const LossPanel panel = t_panel(400, 2, 100 + r, {0.0, 3.0});
        const auto cs = rsr_select(panel, config(r));
        rejected += cs.p_values[1] < 0.1;
        EXPECT_TRUE(cs.contains(0));
    }
    EXPECT_GE(rejected, 38);
}

TEST(Rsr, IdenticalModelsRetained)
{
    int kept = 0;
    const int reps = 200;
    for (int r = 0; r < reps; ++r) {
        const LossPanel panel = t_panel(60, 2, 500 + r);
        Eigen::MatrixXd l = panel.matrix();
        l.col(1) = l.col(0);
        const auto cs = rsr_select(LossPanel(l), config(r));
        kept += cs.contains(0) && cs.contains(1);
    }
    EXPECT_GE(kept, static_cast<int>((1.0 - 0.1 - 0.05) * reps));
}

TEST(Rsr, SetShrinksAsAlphaGrows)
{
    const LossPanel panel = t_panel(200, 6, 12, {0.0, 0.05, 0.1, 0.2, 0.3, 0.5});
    std::size_t prev = panel.models() + 1;
    for (double alpha : {0.01, 0.05, 0.1, 0.2, 0.4}) {
        const auto cs = rsr_select(panel, config(4, alpha));
        EXPECT_LE(cs.selected.size(), prev);
        prev = cs.selected.size();
    }
}

TEST(Rsr, InvariantUnderMonotoneTransform)
{
    const LossPanel panel = t_panel(120, 4, 13, {0.0, 0.2, 0.0, 0.4});
    Eigen::MatrixXd t = panel.matrix().array().log1p();
    const LossPanel transformed(t);
    EXPECT_EQ(rsr_select(panel, config(5)).p_values, rsr_select(transformed, config(5)).p_values);
    EXPECT_EQ(pcv_select(panel, config(5)).p_values, pcv_select(transformed, config(5)).p_values);
}

TEST(Rsr, ThreadCountDoesNotChangeResults)
{
    const LossPanel panel = t_panel(150, 6, 14);
    auto one = config(6);
    auto four = config(6);
    four.threads = 4;
    EXPECT_EQ(rsr_select(panel, one).p_values, rsr_select(panel, four).p_values);
}

TEST(Rsr, RowOnlyProjectionAlsoRuns)
{
    auto cfg = config(7);
    cfg.projection = Projection::row_only;
    const auto cs = rsr_select(t_panel(100, 3, 15, {0.0, 2.0, 2.0}), cfg);
    EXPECT_TRUE(cs.contains(0));
}

TEST(Config, RejectsTooFewDrawsAndSingleFold)
{
    auto c = config(1);
    c.B = 50;
    EXPECT_THROW(c.validate(), InvalidInput);
    c = config(1);
    c.V = 1;
    EXPECT_THROW(c.validate(), InvalidInput);
}

TEST(Folds, AssignmentIsBalancedAndSeeded)
{
    const auto f = fold_assignment(23, 5, 3);
    std::vector<int> counts(5, 0);
    for (auto v : f) ++counts[v];
    EXPECT_EQ(counts, (std::vector<int>{5, 5, 5, 4, 4}));
    EXPECT_EQ(f, fold_assignment(23, 5, 3));
    const auto [train, eval] = split_indices(9, 3);
    EXPECT_EQ(train.size(), 5u);
    EXPECT_EQ(eval.size(), 4u);
}

TEST(Learners, TwoFoldPanelUsesOutOfFoldPredictions)
{
    Engine eng(20);
    Dataset d;
    d.x.resize(40, 1);
    d.y.resize(40);
    std::normal_distribution<double> g;
    for (int i = 0; i < 40; ++i) {
        d.x(i, 0) = g(eng);
        d.y(i) = 2 * d.x(i, 0) + g(eng);
    }
    const LearnerSuite suite{{"ols", fit_ols}, {"huber", fit_huber_adaptive}};
    const std::uint64_t seed = 5;
    const auto held = vfold_predictions(suite, d, 2, seed, 1);
    const auto folds = fold_assignment(40, 2, seed);
    for (std::size_t v = 0; v < 2; ++v) {
        std::vector<std::size_t> train, eval;
        for (std::size_t i = 0; i < 40; ++i) (folds[i] == v ? eval : train).push_back(i);
        const auto fit = fit_ols(d.rows(train));
        for (auto i : eval) {
            const auto pos = std::find(held.rows.begin(), held.rows.end(), i) - held.rows.begin();
            EXPECT_NEAR(held.predictions(pos, 0), fit.predict(d.x.row(static_cast<Eigen::Index>(i))).value(), 1e-12);
        }
    }
}

TEST(Learners, FailedCandidateGetsZeroAndFlag)
{
    Engine eng(21);
    Dataset d;
    d.x.resize(60, 2);
    d.y.resize(60);
    std::normal_distribution<double> g;
    for (int i = 0; i < 60; ++i) {
        d.x(i, 0) = g(eng);
        d.x(i, 1) = g(eng);
        d.y(i) = d.x(i, 0) + g(eng);
    }
    LearnerSuite suite{{"ols", fit_ols},
                       {"huber", fit_huber_adaptive},
                       {"broken", [](const Dataset& s) { return detail::failed_fit(static_cast<std::size_t>(s.d()), "broken"); }}};
    auto cfg = config(3);
    cfg.V = 5;
    for (auto m : {Method::rsr_vfold, Method::pcv, Method::cvc_style, Method::cv}) {
        const auto cs = select_with_learners(suite, d, cfg, m);
        EXPECT_EQ(cs.p_values[2], 0.0);
        EXPECT_TRUE(cs.flagged[2]);
        EXPECT_FALSE(cs.contains(2));
    }
    cfg.V = 0;
    const auto split = select_with_learners(suite, d, cfg, Method::rsr_split);
    EXPECT_TRUE(split.flagged[2]);
}

TEST(Learners, ExchangeableCandidatesBothKept)
{
    Engine eng(22);
    Dataset d;
    d.x.resize(80, 1);
    d.y.resize(80);
    std::normal_distribution<double> g;
    for (int i = 0; i < 80; ++i) {
        d.x(i, 0) = g(eng);
        d.y(i) = d.x(i, 0) + g(eng);
    }
    const LearnerSuite suite{{"a", fit_ols}, {"b", fit_ols}};
    const auto cs = rsr_vfold(suite, d, config(8));
    EXPECT_EQ(cs.selected.size(), 2u);
}

TEST(PerReference, IdenticalPanelsMatchSinglePanelSelection)
{
    const LossPanel panel = t_panel(120, 4, 30, {0.0, 0.3, 0.0, 0.6});
    const std::vector<LossPanel> panels(4, panel);
    for (auto m : {Method::rsr_vfold, Method::pcv, Method::cvc_style})
        EXPECT_EQ(select_per_reference(panels, config(2), m).p_values, select_on_panel(panel, config(2), m).p_values);
    EXPECT_THROW(select_per_reference(panels, config(2), Method::cv), ContractViolation);
}

TEST(PerReference, RankMethodsIgnoreMonotoneRescoring)
{
    const LossPanel panel = t_panel(120, 3, 31, {0.0, 0.3, 0.1});
    std::vector<LossPanel> panels;
    for (double power : {1.0, 0.5, 2.0}) panels.emplace_back(Eigen::MatrixXd(panel.matrix().array().pow(power)));
    for (auto m : {Method::rsr_vfold, Method::pcv})
        EXPECT_EQ(select_per_reference(panels, config(3), m).p_values, select_on_panel(panel, config(3), m).p_values);
}

TEST(PerReference, ShapeMismatchRejected)
{
    const std::vector<LossPanel> panels{t_panel(50, 2, 1), t_panel(60, 2, 2)};
    EXPECT_THROW(select_per_reference(panels, config(1), Method::rsr_vfold), ContractViolation);
}

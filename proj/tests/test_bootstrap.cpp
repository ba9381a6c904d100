#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ranksel/bootstrap.hpp"

using namespace ranksel;

namespace {

Eigen::VectorXd centered(Eigen::VectorXd v)
{
    v.array() -= v.mean();
    return v;
}

double variance(const std::vector<double>& v)
{
    double m = 0, s = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

} // namespace

TEST(MultiplierBootstrap, ZeroScoresGiveZeroDraws)
{
    const auto draws = multiplier_min_bootstrap(Eigen::MatrixXd::Zero(30, 3), {200, 1});
    for (double t : draws) EXPECT_EQ(t, 0.0);
}

TEST(MultiplierBootstrap, SingleColumnVarianceMatchesScoreVariance)
{
    Engine gen(4);
    std::normal_distribution<double> g;
    Eigen::VectorXd psi(80);
    for (Eigen::Index i = 0; i < psi.size(); ++i) psi(i) = g(gen) * (1.0 + (i % 3));
    psi = centered(psi);
    const double v = psi.squaredNorm() / static_cast<double>(psi.size());
    const auto draws = multiplier_min_bootstrap(psi, {5000, 17});
    EXPECT_NEAR(variance(draws) / v, 1.0, 0.1);
}

TEST(MultiplierBootstrap, DuplicateColumnsMatchSingleColumn)
{
    Engine gen(5);
    std::normal_distribution<double> g;
    Eigen::VectorXd psi(40);
    for (Eigen::Index i = 0; i < psi.size(); ++i) psi(i) = g(gen);
    psi = centered(psi);
    Eigen::MatrixXd two(40, 2);
    two << psi, psi;
    EXPECT_EQ(multiplier_min_bootstrap(psi, {300, 3}), multiplier_min_bootstrap(two, {300, 3}));
}

TEST(MultiplierBootstrap, DeterministicAndSeedSensitive)
{
    Eigen::MatrixXd psi = Eigen::MatrixXd::Random(25, 4);
    psi.rowwise() -= psi.colwise().mean();
    EXPECT_EQ(multiplier_min_bootstrap(psi, {150, 9}), multiplier_min_bootstrap(psi, {150, 9}));
    EXPECT_NE(multiplier_min_bootstrap(psi, {150, 9}), multiplier_min_bootstrap(psi, {150, 10}));
}

TEST(MultiplierBootstrap, RejectsUncenteredScores)
{
    Eigen::MatrixXd psi = Eigen::MatrixXd::Constant(10, 1, 1.0);
    EXPECT_THROW(multiplier_min_bootstrap(psi, {100, 1}), ContractViolation);
}

TEST(MultiplierBootstrap, ApproximatesMinimumOfGaussianMeans)
{
    // Two independent N(0,1) score columns: min of two standard normals has
    // median -0.5449 (solves (1 - Phi(x))^2 = 1/2).
    Engine gen(6);
    std::normal_distribution<double> g;
    const Eigen::Index n = 2000;
    Eigen::MatrixXd psi(n, 2);
    for (Eigen::Index i = 0; i < psi.size(); ++i) psi.data()[i] = g(gen);
    psi.rowwise() -= psi.colwise().mean();
    auto draws = multiplier_min_bootstrap(psi, {4000, 2});
    std::nth_element(draws.begin(), draws.begin() + 2000, draws.end());
    EXPECT_NEAR(draws[2000], -0.5449, 0.08);
}

TEST(PValue, CountsStrictlySmallerDraws)
{
    const std::vector<double> d{-1, 0, 1, 2};
    EXPECT_EQ(p_value(0.5, d), 0.5);
    EXPECT_EQ(p_value(-5.0, d), 0.0);
    EXPECT_EQ(p_value(5.0, d), 1.0);
    EXPECT_EQ(p_value(0.0, d), 0.25);
}

TEST(NormalQuantile, ReferenceValues)
{
    EXPECT_EQ(normal_quantile(0.5), 0.0);
    EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-8);
    EXPECT_NEAR(normal_quantile(1e-10), -6.361340902404056, 1e-7);
    EXPECT_THROW(normal_quantile(0.0), InvalidInput);
    EXPECT_THROW(normal_quantile(1.0), InvalidInput);
}

TEST(NormalQuantile, SymmetricAndMonotone)
{
    double prev = -INFINITY;
    for (int i = 1; i < 1000; ++i) {
        const double q = i / 1000.0;
        const double x = normal_quantile(q);
        EXPECT_NEAR(x, -normal_quantile(1.0 - q), 1e-12);
        EXPECT_GT(x, prev);
        EXPECT_NEAR(normal_cdf(x), q, 1e-12);
        prev = x;
    }
}

TEST(MinStatistic, ObservedValueAndPValue)
{
    Eigen::MatrixXd psi = Eigen::MatrixXd::Random(100, 3);
    psi.rowwise() -= psi.colwise().mean();
    const std::vector<double> means{0.2, -0.1, 0.3};
    const auto res = min_statistic_test(means, psi, {500, 8});
    EXPECT_DOUBLE_EQ(res.t_obs, -0.1 * 10.0);
    EXPECT_EQ(res.p_value, p_value(res.t_obs, res.draws));
}

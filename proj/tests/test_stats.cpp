#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rwlab/error.hpp"
#include "rwlab/stats.hpp"

using namespace rwlab;

TEST(Stats, NormalCdfAccuracy) {
  double worst = 0.0;
  for (double x = -8.0; x <= 8.0; x += 0.001) worst = std::max(worst, std::abs(normal_cdf(x) - 0.5 * std::erfc(-x / std::sqrt(2.0))));
  EXPECT_LT(worst, 1e-7);
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-7);
}

TEST(Stats, KolmogorovSurvival) {
  // Theta-function form of the Kolmogorov CDF, which converges fast for small lambda.
  auto cdf = [](double l) {
    double s = 0.0;
    for (int k = 1; k <= 50; ++k) s += std::exp(-std::pow(2 * k - 1, 2) * M_PI * M_PI / (8 * l * l));
    return std::sqrt(2 * M_PI) / l * s;
  };
  for (double l : {0.5, 0.8, 1.0, 1.36, 1.63, 2.0}) EXPECT_NEAR(kolmogorov_q(l), 1.0 - cdf(l), 1e-12) << l;
  EXPECT_EQ(kolmogorov_q(0.0), 1.0);
  EXPECT_NEAR(kolmogorov_q(1.358), 0.05, 1e-3);
}

TEST(Stats, KsNormal) {
  std::mt19937_64 g(1);
  std::normal_distribution<double> z(0.0, 2.0);
  int rejects = 0;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> xs(500);
    for (double& x : xs) x = z(g);
    const KsResult r = ks_normal(xs, 4.0);
    EXPECT_GE(r.p_value, 0.0);
    EXPECT_LE(r.p_value, 1.0);
    if (r.p_value < 0.05) ++rejects;
  }
  EXPECT_LT(rejects, 25);
  std::vector<double> xs(2000);
  for (double& x : xs) x = z(g);
  EXPECT_LT(ks_normal(xs, 1.0).p_value, 1e-6);
  EXPECT_THROW(ks_normal(xs, 0.0), InvalidArgument);
  const std::vector<double> one = {0.0};
  EXPECT_NEAR(ks_normal(one, 1.0).d, 0.5, 1e-7);
}

TEST(Stats, MomentsAndCovariance) {
  const std::vector<double> xs = {1, 2, 3, 4, 10};
  const Moments m = moments(xs);
  EXPECT_DOUBLE_EQ(m.mean, 4.0);
  EXPECT_DOUBLE_EQ(m.var, 12.5);
  const std::vector<double> data = {1, 2, 2, 4, 3, 6, 4, 8.5};
  const auto c = covariance_matrix(data, 4, 2);
  EXPECT_NEAR(c[0], 5.0 / 3.0, 1e-12);
  EXPECT_EQ(c[1], c[2]);
  EXPECT_NEAR(c[1], 10.75 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(quantile({3, 1, 2}, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(quantile({0, 10}, 0.25), 2.5);
}

TEST(Stats, VarianceStandardError) {
  std::mt19937_64 g(4);
  std::normal_distribution<double> z;
  std::vector<double> vars;
  double se_sum = 0.0;
  for (int rep = 0; rep < 400; ++rep) {
    std::vector<double> xs(400);
    for (double& x : xs) x = z(g);
    const Moments m = moments(xs);
    vars.push_back(m.var);
    se_sum += m.se_var();
  }
  const Moments mv = moments(vars);
  EXPECT_NEAR(std::sqrt(mv.var), se_sum / 400.0, 0.1 * se_sum / 400.0);
}

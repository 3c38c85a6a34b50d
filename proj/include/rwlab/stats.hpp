#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rwlab {

/// Standard normal CDF, Abramowitz-Stegun 26.2.17 (|error| < 7.5e-8).
double normal_cdf(double x);

struct KsResult {
  double d = 0.0;
  double p_value = 1.0;
};

/// One-sample KS test of `xs` against Normal(0, variance). The p-value uses
/// the asymptotic Kolmogorov law with Stephens' small-sample correction.
KsResult ks_normal(std::span<const double> xs, double variance);

/// Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double var = 0.0;   ///< unbiased
  double m4c = 0.0;   ///< fourth central moment (plug-in)

  double se_mean() const;
  double se_var() const;  ///< large-sample SE of the sample variance
};

Moments moments(std::span<const double> xs);

/// Sample covariance matrix (row-major) of `rows` x `cols` data.
std::vector<double> covariance_matrix(std::span<const double> data, std::size_t rows, std::size_t cols);

double quantile(std::vector<double> xs, double q);

}  // namespace rwlab

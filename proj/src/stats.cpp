#include "rwlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rwlab/error.hpp"

namespace rwlab {

double normal_cdf(double x) {
  constexpr double p = 0.2316419;
  constexpr double b[5] = {0.319381530, -0.356563782, 1.781477937, -1.821255978, 1.330274429};
  const double ax = std::abs(x);
  const double t = 1.0 / (1.0 + p * ax);
  const double poly = t * (b[0] + t * (b[1] + t * (b[2] + t * (b[3] + t * b[4]))));
  const double upper = std::exp(-0.5 * ax * ax) / std::sqrt(2.0 * std::numbers::pi) * poly;
  return x >= 0.0 ? 1.0 - upper : upper;
}

double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

KsResult ks_normal(std::span<const double> xs, double variance) {
  if (xs.empty()) throw InvalidArgument("ks_normal: empty sample");
  if (!(variance > 0.0)) throw InvalidArgument("ks_normal: variance must be positive");
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  const double sd = std::sqrt(variance);
  const double m = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = normal_cdf(v[i] / sd);
    d = std::max({d, (static_cast<double>(i) + 1.0) / m - f, f - static_cast<double>(i) / m});
  }
  const double rm = std::sqrt(m);
  return {d, kolmogorov_q((rm + 0.12 + 0.11 / rm) * d)};
}

double Moments::se_mean() const { return n ? std::sqrt(var / static_cast<double>(n)) : 0.0; }

double Moments::se_var() const {
  if (n < 2) return 0.0;
  const double s4 = var * var;
  return std::sqrt(std::max(m4c - s4 * (static_cast<double>(n) - 3.0) / (static_cast<double>(n) - 1.0), 0.0) /
                   static_cast<double>(n));
}

Moments moments(std::span<const double> xs) {
  Moments m;
  m.n = xs.size();
  if (m.n == 0) return m;
  double s = 0.0;
  for (double x : xs) s += x;
  m.mean = s / static_cast<double>(m.n);
  double s2 = 0.0, s4 = 0.0;
  for (double x : xs) {
    const double c = x - m.mean;
    s2 += c * c;
    s4 += c * c * c * c;
  }
  m.var = m.n > 1 ? s2 / static_cast<double>(m.n - 1) : 0.0;
  m.m4c = s4 / static_cast<double>(m.n);
  return m;
}

std::vector<double> covariance_matrix(std::span<const double> data, std::size_t rows, std::size_t cols) {
  if (data.size() != rows * cols || rows < 2) throw InvalidArgument("covariance_matrix: bad shape");
  std::vector<double> mean(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) mean[c] += data[r * cols + c];
  for (double& x : mean) x /= static_cast<double>(rows);
  std::vector<double> cov(cols * cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < cols; ++i)
      for (std::size_t j = i; j < cols; ++j)
        cov[i * cols + j] += (data[r * cols + i] - mean[i]) * (data[r * cols + j] - mean[j]);
  for (std::size_t i = 0; i < cols; ++i)
    for (std::size_t j = i; j < cols; ++j) {
      cov[i * cols + j] /= static_cast<double>(rows - 1);
      cov[j * cols + i] = cov[i * cols + j];
    }
  return cov;
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw InvalidArgument("quantile: empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

}  // namespace rwlab

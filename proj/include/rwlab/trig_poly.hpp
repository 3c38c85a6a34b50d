#pragma once

// Real trigonometric polynomials on the torus T^rho with no constant term.

#include <complex>
#include <map>
#include <span>
#include <vector>

#include "rwlab/int_lattice.hpp"

namespace rwlab {

class TrigPolynomial {
 public:
  using Coefficients = std::map<IntVec, std::complex<double>>;

  /// Checks c_{-k} = conj(c_k) within 1e-12, no zero frequency, common
  /// dimension. Zero coefficients are dropped.
  TrigPolynomial(std::size_t dimension, Coefficients coefficients);

  /// c cos(2 pi <k, x>) summed over (k, c) pairs.
  static TrigPolynomial cosines(std::size_t dimension, const std::vector<std::pair<IntVec, double>>& terms);

  std::size_t dimension() const { return dim_; }
  const Coefficients& coefficients() const { return coeffs_; }
  std::size_t support_size() const { return coeffs_.size(); }
  /// Coefficient at k, zero off the support.
  std::complex<double> at(const IntVec& k) const;

  double norm_c() const;   ///< sum |c_k|
  double l2_sq() const;    ///< sum |c_k|^2
  double sup_bound() const { return norm_c(); }

  /// Direct floating evaluation at x in [0,1)^rho (for cross-checks).
  double evaluate(std::span<const double> x) const;

  /// Frequencies with a positive leading nonzero coordinate: one from each
  /// conjugate pair.
  std::vector<IntVec> half_support() const;

 private:
  std::size_t dim_;
  Coefficients coeffs_;
};

}  // namespace rwlab

#include "rwlab/trig_poly.hpp"

#include <cmath>
#include <numbers>

#include "rwlab/error.hpp"

namespace rwlab {

namespace {

IntVec negate(const IntVec& k) {
  IntVec out(k);
  for (auto& v : out) v = -v;
  return out;
}

bool leading_positive(const IntVec& k) {
  for (auto v : k) {
    if (v > 0) return true;
    if (v < 0) return false;
  }
  return false;
}

}  // namespace

TrigPolynomial::TrigPolynomial(std::size_t dimension, Coefficients coefficients) : dim_(dimension) {
  if (dim_ == 0) throw InvalidArgument("TrigPolynomial: dimension must be positive");
  for (const auto& [k, c] : coefficients) {
    if (k.size() != dim_) throw InvalidArgument("TrigPolynomial: frequency dimension mismatch");
    if (!leading_positive(k) && !leading_positive(negate(k)))
      throw InvalidArgument("TrigPolynomial: zero frequency (constant term) not allowed");
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) throw InvalidArgument("TrigPolynomial: non-finite coefficient");
    if (c != std::complex<double>(0.0, 0.0)) coeffs_.emplace(k, c);
  }
  for (const auto& [k, c] : coeffs_) {
    const auto it = coeffs_.find(negate(k));
    const std::complex<double> partner = it == coeffs_.end() ? 0.0 : it->second;
    if (std::abs(partner - std::conj(c)) > 1e-12)
      throw InvalidArgument("TrigPolynomial: coefficients must satisfy c_{-k} = conj(c_k)");
  }
}

TrigPolynomial TrigPolynomial::cosines(std::size_t dimension, const std::vector<std::pair<IntVec, double>>& terms) {
  Coefficients c;
  for (const auto& [k, a] : terms) {
    c[k] += a / 2.0;
    c[negate(k)] += a / 2.0;
  }
  return TrigPolynomial(dimension, std::move(c));
}

std::complex<double> TrigPolynomial::at(const IntVec& k) const {
  const auto it = coeffs_.find(k);
  return it == coeffs_.end() ? std::complex<double>(0.0, 0.0) : it->second;
}

double TrigPolynomial::norm_c() const {
  double s = 0.0;
  for (const auto& [k, c] : coeffs_) s += std::abs(c);
  return s;
}

double TrigPolynomial::l2_sq() const {
  double s = 0.0;
  for (const auto& [k, c] : coeffs_) s += std::norm(c);
  return s;
}

double TrigPolynomial::evaluate(std::span<const double> x) const {
  if (x.size() != dim_) throw InvalidArgument("TrigPolynomial::evaluate: dimension mismatch");
  double s = 0.0;
  for (const auto& [k, c] : coeffs_) {
    double phase = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) phase += static_cast<double>(k[i]) * x[i];
    phase -= std::floor(phase);
    const double a = 2.0 * std::numbers::pi * phase;
    s += c.real() * std::cos(a) - c.imag() * std::sin(a);
  }
  return s;
}

std::vector<IntVec> TrigPolynomial::half_support() const {
  std::vector<IntVec> out;
  for (const auto& [k, c] : coeffs_)
    if (leading_positive(k)) out.push_back(k);
  return out;
}

}  // namespace rwlab

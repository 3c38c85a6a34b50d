#pragma once

// Exact integer-matrix machinery for commuting automorphisms of T^rho.

#include <gmpxx.h>

#include <array>
#include <cstdint>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "rwlab/int_lattice.hpp"
#include "rwlab/trig_poly.hpp"

namespace rwlab {

class IntMatrix {
 public:
  IntMatrix() = default;
  explicit IntMatrix(std::size_t n) : n_(n), a_(n * n) {}
  static IntMatrix identity(std::size_t n);
  static IntMatrix from_rows(const std::vector<std::vector<long>>& rows);

  std::size_t size() const { return n_; }
  mpz_class& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  const mpz_class& operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

  IntMatrix operator*(const IntMatrix& b) const;
  IntMatrix operator+(const IntMatrix& b) const;
  IntMatrix operator-(const IntMatrix& b) const;
  bool operator==(const IntMatrix& b) const { return n_ == b.n_ && a_ == b.a_; }

  IntMatrix transpose() const;
  mpz_class det() const;
  /// Exact inverse; requires |det| = 1.
  IntMatrix inverse() const;
  IntMatrix pow(std::int64_t e) const;
  BigVec apply(const BigVec& v) const;
  bool is_zero() const;
  /// Characteristic polynomial det(xI - A), coefficients from x^0 up to x^n.
  std::vector<mpz_class> charpoly() const;
  std::string to_string() const;

 private:
  std::size_t n_ = 0;
  std::vector<mpz_class> a_;
};

using Exponent = std::array<std::int64_t, 2>;

/// Two commuting unimodular matrices and the Z^2-action l -> A1^l1 A2^l2.
class MatrixPair {
 public:
  /// Throws InvalidArgument unless A1, A2 are square of equal size, commute
  /// exactly and have |det| = 1.
  MatrixPair(IntMatrix a1, IntMatrix a2);
  MatrixPair(const MatrixPair& other);

  std::size_t rho() const { return a1_.size(); }
  const IntMatrix& a1() const { return a1_; }
  const IntMatrix& a2() const { return a2_; }

  /// A^l, memoized. The cache only grows, so references stay valid.
  const IntMatrix& power(Exponent l) const;

 private:
  const IntMatrix& generator_power(int which, std::int64_t e) const;

  IntMatrix a1_;
  IntMatrix a2_;
  mutable std::mutex mu_;
  mutable std::map<std::int64_t, IntMatrix> pow1_;
  mutable std::map<std::int64_t, IntMatrix> pow2_;
  mutable std::map<Exponent, IntMatrix> cache_;
};

IntMatrix mat_pow_pair(const MatrixPair& pair, Exponent l);

// Polynomials are coefficient vectors from the constant term upwards.
std::vector<mpz_class> cyclotomic_polynomial(unsigned n);
/// Monic gcd over Q.
std::vector<mpq_class> poly_gcd(const std::vector<mpq_class>& a, const std::vector<mpq_class>& b);
/// Orders n with phi(n) <= degree.
std::vector<unsigned> cyclotomic_orders_up_to_degree(std::size_t degree);

struct PowerCheck {
  Exponent l{};
  bool ok = true;
  std::vector<unsigned> shared_cyclotomic;  ///< n with gcd(charpoly, Phi_n) != 1
};

struct PairCheckReport {
  std::int64_t box = 0;
  mpz_class det1;
  mpz_class det2;
  std::vector<PowerCheck> powers;  ///< every l != 0 in [-box, box]^2
  std::size_t failures = 0;
  bool all_pass = true;
  /// Floating screen on the generators: sorted eigenvalue moduli.
  std::vector<double> moduli1;
  std::vector<double> moduli2;
  double min_distance_to_unit_circle = 0.0;
  bool screen_pass = true;
};

PairCheckReport check_pair(const MatrixPair& pair, std::int64_t box);

/// transpose(A^l) k.
BigVec dual_orbit(const MatrixPair& pair, std::span<const std::int64_t> k, Exponent l);

/// <A^l f, f> by matching transported frequencies against the support.
double toral_correlation(const MatrixPair& pair, const TrigPolynomial& f, Exponent l);

constexpr double kMomentBudget = 1e7;

/// Integral of prod_i f(A^{l_i} x): sum over support^r tuples whose
/// transported frequencies cancel. Throws BudgetExceeded if support^r > 1e7.
double exact_joint_moment(const MatrixPair& pair, const TrigPolynomial& f, std::span<const Exponent> ls);

/// Joint cumulant of (A^{l_1} f, ..., A^{l_r} f) from exact moments.
double exact_joint_cumulant(const MatrixPair& pair, const TrigPolynomial& f, std::span<const Exponent> ls);

struct CumulantSupportScan {
  std::int64_t box = 0;
  std::uint64_t tuples = 0;
  std::uint64_t nonzero = 0;
  double radius = 0.0;  ///< max over nonzero tuples of max_{i,j} |l_i - l_j| (Euclidean)
  std::vector<std::array<Exponent, 4>> extremal;  ///< nonzero tuples attaining the radius
};

/// Fourth cumulants with l_1 = 0 and l_2, l_3, l_4 in [-box, box]^2.
CumulantSupportScan scan_cumulant4_support(const MatrixPair& pair, const TrigPolynomial& f, std::int64_t box,
                                           double zero_tol = 1e-12);

struct SUnitSolution {
  std::array<Exponent, 3> l{};
  BigVec gamma;
};

struct SUnitTriple {
  std::array<Exponent, 3> l{};
  std::uint64_t gamma_count = 0;  ///< solutions gamma in the box for this triple
  bool identically = false;       ///< A^{l1} - A^{l2} + A^{l3} = I, so every gamma solves
};

struct SUnitReport {
  std::int64_t l_box = 0;
  std::int64_t gamma_box = 0;
  bool dual = false;
  std::uint64_t triples_scanned = 0;
  std::uint64_t solution_count = 0;      ///< all (l1, l2, l3, gamma)
  std::vector<SUnitTriple> triples;      ///< triples carrying a solution (the set F)
  std::vector<SUnitSolution> solutions;  ///< first `store_limit` solutions
};

/// All (l1, l2, l3, gamma) with l_i in [-l_box, l_box]^2, gamma in
/// [-gamma_box, gamma_box]^rho \ {0} and A^{l1} g - A^{l2} g + A^{l3} g - g = 0
/// with no vanishing proper sub-sum. `dual` uses the transposed action.
SUnitReport sunit_search(const MatrixPair& pair, std::int64_t gamma_box, std::int64_t l_box, bool dual = false,
                         std::size_t store_limit = 1000);

}  // namespace rwlab

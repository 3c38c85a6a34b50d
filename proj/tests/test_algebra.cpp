#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rwlab/algebra.hpp"
#include "rwlab/error.hpp"

using namespace rwlab;

namespace {

IntMatrix a1() { return IntMatrix::from_rows({{-3, -3, 1}, {10, 9, -3}, {-30, -26, 9}}); }
IntMatrix a2() { return IntMatrix::from_rows({{11, 1, -1}, {-10, -1, 1}, {10, 2, -1}}); }
MatrixPair bundled_pair() { return MatrixPair(a1(), a2()); }

std::vector<long> to_long(const std::vector<mpz_class>& p) {
  std::vector<long> out;
  for (const auto& c : p) out.push_back(c.get_si());
  return out;
}

// Average of prod_i f(A^{l_i} x) over the rational grid (j / q)^3. Exact for
// trigonometric polynomials whenever no nonzero frequency sum is divisible by q.
double grid_moment(const MatrixPair& pair, const TrigPolynomial& f, const std::vector<Exponent>& ls, long q) {
  std::vector<IntMatrix> p;
  for (auto l : ls) p.push_back(pair.power(l));
  double total = 0.0;
  for (long i = 0; i < q; ++i)
    for (long j = 0; j < q; ++j)
      for (long k = 0; k < q; ++k) {
        double prod = 1.0;
        for (const auto& m : p) {
          std::vector<double> x(3);
          for (int r = 0; r < 3; ++r) {
            const mpz_class v = m(r, 0) * i + m(r, 1) * j + m(r, 2) * k;
            mpz_class red;
            mpz_fdiv_r_ui(red.get_mpz_t(), v.get_mpz_t(), static_cast<unsigned long>(q));
            x[r] = red.get_d() / static_cast<double>(q);
          }
          prod *= f.evaluate(x);
        }
        total += prod;
      }
  return total / static_cast<double>(q * q * q);
}

}  // namespace

TEST(IntMatrix, Arithmetic) {
  const IntMatrix a = a1();
  EXPECT_EQ(a.det(), 1);
  EXPECT_EQ(a2().det(), -1);
  EXPECT_EQ(a * a.inverse(), IntMatrix::identity(3));
  EXPECT_EQ(a.pow(3), a * a * a);
  EXPECT_EQ(a.pow(-2) * a.pow(2), IntMatrix::identity(3));
  EXPECT_EQ(a.transpose().transpose(), a);
  EXPECT_THROW(IntMatrix::from_rows({{2, 0}, {0, 1}}).inverse(), InvalidArgument);
}

TEST(IntMatrix, CharpolyAgreesWithDeterminants) {
  EXPECT_EQ(to_long(a1().charpoly()), (std::vector<long>{-1, 9, -15, 1}));
  EXPECT_EQ(to_long(a2().charpoly()), (std::vector<long>{1, -3, -9, 1}));
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<long> u(-5, 5);
  for (int t = 0; t < 50; ++t) {
    IntMatrix m(4);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) m(i, j) = u(gen);
    const auto cp = m.charpoly();
    for (long x = -3; x <= 3; ++x) {
      IntMatrix s = IntMatrix::identity(4);
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) s(i, j) = (i == j ? x : 0) - m(i, j);
      mpz_class val = 0, xp = 1;
      for (const auto& c : cp) {
        val += c * xp;
        xp *= x;
      }
      EXPECT_EQ(val, s.det());
    }
  }
}

TEST(MatrixPair, Construction) {
  EXPECT_NO_THROW(bundled_pair());
  EXPECT_THROW(MatrixPair(a1(), IntMatrix::from_rows({{1, 1, 0}, {0, 1, 0}, {0, 0, 1}})), InvalidArgument);
  EXPECT_THROW(MatrixPair(IntMatrix::from_rows({{2, 0}, {0, 1}}), IntMatrix::identity(2)), InvalidArgument);
}

TEST(MatPowPair, Examples) {
  const MatrixPair p = bundled_pair();
  EXPECT_EQ(mat_pow_pair(p, {0, 0}), IntMatrix::identity(3));
  EXPECT_EQ(mat_pow_pair(p, {1, 1}), a2() * a1());
  EXPECT_EQ(mat_pow_pair(p, {1, 1}), a1() * a2());
  EXPECT_EQ(mat_pow_pair(p, {2, 0}), a1() * a1());
  std::mt19937_64 gen(2);
  std::uniform_int_distribution<std::int64_t> u(-4, 4);
  for (int t = 0; t < 40; ++t) {
    const Exponent l = {u(gen), u(gen)}, m = {u(gen), u(gen)};
    EXPECT_EQ(mat_pow_pair(p, {l[0] + m[0], l[1] + m[1]}), mat_pow_pair(p, l) * mat_pow_pair(p, m));
  }
}

TEST(Cyclotomic, SmallOrders) {
  EXPECT_EQ(to_long(cyclotomic_polynomial(1)), (std::vector<long>{-1, 1}));
  EXPECT_EQ(to_long(cyclotomic_polynomial(2)), (std::vector<long>{1, 1}));
  EXPECT_EQ(to_long(cyclotomic_polynomial(3)), (std::vector<long>{1, 1, 1}));
  EXPECT_EQ(to_long(cyclotomic_polynomial(4)), (std::vector<long>{1, 0, 1}));
  EXPECT_EQ(to_long(cyclotomic_polynomial(6)), (std::vector<long>{1, -1, 1}));
  EXPECT_EQ(to_long(cyclotomic_polynomial(12)), (std::vector<long>{1, 0, -1, 0, 1}));
  EXPECT_EQ(cyclotomic_orders_up_to_degree(3), (std::vector<unsigned>{1, 2, 3, 4, 6}));
  const std::vector<mpq_class> a = {-1, 0, 1}, b = {1, 1};  // (x-1)(x+1), x+1
  const auto g = poly_gcd(a, b);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[0], 1);
  EXPECT_EQ(g[1], 1);
}

TEST(CheckPair, BundledPairIsTotallyErgodicOnBox) {
  const auto rep = check_pair(bundled_pair(), 6);
  EXPECT_EQ(rep.powers.size(), 168u);
  EXPECT_TRUE(rep.all_pass);
  EXPECT_TRUE(rep.screen_pass);
  EXPECT_NEAR(rep.moduli1[2], 14.3789, 1e-3);
  EXPECT_NEAR(rep.moduli2[2], 9.3110, 1e-3);
}

TEST(CheckPair, DetectsRootsOfUnity) {
  const IntMatrix shear = IntMatrix::from_rows({{1, 1, 0}, {0, 1, 0}, {0, 0, 1}});
  const auto r1 = check_pair(MatrixPair(shear, shear), 1);
  EXPECT_FALSE(r1.all_pass);
  for (const auto& pc : r1.powers)
    if (pc.l == Exponent{1, 0}) {
      EXPECT_FALSE(pc.ok);
      EXPECT_EQ(pc.shared_cyclotomic.front(), 1u);
    }
  const auto r2 = check_pair(MatrixPair(a1(), a1().inverse()), 2);
  for (const auto& pc : r2.powers) EXPECT_EQ(pc.ok, pc.l[0] != pc.l[1]) << pc.l[0] << "," << pc.l[1];
  // Order-4 rotation block: Phi_4 shows up.
  const IntMatrix rot = IntMatrix::from_rows({{0, -1, 0}, {1, 0, 0}, {0, 0, -1}});
  const auto r3 = check_pair(MatrixPair(rot, IntMatrix::identity(3)), 1);
  for (const auto& pc : r3.powers)
    if (pc.l == Exponent{1, 0}) EXPECT_EQ(pc.shared_cyclotomic, (std::vector<unsigned>{2, 4}));
}

TEST(DualOrbit, Basics) {
  const MatrixPair p = bundled_pair();
  const IntVec zero = {0, 0, 0}, k = {1, 2, -1};
  for (const auto& c : dual_orbit(p, zero, {3, -2})) EXPECT_EQ(c, 0);
  EXPECT_EQ(dual_orbit(p, k, {0, 0}), to_big(k));
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<std::int64_t> u(-3, 3);
  for (int t = 0; t < 200; ++t) {
    const IntVec x = {u(gen), u(gen), u(gen)}, y = {u(gen), u(gen), u(gen)};
    if (x == y) continue;
    const Exponent l = {u(gen), u(gen)};
    EXPECT_NE(dual_orbit(p, x, l), dual_orbit(p, y, l));
  }
}

TEST(ToralCorrelation, CharacterPairs) {
  const MatrixPair p = bundled_pair();
  const IntVec k0 = {1, 0, 0};
  const auto single = TrigPolynomial::cosines(3, {{k0, 1.0}});
  EXPECT_NEAR(toral_correlation(p, single, {0, 0}), 0.5, 1e-15);
  for (std::int64_t a = -3; a <= 3; ++a)
    for (std::int64_t b = -3; b <= 3; ++b)
      if (a || b) EXPECT_EQ(toral_correlation(p, single, {a, b}), 0.0);

  const BigVec k1b = dual_orbit(p, k0, {1, 0});
  const IntVec k1 = {k1b[0].get_si(), k1b[1].get_si(), k1b[2].get_si()};
  const auto f = TrigPolynomial::cosines(3, {{k0, 1.0}, {k1, 1.0}});
  // Matching oracle: only k0 -> k1 (and its conjugate) survives at l = (1,0).
  const double expect = (f.at(k0) * std::conj(f.at(k1))).real() * 2.0;
  EXPECT_NEAR(toral_correlation(p, f, {1, 0}), expect, 1e-15);
  EXPECT_NEAR(toral_correlation(p, f, {1, 0}), 0.5, 1e-15);
  EXPECT_NEAR(toral_correlation(p, f, {-1, 0}), 0.5, 1e-15);
  EXPECT_NEAR(toral_correlation(p, f, {0, 0}), f.l2_sq(), 1e-15);
  double sum_abs = 0.0;
  for (std::int64_t a = -5; a <= 5; ++a)
    for (std::int64_t b = -5; b <= 5; ++b) {
      const double c = toral_correlation(p, f, {a, b});
      EXPECT_NEAR(c, toral_correlation(p, f, {-a, -b}), 1e-15);
      sum_abs += std::abs(c);
    }
  EXPECT_NEAR(sum_abs, 2.0, 1e-14);
  EXPECT_LE(sum_abs, f.norm_c() * f.norm_c() + 1e-12);
}

TEST(ExactJointMoment, AgreesWithGridAverageAndCorrelations) {
  const MatrixPair p = bundled_pair();
  const auto f = TrigPolynomial::cosines(3, {{{1, 0, 0}, 1.0}, {{-3, -3, 1}, 1.0}});
  const std::vector<Exponent> one = {{2, 1}};
  EXPECT_EQ(exact_joint_moment(p, f, one), 0.0);
  for (const auto& ls : std::vector<std::vector<Exponent>>{{{0, 0}, {1, 0}}, {{0, 0}, {0, 1}}, {{1, -1}, {0, 0}}}) {
    const Exponent d = {ls[0][0] - ls[1][0], ls[0][1] - ls[1][1]};
    EXPECT_NEAR(exact_joint_moment(p, f, ls), toral_correlation(p, f, d), 1e-15);
  }
  for (const auto& ls : std::vector<std::vector<Exponent>>{{{0, 0}, {1, 0}, {0, 0}}, {{0, 0}, {0, 0}, {1, 0}, {1, 0}},
                                                         {{0, 0}, {1, 0}, {0, 1}, {-1, 0}}}) {
    EXPECT_NEAR(exact_joint_moment(p, f, ls), grid_moment(p, f, ls, 101), 1e-9);
  }
}

TEST(ExactJointMoment, Budget) {
  TrigPolynomial::Coefficients c;
  for (long i = 1; i <= 30; ++i) {
    c[{i, 0, 0}] = 0.01;
    c[{-i, 0, 0}] = 0.01;
  }
  const TrigPolynomial big(3, c);
  const std::vector<Exponent> five(5, Exponent{0, 0});
  EXPECT_THROW(exact_joint_moment(bundled_pair(), big, five), BudgetExceeded);
}

TEST(ExactJointCumulant, SeparatedBlocksVanish) {
  const MatrixPair p = bundled_pair();
  const auto f = TrigPolynomial::cosines(3, {{{1, 0, 0}, 1.0}, {{-3, -3, 1}, 1.0}});
  const std::vector<Exponent> far = {{0, 0}, {0, 0}, {40, 0}, {40, 0}};
  EXPECT_NEAR(exact_joint_cumulant(p, f, far), 0.0, 1e-15);
  const std::vector<Exponent> same = {{0, 0}, {0, 0}, {0, 0}, {0, 0}};
  // Direct expansion: f^4 averages to 3 (||f||^2)^2 minus cross-term corrections,
  // cross-checked here against the grid oracle through the moment formula.
  const std::vector<Exponent> two = {{0, 0}, {0, 0}};
  const double m2 = grid_moment(p, f, two, 101);
  const double m4 = grid_moment(p, f, same, 101);
  EXPECT_NEAR(exact_joint_cumulant(p, f, same), m4 - 3 * m2 * m2, 1e-9);
}

TEST(Cumulant4Scan, RadiusIsStable) {
  const MatrixPair p = bundled_pair();
  const auto f = TrigPolynomial::cosines(3, {{{1, 0, 0}, 1.0}, {{-3, -3, 1}, 1.0}});
  const auto s3 = scan_cumulant4_support(p, f, 3);
  const auto s4 = scan_cumulant4_support(p, f, 4);
  EXPECT_GT(s3.nonzero, 0u);
  EXPECT_EQ(s3.radius, s4.radius);
  EXPECT_LT(s4.radius, 4.0 * std::sqrt(2.0));
  for (const auto& t : s4.extremal) EXPECT_NE(exact_joint_cumulant(p, f, t), 0.0);
}

TEST(SUnitSearch, SmallBoxesAndDegenerateTriples) {
  const MatrixPair p = bundled_pair();
  const auto r2 = sunit_search(p, 5, 2);
  EXPECT_EQ(r2.triples_scanned, 25u * 25 * 25);
  EXPECT_EQ(r2.solution_count, 0u);
  const auto r3 = sunit_search(p, 5, 3);
  EXPECT_GE(r3.triples.size(), r2.triples.size());
  for (const auto& t : r3.triples) {
    EXPECT_NE(t.l[0], t.l[1]);
    EXPECT_NE(t.l[2], t.l[1]);
    const IntMatrix m = p.power(t.l[0]) - p.power(t.l[1]) + p.power(t.l[2]) - IntMatrix::identity(3);
    if (t.identically) EXPECT_TRUE(m.is_zero());
  }
  for (const auto& s : r3.solutions) {
    const IntMatrix m = p.power(s.l[0]) - p.power(s.l[1]) + p.power(s.l[2]) - IntMatrix::identity(3);
    for (const auto& v : m.apply(s.gamma)) EXPECT_EQ(v, 0);
  }
}

#include <gtest/gtest.h>

#include <random>

#include "rwlab/int_lattice.hpp"

using namespace rwlab;

TEST(HermiteNormalForm, SmallExample) {
  BigRows rows = {{2, 0}, {1, 1}, {0, 2}};
  const BigRows h = hermite_normal_form(rows);
  ASSERT_EQ(h.size(), 2u);
  EXPECT_EQ(h[0][0], 1);
  EXPECT_EQ(h[0][1], 1);
  EXPECT_EQ(h[1][0], 0);
  EXPECT_EQ(h[1][1], 2);
}

TEST(FullLattice, SimpleAndDifferences) {
  const std::vector<IntVec> simple = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  EXPECT_TRUE(generates_full_lattice(simple, 2));
  const std::vector<IntVec> diffs = {{-2, 0}, {-1, 1}, {-1, -1}};
  EXPECT_FALSE(generates_full_lattice(diffs, 2));
  const std::vector<IntVec> lazy = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  EXPECT_TRUE(generates_full_lattice(lazy, 2));
  EXPECT_FALSE(generates_full_lattice(std::vector<IntVec>{{1, 0}}, 2));
  EXPECT_FALSE(generates_full_lattice(std::vector<IntVec>{{3, 5}, {6, 10}}, 2));
  EXPECT_TRUE(generates_full_lattice(std::vector<IntVec>{{3, 5}, {2, 3}}, 2));
}

// The determinant of a square generator set decides the lattice index.
TEST(FullLattice, AgreesWithDeterminantOnRandomSquares) {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<int> u(-4, 4);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<IntVec> g(3, IntVec(3));
    for (auto& r : g)
      for (auto& c : r) c = u(gen);
    const long det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) -
                     g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0]) +
                     g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
    EXPECT_EQ(generates_full_lattice(g, 3), det == 1 || det == -1);
  }
}

TEST(IntegerKernel, ProducesKernelVectors) {
  std::mt19937_64 gen(9);
  std::uniform_int_distribution<int> u(-3, 3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t rows = 2, cols = 4;
    BigRows m(rows, BigVec(cols));
    for (auto& r : m)
      for (auto& c : r) c = u(gen);
    const BigRows k = integer_kernel(m, cols);
    for (const auto& v : k) {
      ASSERT_EQ(v.size(), cols);
      for (const auto& r : m) {
        mpz_class s = 0;
        for (std::size_t j = 0; j < cols; ++j) s += r[j] * v[j];
        EXPECT_EQ(s, 0);
      }
    }
    // rank + nullity = cols
    EXPECT_EQ(hermite_normal_form(m).size() + k.size(), cols);
  }
}

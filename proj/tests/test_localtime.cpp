#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "rwlab/error.hpp"
#include "rwlab/localtime.hpp"

using namespace rwlab;

namespace {

std::shared_ptr<const WalkModel> model_of(IncrementLaw law) {
  return std::make_shared<const WalkModel>(build_walk_model(std::move(law)));
}

WalkPath straight_path(std::size_t n) {
  auto m = model_of(IncrementLaw(2, {{{1, 0}, 1.0}}));
  std::vector<std::int64_t> pos(2 * n, 0);
  for (std::size_t k = 0; k < n; ++k) pos[2 * k] = static_cast<std::int64_t>(k);
  return WalkPath(m, n, 0, 0, pos);
}

WalkPath constant_path(std::size_t n) {
  auto m = model_of(IncrementLaw(2, {{{0, 0}, 1.0}}));
  return sample_path(m, n, 0);
}

bool site_eq(std::span<const std::int64_t> a, std::span<const std::int64_t> b, std::span<const std::int64_t> p) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] - b[i] != p[i]) return false;
  return true;
}

Count brute_pairs(const WalkPath& path, Window I, Window J, std::span<const std::int64_t> p) {
  Count c = 0;
  for (std::size_t u = I.begin; u < I.end(); ++u)
    for (std::size_t v = J.begin; v < J.end(); ++v) c += site_eq(path.position(u), path.position(v), p);
  return c;
}

// Quadruples (u, v1, v2, v3) with Z_{v_i} = Z_u + l_i, counted via per-u
// lookups of explicit index lists.
Count brute_quadruples(const WalkPath& path, std::size_t n, std::span<const std::int64_t> l1,
                       std::span<const std::int64_t> l2, std::span<const std::int64_t> l3) {
  Count total = 0;
  for (std::size_t u = 0; u < n; ++u) {
    Count c1 = 0, c2 = 0, c3 = 0;
    for (std::size_t v = 0; v < n; ++v) {
      c1 += site_eq(path.position(v), path.position(u), l1);
      c2 += site_eq(path.position(v), path.position(u), l2);
      c3 += site_eq(path.position(v), path.position(u), l3);
    }
    total += c1 * c2 * c3;
  }
  return total;
}

}  // namespace

TEST(SiteCodec, RoundTripAndShift) {
  std::mt19937_64 gen(3);
  for (std::size_t d = 1; d <= 4; ++d) {
    const SiteCodec c(d);
    std::uniform_int_distribution<std::int64_t> u(-20000, 20000);
    for (int t = 0; t < 1000; ++t) {
      std::vector<std::int64_t> x(d), s(d), y(d), back(d);
      for (std::size_t i = 0; i < d; ++i) {
        x[i] = u(gen);
        s[i] = u(gen) / 10;
        y[i] = x[i] + s[i];
      }
      c.unpack(c.pack(x), back);
      EXPECT_EQ(back, x);
      std::uint64_t k;
      ASSERT_TRUE(c.shifted(c.pack(x), s, k));
      EXPECT_EQ(k, c.pack(y));
    }
  }
  EXPECT_THROW(SiteCodec(5), InvalidArgument);
  const SiteCodec c4(4);
  const std::vector<std::int64_t> edge = {32767, 0, 0, 0}, one = {1, 0, 0, 0};
  std::uint64_t k;
  EXPECT_FALSE(c4.shifted(c4.pack(edge), one, k));
}

TEST(LocalTimes, TrivialPaths) {
  const auto c = local_times(constant_path(5), {0, 5});
  EXPECT_EQ(c.support_size(), 1u);
  const std::vector<std::int64_t> o = {0, 0};
  EXPECT_EQ(c.at(o), 5u);
  const auto s = local_times(straight_path(5), {0, 5});
  EXPECT_EQ(s.support_size(), 5u);
  EXPECT_EQ(s.max(), 1u);
  EXPECT_THROW(local_times(straight_path(5), {2, 4}), InvalidArgument);
}

TEST(LocalTimes, MassConservation) {
  const auto m = model_of(IncrementLaw::lazy(2));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto path = sample_path(m, 3000, seed);
    const Window w{seed * 50, 1000 + seed};
    EXPECT_EQ(local_times(path, w).total(), w.length);
  }
}

TEST(PairCount, TrivialPaths) {
  const std::vector<std::int64_t> o = {0, 0}, e1 = {1, 0};
  EXPECT_EQ(self_intersections(constant_path(40), 40, o), 1600u);
  EXPECT_EQ(self_intersections(straight_path(40), 40, o), 40u);
  EXPECT_EQ(self_intersections(straight_path(40), 40, e1), 39u);
  EXPECT_EQ(pair_count(straight_path(40), {0, 10}, {20, 10}, o), 0u);
}

TEST(PairCount, MatchesBruteForce) {
  const auto m = model_of(IncrementLaw::lazy(2));
  std::mt19937_64 gen(11);
  for (int inst = 0; inst < 60; ++inst) {
    const std::size_t n = 200 + gen() % 1800;
    const auto path = sample_path(m, n, inst);
    auto pick = [&] {
      const std::size_t b = gen() % n;
      return Window{b, gen() % (n - b + 1)};
    };
    const Window I = pick(), J = pick();
    const std::vector<std::int64_t> p = {static_cast<std::int64_t>(gen() % 5) - 2,
                                         static_cast<std::int64_t>(gen() % 5) - 2};
    EXPECT_EQ(pair_count(path, I, J, p), brute_pairs(path, I, J, p));
    EXPECT_EQ(self_intersections(path, n, p), brute_pairs(path, {0, n}, {0, n}, p));
    const std::vector<std::int64_t> q = {-p[0], -p[1]};
    EXPECT_EQ(self_intersections(path, n, p), self_intersections(path, n, q));
  }
}

TEST(PairCount, AdditivityOverDisjointWindows) {
  const auto m = model_of(IncrementLaw::simple(2));
  const auto path = sample_path(m, 4000, 8);
  const std::vector<std::int64_t> p = {1, 1};
  const Window I{100, 1500}, J{1600, 2000}, U{100, 3500};
  EXPECT_EQ(pair_count(path, U, U, p), pair_count(path, I, I, p) + pair_count(path, J, J, p) +
                                           pair_count(path, I, J, p) + pair_count(path, J, I, p));
  // Monotone under inclusion.
  EXPECT_LE(pair_count(path, I, J, p), pair_count(path, {50, 1600}, J, p));
}

TEST(PairCount, ShiftCovariance) {
  const auto m = model_of(IncrementLaw::lazy(2));
  const auto path = sample_path(m, 3000, 21);
  const std::size_t b = 1234, k = 1500;
  std::vector<std::int64_t> shifted;
  for (std::size_t i = b; i < b + k; ++i) {
    shifted.push_back(path.position(i)[0] - path.position(b)[0]);
    shifted.push_back(path.position(i)[1] - path.position(b)[1]);
  }
  const WalkPath re(path.model_ptr(), k, 0, 0, shifted);
  for (const std::vector<std::int64_t>& p : {std::vector<std::int64_t>{0, 0}, {1, 0}, {-2, 1}})
    EXPECT_EQ(pair_count(path, {b, k}, {b, k}, p), self_intersections(re, k, p));
}

TEST(QuadrupleCount, TrivialAndBruteForce) {
  const std::vector<std::int64_t> o = {0, 0}, e1 = {1, 0}, e2 = {2, 0}, e3 = {3, 0};
  EXPECT_EQ(quadruple_count(straight_path(100), 100, e1, e2, e3), 97u);
  const auto m = model_of(IncrementLaw::lazy(2));
  const auto path = sample_path(m, 300, 4);
  EXPECT_EQ(quadruple_count(path, 300, o, o, o), local_times(path, {0, 300}).power_sum(4));
  std::mt19937_64 gen(13);
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t n = 50 + gen() % 450;
    const auto p = sample_path(m, n, 100 + inst);
    auto small = [&] {
      return std::vector<std::int64_t>{static_cast<std::int64_t>(gen() % 3) - 1,
                                       static_cast<std::int64_t>(gen() % 3) - 1};
    };
    const auto l1 = small(), l2 = small(), l3 = small();
    EXPECT_EQ(quadruple_count(p, n, l1, l2, l3), brute_quadruples(p, n, l1, l2, l3));
  }
}

TEST(MaxLocalTime, Trivial) {
  EXPECT_EQ(max_local_time(constant_path(77), 77), 77u);
  EXPECT_EQ(max_local_time(straight_path(77), 77), 1u);
  EXPECT_NEAR(erdos_taylor_ratio(constant_path(100), 100), 100 / std::pow(std::log(100.0), 2), 1e-12);
}

TEST(LocalTimes, CsvExport) {
  std::ostringstream os;
  local_times(straight_path(3), {0, 3}).write_csv(os);
  EXPECT_EQ(os.str(), "site_0,site_1,count\n0,0,1\n1,0,1\n2,0,1\n");
}

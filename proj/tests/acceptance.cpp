// Acceptance suite: one line per criterion, tolerances pinned below.
// Exit status is nonzero only on an unexpected failure or an error; criteria
// listed in kKnownRed are reported as FAIL but do not fail the run.
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "rwlab/algebra.hpp"
#include "rwlab/cumulant.hpp"
#include "rwlab/harness.hpp"
#include "rwlab/io.hpp"
#include "rwlab/localtime.hpp"
#include "rwlab/walk.hpp"

using namespace rwlab;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = RWLAB_FIXTURE_DIR;

// Pinned tolerances.
constexpr double kMobiusTol = 1e-10;
constexpr double kKsPMin = 0.01;
constexpr double kOmegaFraction = 0.90;
constexpr double kCorrMax = 0.10;
constexpr double kMaRelTol = 0.15;
constexpr double kPrimeAgreementZ = 3.0;
constexpr double kLlnLo = 0.80, kLlnHi = 1.20;
constexpr double kCrossFraction = 0.80;
constexpr double kSeFactor = 3.0;
constexpr std::uint64_t kSecondPrime = (std::uint64_t{1} << 59) - 55;

// Criteria whose finite-n behaviour is known not to meet the stated bar.
const std::set<int> kKnownRed = {4, 6, 7, 8};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... xs) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, f, xs...);
  return buf;
}

ExperimentConfig fixture(const std::string& name) { return load_config(kFixtures / "configs" / (name + ".json")); }

std::shared_ptr<const WalkModel> walk_of(IncrementLaw law) {
  return std::make_shared<const WalkModel>(build_walk_model(std::move(law)));
}

// ---------------------------------------------------------------- 1

Outcome counting_oracles() {
  std::mt19937_64 gen(101);
  const std::vector<IncrementLaw> laws = {IncrementLaw::simple(1), IncrementLaw::simple(2), IncrementLaw::lazy(2),
                                          IncrementLaw::simple(3)};
  std::size_t instances = 0, mismatches = 0, quads = 0;
  auto rnd = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(gen); };
  auto offset = [&](std::size_t d) {
    IntVec p(d);
    for (auto& v : p) v = std::uniform_int_distribution<int>(-2, 2)(gen);
    return p;
  };
  auto eq = [](std::span<const std::int64_t> a, std::span<const std::int64_t> b, std::span<const std::int64_t> p) {
    for (std::size_t k = 0; k < a.size(); ++k)
      if (a[k] - b[k] != p[k]) return false;
    return true;
  };
  for (int t = 0; t < 200; ++t) {
    const auto walk = walk_of(laws[t % laws.size()]);
    const std::size_t n = rnd(1, 2000);
    const WalkPath path = sample_path(walk, n, 9000 + t);
    const std::size_t d = path.dimension();
    const IntVec p = offset(d);
    const Window i{rnd(0, n - 1), 0}, j{rnd(0, n - 1), 0};
    const Window wi{i.begin, rnd(0, n - i.begin)}, wj{j.begin, rnd(0, n - j.begin)};
    Count brute_pair = 0, brute_self = 0;
    for (std::size_t u = wi.begin; u < wi.end(); ++u)
      for (std::size_t v = wj.begin; v < wj.end(); ++v) brute_pair += eq(path.position(u), path.position(v), p);
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = 0; v < n; ++v) brute_self += eq(path.position(u), path.position(v), p);
    mismatches += pair_count(path, wi, wj, p) != brute_pair;
    mismatches += self_intersections(path, n, p) != brute_self;
    ++instances;
  }
  for (int t = 0; t < 200; ++t) {
    const auto walk = walk_of(laws[t % laws.size()]);
    const std::size_t n = rnd(1, 500);
    const WalkPath path = sample_path(walk, n, 19000 + t);
    const std::size_t d = path.dimension();
    const IntVec l1 = offset(d), l2 = offset(d), l3 = offset(d);
    Count brute = 0;
    for (std::size_t u = 0; u < n; ++u) {
      Count c1 = 0, c2 = 0, c3 = 0;
      for (std::size_t v = 0; v < n; ++v) {
        c1 += eq(path.position(v), path.position(u), l1);
        c2 += eq(path.position(v), path.position(u), l2);
        c3 += eq(path.position(v), path.position(u), l3);
      }
      brute += c1 * c2 * c3;
    }
    mismatches += quadruple_count(path, n, l1, l2, l3) != brute;
    ++quads;
  }
  return {mismatches == 0, fmt("%zu pair/self instances (n<=2000), %zu quadruple instances (n<=500), %zu mismatches",
                               instances, quads, mismatches)};
}

// ---------------------------------------------------------------- 2

double wick(const std::vector<std::vector<double>>& cov, IndexMask set) {
  if (set == 0) return 1.0;
  const int i = std::countr_zero(set);
  const IndexMask rest = set & ~(IndexMask{1} << i);
  double total = 0.0;
  for (int j = 0; j < 32; ++j)
    if (rest >> j & 1u) total += cov[i][j] * wick(cov, rest & ~(IndexMask{1} << j));
  return total;
}

Outcome cumulant_algebra() {
  std::mt19937_64 gen(202);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst_round = 0.0, worst_gauss = 0.0;
  for (int table = 0; table < 100; ++table)
    for (std::size_t r = 1; r <= 5; ++r) {
      std::vector<double> mom(1u << r), cum(1u << r);
      for (auto& v : mom) v = u(gen);
      mom[0] = 1.0;
      for (IndexMask s = 1; s < (1u << r); ++s) cum[s] = joint_cumulant_of([&](IndexMask b) { return mom[b]; }, s);
      for (IndexMask s = 1; s < (1u << r); ++s)
        worst_round = std::max(worst_round, std::abs(moment_from_cumulants_of([&](IndexMask b) { return cum[b]; }, s) - mom[s]));
    }
  for (int t = 0; t < 100; ++t)
    for (std::size_t r : {3u, 4u}) {
      std::vector<std::vector<double>> a(r, std::vector<double>(r)), cov(r, std::vector<double>(r, 0.0));
      for (auto& row : a)
        for (auto& v : row) v = u(gen);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j)
          for (std::size_t k = 0; k < r; ++k) cov[i][j] += a[i][k] * a[j][k];
      worst_gauss = std::max(worst_gauss, std::abs(joint_cumulant([&](IndexMask s) { return wick(cov, s); }, r)));
    }
  const SubsetOracle rad = [](IndexMask s) { return std::popcount(s) % 2 == 0 ? 1.0 : 0.0; };
  const double c4 = joint_cumulant(rad, 4);
  const double c4_moments = rad(15) - 3.0 * rad(3) * rad(3);
  const bool ok = worst_round <= kMobiusTol && worst_gauss <= kMobiusTol && c4 == -2.0 && c4_moments == -2.0;
  return {ok, fmt("round-trip max err %.2e, Gaussian r=3,4 max |k| %.2e, Rademacher C4 = %g (moments %g)", worst_round,
                  worst_gauss, c4, c4_moments)};
}

// ---------------------------------------------------------------- 3

Outcome variance_identity() {
  std::mt19937_64 gen(303);
  const auto walk = walk_of(IncrementLaw::lazy(2));
  std::size_t bad = 0, max_sites = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 12)(gen);
    const WalkPath path = sample_path(walk, n, 30300 + t);
    std::vector<std::pair<std::int64_t, std::int64_t>> sites;
    std::vector<std::size_t> index(n);
    for (std::size_t k = 0; k < n; ++k) {
      const auto z = path.position(k);
      const std::pair<std::int64_t, std::int64_t> s{z[0], z[1]};
      auto it = std::find(sites.begin(), sites.end(), s);
      index[k] = static_cast<std::size_t>(it - sites.begin());
      if (it == sites.end()) sites.push_back(s);
    }
    max_sites = std::max(max_sites, sites.size());
    std::int64_t total = 0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << sites.size()); ++mask) {
      std::int64_t s = 0;
      for (std::size_t k = 0; k < n; ++k) s += (mask >> index[k] & 1u) ? 1 : -1;
      total += s * s;
    }
    const IntVec zero = {0, 0};
    const std::int64_t v = static_cast<std::int64_t>(self_intersections(path, n, zero));
    if (total != v * static_cast<std::int64_t>(std::uint64_t{1} << sites.size())) ++bad;
  }
  return {bad == 0, fmt("50 paths n<=12, up to %zu sites enumerated, %zu mismatches", max_sites, bad)};
}

// ---------------------------------------------------------------- 4

Outcome fclt_iid() {
  ExperimentConfig c = fixture("fclt-iid");
  const FcltReport r = run_fclt(c);
  std::string fr;
  bool ok = true;
  for (double f : r.ks_pass_fraction) {
    fr += fmt("%.2f ", f);
    ok = ok && f >= kOmegaFraction;
  }
  std::size_t corr_ok = 0;
  for (const auto& o : r.omegas) corr_ok += o.max_abs_corr < kCorrMax;
  const double corr_frac = static_cast<double>(corr_ok) / static_cast<double>(r.omegas.size());
  ok = ok && corr_frac >= kOmegaFraction && r.identity_ok;
  return {ok, fmt("n=%zu m=%zu omegas=%zu: KS p>%.2f fractions [%s] corr<%.2f fraction %.2f identity %s", r.n, r.m,
                  r.omegas.size(), kKsPMin, fr.c_str(), kCorrMax, corr_frac, r.identity_ok ? "ok" : "broken")};
}

// ---------------------------------------------------------------- 5

Outcome moving_average() {
  const ExperimentConfig c = fixture("fclt-ma");
  const auto& ma = std::get<MovingAverageSpec>(c.scenery);
  double asum = 0.0;
  for (const auto& [q, a] : ma.coefficients) asum += a;
  const double target = asum * asum;  // Y_n is normalized by sqrt(C0 n ln n)
  const FcltReport r = run_fclt(c);
  const double rel = std::abs(r.pooled_var_y1 / target - 1.0);

  const ExperimentConfig d = fixture("fclt-ma-degenerate");
  const auto ladder = variance_ladder(d, d.n_ladder);
  bool dec = true;
  std::string vals;
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    vals += fmt("%.4f ", ladder[i].pooled_var);
    if (i > 0 && !(ladder[i].pooled_var < ladder[i - 1].pooled_var)) dec = false;
  }
  return {rel <= kMaRelTol && dec,
          fmt("pooled Var Y(1) = %.4f +- %.4f vs %.1f (rel %.3f, tol %.2f); degenerate ladder [%s] %s", r.pooled_var_y1,
              r.pooled_var_y1_se, target, rel, kMaRelTol, vals.c_str(), dec ? "decreasing" : "NOT decreasing")};
}

// ---------------------------------------------------------------- 6

Outcome toral() {
  ExperimentConfig c1 = fixture("fclt-toral");
  ExperimentConfig c2 = c1;
  std::get<ToralSpec>(c2.scenery).modulus = kSecondPrime;
  const std::uint64_t q1 = std::get<ToralSpec>(c1.scenery).modulus;
  const FcltReport r1 = run_fclt(c1), r2 = run_fclt(c2);
  bool ok = q1 != kSecondPrime;
  std::string f1, f2;
  for (double f : r1.ks_pass_fraction) f1 += fmt("%.2f ", f), ok = ok && f >= kOmegaFraction;
  for (double f : r2.ks_pass_fraction) f2 += fmt("%.2f ", f), ok = ok && f >= kOmegaFraction;
  const double z = (r1.pooled_var_y1 - r2.pooled_var_y1) /
                   std::sqrt(r1.pooled_var_y1_se * r1.pooled_var_y1_se + r2.pooled_var_y1_se * r2.pooled_var_y1_se);
  ok = ok && std::abs(z) <= kPrimeAgreementZ;
  return {ok, fmt("n=%zu m=%zu: KS fractions q1 [%s] q2 [%s]; pooled Var %.4f vs %.4f (z=%.2f, |z|<=%.0f)", r1.n, r1.m,
                  f1.c_str(), f2.c_str(), r1.pooled_var_y1, r2.pooled_var_y1, z, kPrimeAgreementZ)};
}

// ---------------------------------------------------------------- 7

Outcome lln() {
  const ExperimentConfig c = fixture("variance-lln");
  const LlnTable t = track_variance_lln(walk_of(c.law), c.n_ladder, c.p_set, c.n_omegas, c.seed, c.threads);
  bool band = true;
  std::string means;
  for (const auto& r : t.rows)
    if (r.n == c.n_ladder.back()) {
      means += fmt("%.3f ", r.mean);
      band = band && r.mean >= kLlnLo && r.mean <= kLlnHi;
    }
  const ExperimentConfig o = fixture("orthogonality");
  const auto ot = check_increment_orthogonality(walk_of(o.law), o.n_ladder, o.windows, o.p_set, o.n_omegas, o.seed, o.threads);
  bool cross = ot.witness_violations == 0;
  std::string fr;
  for (double f : ot.decreasing_fraction) fr += fmt("%.2f ", f), cross = cross && f >= kCrossFraction;
  return {band && cross, fmt("n=%zu omegas=%zu: means [%s] in [%.1f,%.1f] %s; strictly decreasing cross counts in [%s] "
                             "of omegas (need %.2f)",
                             c.n_ladder.back(), c.n_omegas, means.c_str(), kLlnLo, kLlnHi, band ? "yes" : "no",
                             fr.c_str(), kCrossFraction)};
}

// ---------------------------------------------------------------- 8

Outcome erdos_taylor() {
  const ExperimentConfig c = fixture("erdos-taylor");
  const auto t = track_erdos_taylor(walk_of(c.law), c.n_ladder, c.n_omegas, c.seed, c.threads);
  const auto& a = t.rows.front();
  const auto& b = t.rows.back();
  return {t.closer_at_end && t.power_decreasing,
          fmt("omegas=%zu: ratio %.4f (n=%zu) -> %.4f (n=%zu), target %.4f %s; sup w/n^0.1 %.2f -> %.2f %s", c.n_omegas,
              a.mean_ratio, a.n, b.mean_ratio, b.n, t.target, t.closer_at_end ? "closer" : "not closer", a.mean_power,
              b.mean_power, t.power_decreasing ? "decreasing" : "not decreasing")};
}

// ---------------------------------------------------------------- 9

Outcome inequalities() {
  const ExperimentConfig nw = fixture("newman-wright");
  const auto walk = walk_of(nw.law);
  double worst_nw = INFINITY;
  bool ok = true;
  for (std::size_t i = 0; i < nw.n_omegas; ++i) {
    const WalkPath path = sample_path(walk, nw.n, omega_seed(nw.seed, i));
    const auto r = check_newman_wright(nw.scenery, path, nw.n, nw.lambda_grid, nw.m_sceneries, scenery_seed(nw.seed, i, 0),
                                       kSeFactor);
    worst_nw = std::min(worst_nw, r.worst_margin_se);
    ok = ok && r.pass;
  }
  const ExperimentConfig mz = fixture("moricz");
  const WalkPath line = sample_path(walk_of(mz.law), mz.n, omega_seed(mz.seed, 0));
  const auto& iid = std::get<IidSpec>(mz.scenery);
  const auto lin = check_moricz(iid, line, mz.n, "linear", 0.0, mz.m_sceneries, scenery_seed(mz.seed, 0, 0), kSeFactor);
  const WalkPath lazy = sample_path(walk_of(IncrementLaw::lazy(2)), mz.n, omega_seed(mz.seed, 1));
  const auto loc = check_moricz(iid, lazy, mz.n, "local_time", 0.0, mz.m_sceneries, scenery_seed(mz.seed, 1, 0), kSeFactor);
  ok = ok && lin.pass && loc.pass && lin.status == "applicable" && loc.status == "applicable";

  // E S_k^4 over k distinct Rademacher sites, by enumeration.
  bool exact = true;
  for (std::int64_t k = 1; k <= 12; ++k) {
    std::int64_t total = 0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
      const std::int64_t s = 2 * std::popcount(mask) - k;
      total += s * s * s * s;
    }
    exact = exact && total == (3 * k * k - 2 * k) * (std::int64_t{1} << k);
  }
  const double expect_ratio = 1.0 - 2.0 / 3.0 / static_cast<double>(mz.n);
  exact = exact && lin.hypothesis_holds && std::abs(lin.worst_hypothesis_ratio - expect_ratio) < 1e-12;
  ok = ok && exact;
  return {ok, fmt("Newman-Wright worst margin %.2f SE over %zu omegas; Moricz linear %s (worst rel margin %.3f, "
                  "hypothesis ratio %.4f, ref %.4f), local_time %s (worst rel margin %.3f); 3k^2-2k exact for k<=12: %s",
                  worst_nw, nw.n_omegas, lin.pass ? "ok" : "VIOLATED", lin.worst_relative_margin,
                  lin.worst_hypothesis_ratio, expect_ratio, loc.pass ? "ok" : "VIOLATED", loc.worst_relative_margin,
                  exact ? "yes" : "no")};
}

// ---------------------------------------------------------------- 10

Outcome algebra() {
  const ExperimentConfig c = fixture("fclt-toral");
  const auto& t = std::get<ToralSpec>(c.scenery);
  const MatrixPair& p = *t.pair;
  const bool commute = p.a1() * p.a2() == p.a2() * p.a1();
  const auto rep = check_pair(p, 6);
  const bool det_ok = abs(rep.det1) == 1 && abs(rep.det2) == 1;
  const auto s3 = scan_cumulant4_support(p, t.f, 3);
  const auto s4 = scan_cumulant4_support(p, t.f, 4);
  const auto u3 = sunit_search(p, 2, 5);
  const auto u4 = sunit_search(p, 2, 6);
  const bool ok = commute && det_ok && rep.all_pass && rep.powers.size() == 168 && s3.radius == s4.radius &&
                  s4.nonzero > 0 && u3.triples.size() == u4.triples.size() &&
                  u3.solution_count == u4.solution_count;
  return {ok, fmt("commute %s, |det| = %s/%s, %zu powers in [-6,6]^2 with %zu failures; C4 radius %.4f (box 3) "
                  "%.4f (box 4); S-unit |F| %zu (l box 5) %zu (l box 6), solutions %llu / %llu",
                  commute ? "yes" : "no", rep.det1.get_str().c_str(), rep.det2.get_str().c_str(), rep.powers.size(),
                  rep.failures, s3.radius, s4.radius, u3.triples.size(), u4.triples.size(),
                  static_cast<unsigned long long>(u3.solution_count), static_cast<unsigned long long>(u4.solution_count))};
}

// ---------------------------------------------------------------- 11

Outcome transient() {
  const ExperimentConfig c = fixture("transient-variance");
  const auto r = transient_variance_check(c.scenery, walk_of(c.law), c.n, c.n_omegas, c.seed, c.k_max, c.threads);
  return {r.within && r.ratio_at_least_one,
          fmt("n=%zu omegas=%zu: |S|^2/n = %.4f +- %.4f, series %.4f (tail %.4f, finite-n bias %.4f), diff %.4f, bar %.4f",
              r.n, r.m, r.mc_mean, r.mc_se, r.series_value, r.series_tail, r.finite_n_bias, r.difference,
              r.combined_error)};
}

// ---------------------------------------------------------------- 12

Outcome reproducibility() {
  std::size_t same = 0, total = 0;
  std::string bad;
  for (const char* name : {"truncation-ladder", "moricz", "newman-wright", "tightness", "erdos-taylor"}) {
    ExperimentConfig c = fixture(name);
    const std::string a = canonical_dump(run_experiment(c).payload);
    const std::string b = canonical_dump(run_experiment(c).payload);
    c.threads = c.threads == 1 ? 3 : 1;
    const std::string d = canonical_dump(run_experiment(c).payload);
    ++total;
    if (a == b && a == d) ++same;
    else bad += std::string(" ") + name;
  }
  return {same == total, fmt("%zu/%zu fixtures byte-identical across reruns and thread counts%s", same, total,
                             bad.empty() ? "" : (" (differs:" + bad + ")").c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  std::FILE* copy = argc > 1 ? std::fopen(argv[1], "w") : nullptr;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"exact counting oracles", counting_oracles},
      {"cumulant algebra", cumulant_algebra},
      {"variance identity", variance_identity},
      {"quenched FCLT, i.i.d.", fclt_iid},
      {"moving-average variance", moving_average},
      {"toral FCLT, two primes", toral},
      {"LLN trackers", lln},
      {"maximal local time", erdos_taylor},
      {"maximal inequalities", inequalities},
      {"toral algebra", algebra},
      {"transient variance", transient},
      {"reproducibility", reproducibility},
  };
  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
      ++unexpected;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool known = kKnownRed.count(id) > 0;
    if (!o.pass && !known) ++unexpected;
    const std::string line = fmt("criterion %2d %s %-26s %s [%.1fs]%s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first,
                                 o.detail.c_str(), secs,
                                 !o.pass && known ? " (known red)" : (o.pass && known ? " (known red now passes)" : ""));
    std::fputs(line.c_str(), stdout);
    std::fflush(stdout);
    if (copy) std::fputs(line.c_str(), copy);
  }
  std::printf("%d unexpected failure(s)\n", unexpected);
  if (copy) {
    std::fprintf(copy, "%d unexpected failure(s)\n", unexpected);
    std::fclose(copy);
  }
  return unexpected == 0 ? 0 : 1;
}

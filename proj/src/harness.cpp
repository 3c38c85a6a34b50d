#include "rwlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

#include "rwlab/error.hpp"
#include "rwlab/rng.hpp"

namespace rwlab {

namespace {

constexpr std::uint64_t kOmegaStream = 0x0E6A;
constexpr std::uint64_t kSceneryStream = 0x5CE4;

// Runs f(i) for i < count. Results must be written to per-index slots, so
// the outcome does not depend on the thread count.
template <class F>
void parallel_for(std::size_t count, std::size_t threads, F&& f) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::shared_ptr<const WalkModel> make_walk(const IncrementLaw& law) {
  return std::make_shared<const WalkModel>(build_walk_model(law));
}

std::vector<std::size_t> grid_cuts(std::size_t n, const std::vector<double>& t_grid) {
  std::vector<std::size_t> cuts;
  for (double t : t_grid) cuts.push_back(static_cast<std::size_t>(std::floor(static_cast<double>(n) * t)));
  return cuts;
}

void require_recurrent_2d(const WalkModel& w, const char* who) {
  if (w.dimension() != 2 || w.classification != WalkClass::Recurrent)
    throw InvalidArgument(std::string(who) + ": needs a recurrent walk on Z^2");
}

// C0 from the closed form, or the omega-average of V_n / (n ln n).
std::pair<double, bool> resolve_c0(const ExperimentConfig& c, const std::shared_ptr<const WalkModel>& walk) {
  if (walk->c0 && !c.empirical_c0) return {*walk->c0, false};
  std::vector<double> r(c.n_omegas);
  const double nl = static_cast<double>(c.n) * std::log(static_cast<double>(c.n));
  parallel_for(c.n_omegas, c.threads, [&](std::size_t i) {
    const WalkPath path = sample_path(walk, c.n, omega_seed(c.seed, i));
    const std::int64_t zero[2] = {0, 0};
    r[i] = static_cast<double>(self_intersections(path, c.n, zero)) / nl;
  });
  double s = 0.0;
  for (double x : r) s += x;
  return {s / static_cast<double>(r.size()), true};
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

void validate(const ExperimentConfig& c) {
  if (c.n < 2 || c.n > kMaxCountedSteps) throw InvalidArgument("n must be in [2, 2^31]");
  if (c.t_grid.empty()) throw InvalidArgument("t_grid must be nonempty");
  for (std::size_t j = 0; j < c.t_grid.size(); ++j) {
    const double t = c.t_grid[j];
    if (!(t > 0.0 && t <= 1.0)) throw InvalidArgument("t_grid entries must lie in (0, 1]");
    if (j > 0 && !(t > c.t_grid[j - 1])) throw InvalidArgument("t_grid must be strictly increasing");
  }
  if (c.n_omegas == 0) throw InvalidArgument("n_omegas must be positive");
  if (c.m_sceneries < 2) throw InvalidArgument("m_sceneries must be at least 2");
  if (c.experiment == "fclt" && c.m_sceneries < 100) throw InvalidArgument("m_sceneries must be >= 100 for KS experiments");
  if (c.threads == 0) throw InvalidArgument("threads must be positive");
  if (!(c.tol.omega_fraction > 0.0 && c.tol.omega_fraction <= 1.0)) throw InvalidArgument("omega_fraction must be in (0, 1]");
  if (c.stride < 2 || c.stride % 2 != 0) throw InvalidArgument("stride must be even and >= 2");
}

std::uint64_t omega_seed(std::uint64_t master, std::size_t i) { return derive_seed(master, kOmegaStream, i); }

std::uint64_t scenery_seed(std::uint64_t master, std::size_t i, std::size_t j) {
  return derive_seed(derive_seed(master, kSceneryStream, i), j);
}

double exact_window_variance(const SpectralDensity& sd, const WalkPath& path, Window w) {
  if (w.length == 0) return 0.0;
  const LocalTimeTable t = local_times(path, w);
  return exact_cross_covariance(sd, t, t);
}

double exact_cross_covariance(const SpectralDensity& sd, const LocalTimeTable& t, const LocalTimeTable& u) {
  const std::size_t dim = t.codec().dimension();
  double v = 0.0;
  for (const auto& [l, a] : sd.fourier) {
    std::vector<std::int64_t> p(dim, 0);
    if (l != Exponent{0, 0}) {
      if (dim != 2) throw InvalidArgument("exact_cross_covariance: correlated sceneries need d = 2");
      p = {l[0], l[1]};
    }
    v += a * static_cast<double>(pair_count(t, u, p));
  }
  return v;
}

// ---------------------------------------------------------------------------

FcltReport run_fclt(const ExperimentConfig& c) {
  validate(c);
  const auto walk = make_walk(c.law);
  require_recurrent_2d(*walk, "run_fclt");
  const SpectralDensity sd = spectral_density(c.scenery);

  FcltReport rep;
  rep.n = c.n;
  rep.m = c.m_sceneries;
  rep.t_grid = c.t_grid;
  rep.sigma2 = sd.at_zero();
  const bool degenerate = std::abs(rep.sigma2) < 1e-12;
  rep.mode = degenerate ? "degenerate-variance" : "normal";
  std::tie(rep.c0, rep.c0_empirical) = resolve_c0(c, walk);

  const double norm2 = rep.c0 * static_cast<double>(c.n) * std::log(static_cast<double>(c.n));
  const double inv_norm = 1.0 / std::sqrt(norm2);
  const auto cuts = grid_cuts(c.n, c.t_grid);
  const std::size_t J = cuts.size();

  rep.omegas.resize(c.n_omegas);
  parallel_for(c.n_omegas, c.threads, [&](std::size_t i) {
    OmegaFclt& o = rep.omegas[i];
    o.omega_seed = omega_seed(c.seed, i);
    const WalkPath path = sample_path(walk, c.n, o.omega_seed);
    const QuenchedSampler q(c.scenery, path, c.n, cuts);

    std::vector<double> data(c.m_sceneries * J);
    std::vector<double> y1(c.m_sceneries);
    for (std::size_t j = 0; j < c.m_sceneries; ++j) {
      const auto inc = q.increments(scenery_seed(c.seed, i, j));
      double s = 0.0;
      for (std::size_t k = 0; k < J; ++k) {
        data[j * J + k] = inc[k] * inv_norm;
        s += inc[k];
      }
      y1[j] = s * inv_norm;
    }

    std::size_t begin = 0;
    double prev_t = 0.0;
    std::vector<double> col(c.m_sceneries);
    o.ks_pass = true;
    for (std::size_t k = 0; k < J; ++k) {
      o.exact_var.push_back(exact_window_variance(sd, path, {begin, cuts[k] - begin}) / norm2);
      o.target_var.push_back(rep.sigma2 * (c.t_grid[k] - prev_t));
      for (std::size_t j = 0; j < c.m_sceneries; ++j) col[j] = data[j * J + k];
      o.empirical_var.push_back(moments(col).var);
      if (!degenerate) {
        const KsResult ks = ks_normal(col, o.target_var.back());
        o.ks_d.push_back(ks.d);
        o.ks_p.push_back(ks.p_value);
        if (ks.p_value <= c.tol.ks_p_min) o.ks_pass = false;
        o.ks_p_exact.push_back(o.exact_var.back() > 0.0 ? ks_normal(col, o.exact_var.back()).p_value : 0.0);
      }
      begin = cuts[k];
      prev_t = c.t_grid[k];
    }
    o.covariance = covariance_matrix(data, c.m_sceneries, J);
    for (std::size_t a = 0; a < J; ++a)
      for (std::size_t b = a + 1; b < J; ++b) {
        const double den = std::sqrt(o.covariance[a * J + a] * o.covariance[b * J + b]);
        if (den > 0.0) o.max_abs_corr = std::max(o.max_abs_corr, std::abs(o.covariance[a * J + b] / den));
      }
    o.corr_pass = o.max_abs_corr < c.tol.corr_max;
    std::vector<LocalTimeTable> tabs;
    for (std::size_t k = 0; k < J; ++k) {
      const std::size_t b0 = k ? cuts[k - 1] : 0;
      tabs.push_back(local_times(path, {b0, cuts[k] - b0}));
    }
    o.exact_covariance.assign(J * J, 0.0);
    for (std::size_t a = 0; a < J; ++a)
      for (std::size_t b = a; b < J; ++b)
        o.exact_covariance[a * J + b] = o.exact_covariance[b * J + a] =
            (tabs[a].window().length && tabs[b].window().length ? exact_cross_covariance(sd, tabs[a], tabs[b]) : 0.0) / norm2;
    for (std::size_t a = 0; a < J; ++a)
      for (std::size_t b = a + 1; b < J; ++b) {
        const double den = std::sqrt(o.exact_covariance[a * J + a] * o.exact_covariance[b * J + b]);
        if (den > 0.0) o.exact_max_abs_corr = std::max(o.exact_max_abs_corr, std::abs(o.exact_covariance[a * J + b] / den));
      }
    const Moments my = moments(y1);
    o.var_y1 = my.var;
    o.exact_var_y1 = exact_window_variance(sd, path, {0, cuts.back()}) / norm2;
    const double se = o.var_y1_se = my.se_var();
    o.identity_z = se > 0.0 ? (o.var_y1 - o.exact_var_y1) / se : (o.var_y1 == o.exact_var_y1 ? 0.0 : 1e9);
  });

  const double nw = static_cast<double>(c.n_omegas);
  rep.ks_pass_fraction.assign(degenerate ? 0 : J, 0.0);
  std::vector<double> vars;
  for (const auto& o : rep.omegas) {
    for (std::size_t k = 0; k < o.ks_p.size(); ++k)
      if (o.ks_p[k] > c.tol.ks_p_min) rep.ks_pass_fraction[k] += 1.0;
    if (o.corr_pass) rep.corr_pass_fraction += 1.0;
    if (std::abs(o.identity_z) <= c.tol.identity_z) rep.identity_pass_fraction += 1.0;
    vars.push_back(o.var_y1);
    rep.exact_mean_var_y1 += o.exact_var_y1 / nw;
  }
  for (double& f : rep.ks_pass_fraction) f /= nw;
  rep.corr_pass_fraction /= nw;
  rep.identity_pass_fraction /= nw;
  const Moments mv = moments(vars);
  rep.pooled_var_y1 = mv.mean;
  rep.pooled_var_y1_se = c.n_omegas > 1 ? mv.se_mean() : 0.0;
  rep.ks_ok = std::all_of(rep.ks_pass_fraction.begin(), rep.ks_pass_fraction.end(),
                          [&](double f) { return f >= c.tol.omega_fraction; });
  rep.corr_ok = rep.corr_pass_fraction >= c.tol.omega_fraction;
  rep.identity_ok = rep.identity_pass_fraction == 1.0;
  rep.pass = degenerate ? rep.identity_ok : (rep.ks_ok && rep.corr_ok && rep.identity_ok);
  return rep;
}

std::vector<VarianceLadderPoint> variance_ladder(const ExperimentConfig& c, const std::vector<std::size_t>& n_ladder) {
  std::vector<VarianceLadderPoint> out;
  for (std::size_t n : n_ladder) {
    ExperimentConfig cc = c;
    cc.n = n;
    cc.t_grid = {1.0};
    const FcltReport r = run_fclt(cc);
    out.push_back({n, r.pooled_var_y1, r.pooled_var_y1_se, r.exact_mean_var_y1});
  }
  return out;
}

// ---------------------------------------------------------------------------

LlnTable track_variance_lln(const std::shared_ptr<const WalkModel>& walk, const std::vector<std::size_t>& n_ladder,
                            const std::vector<IntVec>& p_set, std::size_t n_omegas, std::uint64_t seed,
                            std::size_t threads) {
  require_recurrent_2d(*walk, "track_variance_lln");
  if (!walk->c0) throw InvalidArgument("track_variance_lln: C0 needs a strongly aperiodic walk");
  if (n_ladder.empty() || p_set.empty() || n_omegas == 0) throw InvalidArgument("track_variance_lln: empty ladder");
  const std::size_t n_max = *std::max_element(n_ladder.begin(), n_ladder.end());
  const double c0 = *walk->c0;
  const std::size_t L = n_ladder.size(), P = p_set.size();
  std::vector<double> ratio(n_omegas * L * P);
  parallel_for(n_omegas, threads, [&](std::size_t i) {
    const WalkPath path = sample_path(walk, n_max, omega_seed(seed, i));
    for (std::size_t a = 0; a < L; ++a) {
      const std::size_t n = n_ladder[a];
      const LocalTimeTable t = local_times(path, {0, n});
      const double nl = c0 * static_cast<double>(n) * std::log(static_cast<double>(n));
      for (std::size_t b = 0; b < P; ++b) ratio[(i * L + a) * P + b] = static_cast<double>(pair_count(t, t, p_set[b])) / nl;
    }
  });
  LlnTable tab;
  tab.c0 = c0;
  tab.n_omegas = n_omegas;
  std::vector<std::vector<double>> dev(P);
  for (std::size_t a = 0; a < L; ++a)
    for (std::size_t b = 0; b < P; ++b) {
      std::vector<double> xs;
      for (std::size_t i = 0; i < n_omegas; ++i) xs.push_back(ratio[(i * L + a) * P + b]);
      const Moments m = moments(xs);
      tab.rows.push_back({n_ladder[a], p_set[b], m.mean, std::sqrt(m.var), *std::min_element(xs.begin(), xs.end()),
                          *std::max_element(xs.begin(), xs.end())});
      dev[b].push_back(std::abs(m.mean - 1.0));
    }
  for (std::size_t b = 0; b < P; ++b) {
    double shrink = 0.0;
    for (std::size_t a = 1; a < L; ++a)
      if (dev[b][a] < dev[b][a - 1]) shrink += 1.0;
    tab.trend.push_back(L > 1 ? shrink / static_cast<double>(L - 1) : 0.0);
  }
  return tab;
}

OrthogonalityTable check_increment_orthogonality(const std::shared_ptr<const WalkModel>& walk,
                                                 const std::vector<std::size_t>& n_ladder,
                                                 std::array<double, 4> w, const std::vector<IntVec>& p_set,
                                                 std::size_t n_omegas, std::uint64_t seed, std::size_t threads) {
  if (!(0.0 < w[0] && w[0] < w[1] && w[1] < w[2] && w[2] < w[3] && w[3] < 1.0))
    throw InvalidArgument("check_increment_orthogonality: need 0 < A < B < C < D < 1");
  if (n_ladder.empty() || p_set.empty() || n_omegas == 0) throw InvalidArgument("check_increment_orthogonality: empty ladder");
  const bool recurrent = walk->classification == WalkClass::Recurrent;
  const std::size_t n_max = *std::max_element(n_ladder.begin(), n_ladder.end());
  const std::size_t L = n_ladder.size(), P = p_set.size();
  std::vector<double> val(n_omegas * L * P);
  std::vector<std::size_t> viol(n_omegas, 0);
  parallel_for(n_omegas, threads, [&](std::size_t i) {
    const WalkPath path = sample_path(walk, n_max, omega_seed(seed, i));
    for (std::size_t a = 0; a < L; ++a) {
      const std::size_t n = n_ladder[a];
      const double nd = static_cast<double>(n);
      auto at = [&](double f) { return static_cast<std::size_t>(std::floor(nd * f)); };
      const Window I{at(w[0]), at(w[1]) - at(w[0])}, J{at(w[2]), at(w[3]) - at(w[2])};
      const Window I2{at(w[0] / 2), at(w[1]) - at(w[0] / 2)};
      const LocalTimeTable ti = local_times(path, I), tj = local_times(path, J), ti2 = local_times(path, I2);
      const double norm = recurrent ? nd * std::log(nd) : nd;
      for (std::size_t b = 0; b < P; ++b) {
        const Count cross = pair_count(ti, tj, p_set[b]);
        val[(i * L + a) * P + b] = static_cast<double>(cross) / norm;
        if (pair_count(ti2, tj, p_set[b]) < cross) ++viol[i];
      }
    }
  });
  OrthogonalityTable tab;
  tab.normalization = recurrent ? "n ln n" : "n";
  tab.windows = w;
  for (std::size_t a = 0; a < L; ++a)
    for (std::size_t b = 0; b < P; ++b) {
      std::vector<double> xs;
      for (std::size_t i = 0; i < n_omegas; ++i) xs.push_back(val[(i * L + a) * P + b]);
      const Moments m = moments(xs);
      tab.rows.push_back({n_ladder[a], p_set[b], m.mean, std::sqrt(m.var)});
    }
  for (std::size_t b = 0; b < P; ++b) {
    double dec = 0.0;
    for (std::size_t i = 0; i < n_omegas; ++i) {
      bool strict = true;
      for (std::size_t a = 1; a < L; ++a)
        if (!(val[(i * L + a) * P + b] < val[(i * L + a - 1) * P + b])) strict = false;
      if (strict) dec += 1.0;
    }
    tab.decreasing_fraction.push_back(dec / static_cast<double>(n_omegas));
    bool mean_strict = true;
    for (std::size_t a = 1; a < L; ++a)
      if (!(tab.rows[a * P + b].mean < tab.rows[(a - 1) * P + b].mean)) mean_strict = false;
    tab.mean_decreasing.push_back(mean_strict ? 1.0 : 0.0);
  }
  tab.witness_checks = n_omegas * L * P;
  for (auto v : viol) tab.witness_violations += v;
  return tab;
}

// ---------------------------------------------------------------------------

std::pair<MovingAverageSpec, MovingAverageSpec> split_moving_average(const MovingAverageSpec& ma) {
  MovingAverageSpec pos{ma.base, {}}, neg{ma.base, {}};
  for (const auto& [q, a] : ma.coefficients) {
    if (a > 0.0) pos.coefficients[q] = a;
    if (a < 0.0) neg.coefficients[q] = -a;
  }
  return {pos, neg};
}

NewmanWrightReport check_newman_wright(const SceneryModel& s, const WalkPath& path, std::size_t n,
                                       const std::vector<double>& lambdas, std::size_t m, std::uint64_t seed,
                                       double se_factor) {
  if (const auto* ma = std::get_if<MovingAverageSpec>(&s); ma && !ma->nonnegative())
    throw InvalidArgument("check_newman_wright: moving average with negative coefficients is not certified associated");
  if (std::holds_alternative<ToralSpec>(s)) throw InvalidArgument("check_newman_wright: toral fields are not certified associated");
  if (m < 2 || lambdas.empty()) throw InvalidArgument("check_newman_wright: need m >= 2 and a lambda grid");
  NewmanWrightReport rep;
  rep.n = n;
  rep.m = m;
  rep.norm = std::sqrt(exact_sum_variance(s, path, n));
  const QuenchedSampler q(s, path, n, {});
  const std::size_t L = lambdas.size();
  std::vector<double> d(m * L), lhs(m * L), rhs(m * L);
  for (std::size_t j = 0; j < m; ++j) {
    const auto ps = q.partial_sums(q.site_values(derive_seed(seed, j)), 1);
    double mx = 0.0;
    for (double x : ps) mx = std::max(mx, std::abs(x));
    const double sn = std::abs(ps.back());
    for (std::size_t a = 0; a < L; ++a) {
      const double l = lhs[j * L + a] = mx >= lambdas[a] * rep.norm ? 1.0 : 0.0;
      const double r = rhs[j * L + a] = sn >= (lambdas[a] - std::numbers::sqrt2) * rep.norm ? 2.0 : 0.0;
      d[j * L + a] = r - l;
    }
  }
  bool any_se = false;
  rep.pass = true;
  for (std::size_t a = 0; a < L; ++a) {
    std::vector<double> da(m), la(m), ra(m);
    for (std::size_t j = 0; j < m; ++j) {
      da[j] = d[j * L + a];
      la[j] = lhs[j * L + a];
      ra[j] = rhs[j * L + a];
    }
    const Moments md = moments(da);
    MarginRow row;
    row.lambda = lambdas[a];
    row.lhs = mean_of(la);
    row.rhs = mean_of(ra);
    row.margin = md.mean;
    row.se = md.se_mean();
    row.violation = row.margin < -se_factor * row.se || (row.se == 0.0 && row.margin < 0.0);
    if (row.violation) rep.pass = false;
    if (row.se > 0.0) {
      const double z = row.margin / row.se;
      rep.worst_margin_se = any_se ? std::min(rep.worst_margin_se, z) : z;
      any_se = true;
    }
    rep.rows.push_back(row);
  }
  return rep;
}

MoriczReport check_moricz(const IidSpec& s, const WalkPath& path, std::size_t n, const std::string& g0, double g0_coef,
                          std::size_t m, std::uint64_t seed, double se_factor) {
  if (s.part != FieldPart::Whole) throw InvalidArgument("check_moricz: needs a whole (untruncated) i.i.d. law");
  if (n == 0 || n > 512 || n > path.size()) throw InvalidArgument("check_moricz: n must be in [1, min(512, path length)]");
  if (g0 != "linear" && g0 != "local_time") throw InvalidArgument("check_moricz: g0 must be 'linear' or 'local_time'");
  if (m < 2) throw InvalidArgument("check_moricz: need m >= 2");
  const double m4 = s.fourth_moment();
  MoriczReport rep;
  rep.g0 = g0;
  rep.g0_coef = g0_coef > 0.0 ? g0_coef : (g0 == "linear" ? std::sqrt(std::max(3.0, m4)) : 2.0 * std::sqrt(m4));

  const QuenchedSampler q(s, path, n, {});
  // V(b, k) and sum of w^4 over [b, b+k), by extending each window one step.
  auto idx = [n](std::size_t b, std::size_t k) { return b * (n + 1) + k; };
  std::vector<double> v((n + 1) * (n + 1), 0.0), w4((n + 1) * (n + 1), 0.0), g((n + 1) * (n + 1), 0.0);
  std::vector<std::uint64_t> cnt(q.site_count(), 0);
  for (std::size_t b = 0; b < n; ++b) {
    std::fill(cnt.begin(), cnt.end(), 0);
    double vv = 0.0, qq = 0.0;
    for (std::size_t k = 1; b + k <= n; ++k) {
      const double c = static_cast<double>(cnt[q.site_of(b + k - 1)]++);
      vv += 2.0 * c + 1.0;
      qq += std::pow(c + 1.0, 4) - std::pow(c, 4);
      v[idx(b, k)] = vv;
      w4[idx(b, k)] = qq;
      g[idx(b, k)] = rep.g0_coef * (g0 == "linear" ? static_cast<double>(k) : vv);
    }
  }
  rep.superadditive = true;
  rep.hypothesis_holds = true;
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t k = 1; b + k <= n; ++k) {
      const double es4 = 3.0 * v[idx(b, k)] * v[idx(b, k)] + (m4 - 3.0) * w4[idx(b, k)];
      const double ratio = es4 / (g[idx(b, k)] * g[idx(b, k)]);
      rep.worst_hypothesis_ratio = std::max(rep.worst_hypothesis_ratio, ratio);
      if (ratio > 1.0 + 1e-12) rep.hypothesis_holds = false;
      ++rep.windows_checked;
      for (std::size_t l = 1; b + k + l <= n; ++l)
        if (g[idx(b, k)] + g[idx(b + k, l)] > g[idx(b, k + l)] * (1.0 + 1e-12)) rep.superadditive = false;
    }
  if (!rep.superadditive || !rep.hypothesis_holds) {
    rep.status = !rep.superadditive ? "inapplicable: G0 not super-additive" : "inapplicable: fourth-moment hypothesis fails";
    rep.pass = true;
    return rep;
  }
  rep.status = "applicable";

  std::vector<std::pair<std::size_t, std::size_t>> wins;
  for (std::size_t k = 1; k <= n; k *= 2)
    for (std::size_t b = 0; b + k <= n; b += k) wins.emplace_back(b, k);
  std::vector<double> sum(wins.size(), 0.0), sum2(wins.size(), 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    const auto ps = q.partial_sums(q.site_values(derive_seed(seed, j)), 1);
    for (std::size_t a = 0; a < wins.size(); ++a) {
      const auto [b, k] = wins[a];
      double mx = 0.0;
      for (std::size_t i = 1; i <= k; ++i) mx = std::max(mx, std::abs(ps[b + i] - ps[b]));
      const double m4v = mx * mx * mx * mx;
      sum[a] += m4v;
      sum2[a] += m4v * m4v;
    }
  }
  rep.pass = true;
  rep.worst_relative_margin = 1.0;
  const double md = static_cast<double>(m);
  for (std::size_t a = 0; a < wins.size(); ++a) {
    const auto [b, k] = wins[a];
    MarginRow row;
    row.lambda = static_cast<double>(b);
    row.k = k;
    row.lhs = sum[a] / md;
    row.se = std::sqrt(std::max(sum2[a] / md - row.lhs * row.lhs, 0.0) / md);
    row.rhs = kMoriczCmax * g[idx(b, k)] * g[idx(b, k)];
    row.margin = row.rhs - row.lhs;
    row.violation = row.margin < -se_factor * row.se;
    if (row.violation) rep.pass = false;
    rep.worst_relative_margin = std::min(rep.worst_relative_margin, row.margin / row.rhs);
    rep.rows.push_back(row);
  }
  return rep;
}

// ---------------------------------------------------------------------------

double grid_modulus(std::span<const double> p, std::size_t w) {
  if (p.size() < 2 || w == 0) return 0.0;
  w = std::min(w, p.size() - 1);
  std::deque<std::size_t> hi, lo;
  double best = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (!hi.empty() && p[hi.back()] <= p[i]) hi.pop_back();
    while (!lo.empty() && p[lo.back()] >= p[i]) lo.pop_back();
    hi.push_back(i);
    lo.push_back(i);
    while (hi.front() + w < i) hi.pop_front();
    while (lo.front() + w < i) lo.pop_front();
    best = std::max(best, p[hi.front()] - p[lo.front()]);
  }
  return best;
}

TightnessTable estimate_tightness_modulus(const ExperimentConfig& c, std::vector<double> deltas, double eps) {
  validate(c);
  if (deltas.empty()) throw InvalidArgument("estimate_tightness_modulus: empty delta ladder");
  for (double d : deltas)
    if (!(d > 0.0 && d <= 1.0)) throw InvalidArgument("estimate_tightness_modulus: delta must be in (0, 1]");
  if (!(eps > 0.0)) throw InvalidArgument("estimate_tightness_modulus: epsilon must be positive");
  if (c.n % c.stride != 0) throw InvalidArgument("estimate_tightness_modulus: stride must divide n");
  std::sort(deltas.begin(), deltas.end(), std::greater<>());
  const auto walk = make_walk(c.law);
  require_recurrent_2d(*walk, "estimate_tightness_modulus");
  const double c0 = resolve_c0(c, walk).first;
  const double inv_norm = 1.0 / std::sqrt(c0 * static_cast<double>(c.n) * std::log(static_cast<double>(c.n)));
  const std::size_t D = deltas.size();
  const std::size_t half = c.stride / 2;
  std::vector<double> hits(c.n_omegas * D * 2, 0.0);
  parallel_for(c.n_omegas, c.threads, [&](std::size_t i) {
    const WalkPath path = sample_path(walk, c.n, omega_seed(c.seed, i));
    const QuenchedSampler q(c.scenery, path, c.n, {});
    std::vector<double> coarse;
    for (std::size_t j = 0; j < c.m_sceneries; ++j) {
      auto fine = q.partial_sums(q.site_values(scenery_seed(c.seed, i, j)), half);
      for (double& x : fine) x *= inv_norm;
      coarse.clear();
      for (std::size_t a = 0; a < fine.size(); a += 2) coarse.push_back(fine[a]);
      for (std::size_t k = 0; k < D; ++k) {
        const double span_steps = deltas[k] * static_cast<double>(c.n);
        const auto wc = static_cast<std::size_t>(std::floor(span_steps / static_cast<double>(c.stride)));
        const auto wf = static_cast<std::size_t>(std::floor(span_steps / static_cast<double>(half)));
        if (grid_modulus(coarse, wc) >= eps) hits[(i * D + k) * 2] += 1.0;
        if (grid_modulus(fine, wf) >= eps) hits[(i * D + k) * 2 + 1] += 1.0;
      }
    }
  });
  TightnessTable tab;
  tab.n = c.n;
  tab.stride = c.stride;
  tab.epsilon = eps;
  const double denom = static_cast<double>(c.n_omegas * c.m_sceneries);
  for (std::size_t k = 0; k < D; ++k) {
    TightnessRow row{deltas[k], 0.0, 0.0};
    for (std::size_t i = 0; i < c.n_omegas; ++i) {
      row.prob += hits[(i * D + k) * 2] / denom;
      row.prob_fine += hits[(i * D + k) * 2 + 1] / denom;
    }
    tab.max_stride_gap = std::max(tab.max_stride_gap, std::abs(row.prob - row.prob_fine));
    tab.rows.push_back(row);
  }
  auto decreasing = [&](auto get) {
    for (std::size_t k = 1; k < D; ++k)
      if (get(tab.rows[k]) > get(tab.rows[k - 1])) return false;
    return D < 2 || get(tab.rows.back()) < get(tab.rows.front()) || get(tab.rows.front()) == 0.0;
  };
  tab.decreasing = decreasing([](const TightnessRow& r) { return r.prob; });
  tab.decreasing_fine = decreasing([](const TightnessRow& r) { return r.prob_fine; });
  tab.pass = tab.decreasing && tab.decreasing_fine;
  return tab;
}

// ---------------------------------------------------------------------------

ErdosTaylorTable track_erdos_taylor(const std::shared_ptr<const WalkModel>& walk,
                                    const std::vector<std::size_t>& n_ladder, std::size_t n_omegas,
                                    std::uint64_t seed, std::size_t threads) {
  if (walk->dimension() != 2 || !walk->centered || !walk->aperiodic || walk->classification != WalkClass::Recurrent)
    throw InvalidArgument("track_erdos_taylor: needs a centered aperiodic walk on Z^2");
  if (n_ladder.size() < 2 || n_omegas == 0) throw InvalidArgument("track_erdos_taylor: need two ladder points");
  const std::size_t n_max = *std::max_element(n_ladder.begin(), n_ladder.end());
  const std::size_t L = n_ladder.size();
  std::vector<double> r(n_omegas * L), pw(n_omegas * L);
  parallel_for(n_omegas, threads, [&](std::size_t i) {
    const WalkPath path = sample_path(walk, n_max, omega_seed(seed, i));
    for (std::size_t a = 0; a < L; ++a) {
      const std::size_t n = n_ladder[a];
      const double w = static_cast<double>(max_local_time(path, n));
      const double ln = std::log(static_cast<double>(n));
      r[i * L + a] = w / (ln * ln);
      pw[i * L + a] = w / std::pow(static_cast<double>(n), 0.1);
    }
  });
  ErdosTaylorTable tab;
  tab.target = 1.0 / std::numbers::pi;
  for (std::size_t a = 0; a < L; ++a) {
    std::vector<double> xs, ps;
    for (std::size_t i = 0; i < n_omegas; ++i) {
      xs.push_back(r[i * L + a]);
      ps.push_back(pw[i * L + a]);
    }
    tab.rows.push_back({n_ladder[a], mean_of(xs), quantile(xs, 0.1), quantile(xs, 0.5), quantile(xs, 0.9), mean_of(ps)});
  }
  tab.closer_at_end = std::abs(tab.rows.back().mean_ratio - tab.target) < std::abs(tab.rows.front().mean_ratio - tab.target);
  tab.power_decreasing = true;
  for (std::size_t a = 1; a < L; ++a)
    if (!(tab.rows[a].mean_power < tab.rows[a - 1].mean_power)) tab.power_decreasing = false;
  return tab;
}

// ---------------------------------------------------------------------------

TransientReport transient_variance_check(const SceneryModel& s, const std::shared_ptr<const WalkModel>& walk,
                                         std::size_t n, std::size_t m, std::uint64_t seed, std::size_t k_max,
                                         std::size_t threads) {
  if (walk->classification != WalkClass::Transient) throw InvalidArgument("transient_variance_check: walk is not transient");
  if (walk->dimension() < 2) throw InvalidArgument("transient_variance_check: needs d >= 2");
  if (m < 2 || n < 2) throw InvalidArgument("transient_variance_check: need n, m >= 2");
  const SpectralDensity sd = spectral_density(s);
  TransientReport rep;
  rep.n = n;
  rep.m = m;

  std::vector<double> r(m);
  parallel_for(m, threads, [&](std::size_t i) {
    const WalkPath path = sample_path(walk, n, omega_seed(seed, i));
    r[i] = exact_window_variance(sd, path, {0, n}) / static_cast<double>(n);
  });
  const Moments mr = moments(r);
  rep.mc_mean = mr.mean;
  rep.mc_se = mr.se_mean();

  // Series value and the finite-n bias sum_k min(k/n, 1) T_k, with the terms
  // past k_max continued by a power law k^{-d/2} for centered walks.
  const std::size_t d = walk->dimension();
  const double nd = static_cast<double>(n);
  for (const auto& [l, a] : sd.fourier) {
    std::vector<std::int64_t> site(d, 0);
    if (l != Exponent{0, 0}) site = {l[0], l[1]};
    const GreenSeries g = green_series(walk, site, k_max, 20000, derive_seed(seed, 0x6EEE));
    rep.series_value += a * (g.value + g.tail_estimate);
    rep.series_tail += std::abs(a) * g.tail_estimate;
    rep.series_se += std::abs(a) * g.std_error;
    double bias = 0.0;
    for (std::size_t k = 1; k <= g.terms.size(); ++k) bias += std::min(static_cast<double>(k) / nd, 1.0) * g.terms[k - 1];
    if (walk->centered && g.terms.size() >= 2) {
      const double K = static_cast<double>(g.terms.size());
      const double alpha = static_cast<double>(d) / 2.0;
      const double c = 0.5 * (g.terms[g.terms.size() - 1] * std::pow(K, alpha) +
                              g.terms[g.terms.size() - 2] * std::pow(K - 1.0, alpha));
      const double lo = K + 0.5, hi = std::max(nd - 0.5, lo);
      const double inner = alpha == 2.0 ? std::log(hi / lo) : (std::pow(hi, 2.0 - alpha) - std::pow(lo, 2.0 - alpha)) / (2.0 - alpha);
      bias += c * inner / nd + c * std::pow(hi, 1.0 - alpha) / (alpha - 1.0);
    }
    rep.finite_n_bias += a * bias;
  }
  rep.difference = rep.mc_mean - (rep.series_value - rep.finite_n_bias);
  rep.combined_error = 3.0 * std::sqrt(rep.mc_se * rep.mc_se + rep.series_se * rep.series_se +
                                       std::pow(0.05 * rep.series_tail, 2) + std::pow(0.05 * rep.finite_n_bias, 2));
  rep.within = std::abs(rep.difference) <= rep.combined_error;
  const double a0 = sd.fourier.count({0, 0}) ? sd.fourier.at({0, 0}) : 0.0;
  rep.ratio_at_least_one = rep.series_value >= a0 && rep.mc_mean >= a0 - 3.0 * rep.mc_se;
  return rep;
}

// ---------------------------------------------------------------------------

std::vector<TruncationRow> truncation_ladder(const std::shared_ptr<const MatrixPair>& pair, const TrigPolynomial& f,
                                             const std::vector<std::int64_t>& radii, SpectralOptions opt) {
  std::vector<TruncationRow> out;
  for (std::int64_t r : radii) {
    TrigPolynomial::Coefficients kept;
    double residual = 0.0;
    for (const auto& [k, c] : f.coefficients()) {
      std::int64_t sup = 0;
      for (auto x : k) sup = std::max(sup, std::abs(x));
      if (sup <= r) kept[k] = c;
      else residual += std::abs(c);
    }
    TruncationRow row{r, kept.size(), residual * residual, 0.0};
    if (!kept.empty()) row.phi0 = spectral_density(ToralSpec{pair, TrigPolynomial(f.dimension(), kept)}, opt).at_zero();
    out.push_back(row);
  }
  return out;
}

}  // namespace rwlab

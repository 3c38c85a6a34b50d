#include "rwlab/scenery.hpp"

#include <absl/container/flat_hash_map.h>

#include <boost/math/distributions/normal.hpp>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "rwlab/error.hpp"
#include "rwlab/rng.hpp"

namespace rwlab {

namespace {

constexpr std::uint64_t kIidStream = 0x5CE4E5EEDull;
constexpr std::uint64_t kToralStream = 0x7012A1ull;

double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct TruncGauss {
  double z;  // P(|Y| <= L)
  double s;  // standard deviation of Y given |Y| <= L
};

TruncGauss trunc_gauss(double level) {
  if (!(level > 0.0)) throw InvalidArgument("TruncatedGaussian: level must be positive");
  const double z = 2.0 * norm_cdf(level) - 1.0;
  const double var = 1.0 - 2.0 * level * norm_pdf(level) / z;
  return {z, std::sqrt(var)};
}

// E[X; X > c] and E[X^2; X > c] for the whole (standardized) law.
std::pair<double, double> upper_moments(const IidSpec& s, double c) {
  switch (s.law) {
    case BaseLaw::Rademacher: {
      double m1 = 0.0, m2 = 0.0;
      if (c < 1.0) { m1 += 0.5; m2 += 0.5; }
      if (c < -1.0) { m1 -= 0.5; m2 += 0.5; }
      return {m1, m2};
    }
    case BaseLaw::Uniform: {
      const double r = std::sqrt(3.0);
      const double u = std::clamp(c, -r, r);
      return {(3.0 - u * u) / (4.0 * r), (3.0 * r - u * u * u) / (6.0 * r)};
    }
    case BaseLaw::Gaussian:
      return {norm_pdf(c), c * norm_pdf(c) + 1.0 - norm_cdf(c)};
    case BaseLaw::TruncatedGaussian: {
      const auto [z, sd] = trunc_gauss(s.level);
      const double L = s.level;
      const double u = std::clamp(c * sd, -L, L);
      const double m1 = (norm_pdf(u) - norm_pdf(L)) / z;
      const double m2 = (u * norm_pdf(u) - L * norm_pdf(L) + norm_cdf(L) - norm_cdf(u)) / z;
      return {m1 / sd, m2 / (sd * sd)};
    }
  }
  return {0.0, 0.0};
}

double whole_value(const IidSpec& s, std::uint64_t x_seed, std::uint64_t key) {
  const PhiloxBlock b = CounterStream(x_seed, kIidStream).block(key);
  switch (s.law) {
    case BaseLaw::Rademacher:
      return (b[0] >> 31) ? 1.0 : -1.0;
    case BaseLaw::Uniform:
      return std::sqrt(3.0) * (2.0 * unit_from_words(b[0], b[1]) - 1.0);
    case BaseLaw::Gaussian: {
      const double u1 = 1.0 - unit_from_words(b[0], b[1]);
      const double u2 = unit_from_words(b[2], b[3]);
      return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    case BaseLaw::TruncatedGaussian: {
      const auto [z, sd] = trunc_gauss(s.level);
      const double lo = norm_cdf(-s.level);
      double p = lo + (unit_from_words(b[0], b[1]) + 0x1.0p-54) * z;
      p = std::clamp(p, 1e-300, 1.0 - 1e-16);
      const double y = boost::math::quantile(boost::math::normal_distribution<double>(), p);
      return std::clamp(y, -s.level, s.level) / sd;
    }
  }
  return 0.0;
}

}  // namespace

std::string to_string(BaseLaw law) {
  switch (law) {
    case BaseLaw::Rademacher: return "rademacher";
    case BaseLaw::Uniform: return "uniform";
    case BaseLaw::Gaussian: return "gaussian";
    case BaseLaw::TruncatedGaussian: return "truncated_gaussian";
  }
  return "unknown";
}

BaseLaw base_law_from_string(const std::string& name) {
  if (name == "rademacher") return BaseLaw::Rademacher;
  if (name == "uniform") return BaseLaw::Uniform;
  if (name == "gaussian") return BaseLaw::Gaussian;
  if (name == "truncated_gaussian") return BaseLaw::TruncatedGaussian;
  throw InvalidArgument("unknown base law '" + name + "'");
}

double IidSpec::mean_shift() const {
  if (part == FieldPart::Whole) return 0.0;
  const double up = upper_moments(*this, cut).first;
  return part == FieldPart::Tail ? up : -up;
}

double IidSpec::variance() const {
  if (part == FieldPart::Whole) return 1.0;
  const auto [m1, m2] = upper_moments(*this, cut);
  return part == FieldPart::Tail ? m2 - m1 * m1 : (1.0 - m2) - m1 * m1;
}

double IidSpec::fourth_moment() const {
  switch (law) {
    case BaseLaw::Rademacher: return 1.0;
    case BaseLaw::Uniform: return 9.0 / 5.0;
    case BaseLaw::Gaussian: return 3.0;
    case BaseLaw::TruncatedGaussian: {
      const auto [z, sd] = trunc_gauss(level);
      const double m4 = 3.0 * z - 2.0 * (level * level * level + 3.0 * level) * norm_pdf(level);
      return m4 / (z * sd * sd * sd * sd);
    }
  }
  return 0.0;
}

bool IidSpec::bounded_values() const { return law != BaseLaw::Gaussian; }

double MovingAverageSpec::coefficient_sum() const {
  double s = 0.0;
  for (const auto& [q, a] : coefficients) s += a;
  return s;
}

bool MovingAverageSpec::nonnegative() const {
  return std::all_of(coefficients.begin(), coefficients.end(), [](const auto& kv) { return kv.second >= 0.0; });
}

std::string scenery_kind(const SceneryModel& s) {
  switch (s.index()) {
    case 0: return "iid";
    case 1: return "moving_average";
    default: return "toral";
  }
}

double iid_site_value(const IidSpec& spec, std::uint64_t x_seed, std::uint64_t site_key) {
  const double x = whole_value(spec, x_seed, site_key);
  switch (spec.part) {
    case FieldPart::Whole: return x;
    case FieldPart::Bounded: return (x <= spec.cut ? x : 0.0) - spec.mean_shift();
    case FieldPart::Tail: return (x > spec.cut ? x : 0.0) - spec.mean_shift();
  }
  return x;
}

std::pair<SceneryModel, SceneryModel> truncate_field(const SceneryModel& s, double cut) {
  const auto* iid = std::get_if<IidSpec>(&s);
  if (!iid) throw InvalidArgument("truncate_field: only i.i.d. sceneries can be truncated");
  if (iid->part != FieldPart::Whole) throw InvalidArgument("truncate_field: field is already a truncation part");
  IidSpec lo = *iid, hi = *iid;
  lo.part = FieldPart::Bounded;
  hi.part = FieldPart::Tail;
  lo.cut = hi.cut = cut;
  return {lo, hi};
}

// ---------------------------------------------------------------------------

double SpectralDensity::evaluate(double t1, double t2) const {
  double s = 0.0;
  for (const auto& [l, a] : fourier)
    s += a * std::cos(2.0 * std::numbers::pi * (static_cast<double>(l[0]) * t1 + static_cast<double>(l[1]) * t2));
  return s;
}

double SpectralDensity::at_zero() const {
  double s = 0.0;
  for (const auto& [l, a] : fourier) s += a;
  return s;
}

double SpectralDensity::abs_sum() const {
  double s = 0.0;
  for (const auto& [l, a] : fourier) s += std::abs(a);
  return s;
}

SpectralDensity spectral_density(const SceneryModel& s, SpectralOptions opt) {
  SpectralDensity out;
  if (const auto* iid = std::get_if<IidSpec>(&s)) {
    out.fourier[{0, 0}] = iid->variance();
    return out;
  }
  if (const auto* ma = std::get_if<MovingAverageSpec>(&s)) {
    const double v = ma->base.variance();
    for (const auto& [q, a] : ma->coefficients)
      for (const auto& [q2, b] : ma->coefficients) {
        // a_l = sum_q a_q a_{q-l}
        const Exponent l = {q[0] - q2[0], q[1] - q2[1]};
        out.fourier[l] += v * a * b;
        out.radius = std::max({out.radius, std::abs(l[0]), std::abs(l[1])});
      }
    for (auto it = out.fourier.begin(); it != out.fourier.end();) {
      if (it->second == 0.0 && it->first != Exponent{0, 0}) it = out.fourier.erase(it);
      else ++it;
    }
    return out;
  }
  const auto& tor = std::get<ToralSpec>(s);
  if (!tor.pair) throw InvalidArgument("spectral_density: toral scenery without a matrix pair");
  std::int64_t empty_run = 0;
  for (std::int64_t r = 0; r <= opt.max_radius; ++r) {
    bool any = false;
    for (std::int64_t a = -r; a <= r; ++a)
      for (std::int64_t b = -r; b <= r; ++b) {
        if (std::max(std::abs(a), std::abs(b)) != r) continue;
        const double c = toral_correlation(*tor.pair, tor.f, {a, b});
        if (std::abs(c) > 1e-14) {
          out.fourier[{a, b}] = c;
          any = true;
        }
      }
    out.radius = r;
    empty_run = any ? 0 : empty_run + 1;
    if (empty_run >= opt.closure) return out;
  }
  throw BudgetExceeded("spectral_density: correlations did not close within the search radius");
}

AsymptoticVariance asymptotic_variance(const SceneryModel& s, const std::shared_ptr<const WalkModel>& walk,
                                       std::size_t k_max, SpectralOptions opt) {
  if (!walk) throw InvalidArgument("asymptotic_variance: null walk");
  const SpectralDensity sd = spectral_density(s, opt);
  AsymptoticVariance v;
  const std::size_t d = walk->dimension();
  if (walk->classification == WalkClass::Recurrent) {
    if (d != 2) throw InvalidArgument("asymptotic_variance: recurrent case implemented for d = 2");
    v.regime = "recurrent-2d";
    v.value = sd.at_zero();
  } else if (walk->classification == WalkClass::Transient) {
    if (d != 2 && sd.fourier.size() != 1) throw InvalidArgument("asymptotic_variance: correlated sceneries need d = 2");
    v.regime = "transient";
    for (const auto& [l, a] : sd.fourier) {
      std::vector<std::int64_t> site(d, 0);
      if (d == 2) site = {l[0], l[1]};
      const GreenSeries g = green_series(walk, site, k_max, 20000, 0x6EEE);
      v.value += a * g.value;
      v.tail_estimate += std::abs(a) * g.tail_estimate;
      v.std_error += std::abs(a) * g.std_error;
    }
  } else {
    throw InvalidArgument("asymptotic_variance: deterministic walks are excluded");
  }
  v.degenerate = std::abs(v.value) < 1e-12;
  return v;
}

// ---------------------------------------------------------------------------

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

bool is_probable_prime(std::uint64_t q) {
  mpz_class z;
  mpz_import(z.get_mpz_t(), 1, 1, sizeof(q), 0, 0, &q);
  return mpz_probab_prime_p(z.get_mpz_t(), 40) > 0;
}

namespace {

std::uint64_t reduce(const mpz_class& v, std::uint64_t q) {
  mpz_class r;
  mpz_class qq;
  mpz_import(qq.get_mpz_t(), 1, 1, sizeof(q), 0, 0, &q);
  mpz_fdiv_r(r.get_mpz_t(), v.get_mpz_t(), qq.get_mpz_t());
  std::uint64_t out = 0;
  mpz_export(&out, nullptr, 1, sizeof(out), 0, 0, r.get_mpz_t());
  return out;
}

using ModMat = std::vector<std::uint64_t>;

ModMat mod_matrix(const IntMatrix& m, std::uint64_t q) {
  const std::size_t n = m.size();
  ModMat out(n * n);
  for (std::size_t i = 0; i < n * n; ++i) out[i] = reduce(m(i / n, i % n), q);
  return out;
}

ModMat mod_mul(const ModMat& a, const ModMat& b, std::size_t n, std::uint64_t q) {
  ModMat c(n * n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] = (c[i * n + j] + mulmod(a[i * n + k], b[k * n + j], q)) % q;
  return c;
}

ModMat mod_pow(const IntMatrix& g, std::int64_t e, std::uint64_t q) {
  const std::size_t n = g.size();
  ModMat base = mod_matrix(e < 0 ? g.inverse() : g, q);
  ModMat result = mod_matrix(IntMatrix::identity(n), q);
  auto u = static_cast<std::uint64_t>(e < 0 ? -e : e);
  while (u) {
    if (u & 1u) result = mod_mul(result, base, n, q);
    u >>= 1;
    if (u) base = mod_mul(base, base, n, q);
  }
  return result;
}

// sum over half-support of 2 Re(c_k e(r_k / q)).
double toral_sum(std::span<const std::complex<double>> coef, std::span<const std::uint64_t> r, std::uint64_t q) {
  double s = 0.0;
  const double qd = static_cast<double>(q);
  for (std::size_t i = 0; i < coef.size(); ++i) {
    const double a = 2.0 * std::numbers::pi * (static_cast<double>(r[i]) / qd);
    s += 2.0 * (coef[i].real() * std::cos(a) - coef[i].imag() * std::sin(a));
  }
  return s;
}

void check_toral(const ToralSpec& t) {
  if (!t.pair) throw InvalidArgument("toral scenery without a matrix pair");
  if (t.f.dimension() != t.pair->rho()) throw InvalidArgument("toral scenery: polynomial dimension mismatch");
  if (t.modulus < 3 || t.modulus >= (std::uint64_t{1} << 62)) throw InvalidArgument("toral scenery: modulus out of range");
}

}  // namespace

std::vector<std::uint64_t> toral_point(const ToralSpec& spec, std::uint64_t x_seed) {
  check_toral(spec);
  const CounterStream rng(x_seed, kToralStream);
  const unsigned bits = 64 - static_cast<unsigned>(__builtin_clzll(spec.modulus - 1));
  const std::uint64_t mask = bits >= 64 ? ~0ull : ((std::uint64_t{1} << bits) - 1);
  std::vector<std::uint64_t> p;
  std::uint64_t idx = 0;
  while (p.size() < spec.pair->rho()) {
    const std::uint64_t v = rng.bits64(idx / 2, static_cast<int>(idx % 2)) & mask;
    ++idx;
    if (v < spec.modulus) p.push_back(v);
  }
  return p;
}

double toral_value_exact(const ToralSpec& spec, std::span<const std::uint64_t> point, Exponent l) {
  check_toral(spec);
  const IntMatrix t = spec.pair->power(l).transpose();
  std::vector<std::complex<double>> coef;
  std::vector<std::uint64_t> r;
  for (const auto& k : spec.f.half_support()) {
    const BigVec v = t.apply(to_big(k));
    mpz_class dot = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      mpz_class pi;
      mpz_import(pi.get_mpz_t(), 1, 1, sizeof(point[i]), 0, 0, &point[i]);
      dot += v[i] * pi;
    }
    coef.push_back(spec.f.at(k));
    r.push_back(reduce(dot, spec.modulus));
  }
  return toral_sum(coef, r, spec.modulus);
}

// ---------------------------------------------------------------------------

QuenchedSampler::QuenchedSampler(SceneryModel scenery, const WalkPath& path, std::size_t n,
                                 std::vector<std::size_t> cuts)
    : scenery_(std::move(scenery)), n_(n), cuts_(std::move(cuts)) {
  if (n_ == 0 || n_ > path.size()) throw InvalidArgument("QuenchedSampler: n must be in [1, path length]");
  for (std::size_t j = 0; j < cuts_.size(); ++j)
    if (cuts_[j] > n_ || (j > 0 && cuts_[j] < cuts_[j - 1])) throw InvalidArgument("QuenchedSampler: cuts must be nondecreasing in [0, n]");
  const std::size_t d = path.dimension();
  dim_ = d;
  if (scenery_.index() != 0 && d != 2) throw InvalidArgument("QuenchedSampler: correlated sceneries are indexed by Z^2");

  const SiteCodec codec(d);
  absl::flat_hash_map<std::uint64_t, std::uint32_t> ids;
  visit_.resize(n_);
  for (std::size_t k = 0; k < n_; ++k) {
    const auto x = path.position(k);
    if (!codec.representable(x)) throw InvalidArgument("QuenchedSampler: path leaves the packable range");
    const std::uint64_t key = codec.pack(x);
    auto [it, inserted] = ids.try_emplace(key, static_cast<std::uint32_t>(keys_.size()));
    if (inserted) {
      keys_.push_back(key);
      sites_.insert(sites_.end(), x.begin(), x.end());
    }
    visit_[k] = it->second;
  }
  std::vector<std::uint32_t> counts(keys_.size(), 0);
  std::vector<std::uint32_t> touched;
  std::size_t begin = 0;
  for (std::size_t c : cuts_) {
    touched.clear();
    for (std::size_t k = begin; k < c; ++k) {
      if (counts[visit_[k]]++ == 0) touched.push_back(visit_[k]);
    }
    std::vector<std::pair<std::uint32_t, std::uint32_t>> w;
    w.reserve(touched.size());
    for (auto id : touched) {
      w.emplace_back(id, counts[id]);
      counts[id] = 0;
    }
    window_counts_.push_back(std::move(w));
    begin = c;
  }

  if (const auto* ma = std::get_if<MovingAverageSpec>(&scenery_)) {
    absl::flat_hash_map<std::uint64_t, std::uint32_t> base_ids;
    ma_terms_.resize(keys_.size());
    for (std::size_t s = 0; s < keys_.size(); ++s) {
      for (const auto& [q, a] : ma->coefficients) {
        const std::int64_t y[2] = {sites_[2 * s] - q[0], sites_[2 * s + 1] - q[1]};
        if (!codec.representable(y)) throw InvalidArgument("QuenchedSampler: dilated site out of range");
        const std::uint64_t key = codec.pack(y);
        auto [it, inserted] = base_ids.try_emplace(key, static_cast<std::uint32_t>(base_keys_.size()));
        if (inserted) base_keys_.push_back(key);
        ma_terms_[s].emplace_back(it->second, a);
      }
    }
  } else if (const auto* tor = std::get_if<ToralSpec>(&scenery_)) {
    check_toral(*tor);
    rho_ = tor->pair->rho();
    const std::uint64_t q = tor->modulus;
    const auto half = tor->f.half_support();
    for (const auto& k : half) half_coef_.push_back(tor->f.at(k));
    std::int64_t lo[2] = {0, 0}, hi[2] = {0, 0};
    for (std::size_t s = 0; s < keys_.size(); ++s)
      for (int i = 0; i < 2; ++i) {
        lo[i] = std::min(lo[i], sites_[2 * s + i]);
        hi[i] = std::max(hi[i], sites_[2 * s + i]);
      }
    // Transposed generator powers mod q over the visited coordinate ranges.
    std::vector<ModMat> tp[2];
    const IntMatrix* gens[2] = {&tor->pair->a1(), &tor->pair->a2()};
    for (int i = 0; i < 2; ++i) {
      const IntMatrix gt = gens[i]->transpose();
      const ModMat step = mod_matrix(gt, q);
      ModMat cur = mod_pow(gt, lo[i], q);
      for (std::int64_t e = lo[i]; e <= hi[i]; ++e) {
        tp[i].push_back(cur);
        cur = mod_mul(step, cur, rho_, q);
      }
    }
    dual_mod_.resize(keys_.size() * half.size() * rho_);
    for (std::size_t s = 0; s < keys_.size(); ++s) {
      // (A1^a A2^b)^T = (A2^b)^T (A1^a)^T
      const ModMat& t1 = tp[0][static_cast<std::size_t>(sites_[2 * s] - lo[0])];
      const ModMat& t2 = tp[1][static_cast<std::size_t>(sites_[2 * s + 1] - lo[1])];
      const ModMat m = mod_mul(t2, t1, rho_, q);
      for (std::size_t h = 0; h < half.size(); ++h) {
        for (std::size_t r = 0; r < rho_; ++r) {
          std::uint64_t acc = 0;
          for (std::size_t c = 0; c < rho_; ++c) {
            const std::int64_t kc = half[h][c];
            const std::uint64_t kmod = kc >= 0 ? static_cast<std::uint64_t>(kc) % q
                                                : (q - static_cast<std::uint64_t>(-kc) % q) % q;
            acc = (acc + mulmod(m[r * rho_ + c], kmod, q)) % q;
          }
          dual_mod_[(s * half.size() + h) * rho_ + r] = acc;
        }
      }
    }
  }
}

std::vector<double> QuenchedSampler::site_values(std::uint64_t x_seed) const {
  std::vector<double> v(keys_.size());
  if (const auto* iid = std::get_if<IidSpec>(&scenery_)) {
    for (std::size_t s = 0; s < keys_.size(); ++s) v[s] = iid_site_value(*iid, x_seed, keys_[s]);
  } else if (const auto* ma = std::get_if<MovingAverageSpec>(&scenery_)) {
    std::vector<double> base(base_keys_.size());
    for (std::size_t b = 0; b < base.size(); ++b) base[b] = iid_site_value(ma->base, x_seed, base_keys_[b]);
    for (std::size_t s = 0; s < keys_.size(); ++s) {
      double acc = 0.0;
      for (const auto& [id, a] : ma_terms_[s]) acc += a * base[id];
      v[s] = acc;
    }
  } else {
    const auto& tor = std::get<ToralSpec>(scenery_);
    const std::uint64_t q = tor.modulus;
    const auto p = toral_point(tor, x_seed);
    const std::size_t h = half_coef_.size();
    std::vector<std::uint64_t> r(h);
    for (std::size_t s = 0; s < keys_.size(); ++s) {
      for (std::size_t i = 0; i < h; ++i) {
        const std::uint64_t* u = &dual_mod_[(s * h + i) * rho_];
        std::uint64_t acc = 0;
        for (std::size_t c = 0; c < rho_; ++c) acc = (acc + mulmod(u[c], p[c], q)) % q;
        r[i] = acc;
      }
      v[s] = toral_sum(half_coef_, r, q);
    }
  }
  return v;
}

std::vector<double> QuenchedSampler::increments(std::span<const double> values) const {
  if (values.size() != keys_.size()) throw InvalidArgument("QuenchedSampler::increments: value count mismatch");
  std::vector<double> out;
  out.reserve(window_counts_.size());
  for (const auto& w : window_counts_) {
    double s = 0.0;
    for (const auto& [id, c] : w) s += static_cast<double>(c) * values[id];
    out.push_back(s);
  }
  return out;
}

std::vector<double> QuenchedSampler::partial_sums(std::span<const double> values, std::size_t stride) const {
  if (values.size() != keys_.size()) throw InvalidArgument("QuenchedSampler::partial_sums: value count mismatch");
  if (stride == 0) throw InvalidArgument("QuenchedSampler::partial_sums: stride must be positive");
  std::vector<double> out;
  out.reserve(n_ / stride + 2);
  double s = 0.0;
  out.push_back(0.0);
  for (std::size_t k = 0; k < n_; ++k) {
    s += values[visit_[k]];
    if ((k + 1) % stride == 0) out.push_back(s);
  }
  if (n_ % stride != 0) out.push_back(s);
  return out;
}

std::vector<double> sample_field_sum(const SceneryModel& s, const WalkPath& path, std::span<const double> t_grid,
                                     std::uint64_t x_seed) {
  const std::size_t n = path.size();
  std::vector<std::size_t> cuts;
  for (std::size_t j = 0; j < t_grid.size(); ++j) {
    const double t = t_grid[j];
    if (!(t >= 0.0 && t <= 1.0) || (j > 0 && !(t > t_grid[j - 1])))
      throw InvalidArgument("sample_field_sum: t_grid must be strictly increasing in [0, 1]");
    cuts.push_back(static_cast<std::size_t>(std::floor(static_cast<double>(n) * t)));
  }
  const QuenchedSampler sampler(s, path, n, cuts);
  const auto inc = sampler.increments(x_seed);
  std::vector<double> out(inc.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < inc.size(); ++j) out[j] = acc += inc[j];
  return out;
}

double exact_sum_variance(const SceneryModel& s, const WalkPath& path, std::size_t n, SpectralOptions opt) {
  const SpectralDensity sd = spectral_density(s, opt);
  const LocalTimeTable w = local_times(path, {0, n});
  double v = 0.0;
  for (const auto& [l, a] : sd.fourier) {
    std::vector<std::int64_t> p(path.dimension(), 0);
    if (l != Exponent{0, 0}) {
      if (path.dimension() != 2) throw InvalidArgument("exact_sum_variance: correlated sceneries need d = 2");
      p = {l[0], l[1]};
    }
    v += a * static_cast<double>(pair_count(w, w, p));
  }
  return v;
}

}  // namespace rwlab

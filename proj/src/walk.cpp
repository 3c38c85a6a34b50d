#include "rwlab/walk.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "rwlab/error.hpp"
#include "rwlab/rng.hpp"

namespace rwlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double dot(std::span<const std::int64_t> a, std::span<const double> t) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * t[i];
  return s;
}

// sin(pi x)^2 with x reduced to [-1/2, 1/2] first, which keeps zeros exact.
double sin_pi_sq(double x) {
  x -= std::round(x);
  const double s = std::sin(std::numbers::pi * x);
  return s * s;
}

}  // namespace

IncrementLaw::IncrementLaw(std::size_t dimension, std::vector<Atom> atoms)
    : dimension_(dimension), atoms_(std::move(atoms)) {
  if (dimension_ == 0) throw InvalidArgument("IncrementLaw: dimension must be positive");
  if (atoms_.empty()) throw InvalidArgument("IncrementLaw: no atoms");
  double total = 0.0;
  std::set<IntVec> seen;
  for (const auto& a : atoms_) {
    if (a.site.size() != dimension_) throw InvalidArgument("IncrementLaw: atom dimension mismatch");
    if (!(a.prob > 0.0) || a.prob > 1.0) throw InvalidArgument("IncrementLaw: probabilities must lie in (0,1]");
    if (!seen.insert(a.site).second) throw InvalidArgument("IncrementLaw: duplicate atom site");
    total += a.prob;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("IncrementLaw: probabilities do not sum to 1");
}

IncrementLaw IncrementLaw::simple(std::size_t dimension) {
  std::vector<Atom> atoms;
  const double p = 1.0 / static_cast<double>(2 * dimension);
  for (std::size_t i = 0; i < dimension; ++i) {
    for (int s : {1, -1}) {
      IntVec v(dimension, 0);
      v[i] = s;
      atoms.push_back({v, p});
    }
  }
  return IncrementLaw(dimension, std::move(atoms));
}

IncrementLaw IncrementLaw::lazy(std::size_t dimension) {
  std::vector<Atom> atoms;
  const double p = 1.0 / static_cast<double>(2 * dimension + 1);
  atoms.push_back({IntVec(dimension, 0), p});
  for (std::size_t i = 0; i < dimension; ++i) {
    for (int s : {1, -1}) {
      IntVec v(dimension, 0);
      v[i] = s;
      atoms.push_back({v, p});
    }
  }
  return IncrementLaw(dimension, std::move(atoms));
}

std::string to_string(WalkClass c) {
  switch (c) {
    case WalkClass::Recurrent: return "recurrent";
    case WalkClass::Transient: return "transient";
    case WalkClass::Deterministic: return "deterministic";
  }
  return "unknown";
}

double WalkModel::covariance_det() const {
  const std::size_t d = dimension();
  Eigen::MatrixXd s(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) s(i, j) = covariance[i * d + j];
  return s.determinant();
}

WalkModel build_walk_model(IncrementLaw law) {
  const std::size_t d = law.dimension();
  const auto& atoms = law.atoms();

  std::vector<double> mean(d, 0.0);
  for (const auto& a : atoms)
    for (std::size_t i = 0; i < d; ++i) mean[i] += a.prob * static_cast<double>(a.site[i]);
  std::vector<double> cov(d * d, 0.0);
  for (const auto& a : atoms)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        cov[i * d + j] += a.prob * (static_cast<double>(a.site[i]) - mean[i]) *
                          (static_cast<double>(a.site[j]) - mean[j]);

  std::vector<IntVec> support;
  for (const auto& a : atoms) support.push_back(a.site);
  std::vector<IntVec> differences;
  for (std::size_t i = 1; i < support.size(); ++i) {
    IntVec diff(d);
    for (std::size_t c = 0; c < d; ++c) diff[c] = support[i][c] - support[0][c];
    differences.push_back(std::move(diff));
  }

  const bool centered = std::all_of(mean.begin(), mean.end(), [](double m) { return std::abs(m) < 1e-12; });
  WalkClass cls;
  if (atoms.size() == 1) {
    cls = WalkClass::Deterministic;
  } else if (d <= 2) {
    cls = centered ? WalkClass::Recurrent : WalkClass::Transient;
  } else {
    cls = WalkClass::Transient;
  }

  WalkModel model{std::move(law), std::move(mean), std::move(cov), centered, false, false, cls, std::nullopt};
  model.aperiodic = generates_full_lattice(support, d);
  // Differences from one fixed atom generate the same lattice as all pairwise differences.
  model.strongly_aperiodic = !differences.empty() && generates_full_lattice(differences, d);
  if (d == 2 && centered && model.strongly_aperiodic) {
    const double det = model.covariance_det();
    if (det > 0.0) model.c0 = 1.0 / (std::numbers::pi * std::sqrt(det));
  }
  return model;
}

std::complex<double> characteristic_fn(const WalkModel& model, std::span<const double> t) {
  if (t.size() != model.dimension()) throw InvalidArgument("characteristic_fn: dimension mismatch");
  std::complex<double> psi{0.0, 0.0};
  for (const auto& a : model.law.atoms()) {
    const double angle = kTwoPi * dot(a.site, t);
    psi += a.prob * std::complex<double>(std::cos(angle), std::sin(angle));
  }
  return psi;
}

double phi_ratio(const WalkModel& model, std::span<const double> t) {
  if (t.size() != model.dimension()) throw InvalidArgument("phi_ratio: dimension mismatch");
  const auto& atoms = model.law.atoms();
  // 1 - |Psi|^2 = sum_{a,b} p_a p_b 2 sin^2(pi <l_a - l_b, t>)
  double numer = 0.0;
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    for (std::size_t b = a + 1; b < atoms.size(); ++b) {
      double x = 0.0;
      for (std::size_t i = 0; i < t.size(); ++i)
        x += static_cast<double>(atoms[a].site[i] - atoms[b].site[i]) * t[i];
      numer += 4.0 * atoms[a].prob * atoms[b].prob * sin_pi_sq(x);
    }
  }
  // 1 - Psi = sum p (1 - cos) - i sum p sin, with 1 - cos = 2 sin^2(theta/2)
  double re = 0.0;
  double im = 0.0;
  for (const auto& a : atoms) {
    const double x = dot(a.site, t);
    re += 2.0 * a.prob * sin_pi_sq(x);
    im += a.prob * std::sin(kTwoPi * (x - std::round(x)));
  }
  const double denom = re * re + im * im;
  if (denom < 1e-24) throw PoleError("phi_ratio: characteristic function equals 1 at t");
  return numer / denom;
}

WalkPath::WalkPath(std::shared_ptr<const WalkModel> model, std::size_t n, std::uint64_t seed,
                   std::uint64_t stream, std::vector<std::int64_t> positions)
    : model_(std::move(model)), n_(n), seed_(seed), stream_(stream), positions_(std::move(positions)) {
  if (!model_) throw InvalidArgument("WalkPath: null model");
  if (positions_.size() != n_ * model_->dimension()) throw InvalidArgument("WalkPath: size mismatch");
}

WalkPath sample_path(std::shared_ptr<const WalkModel> model, std::size_t n, std::uint64_t seed,
                     std::uint64_t stream) {
  if (!model) throw InvalidArgument("sample_path: null model");
  if (n == 0) throw InvalidArgument("sample_path: n must be at least 1");
  if (n > (std::size_t{1} << 31)) throw InvalidArgument("sample_path: n exceeds 2^31");
  const std::size_t d = model->dimension();
  const auto& atoms = model->law.atoms();
  std::vector<double> cdf(atoms.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    acc += atoms[i].prob;
    cdf[i] = acc;
  }

  std::vector<std::int64_t> pos(n * d, 0);
  const CounterStream rng(seed, stream);
  for (std::size_t k = 1; k < n; ++k) {
    const std::uint64_t step = k - 1;
    const double u = rng.uniform(step / 2, static_cast<int>(step % 2));
    std::size_t a = 0;
    while (a + 1 < atoms.size() && u >= cdf[a]) ++a;
    for (std::size_t i = 0; i < d; ++i) pos[k * d + i] = pos[(k - 1) * d + i] + atoms[a].site[i];
  }
  return WalkPath(std::move(model), n, seed, stream, std::move(pos));
}

namespace {

double tail_from_terms(const std::vector<double>& terms, std::size_t d, bool centered) {
  const std::size_t k = terms.size();
  if (k < 4) return 0.0;
  const double last = terms[k - 1] + terms[k - 2];
  if (last == 0.0) return 0.0;
  if (d >= 3 && centered) {
    // Local limit behaviour terms ~ c k^{-d/2}; average two terms to absorb parity.
    const double half = static_cast<double>(d) / 2.0;
    const double c = 0.5 * (terms[k - 1] * std::pow(static_cast<double>(k), half) +
                            terms[k - 2] * std::pow(static_cast<double>(k - 1), half));
    return c * std::pow(static_cast<double>(k) + 0.5, 1.0 - half) / (half - 1.0);
  }
  const double prev = terms[k - 3] + terms[k - 4];
  if (prev <= 0.0) return 0.0;
  const double ratio = last / prev;
  if (ratio >= 1.0) return std::numeric_limits<double>::infinity();
  return last * ratio / (1.0 - ratio);
}

}  // namespace

GreenSeries green_series(const std::shared_ptr<const WalkModel>& model, std::span<const std::int64_t> site,
                         std::size_t k_max, std::size_t m_paths, std::uint64_t seed,
                         std::size_t exact_cell_budget) {
  if (!model) throw InvalidArgument("green_series: null model");
  const std::size_t d = model->dimension();
  if (site.size() != d) throw InvalidArgument("green_series: dimension mismatch");
  const auto& atoms = model->law.atoms();
  const bool degenerate_zero = model->classification == WalkClass::Deterministic &&
                               std::all_of(atoms[0].site.begin(), atoms[0].site.end(), [](auto v) { return v == 0; });
  if (model->classification == WalkClass::Recurrent || degenerate_zero)
    throw InvalidArgument("green_series: the series diverges for recurrent walks");

  const bool at_origin = std::all_of(site.begin(), site.end(), [](auto v) { return v == 0; });
  GreenSeries out;
  out.terms.assign(k_max, 0.0);

  std::int64_t reach = 0;
  for (const auto& a : atoms)
    for (auto c : a.site) reach = std::max<std::int64_t>(reach, std::abs(c));
  const std::int64_t radius = reach * static_cast<std::int64_t>(k_max);
  const std::int64_t side = 2 * radius + 1;
  double cells = 1.0;
  for (std::size_t i = 0; i < d; ++i) cells *= static_cast<double>(side);

  if (cells <= static_cast<double>(exact_cell_budget)) {
    out.exact = true;
    const std::size_t total = static_cast<std::size_t>(cells);
    std::vector<std::size_t> stride(d);
    std::size_t s = 1;
    for (std::size_t i = d; i-- > 0;) {
      stride[i] = s;
      s *= static_cast<std::size_t>(side);
    }
    auto index_of = [&](std::span<const std::int64_t> x) -> std::ptrdiff_t {
      std::size_t idx = 0;
      for (std::size_t i = 0; i < d; ++i) {
        const std::int64_t c = x[i] + radius;
        if (c < 0 || c >= side) return -1;
        idx += static_cast<std::size_t>(c) * stride[i];
      }
      return static_cast<std::ptrdiff_t>(idx);
    };
    std::vector<std::ptrdiff_t> shift;
    for (const auto& a : atoms) {
      std::ptrdiff_t off = 0;
      for (std::size_t i = 0; i < d; ++i) off += static_cast<std::ptrdiff_t>(a.site[i]) * static_cast<std::ptrdiff_t>(stride[i]);
      shift.push_back(off);
    }
    IntVec neg(site.begin(), site.end());
    for (auto& c : neg) c = -c;
    const std::ptrdiff_t i_plus = index_of(site);
    const std::ptrdiff_t i_minus = index_of(neg);

    std::vector<double> cur(total, 0.0), next(total, 0.0);
    std::vector<std::int64_t> origin(d, 0);
    cur[static_cast<std::size_t>(index_of(origin))] = 1.0;
    std::vector<std::int64_t> x(d);
    for (std::size_t k = 1; k <= k_max; ++k) {
      std::fill(next.begin(), next.end(), 0.0);
      // Scatter from the cube of radius reach*(k-1), where all mass lives.
      const std::int64_t r = reach * static_cast<std::int64_t>(k - 1);
      std::fill(x.begin(), x.end(), -r);
      while (true) {
        const std::ptrdiff_t idx = index_of(x);
        const double v = cur[static_cast<std::size_t>(idx)];
        if (v != 0.0) {
          for (std::size_t a = 0; a < atoms.size(); ++a) next[static_cast<std::size_t>(idx + shift[a])] += atoms[a].prob * v;
        }
        std::size_t i = d;
        while (i-- > 0) {
          if (++x[i] <= r) break;
          x[i] = -r;
        }
        if (i == static_cast<std::size_t>(-1)) break;
      }
      std::swap(cur, next);
      const double pp = i_plus >= 0 ? cur[static_cast<std::size_t>(i_plus)] : 0.0;
      const double pm = i_minus >= 0 ? cur[static_cast<std::size_t>(i_minus)] : 0.0;
      out.terms[k - 1] = pp + pm;
    }
  } else {
    if (m_paths < 2) throw InvalidArgument("green_series: Monte Carlo route needs at least 2 paths");
    std::vector<double> totals(m_paths, 0.0);
    for (std::size_t p = 0; p < m_paths; ++p) {
      const WalkPath path = sample_path(model, k_max + 1, derive_seed(seed, p), 0);
      for (std::size_t k = 1; k <= k_max; ++k) {
        const auto z = path.position(k);
        bool plus = true, minus = true;
        for (std::size_t i = 0; i < d; ++i) {
          plus = plus && z[i] == site[i];
          minus = minus && z[i] == -site[i];
        }
        const double hit = (plus ? 1.0 : 0.0) + (minus ? 1.0 : 0.0);
        out.terms[k - 1] += hit / static_cast<double>(m_paths);
        totals[p] += hit;
      }
    }
    double mean = 0.0;
    for (double t : totals) mean += t;
    mean /= static_cast<double>(m_paths);
    double var = 0.0;
    for (double t : totals) var += (t - mean) * (t - mean);
    var /= static_cast<double>(m_paths - 1);
    out.std_error = std::sqrt(var / static_cast<double>(m_paths));
  }

  out.value = at_origin ? 1.0 : 0.0;
  for (double t : out.terms) out.value += t;
  out.tail_estimate = tail_from_terms(out.terms, d, model->centered);
  return out;
}

}  // namespace rwlab

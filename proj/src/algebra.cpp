#include "rwlab/algebra.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "rwlab/cumulant.hpp"
#include "rwlab/error.hpp"

namespace rwlab {

IntMatrix IntMatrix::identity(std::size_t n) {
  IntMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

IntMatrix IntMatrix::from_rows(const std::vector<std::vector<long>>& rows) {
  IntMatrix m(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size()) throw InvalidArgument("IntMatrix: rows must form a square matrix");
    for (std::size_t j = 0; j < rows.size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

IntMatrix IntMatrix::operator*(const IntMatrix& b) const {
  if (n_ != b.n_) throw InvalidArgument("IntMatrix: size mismatch");
  IntMatrix c(n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t k = 0; k < n_; ++k) {
      const mpz_class& aik = (*this)(i, k);
      if (aik == 0) continue;
      for (std::size_t j = 0; j < n_; ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

IntMatrix IntMatrix::operator+(const IntMatrix& b) const {
  if (n_ != b.n_) throw InvalidArgument("IntMatrix: size mismatch");
  IntMatrix c(n_);
  for (std::size_t i = 0; i < a_.size(); ++i) c.a_[i] = a_[i] + b.a_[i];
  return c;
}

IntMatrix IntMatrix::operator-(const IntMatrix& b) const {
  if (n_ != b.n_) throw InvalidArgument("IntMatrix: size mismatch");
  IntMatrix c(n_);
  for (std::size_t i = 0; i < a_.size(); ++i) c.a_[i] = a_[i] - b.a_[i];
  return c;
}

IntMatrix IntMatrix::transpose() const {
  IntMatrix t(n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

mpz_class IntMatrix::det() const {
  // Bareiss fraction-free elimination.
  if (n_ == 0) return 1;
  std::vector<mpz_class> m = a_;
  auto at = [&](std::size_t i, std::size_t j) -> mpz_class& { return m[i * n_ + j]; };
  mpz_class prev = 1;
  int sign = 1;
  for (std::size_t k = 0; k + 1 < n_; ++k) {
    if (at(k, k) == 0) {
      std::size_t p = k + 1;
      while (p < n_ && at(p, k) == 0) ++p;
      if (p == n_) return 0;
      for (std::size_t j = 0; j < n_; ++j) std::swap(at(k, j), at(p, j));
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n_; ++i) {
      for (std::size_t j = k + 1; j < n_; ++j) {
        at(i, j) = at(i, j) * at(k, k) - at(i, k) * at(k, j);
        mpz_divexact(at(i, j).get_mpz_t(), at(i, j).get_mpz_t(), prev.get_mpz_t());
      }
    }
    prev = at(k, k);
  }
  return sign * at(n_ - 1, n_ - 1);
}

IntMatrix IntMatrix::inverse() const {
  const mpz_class d = det();
  if (abs(d) != 1) throw InvalidArgument("IntMatrix::inverse: determinant is not +-1");
  std::vector<std::vector<mpq_class>> aug(n_, std::vector<mpq_class>(2 * n_));
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) aug[i][j] = (*this)(i, j);
    aug[i][n_ + i] = 1;
  }
  for (std::size_t c = 0; c < n_; ++c) {
    std::size_t p = c;
    while (aug[p][c] == 0) ++p;
    std::swap(aug[p], aug[c]);
    const mpq_class piv = aug[c][c];
    for (auto& v : aug[c]) v /= piv;
    for (std::size_t r = 0; r < n_; ++r) {
      if (r == c || aug[r][c] == 0) continue;
      const mpq_class f = aug[r][c];
      for (std::size_t j = 0; j < 2 * n_; ++j) aug[r][j] -= f * aug[c][j];
    }
  }
  IntMatrix inv(n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) inv(i, j) = aug[i][n_ + j].get_num();
  return inv;
}

IntMatrix IntMatrix::pow(std::int64_t e) const {
  if (e < 0) return inverse().pow(-e);
  IntMatrix result = identity(n_);
  IntMatrix base = *this;
  auto u = static_cast<std::uint64_t>(e);
  while (u) {
    if (u & 1u) result = result * base;
    u >>= 1;
    if (u) base = base * base;
  }
  return result;
}

BigVec IntMatrix::apply(const BigVec& v) const {
  if (v.size() != n_) throw InvalidArgument("IntMatrix::apply: size mismatch");
  BigVec out(n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) out[i] += (*this)(i, j) * v[j];
  return out;
}

bool IntMatrix::is_zero() const {
  return std::all_of(a_.begin(), a_.end(), [](const mpz_class& v) { return v == 0; });
}

std::vector<mpz_class> IntMatrix::charpoly() const {
  // Faddeev-LeVerrier; every division is exact over Z.
  std::vector<mpz_class> c(n_ + 1);
  c[n_] = 1;
  IntMatrix m(n_);
  for (std::size_t k = 1; k <= n_; ++k) {
    IntMatrix next = (*this) * m;
    for (std::size_t i = 0; i < n_; ++i) next(i, i) += c[n_ - k + 1];
    m = std::move(next);
    const IntMatrix am = (*this) * m;
    mpz_class tr = 0;
    for (std::size_t i = 0; i < n_; ++i) tr += am(i, i);
    mpz_class q;
    mpz_divexact_ui(q.get_mpz_t(), tr.get_mpz_t(), k);
    c[n_ - k] = -q;
  }
  return c;
}

std::string IntMatrix::to_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < n_; ++i) {
    os << (i ? ",[" : "[");
    for (std::size_t j = 0; j < n_; ++j) os << (j ? "," : "") << (*this)(i, j).get_str();
    os << ']';
  }
  os << ']';
  return os.str();
}

MatrixPair::MatrixPair(IntMatrix a1, IntMatrix a2) : a1_(std::move(a1)), a2_(std::move(a2)) {
  if (a1_.size() == 0 || a1_.size() != a2_.size()) throw InvalidArgument("MatrixPair: matrices must be square of equal size");
  if (!(a1_ * a2_ == a2_ * a1_)) throw InvalidArgument("MatrixPair: matrices do not commute");
  if (abs(a1_.det()) != 1 || abs(a2_.det()) != 1) throw InvalidArgument("MatrixPair: |det| must be 1");
}

MatrixPair::MatrixPair(const MatrixPair& other) : a1_(other.a1_), a2_(other.a2_) {
  std::lock_guard lock(other.mu_);
  pow1_ = other.pow1_;
  pow2_ = other.pow2_;
  cache_ = other.cache_;
}

const IntMatrix& MatrixPair::generator_power(int which, std::int64_t e) const {
  auto& table = which == 1 ? pow1_ : pow2_;
  const auto it = table.find(e);
  if (it != table.end()) return it->second;
  const IntMatrix& g = which == 1 ? a1_ : a2_;
  return table.emplace(e, g.pow(e)).first->second;
}

const IntMatrix& MatrixPair::power(Exponent l) const {
  std::lock_guard lock(mu_);
  const auto it = cache_.find(l);
  if (it != cache_.end()) return it->second;
  IntMatrix p = generator_power(1, l[0]) * generator_power(2, l[1]);
  return cache_.emplace(l, std::move(p)).first->second;
}

IntMatrix mat_pow_pair(const MatrixPair& pair, Exponent l) { return pair.power(l); }

// ---------------------------------------------------------------------------
// Polynomials.

namespace {

template <class T>
void trim(std::vector<T>& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

// Quotient of a by monic b over Z; throws if the division is not exact.
std::vector<mpz_class> divide_exact(std::vector<mpz_class> a, const std::vector<mpz_class>& b) {
  trim(a);
  const std::size_t db = b.size() - 1;
  if (a.size() < b.size()) throw std::logic_error("divide_exact: degree");
  std::vector<mpz_class> q(a.size() - db);
  for (std::size_t i = a.size(); i-- > db;) {
    const mpz_class coef = a[i];
    q[i - db] = coef;
    for (std::size_t j = 0; j <= db; ++j) a[i - db + j] -= coef * b[j];
  }
  trim(a);
  if (!a.empty()) throw std::logic_error("divide_exact: remainder");
  return q;
}

unsigned totient(unsigned n) {
  unsigned result = n;
  for (unsigned p = 2; p * p <= n; ++p) {
    if (n % p == 0) {
      while (n % p == 0) n /= p;
      result -= result / p;
    }
  }
  if (n > 1) result -= result / n;
  return result;
}

}  // namespace

std::vector<mpz_class> cyclotomic_polynomial(unsigned n) {
  if (n == 0) throw InvalidArgument("cyclotomic_polynomial: n must be positive");
  std::vector<mpz_class> p(n + 1);
  p[0] = -1;
  p[n] = 1;
  for (unsigned d = 1; d < n; ++d)
    if (n % d == 0) p = divide_exact(p, cyclotomic_polynomial(d));
  return p;
}

std::vector<mpq_class> poly_gcd(const std::vector<mpq_class>& a_in, const std::vector<mpq_class>& b_in) {
  std::vector<mpq_class> a = a_in, b = b_in;
  trim(a);
  trim(b);
  while (!b.empty()) {
    // a mod b
    while (a.size() >= b.size() && !a.empty()) {
      const mpq_class f = a.back() / b.back();
      const std::size_t shift = a.size() - b.size();
      for (std::size_t j = 0; j < b.size(); ++j) a[shift + j] -= f * b[j];
      trim(a);
    }
    std::swap(a, b);
  }
  if (!a.empty()) {
    const mpq_class lead = a.back();
    for (auto& v : a) v /= lead;
  }
  return a;
}

std::vector<unsigned> cyclotomic_orders_up_to_degree(std::size_t degree) {
  std::vector<unsigned> out;
  // phi(n) >= sqrt(n / 2), so n <= 2 degree^2 covers every candidate.
  const unsigned limit = static_cast<unsigned>(2 * degree * degree + 2);
  for (unsigned n = 1; n <= limit; ++n)
    if (totient(n) <= degree) out.push_back(n);
  return out;
}

PairCheckReport check_pair(const MatrixPair& pair, std::int64_t box) {
  if (box < 0) throw InvalidArgument("check_pair: box must be nonnegative");
  PairCheckReport rep;
  rep.box = box;
  rep.det1 = pair.a1().det();
  rep.det2 = pair.a2().det();
  const std::size_t rho = pair.rho();
  const auto orders = cyclotomic_orders_up_to_degree(rho);
  std::vector<std::vector<mpq_class>> cyclo;
  for (unsigned n : orders) {
    const auto p = cyclotomic_polynomial(n);
    cyclo.emplace_back(p.begin(), p.end());
  }
  for (std::int64_t a = -box; a <= box; ++a) {
    for (std::int64_t b = -box; b <= box; ++b) {
      if (a == 0 && b == 0) continue;
      PowerCheck pc;
      pc.l = {a, b};
      const auto cp = pair.power(pc.l).charpoly();
      const std::vector<mpq_class> cq(cp.begin(), cp.end());
      for (std::size_t i = 0; i < orders.size(); ++i)
        if (poly_gcd(cq, cyclo[i]).size() > 1) pc.shared_cyclotomic.push_back(orders[i]);
      pc.ok = pc.shared_cyclotomic.empty();
      if (!pc.ok) ++rep.failures;
      rep.powers.push_back(std::move(pc));
    }
  }
  rep.all_pass = rep.failures == 0;

  auto moduli = [rho](const IntMatrix& m) {
    Eigen::MatrixXd d(rho, rho);
    for (std::size_t i = 0; i < rho; ++i)
      for (std::size_t j = 0; j < rho; ++j) d(i, j) = m(i, j).get_d();
    const Eigen::VectorXcd ev = d.eigenvalues();
    std::vector<double> out;
    for (Eigen::Index i = 0; i < ev.size(); ++i) out.push_back(std::abs(ev[i]));
    std::sort(out.begin(), out.end());
    return out;
  };
  rep.moduli1 = moduli(pair.a1());
  rep.moduli2 = moduli(pair.a2());
  rep.min_distance_to_unit_circle = std::numeric_limits<double>::infinity();
  for (const auto* v : {&rep.moduli1, &rep.moduli2})
    for (double m : *v) rep.min_distance_to_unit_circle = std::min(rep.min_distance_to_unit_circle, std::abs(m - 1.0));
  rep.screen_pass = rep.min_distance_to_unit_circle > 1e-9;
  return rep;
}

// ---------------------------------------------------------------------------
// Characters.

BigVec dual_orbit(const MatrixPair& pair, std::span<const std::int64_t> k, Exponent l) {
  if (k.size() != pair.rho()) throw InvalidArgument("dual_orbit: dimension mismatch");
  return pair.power(l).transpose().apply(to_big(k));
}

namespace {

bool to_int64(const BigVec& v, IntVec& out) {
  out.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].fits_slong_p()) return false;
    out[i] = v[i].get_si();
  }
  return true;
}

void check_poly(const MatrixPair& pair, const TrigPolynomial& f) {
  if (f.dimension() != pair.rho()) throw InvalidArgument("trigonometric polynomial dimension does not match the pair");
}

}  // namespace

double toral_correlation(const MatrixPair& pair, const TrigPolynomial& f, Exponent l) {
  check_poly(pair, f);
  const IntMatrix t = pair.power(l).transpose();
  std::complex<double> s = 0.0;
  IntVec kk;
  for (const auto& [k, c] : f.coefficients()) {
    if (!to_int64(t.apply(to_big(k)), kk)) continue;
    s += c * std::conj(f.at(kk));
  }
  return s.real();
}

namespace {

/// Transported frequencies for a list of exponents, in int64 when every
/// partial sum of r of them is safe, otherwise in mpz.
struct Transported {
  std::size_t r = 0;
  std::size_t rho = 0;
  std::vector<std::complex<double>> coef;
  bool small = true;
  std::vector<std::int64_t> v;  // [i][j][c]
  std::vector<mpz_class> big;

  Transported(const MatrixPair& pair, const TrigPolynomial& f, std::span<const Exponent> ls)
      : r(ls.size()), rho(pair.rho()) {
    std::vector<IntVec> ks;
    for (const auto& [k, c] : f.coefficients()) {
      ks.push_back(k);
      coef.push_back(c);
    }
    const std::size_t s = ks.size();
    big.resize(r * s * rho);
    const mpz_class limit = mpz_class(1) << 58;
    for (std::size_t i = 0; i < r; ++i) {
      const IntMatrix t = pair.power(ls[i]).transpose();
      for (std::size_t j = 0; j < s; ++j) {
        const BigVec w = t.apply(to_big(ks[j]));
        for (std::size_t c = 0; c < rho; ++c) {
          big[(i * s + j) * rho + c] = w[c];
          if (abs(w[c]) * static_cast<unsigned long>(r + 1) >= limit) small = false;
        }
      }
    }
    if (small) {
      v.resize(big.size());
      for (std::size_t i = 0; i < big.size(); ++i) v[i] = big[i].get_si();
    }
  }
  std::size_t support() const { return coef.size(); }
};

std::complex<double> moment_dfs_small(const Transported& t, std::span<const std::size_t> slots,
                                      std::size_t depth, std::int64_t* partial, std::complex<double> prod) {
  const std::size_t s = t.support(), rho = t.rho;
  const std::size_t i = slots[depth];
  std::complex<double> total = 0.0;
  for (std::size_t j = 0; j < s; ++j) {
    const std::int64_t* w = &t.v[(i * s + j) * rho];
    if (depth + 1 == slots.size()) {
      bool zero = true;
      for (std::size_t c = 0; c < rho && zero; ++c) zero = partial[c] + w[c] == 0;
      if (zero) total += prod * t.coef[j];
    } else {
      std::int64_t next[8];
      for (std::size_t c = 0; c < rho; ++c) next[c] = partial[c] + w[c];
      total += moment_dfs_small(t, slots, depth + 1, next, prod * t.coef[j]);
    }
  }
  return total;
}

std::complex<double> moment_dfs_big(const Transported& t, std::span<const std::size_t> slots, std::size_t depth,
                                    std::vector<mpz_class>& partial, std::complex<double> prod) {
  const std::size_t s = t.support(), rho = t.rho;
  const std::size_t i = slots[depth];
  std::complex<double> total = 0.0;
  for (std::size_t j = 0; j < s; ++j) {
    for (std::size_t c = 0; c < rho; ++c) partial[c] += t.big[(i * s + j) * rho + c];
    if (depth + 1 == slots.size()) {
      if (std::all_of(partial.begin(), partial.end(), [](const mpz_class& x) { return x == 0; }))
        total += prod * t.coef[j];
    } else {
      total += moment_dfs_big(t, slots, depth + 1, partial, prod * t.coef[j]);
    }
    for (std::size_t c = 0; c < rho; ++c) partial[c] -= t.big[(i * s + j) * rho + c];
  }
  return total;
}

double subset_moment(const Transported& t, IndexMask mask) {
  std::vector<std::size_t> slots;
  for (std::size_t i = 0; i < t.r; ++i)
    if (mask >> i & 1u) slots.push_back(i);
  if (slots.empty()) return 1.0;
  if (t.rho > 8) throw InvalidArgument("exact moments support rho <= 8");
  if (t.small) {
    std::int64_t zero[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    return moment_dfs_small(t, slots, 0, zero, 1.0).real();
  }
  std::vector<mpz_class> partial(t.rho);
  return moment_dfs_big(t, slots, 0, partial, 1.0).real();
}

void check_budget(std::size_t support, std::size_t r) {
  if (std::pow(static_cast<double>(support), static_cast<double>(r)) > kMomentBudget)
    throw BudgetExceeded("exact_joint_moment: support^r exceeds 1e7");
}

}  // namespace

double exact_joint_moment(const MatrixPair& pair, const TrigPolynomial& f, std::span<const Exponent> ls) {
  check_poly(pair, f);
  check_budget(f.support_size(), ls.size());
  if (ls.empty()) return 1.0;
  const Transported t(pair, f, ls);
  return subset_moment(t, (IndexMask{1} << ls.size()) - 1);
}

double exact_joint_cumulant(const MatrixPair& pair, const TrigPolynomial& f, std::span<const Exponent> ls) {
  check_poly(pair, f);
  check_budget(f.support_size(), ls.size());
  if (ls.empty() || ls.size() > kMaxPartitionOrder) throw InvalidArgument("exact_joint_cumulant: need 1..8 exponents");
  const Transported t(pair, f, ls);
  std::vector<double> table(std::size_t{1} << ls.size(), 0.0);
  for (IndexMask m = 0; m < table.size(); ++m) table[m] = subset_moment(t, m);
  return joint_cumulant([&](IndexMask m) { return table[m]; }, ls.size());
}

CumulantSupportScan scan_cumulant4_support(const MatrixPair& pair, const TrigPolynomial& f, std::int64_t box,
                                           double zero_tol) {
  check_poly(pair, f);
  if (box < 0) throw InvalidArgument("scan_cumulant4_support: box must be nonnegative");
  const std::int64_t side = 2 * box + 1;
  std::vector<Exponent> grid;
  for (std::int64_t a = -box; a <= box; ++a)
    for (std::int64_t b = -box; b <= box; ++b) grid.push_back({a, b});
  // Transport every support frequency under every exponent of the box once.
  const Transported all(pair, f, grid);
  if (!all.small) throw BudgetExceeded("scan_cumulant4_support: box too large for the int64 path");
  const std::size_t origin = static_cast<std::size_t>(box * side + box);
  const auto parts = enumerate_partitions(4);

  CumulantSupportScan out;
  out.box = box;
  Transported local = all;
  local.r = 4;
  const std::size_t s = all.support(), rho = all.rho;
  local.v.assign(4 * s * rho, 0);
  auto load = [&](std::size_t slot, std::size_t g) {
    std::copy_n(&all.v[g * s * rho], s * rho, &local.v[slot * s * rho]);
  };
  load(0, origin);
  double best = -1.0;
  std::size_t g[4] = {origin, 0, 0, 0};
  for (g[1] = 0; g[1] < grid.size(); ++g[1]) {
    load(1, g[1]);
    for (g[2] = 0; g[2] < grid.size(); ++g[2]) {
      load(2, g[2]);
      for (g[3] = 0; g[3] < grid.size(); ++g[3]) {
        load(3, g[3]);
        double mom[16];
        for (IndexMask m = 0; m < 16; ++m) mom[m] = std::popcount(m) == 1 ? 0.0 : subset_moment(local, m);
        double c = 0.0;
        for (const auto& q : parts) {
          const std::size_t p = q.size();
          double coef = (p % 2 == 1) ? 1.0 : -1.0;
          for (std::size_t i = 2; i < p; ++i) coef *= static_cast<double>(i);
          double prod = 1.0;
          for (IndexMask b : q.blocks) prod *= mom[b];
          c += coef * prod;
        }
        ++out.tuples;
        if (std::abs(c) <= zero_tol) continue;
        ++out.nonzero;
        double spread = 0.0;
        for (int i = 0; i < 4; ++i)
          for (int j = i + 1; j < 4; ++j) {
            const double dx = static_cast<double>(grid[g[i]][0] - grid[g[j]][0]);
            const double dy = static_cast<double>(grid[g[i]][1] - grid[g[j]][1]);
            spread = std::max(spread, std::sqrt(dx * dx + dy * dy));
          }
        if (spread > best + 1e-12) {
          best = spread;
          out.extremal.clear();
        }
        if (std::abs(spread - best) <= 1e-12 && out.extremal.size() < 16)
          out.extremal.push_back({grid[g[0]], grid[g[1]], grid[g[2]], grid[g[3]]});
      }
    }
  }
  out.radius = std::max(best, 0.0);
  return out;
}

// ---------------------------------------------------------------------------
// S-unit search.

namespace {

bool annihilates(const IntMatrix& m, const BigVec& g) {
  const BigVec r = m.apply(g);
  return std::all_of(r.begin(), r.end(), [](const mpz_class& v) { return v == 0; });
}

// Exact int128 copy of a matrix when every entry is below 2^62.
bool to_i128(const IntMatrix& m, std::vector<__int128>& out) {
  const std::size_t n = m.size();
  out.resize(n * n);
  const mpz_class limit = mpz_class(1) << 62;
  for (std::size_t i = 0; i < n * n; ++i) {
    const mpz_class& v = m(i / n, i % n);
    if (abs(v) >= limit) return false;
    out[i] = v.get_si();
  }
  return true;
}

// Decides det(M) = 0 for a 3x3 int128 matrix, exactly: int128 arithmetic
// when entries are below 2^40, otherwise GMP.
bool det3_zero(const __int128* a) {
  const __int128 lim = static_cast<__int128>(1) << 40;
  bool small = true;
  for (int i = 0; i < 9; ++i) small = small && a[i] < lim && a[i] > -lim;
  if (small) {
    const __int128 d = a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
                       a[2] * (a[3] * a[7] - a[4] * a[6]);
    return d == 0;
  }
  IntMatrix m(3);
  for (int i = 0; i < 9; ++i) {
    const auto hi = static_cast<std::int64_t>(a[i] >> 32);
    const auto lo = static_cast<std::uint64_t>(a[i] & 0xffffffff);
    m(static_cast<std::size_t>(i / 3), static_cast<std::size_t>(i % 3)) = mpz_class(static_cast<long>(hi)) * (mpz_class(1) << 32) + mpz_class(static_cast<unsigned long>(lo));
  }
  return m.det() == 0;
}

}  // namespace

SUnitReport sunit_search(const MatrixPair& pair, std::int64_t gamma_box, std::int64_t l_box, bool dual,
                         std::size_t store_limit) {
  if (gamma_box < 1 || l_box < 0) throw InvalidArgument("sunit_search: boxes must be positive");
  const std::size_t rho = pair.rho();
  SUnitReport rep;
  rep.l_box = l_box;
  rep.gamma_box = gamma_box;
  rep.dual = dual;

  std::vector<Exponent> grid;
  std::vector<IntMatrix> pw;
  for (std::int64_t a = -l_box; a <= l_box; ++a)
    for (std::int64_t b = -l_box; b <= l_box; ++b) {
      grid.push_back({a, b});
      pw.push_back(dual ? pair.power({a, b}).transpose() : pair.power({a, b}));
    }
  const IntMatrix id = IntMatrix::identity(rho);

  // rho = 3 screening in int128 when the powers allow it.
  bool fast = rho == 3;
  std::vector<std::vector<__int128>> p128(grid.size());
  for (std::size_t i = 0; i < grid.size() && fast; ++i) fast = to_i128(pw[i], p128[i]);

  for (std::size_t i1 = 0; i1 < grid.size(); ++i1)
    for (std::size_t i2 = 0; i2 < grid.size(); ++i2)
      for (std::size_t i3 = 0; i3 < grid.size(); ++i3) {
        ++rep.triples_scanned;
        if (fast) {
          __int128 m[9];
          for (int e = 0; e < 9; ++e) m[e] = p128[i1][e] - p128[i2][e] + p128[i3][e] - (e % 4 == 0 ? 1 : 0);
          if (!det3_zero(m)) continue;
        }
        const IntMatrix& p1 = pw[i1];
        const IntMatrix& p2 = pw[i2];
        const IntMatrix& p3 = pw[i3];
        const IntMatrix m = p1 - p2 + p3 - id;
        if (!fast && m.det() != 0) continue;
        // Two- and three-term sub-sums; single terms are invertible images of
        // a nonzero gamma and never vanish.
        const IntMatrix sub[] = {p1 - p2, p1 + p3, p1 - id, p3 - p2, p2 + id, p3 - id,
                                 p1 - p2 + p3, p1 - p2 - id, p1 + p3 - id, p3 - p2 - id};
        bool trivial = false;
        for (const auto& s : sub) trivial = trivial || s.is_zero();
        if (trivial) continue;
        auto degenerate = [&](const BigVec& g) {
          for (const auto& s : sub)
            if (annihilates(s, g)) return true;
          return false;
        };
        BigRows rows(rho, BigVec(rho));
        for (std::size_t r = 0; r < rho; ++r)
          for (std::size_t c = 0; c < rho; ++c) rows[r][c] = m(r, c);
        const BigRows ker = integer_kernel(rows, rho);
        SUnitTriple tr;
        tr.l = {grid[i1], grid[i2], grid[i3]};
        tr.identically = m.is_zero();
        auto record = [&](BigVec g) {
          ++tr.gamma_count;
          if (rep.solutions.size() < store_limit) rep.solutions.push_back({tr.l, std::move(g)});
        };
        if (ker.size() == 1) {
          // Solutions are the nonzero multiples of a primitive vector, and a
          // sub-sum vanishes on all of them or on none.
          const BigVec& v = ker[0];
          if (degenerate(v)) continue;
          mpz_class vmax = 0;
          for (const auto& x : v) vmax = std::max(vmax, mpz_class(abs(x)));
          const mpz_class tmax = mpz_class(gamma_box) / vmax;
          for (mpz_class t = -tmax; t <= tmax; ++t) {
            if (t == 0) continue;
            BigVec g(rho);
            for (std::size_t c = 0; c < rho; ++c) g[c] = t * v[c];
            record(std::move(g));
          }
        } else if (ker.size() > 1) {
          BigVec g(rho, mpz_class(-gamma_box));
          while (true) {
            const bool nonzero = std::any_of(g.begin(), g.end(), [](const mpz_class& x) { return x != 0; });
            if (nonzero && (tr.identically || annihilates(m, g)) && !degenerate(g)) record(g);
            std::size_t c = 0;
            while (c < rho && g[c] == gamma_box) g[c++] = -gamma_box;
            if (c == rho) break;
            ++g[c];
          }
        }
        if (tr.gamma_count == 0) continue;
        rep.solution_count += tr.gamma_count;
        rep.triples.push_back(tr);
      }
  return rep;
}

}  // namespace rwlab

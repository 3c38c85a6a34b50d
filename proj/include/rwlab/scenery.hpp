#pragma once

// Random sceneries (i.i.d. on Z^d; moving averages and toral automorphism
// fields on Z^2) and their sums along a fixed walk path.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rwlab/algebra.hpp"
#include "rwlab/localtime.hpp"
#include "rwlab/trig_poly.hpp"
#include "rwlab/walk.hpp"

namespace rwlab {

enum class BaseLaw { Rademacher, Uniform, Gaussian, TruncatedGaussian };

std::string to_string(BaseLaw law);
BaseLaw base_law_from_string(const std::string& name);

/// Which piece of a truncated field a spec denotes.
enum class FieldPart { Whole, Bounded, Tail };

/// Centred unit-variance base law. `level` is the cut of TruncatedGaussian
/// (|X| <= level before standardization). A Bounded/Tail part at `cut` is
/// X 1{X <= cut} - E[.] or X 1{X > cut} - E[.], with X the whole field.
struct IidSpec {
  BaseLaw law = BaseLaw::Rademacher;
  double level = 0.0;
  FieldPart part = FieldPart::Whole;
  double cut = 0.0;

  double mean_shift() const;  ///< E[X; part]
  double variance() const;    ///< variance of the part
  double fourth_moment() const;  ///< E X^4 of the whole law
  bool bounded_values() const;
};

/// Xi_l = sum_q a_q X_{l - q} over a finite table.
struct MovingAverageSpec {
  IidSpec base;
  std::map<Exponent, double> coefficients;

  double coefficient_sum() const;
  bool degenerate() const { return coefficient_sum() == 0.0; }
  bool nonnegative() const;
};

/// X_l(x) = f(A^l x) with x drawn uniformly from the grid (Z/q)^rho / q.
struct ToralSpec {
  std::shared_ptr<const MatrixPair> pair;
  TrigPolynomial f;
  std::uint64_t modulus = (std::uint64_t{1} << 61) - 1;
};

using SceneryModel = std::variant<IidSpec, MovingAverageSpec, ToralSpec>;

std::string scenery_kind(const SceneryModel& s);

/// Fourier coefficients a_l = <T^l f, f> of the spectral density on T^2.
struct SpectralDensity {
  std::map<Exponent, double> fourier;
  std::int64_t radius = 0;  ///< sup-norm radius searched

  double evaluate(double t1, double t2) const;
  double at_zero() const;
  double abs_sum() const;
};

struct SpectralOptions {
  std::int64_t max_radius = 12;  ///< toral: give up beyond this shell
  std::int64_t closure = 3;      ///< toral: consecutive all-zero shells required
};

SpectralDensity spectral_density(const SceneryModel& s, SpectralOptions opt = {});

struct AsymptoticVariance {
  double value = 0.0;
  double tail_estimate = 0.0;  ///< transient: extrapolated series tail
  double std_error = 0.0;      ///< transient Monte Carlo route only
  bool degenerate = false;
  std::string regime;          ///< "recurrent-2d" or "transient"
};

/// Recurrent 2D walks: phi_f(0), the limit of Var(S_n) / (C0 n ln n).
/// Transient walks: sum_l a_l I(l), with I the truncated Green-type series.
AsymptoticVariance asymptotic_variance(const SceneryModel& s, const std::shared_ptr<const WalkModel>& walk,
                                       std::size_t k_max = 60, SpectralOptions opt = {});

/// (X_bounded, X_tail) with X_bounded + X_tail = X on every site.
std::pair<SceneryModel, SceneryModel> truncate_field(const SceneryModel& s, double cut);

/// Value of one i.i.d. site variable for scenery draw `x_seed`.
double iid_site_value(const IidSpec& spec, std::uint64_t x_seed, std::uint64_t site_key);

/// Mulmod helpers exposed for tests.
std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m);
bool is_probable_prime(std::uint64_t q);

/// Precomputed per-path structure for repeated scenery draws along one
/// fixed path: visited sites, windows, and scenery-specific site data.
class QuenchedSampler {
 public:
  /// `cuts` are the increasing window ends 0 < c_1 < ... <= n; window j is
  /// [c_{j-1}, c_j) with c_0 = 0.
  QuenchedSampler(SceneryModel scenery, const WalkPath& path, std::size_t n, std::vector<std::size_t> cuts);

  std::size_t n() const { return n_; }
  std::size_t site_count() const { return keys_.size(); }
  const std::vector<std::size_t>& cuts() const { return cuts_; }

  /// Site values X_{Z_k}, indexed like the distinct visited sites.
  std::vector<double> site_values(std::uint64_t x_seed) const;

  /// Window sums S_{c_j} - S_{c_{j-1}} from given site values.
  std::vector<double> increments(std::span<const double> values) const;
  std::vector<double> increments(std::uint64_t x_seed) const { return increments(site_values(x_seed)); }

  /// S_0, S_s, S_{2s}, ..., through S_n (the last entry is S_n even if s does not divide n).
  std::vector<double> partial_sums(std::span<const double> values, std::size_t stride = 1) const;

  /// Index of the distinct site visited at time k.
  std::uint32_t site_of(std::size_t k) const { return visit_[k]; }
  std::span<const std::int64_t> site(std::size_t id) const { return {&sites_[id * dim_], dim_}; }

 private:
  SceneryModel scenery_;
  std::size_t n_;
  std::size_t dim_ = 2;
  std::vector<std::size_t> cuts_;
  std::vector<std::int64_t> sites_;    // distinct sites, flat pairs
  std::vector<std::uint64_t> keys_;    // packed site keys
  std::vector<std::uint32_t> visit_;   // time -> site id
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> window_counts_;
  // Moving average: base sites and per-site (base id, coefficient) lists.
  std::vector<std::uint64_t> base_keys_;
  std::vector<std::vector<std::pair<std::uint32_t, double>>> ma_terms_;
  // Toral: per site and half-support frequency, (A^l)^T k mod q.
  std::vector<std::uint64_t> dual_mod_;
  std::vector<std::complex<double>> half_coef_;
  std::size_t rho_ = 0;
};

/// S_{floor(n t)} for each t of `t_grid` and one scenery draw.
std::vector<double> sample_field_sum(const SceneryModel& s, const WalkPath& path, std::span<const double> t_grid,
                                     std::uint64_t x_seed);

/// Exact Var_x(S_n) = sum_p a_p V_n(p) along the prefix [0, n).
double exact_sum_variance(const SceneryModel& s, const WalkPath& path, std::size_t n, SpectralOptions opt = {});

/// Evaluation point of a toral draw: uniform on (Z/q)^rho.
std::vector<std::uint64_t> toral_point(const ToralSpec& spec, std::uint64_t x_seed);

/// f(A^l p / q) by exact big-integer transport of each frequency.
double toral_value_exact(const ToralSpec& spec, std::span<const std::uint64_t> point, Exponent l);

}  // namespace rwlab

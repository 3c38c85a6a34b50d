#pragma once

// Monte Carlo experiments on walk-indexed sums: quenched FCLT suites,
// self-intersection LLN trackers, maximal inequalities, tightness moduli.

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rwlab/scenery.hpp"
#include "rwlab/stats.hpp"
#include "rwlab/walk.hpp"

namespace rwlab {

struct Tolerances {
  double ks_p_min = 0.01;
  double omega_fraction = 0.9;  ///< "a.e. omega" means at least this fraction
  double corr_max = 0.1;
  double identity_z = 4.0;
  double se_factor = 3.0;       ///< inequality violations beyond this many SEs
  double lln_lo = 0.8;          ///< band for V_n(p) / (C0 n ln n) at the top of the ladder
  double lln_hi = 1.2;
  double cross_fraction = 0.8;  ///< omegas whose cross counts must strictly decrease
  double ma_rel_tol = 0.15;     ///< relative tolerance on a pooled variance target
};

struct ExperimentConfig {
  std::string experiment = "fclt";
  IncrementLaw law = IncrementLaw::lazy(2);
  SceneryModel scenery = IidSpec{};
  std::size_t n = 1u << 14;
  std::vector<double> t_grid = {0.25, 0.5, 0.75, 1.0};
  std::size_t m_sceneries = 1000;
  std::size_t n_omegas = 20;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  bool empirical_c0 = false;
  Tolerances tol;

  // Experiment-specific parameters; unused ones keep their defaults.
  std::vector<std::size_t> n_ladder;
  std::vector<IntVec> p_set = {{0, 0}};
  std::array<double, 4> windows = {0.1, 0.4, 0.6, 0.9};
  std::vector<double> lambda_grid = {2.0, 3.0, 4.0};
  std::vector<double> delta_ladder = {0.2, 0.1, 0.05, 0.025};
  double epsilon = 0.5;
  std::size_t stride = 64;
  std::size_t k_max = 60;
  std::string g0 = "local_time";  ///< check_moricz: "linear" or "local_time"
  double g0_coef = 0.0;           ///< 0 selects the default constant
  std::vector<std::int64_t> radii = {1, 2, 3};  ///< truncation ladder
};

void validate(const ExperimentConfig& c);

/// Seeds of omega i and of scenery draw j under omega i.
std::uint64_t omega_seed(std::uint64_t master, std::size_t i);
std::uint64_t scenery_seed(std::uint64_t master, std::size_t i, std::size_t j);

/// Exact Var_x of the sum over window w along one path.
double exact_window_variance(const SpectralDensity& sd, const WalkPath& path, Window w);
/// Exact Cov_x of the sums over the windows of two local-time tables.
double exact_cross_covariance(const SpectralDensity& sd, const LocalTimeTable& t, const LocalTimeTable& u);

// ---------------------------------------------------------------------------

struct OmegaFclt {
  std::uint64_t omega_seed = 0;
  std::vector<double> ks_d, ks_p;
  std::vector<double> ks_p_exact;  ///< diagnostic: KS against the exact quenched variance
  std::vector<double> empirical_var, exact_var, target_var;
  std::vector<double> covariance;  ///< J x J increment covariance
  double max_abs_corr = 0.0;
  std::vector<double> exact_covariance;  ///< J x J, from cross counts
  double exact_max_abs_corr = 0.0;
  double var_y1 = 0.0;             ///< empirical Var Y_n(t_J)
  double var_y1_se = 0.0;
  double exact_var_y1 = 0.0;
  double identity_z = 0.0;
  bool ks_pass = false;            ///< all increments above ks_p_min
  bool corr_pass = false;
};

struct FcltReport {
  std::string mode;  ///< "normal" or "degenerate-variance"
  double c0 = 0.0;
  bool c0_empirical = false;
  double sigma2 = 0.0;
  std::size_t n = 0, m = 0;
  std::vector<double> t_grid;
  std::vector<OmegaFclt> omegas;
  std::vector<double> ks_pass_fraction;  ///< per increment
  double corr_pass_fraction = 0.0;
  double identity_pass_fraction = 0.0;
  double pooled_var_y1 = 0.0, pooled_var_y1_se = 0.0, exact_mean_var_y1 = 0.0;
  bool ks_ok = false, corr_ok = false, identity_ok = false, pass = false;
};

/// Quenched FCLT suite: per omega, m scenery draws of the increments of
/// Y_n(t) = S_{floor(n t)} / sqrt(C0 n ln n), KS against Normal(0, sigma^2 dt).
FcltReport run_fclt(const ExperimentConfig& c);

struct VarianceLadderPoint {
  std::size_t n = 0;
  double pooled_var = 0.0, se = 0.0, exact_mean = 0.0;
};

/// Pooled Var(Y_n(t_J)) along an n-ladder (used for degenerate sceneries).
std::vector<VarianceLadderPoint> variance_ladder(const ExperimentConfig& c, const std::vector<std::size_t>& n_ladder);

// ---------------------------------------------------------------------------

struct LlnRow {
  std::size_t n = 0;
  IntVec p;
  double mean = 0.0, sd = 0.0, min = 0.0, max = 0.0;
};

struct LlnTable {
  double c0 = 0.0;
  std::size_t n_omegas = 0;
  std::vector<LlnRow> rows;
  /// Per p: fraction of ladder steps on which |mean - 1| shrinks.
  std::vector<double> trend;
};

LlnTable track_variance_lln(const std::shared_ptr<const WalkModel>& walk, const std::vector<std::size_t>& n_ladder,
                            const std::vector<IntVec>& p_set, std::size_t n_omegas, std::uint64_t seed,
                            std::size_t threads = 1);

struct OrthogonalityRow {
  std::size_t n = 0;
  IntVec p;
  double mean = 0.0, sd = 0.0;
};

struct OrthogonalityTable {
  std::string normalization;  ///< "n ln n" (recurrent) or "n" (transient, report only)
  std::array<double, 4> windows{};
  std::vector<OrthogonalityRow> rows;
  std::vector<double> decreasing_fraction;  ///< per p: omegas strictly decreasing along the ladder
  std::vector<double> mean_decreasing;      ///< per p: 1 if the omega-mean strictly decreases
  std::size_t witness_checks = 0, witness_violations = 0;
};

OrthogonalityTable check_increment_orthogonality(const std::shared_ptr<const WalkModel>& walk,
                                                 const std::vector<std::size_t>& n_ladder,
                                                 std::array<double, 4> windows, const std::vector<IntVec>& p_set,
                                                 std::size_t n_omegas, std::uint64_t seed, std::size_t threads = 1);

// ---------------------------------------------------------------------------

struct MarginRow {
  double lambda = 0.0;  ///< Newman-Wright: lambda; Moricz: window start
  std::size_t k = 0;    ///< Moricz: window length
  double lhs = 0.0, rhs = 0.0, margin = 0.0, se = 0.0;
  bool violation = false;
};

struct NewmanWrightReport {
  double norm = 0.0;  ///< exact ||S_n||_2
  std::size_t n = 0, m = 0;
  std::vector<MarginRow> rows;
  double worst_margin_se = 0.0;  ///< min margin / se (margin sign if se = 0)
  bool pass = false;
};

/// P(max_k |S_k| >= lambda ||S_n||) <= 2 P(|S_n| >= (lambda - sqrt 2) ||S_n||).
/// Accepts i.i.d. sceneries and moving averages with nonnegative coefficients.
NewmanWrightReport check_newman_wright(const SceneryModel& s, const WalkPath& path, std::size_t n,
                                       const std::vector<double>& lambdas, std::size_t m, std::uint64_t seed,
                                       double se_factor = 3.0);

/// (positive part, negative part) of a moving average, both on the same base field.
std::pair<MovingAverageSpec, MovingAverageSpec> split_moving_average(const MovingAverageSpec& ma);

inline const double kMoriczCmax = std::pow(1.0 - std::pow(2.0, -0.25), -4.0);

struct MoriczReport {
  std::string status;  ///< "applicable" or "inapplicable: ..."
  std::string g0;
  double g0_coef = 0.0;
  bool superadditive = false;
  bool hypothesis_holds = false;
  double worst_hypothesis_ratio = 0.0;  ///< max E S^4 / G0^2 over all windows
  std::size_t windows_checked = 0;
  std::vector<MarginRow> rows;           ///< dyadic windows: lhs = E M^4 estimate, rhs = C_max G0^2
  double worst_relative_margin = 0.0;
  bool pass = false;
};

/// Maximal fourth moment bound on dyadic windows for sums of an i.i.d.
/// scenery along `path`. G0 is c k ("linear") or c V(omega, [b, b+k))
/// ("local_time"). The hypothesis is checked exactly on every window.
MoriczReport check_moricz(const IidSpec& s, const WalkPath& path, std::size_t n, const std::string& g0, double g0_coef,
                          std::size_t m, std::uint64_t seed, double se_factor = 3.0);

// ---------------------------------------------------------------------------

struct TightnessRow {
  double delta = 0.0;
  double prob = 0.0;         ///< at stride s
  double prob_fine = 0.0;    ///< at stride s/2
};

struct TightnessTable {
  std::size_t n = 0, stride = 0;
  double epsilon = 0.0;
  std::vector<TightnessRow> rows;  ///< averaged over omegas, deltas in decreasing order
  bool decreasing = false, decreasing_fine = false;
  double max_stride_gap = 0.0;
  bool pass = false;
};

TightnessTable estimate_tightness_modulus(const ExperimentConfig& c, std::vector<double> deltas, double eps);

/// sup over grid pairs with |i - j| <= w of |p_i - p_j|.
double grid_modulus(std::span<const double> p, std::size_t w);

// ---------------------------------------------------------------------------

struct ErdosTaylorRow {
  std::size_t n = 0;
  double mean_ratio = 0.0, q10 = 0.0, q50 = 0.0, q90 = 0.0;  ///< sup w_n / (ln n)^2
  double mean_power = 0.0;                                   ///< sup w_n / n^0.1
};

struct ErdosTaylorTable {
  std::vector<ErdosTaylorRow> rows;
  double target = 0.0;
  bool closer_at_end = false;
  bool power_decreasing = false;
};

ErdosTaylorTable track_erdos_taylor(const std::shared_ptr<const WalkModel>& walk,
                                    const std::vector<std::size_t>& n_ladder, std::size_t n_omegas,
                                    std::uint64_t seed, std::size_t threads = 1);

// ---------------------------------------------------------------------------

struct TransientReport {
  std::size_t n = 0, m = 0;
  double mc_mean = 0.0, mc_se = 0.0;  ///< ||S_n||^2 / n over omegas
  double series_value = 0.0;          ///< truncated series plus extrapolated tail
  double series_tail = 0.0, series_se = 0.0;
  double finite_n_bias = 0.0;         ///< limit minus the expected value at this n
  double combined_error = 0.0;
  double difference = 0.0;            ///< mc_mean - (series_value - finite_n_bias)
  bool within = false;
  bool ratio_at_least_one = false;
};

TransientReport transient_variance_check(const SceneryModel& s, const std::shared_ptr<const WalkModel>& walk,
                                         std::size_t n, std::size_t m, std::uint64_t seed, std::size_t k_max = 60,
                                         std::size_t threads = 1);

// ---------------------------------------------------------------------------

struct TruncationRow {
  std::int64_t radius = 0;
  std::size_t terms = 0;
  double residual_norm_sq = 0.0;  ///< ||f - f_R||_c^2, a bound on sup |phi_{f - f_R}|
  double phi0 = 0.0;              ///< phi_{f_R}(0)
};

/// Spectral control of a trigonometric polynomial by its sup-norm truncations.
std::vector<TruncationRow> truncation_ladder(const std::shared_ptr<const MatrixPair>& pair, const TrigPolynomial& f,
                                             const std::vector<std::int64_t>& radii, SpectralOptions opt = {});

}  // namespace rwlab

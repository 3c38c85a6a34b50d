#pragma once

// Lattice random walks on Z^d with finitely many increment atoms.

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rwlab/int_lattice.hpp"

namespace rwlab {

struct Atom {
  IntVec site;
  double prob = 0.0;
};

/// Finite increment law on Z^d. The constructor enforces: positive
/// probabilities summing to 1 within 1e-12, pairwise distinct sites, common
/// dimension.
class IncrementLaw {
 public:
  IncrementLaw(std::size_t dimension, std::vector<Atom> atoms);

  std::size_t dimension() const { return dimension_; }
  const std::vector<Atom>& atoms() const { return atoms_; }

  static IncrementLaw simple(std::size_t dimension);
  /// Simple walk plus a holding atom at 0, all atoms equally likely.
  static IncrementLaw lazy(std::size_t dimension);

 private:
  std::size_t dimension_;
  std::vector<Atom> atoms_;
};

enum class WalkClass { Recurrent, Transient, Deterministic };

std::string to_string(WalkClass c);

struct WalkModel {
  IncrementLaw law;
  std::vector<double> mean;
  std::vector<double> covariance;  ///< row-major d x d
  bool centered = false;
  bool aperiodic = false;           ///< support generates Z^d
  bool strongly_aperiodic = false;  ///< differences of the support generate Z^d
  WalkClass classification = WalkClass::Deterministic;
  std::optional<double> c0;  ///< (pi sqrt(det Sigma))^-1 when defined

  std::size_t dimension() const { return law.dimension(); }
  double covariance_det() const;
};

WalkModel build_walk_model(IncrementLaw law);

/// Psi(t) = sum_l nu(l) exp(2 pi i <l, t>).
std::complex<double> characteristic_fn(const WalkModel& model, std::span<const double> t);

/// (1 - |Psi|^2) / |1 - Psi|^2. Throws PoleError where Psi(t) = 1.
double phi_ratio(const WalkModel& model, std::span<const double> t);

/// One realization Z_0 = 0, ..., Z_{n-1}. Positions are stored row-major.
class WalkPath {
 public:
  WalkPath(std::shared_ptr<const WalkModel> model, std::size_t n, std::uint64_t seed,
           std::uint64_t stream, std::vector<std::int64_t> positions);

  const WalkModel& model() const { return *model_; }
  std::shared_ptr<const WalkModel> model_ptr() const { return model_; }
  std::size_t size() const { return n_; }
  std::size_t dimension() const { return model_->dimension(); }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::span<const std::int64_t> position(std::size_t k) const {
    const std::size_t d = dimension();
    return {positions_.data() + k * d, d};
  }
  std::span<const std::int64_t> positions() const { return positions_; }

 private:
  std::shared_ptr<const WalkModel> model_;
  std::size_t n_;
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::vector<std::int64_t> positions_;
};

/// n >= 1 positions drawn by inverse CDF over the atom list from the counter
/// stream (seed, stream). Regenerating with the same arguments is bit-exact.
WalkPath sample_path(std::shared_ptr<const WalkModel> model, std::size_t n, std::uint64_t seed,
                     std::uint64_t stream = 0);

struct GreenSeries {
  double value = 0.0;          ///< 1_{l=0} + sum_{k<=k_max} [P(Z_k=l) + P(Z_k=-l)]
  double tail_estimate = 0.0;  ///< extrapolated sum over k > k_max
  double std_error = 0.0;      ///< zero for the exact convolution route
  bool exact = false;
  std::vector<double> terms;   ///< terms[k-1] = P(Z_k=l) + P(Z_k=-l)
};

/// Truncated Green-type series of a transient walk, by exact k-fold
/// convolution when the reachable box has at most `exact_cell_budget` cells,
/// otherwise by Monte Carlo over `m_paths` paths.
GreenSeries green_series(const std::shared_ptr<const WalkModel>& model, std::span<const std::int64_t> site,
                         std::size_t k_max, std::size_t m_paths, std::uint64_t seed,
                         std::size_t exact_cell_budget = 4'000'000);

}  // namespace rwlab

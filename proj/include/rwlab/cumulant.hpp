#pragma once

// Moment/cumulant algebra over set partitions, sample k-statistics, and the
// r = 4 configuration classifier.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace rwlab {

/// Bit i set means index i (0-based) belongs to the set.
using IndexMask = std::uint32_t;

struct SetPartition {
  std::vector<IndexMask> blocks;  ///< ordered by smallest element

  std::size_t size() const { return blocks.size(); }
  bool has_singleton() const;
  std::string to_string() const;  ///< 1-based, e.g. {{1,2},{3},{4}}
};

constexpr std::size_t kMaxPartitionOrder = 8;

/// All partitions of {0..r-1}, 1 <= r <= 8, in lexicographic order of their
/// restricted growth strings (so the one-block partition comes first).
std::vector<SetPartition> enumerate_partitions(std::size_t r);

/// Partitions of the elements of `set`, same ordering.
std::vector<SetPartition> enumerate_partitions_of(IndexMask set);

using SubsetOracle = std::function<double(IndexMask)>;

/// Cumulant of the variables indexed by `set` from a moment oracle.
double joint_cumulant_of(const SubsetOracle& moment, IndexMask set);
double joint_cumulant(const SubsetOracle& moment, std::size_t r);

/// Inverse relation: moment of `set` from a cumulant oracle.
double moment_from_cumulants_of(const SubsetOracle& cumulant, IndexMask set);
double moments_from_cumulants(const SubsetOracle& cumulant, std::size_t r);

struct KStatistics {
  double k2 = 0.0;
  double k3 = 0.0;
  double k4 = 0.0;
};

/// Unbiased k-statistics of orders 2..4; needs n >= 4.
KStatistics k_statistics(std::span<const double> samples);

struct Cumulant4Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

/// Fourth k-statistic with a leave-one-out jackknife standard error; n >= 100.
Cumulant4Estimate univariate_cumulant4(std::span<const double> samples);

// ---------------------------------------------------------------------------
// Cluster configurations of four points of Z^2.

using Point2 = std::array<std::int64_t, 2>;
using Config4 = std::array<Point2, 4>;

/// beta_0 = 0 < beta_1 < ... with beta_{j+1} > 3 beta_j.
struct Ladder {
  std::vector<double> beta;

  void validate(std::size_t r) const;
  static Ladder standard(std::size_t r);  ///< 0, 1, 4, 13, 40, ...
};

struct ConfigClass {
  bool clustered = true;
  double beta = 0.0;        ///< clustered: the threshold beta_r
  std::size_t level = 0;    ///< separated: j, with alpha = 3 beta_j, beta = beta_{j+1}
  double alpha = 0.0;
  SetPartition partition;   ///< separated only
};

double diameter(const Config4& h);                       ///< d^r
double cluster_diameter(const Config4& h, const SetPartition& q);  ///< d^Q
double cluster_separation(const Config4& h, const SetPartition& q); ///< d_Q

/// Smallest level j, then the first partition in enumeration order, with
/// d^Q <= 3 beta_j and d_Q > beta_{j+1}; clustered with beta_r otherwise.
ConfigClass classify_config_r4(const Config4& h, const Ladder& ladder);

/// Checks the defining inequalities of the returned set verbatim.
bool config_in_class(const Config4& h, const ConfigClass& c);

/// Exhaustive scan of all ordered 4-tuples of an `side` x `side` grid.
struct ConfigScanSummary {
  std::uint64_t tuples = 0;
  std::uint64_t clustered = 0;
  std::uint64_t separated = 0;
  std::uint64_t membership_failures = 0;
  std::vector<std::uint64_t> per_level;  ///< separated counts by j
};

ConfigScanSummary scan_grid_configs(std::int64_t side, const Ladder& ladder);

}  // namespace rwlab

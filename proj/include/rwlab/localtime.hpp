#pragma once

// Exact visit counting over windows of a path: local times, pair and
// quadruple coincidence counts.

#include <absl/container/flat_hash_map.h>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "rwlab/walk.hpp"

namespace rwlab {

using Count = std::uint64_t;

/// Index interval [begin, begin + length).
struct Window {
  std::size_t begin = 0;
  std::size_t length = 0;
  std::size_t end() const { return begin + length; }
};

/// Packs a site of Z^d (d <= 4) into one 64-bit key, 64/d bits per coordinate.
class SiteCodec {
 public:
  explicit SiteCodec(std::size_t dimension);

  std::size_t dimension() const { return d_; }
  bool representable(std::span<const std::int64_t> x) const;
  /// Caller guarantees representable(x).
  std::uint64_t pack(std::span<const std::int64_t> x) const;
  void unpack(std::uint64_t key, std::span<std::int64_t> out) const;
  /// Key of x + shift, or false when the shifted site is not representable.
  bool shifted(std::uint64_t key, std::span<const std::int64_t> shift, std::uint64_t& out) const;

 private:
  std::size_t d_;
  unsigned bits_;
  std::int64_t lo_;
  std::int64_t hi_;
};

class LocalTimeTable {
 public:
  using Map = absl::flat_hash_map<std::uint64_t, Count>;

  LocalTimeTable(SiteCodec codec, Window window, Map counts);

  const SiteCodec& codec() const { return codec_; }
  const Window& window() const { return window_; }
  const Map& counts() const { return counts_; }
  std::size_t support_size() const { return counts_.size(); }
  Count total() const;
  Count at(std::span<const std::int64_t> site) const;
  Count at_key(std::uint64_t key) const {
    const auto it = counts_.find(key);
    return it == counts_.end() ? 0 : it->second;
  }
  Count max() const;
  /// Sum over sites of w(x)^power, overflow-checked.
  Count power_sum(unsigned power) const;

  /// One row per site, sorted by coordinates: x0,x1,...,count.
  void write_csv(std::ostream& os) const;

 private:
  SiteCodec codec_;
  Window window_;
  Map counts_;
};

/// Largest admissible path length for exact counting.
constexpr std::size_t kMaxCountedSteps = std::size_t{1} << 31;

LocalTimeTable local_times(const WalkPath& path, Window window);

/// #{(u,v) in I x J : Z_u - Z_v = p}.
Count pair_count(const LocalTimeTable& wi, const LocalTimeTable& wj, std::span<const std::int64_t> p);
Count pair_count(const WalkPath& path, Window i, Window j, std::span<const std::int64_t> p);

/// V_n(p) over the prefix [0, n_prefix).
Count self_intersections(const WalkPath& path, std::size_t n_prefix, std::span<const std::int64_t> p);

/// sum_x w(x) w(x+l1) w(x+l2) w(x+l3) over the prefix [0, n_prefix).
Count quadruple_count(const LocalTimeTable& w, std::span<const std::int64_t> l1, std::span<const std::int64_t> l2,
                      std::span<const std::int64_t> l3);
Count quadruple_count(const WalkPath& path, std::size_t n_prefix, std::span<const std::int64_t> l1,
                      std::span<const std::int64_t> l2, std::span<const std::int64_t> l3);

Count max_local_time(const WalkPath& path, std::size_t n_prefix);

/// max local time / (ln n)^2.
double erdos_taylor_ratio(const WalkPath& path, std::size_t n_prefix);

}  // namespace rwlab

#include "rwlab/localtime.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "rwlab/error.hpp"

namespace rwlab {

namespace {

Count checked_mul(Count a, Count b) {
  Count r;
  if (__builtin_mul_overflow(a, b, &r)) throw CountOverflow("count product exceeds 64 bits");
  return r;
}

Count checked_add(Count a, Count b) {
  Count r;
  if (__builtin_add_overflow(a, b, &r)) throw CountOverflow("count sum exceeds 64 bits");
  return r;
}

void check_window(const WalkPath& path, Window w) {
  if (w.begin > path.size() || w.length > path.size() - w.begin)
    throw InvalidArgument("window exceeds the path");
}

void check_dim(const SiteCodec& c, std::span<const std::int64_t> v) {
  if (v.size() != c.dimension()) throw InvalidArgument("displacement dimension mismatch");
}

}  // namespace

SiteCodec::SiteCodec(std::size_t dimension) : d_(dimension) {
  if (d_ == 0 || d_ > 4) throw InvalidArgument("SiteCodec: dimension must be 1..4");
  bits_ = static_cast<unsigned>(64 / d_);
  if (bits_ == 64) {
    lo_ = std::numeric_limits<std::int64_t>::min();
    hi_ = std::numeric_limits<std::int64_t>::max();
  } else {
    lo_ = -(std::int64_t{1} << (bits_ - 1));
    hi_ = (std::int64_t{1} << (bits_ - 1)) - 1;
  }
}

bool SiteCodec::representable(std::span<const std::int64_t> x) const {
  return std::all_of(x.begin(), x.end(), [&](std::int64_t c) { return c >= lo_ && c <= hi_; });
}

std::uint64_t SiteCodec::pack(std::span<const std::int64_t> x) const {
  if (bits_ == 64) return static_cast<std::uint64_t>(x[0]) ^ (std::uint64_t{1} << 63);
  std::uint64_t key = 0;
  for (std::size_t i = 0; i < d_; ++i)
    key |= static_cast<std::uint64_t>(x[i] - lo_) << (bits_ * i);
  return key;
}

void SiteCodec::unpack(std::uint64_t key, std::span<std::int64_t> out) const {
  if (bits_ == 64) {
    out[0] = static_cast<std::int64_t>(key ^ (std::uint64_t{1} << 63));
    return;
  }
  const std::uint64_t mask = (std::uint64_t{1} << bits_) - 1;
  for (std::size_t i = 0; i < d_; ++i)
    out[i] = static_cast<std::int64_t>((key >> (bits_ * i)) & mask) + lo_;
}

bool SiteCodec::shifted(std::uint64_t key, std::span<const std::int64_t> shift, std::uint64_t& out) const {
  std::int64_t buf[4];
  unpack(key, {buf, d_});
  for (std::size_t i = 0; i < d_; ++i) {
    if (__builtin_add_overflow(buf[i], shift[i], &buf[i])) return false;
    if (buf[i] < lo_ || buf[i] > hi_) return false;
  }
  out = pack({buf, d_});
  return true;
}

LocalTimeTable::LocalTimeTable(SiteCodec codec, Window window, Map counts)
    : codec_(codec), window_(window), counts_(std::move(counts)) {}

Count LocalTimeTable::total() const {
  Count s = 0;
  for (const auto& [key, c] : counts_) s += c;
  return s;
}

Count LocalTimeTable::at(std::span<const std::int64_t> site) const {
  check_dim(codec_, site);
  if (!codec_.representable(site)) return 0;
  return at_key(codec_.pack(site));
}

Count LocalTimeTable::max() const {
  Count m = 0;
  for (const auto& [key, c] : counts_) m = std::max(m, c);
  return m;
}

Count LocalTimeTable::power_sum(unsigned power) const {
  Count s = 0;
  for (const auto& [key, c] : counts_) {
    Count t = 1;
    for (unsigned i = 0; i < power; ++i) t = checked_mul(t, c);
    s = checked_add(s, t);
  }
  return s;
}

void LocalTimeTable::write_csv(std::ostream& os) const {
  const std::size_t d = codec_.dimension();
  std::vector<std::pair<std::vector<std::int64_t>, Count>> rows;
  rows.reserve(counts_.size());
  for (const auto& [key, c] : counts_) {
    std::vector<std::int64_t> x(d);
    codec_.unpack(key, x);
    rows.emplace_back(std::move(x), c);
  }
  std::sort(rows.begin(), rows.end());
  for (std::size_t i = 0; i < d; ++i) os << "site_" << i << ',';
  os << "count\n";
  for (const auto& [x, c] : rows) {
    for (auto v : x) os << v << ',';
    os << c << '\n';
  }
}

LocalTimeTable local_times(const WalkPath& path, Window window) {
  check_window(path, window);
  if (path.size() > kMaxCountedSteps) throw InvalidArgument("path longer than 2^31 steps");
  const SiteCodec codec(path.dimension());
  LocalTimeTable::Map counts;
  counts.reserve(std::min<std::size_t>(window.length, 1 << 16));
  for (std::size_t k = window.begin; k < window.end(); ++k) {
    const auto x = path.position(k);
    if (!codec.representable(x)) throw InvalidArgument("path leaves the packable coordinate range");
    ++counts[codec.pack(x)];
  }
  return LocalTimeTable(codec, window, std::move(counts));
}

Count pair_count(const LocalTimeTable& wi, const LocalTimeTable& wj, std::span<const std::int64_t> p) {
  const SiteCodec& codec = wi.codec();
  check_dim(codec, p);
  // sum_x wI(x) wJ(x - p), iterating the smaller table.
  const bool iterate_i = wi.support_size() <= wj.support_size();
  const LocalTimeTable& outer = iterate_i ? wi : wj;
  const LocalTimeTable& inner = iterate_i ? wj : wi;
  std::int64_t shift[4];
  for (std::size_t i = 0; i < p.size(); ++i) shift[i] = iterate_i ? -p[i] : p[i];
  const std::span<const std::int64_t> s(shift, p.size());
  Count total = 0;
  for (const auto& [key, c] : outer.counts()) {
    std::uint64_t other;
    if (!codec.shifted(key, s, other)) continue;
    const auto it = inner.counts().find(other);
    if (it != inner.counts().end()) total = checked_add(total, checked_mul(c, it->second));
  }
  return total;
}

Count pair_count(const WalkPath& path, Window i, Window j, std::span<const std::int64_t> p) {
  const LocalTimeTable wi = local_times(path, i);
  if (i.begin == j.begin && i.length == j.length) return pair_count(wi, wi, p);
  return pair_count(wi, local_times(path, j), p);
}

Count self_intersections(const WalkPath& path, std::size_t n_prefix, std::span<const std::int64_t> p) {
  const LocalTimeTable w = local_times(path, {0, n_prefix});
  return pair_count(w, w, p);
}

Count quadruple_count(const LocalTimeTable& w, std::span<const std::int64_t> l1, std::span<const std::int64_t> l2,
                      std::span<const std::int64_t> l3) {
  const SiteCodec& codec = w.codec();
  check_dim(codec, l1);
  check_dim(codec, l2);
  check_dim(codec, l3);
  Count total = 0;
  for (const auto& [key, c] : w.counts()) {
    Count prod = c;
    for (auto l : {l1, l2, l3}) {
      std::uint64_t other;
      const Count f = codec.shifted(key, l, other) ? w.at_key(other) : 0;
      if (f == 0) {
        prod = 0;
        break;
      }
      prod = checked_mul(prod, f);
    }
    total = checked_add(total, prod);
  }
  return total;
}

Count quadruple_count(const WalkPath& path, std::size_t n_prefix, std::span<const std::int64_t> l1,
                      std::span<const std::int64_t> l2, std::span<const std::int64_t> l3) {
  return quadruple_count(local_times(path, {0, n_prefix}), l1, l2, l3);
}

Count max_local_time(const WalkPath& path, std::size_t n_prefix) {
  return local_times(path, {0, n_prefix}).max();
}

double erdos_taylor_ratio(const WalkPath& path, std::size_t n_prefix) {
  if (n_prefix < 2) throw InvalidArgument("erdos_taylor_ratio: need at least two steps");
  const double l = std::log(static_cast<double>(n_prefix));
  return static_cast<double>(max_local_time(path, n_prefix)) / (l * l);
}

}  // namespace rwlab

#include "rwlab/cumulant.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rwlab/error.hpp"

namespace rwlab {

bool SetPartition::has_singleton() const {
  return std::any_of(blocks.begin(), blocks.end(), [](IndexMask b) { return std::popcount(b) == 1; });
}

std::string SetPartition::to_string() const {
  std::ostringstream os;
  os << '{';
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (b) os << ',';
    os << '{';
    bool first = true;
    for (int i = 0; i < 32; ++i) {
      if (blocks[b] >> i & 1u) {
        if (!first) os << ',';
        os << i + 1;
        first = false;
      }
    }
    os << '}';
  }
  os << '}';
  return os.str();
}

std::vector<SetPartition> enumerate_partitions_of(IndexMask set) {
  std::vector<int> elems;
  for (int i = 0; i < 32; ++i)
    if (set >> i & 1u) elems.push_back(i);
  const std::size_t r = elems.size();
  if (r == 0) return {SetPartition{}};
  if (r > kMaxPartitionOrder) throw InvalidArgument("enumerate_partitions: order above 8");

  std::vector<SetPartition> out;
  // Restricted growth strings a[0]=0, a[i] <= 1 + max(a[0..i-1]).
  std::vector<int> a(r, 0), mx(r, 0);
  while (true) {
    const int nb = *std::max_element(a.begin(), a.end()) + 1;
    SetPartition p;
    p.blocks.assign(static_cast<std::size_t>(nb), 0);
    for (std::size_t i = 0; i < r; ++i) p.blocks[static_cast<std::size_t>(a[i])] |= IndexMask{1} << elems[i];
    out.push_back(std::move(p));
    std::size_t i = r - 1;
    while (i > 0 && a[i] == mx[i - 1] + 1) --i;
    if (i == 0) break;
    ++a[i];
    mx[i] = std::max(mx[i - 1], a[i]);
    for (std::size_t j = i + 1; j < r; ++j) {
      a[j] = 0;
      mx[j] = mx[i];
    }
  }
  return out;
}

std::vector<SetPartition> enumerate_partitions(std::size_t r) {
  if (r == 0 || r > kMaxPartitionOrder) throw InvalidArgument("enumerate_partitions: r must be 1..8");
  return enumerate_partitions_of((IndexMask{1} << r) - 1);
}

double joint_cumulant_of(const SubsetOracle& moment, IndexMask set) {
  double total = 0.0;
  for (const auto& q : enumerate_partitions_of(set)) {
    const std::size_t p = q.size();
    double sign_fact = (p % 2 == 1) ? 1.0 : -1.0;
    for (std::size_t i = 2; i < p; ++i) sign_fact *= static_cast<double>(i);
    double prod = 1.0;
    for (IndexMask b : q.blocks) prod *= moment(b);
    total += sign_fact * prod;
  }
  return total;
}

double joint_cumulant(const SubsetOracle& moment, std::size_t r) {
  if (r == 0 || r > kMaxPartitionOrder) throw InvalidArgument("joint_cumulant: r must be 1..8");
  return joint_cumulant_of(moment, (IndexMask{1} << r) - 1);
}

double moment_from_cumulants_of(const SubsetOracle& cumulant, IndexMask set) {
  double total = 0.0;
  for (const auto& q : enumerate_partitions_of(set)) {
    double prod = 1.0;
    for (IndexMask b : q.blocks) prod *= cumulant(b);
    total += prod;
  }
  return total;
}

double moments_from_cumulants(const SubsetOracle& cumulant, std::size_t r) {
  if (r == 0 || r > kMaxPartitionOrder) throw InvalidArgument("moments_from_cumulants: r must be 1..8");
  return moment_from_cumulants_of(cumulant, (IndexMask{1} << r) - 1);
}

namespace {

// k-statistics from central power sums s2, s3, s4 (about the sample mean).
KStatistics k_from_central(double n, double s2, double s3, double s4) {
  const double m2 = s2 / n, m3 = s3 / n, m4 = s4 / n;
  KStatistics k;
  k.k2 = n * m2 / (n - 1.0);
  k.k3 = n * n * m3 / ((n - 1.0) * (n - 2.0));
  k.k4 = n * n * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2) / ((n - 1.0) * (n - 2.0) * (n - 3.0));
  return k;
}

}  // namespace

KStatistics k_statistics(std::span<const double> x) {
  if (x.size() < 4) throw InvalidArgument("k_statistics: need at least 4 samples");
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double s2 = 0.0, s3 = 0.0, s4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    const double d2 = d * d;
    s2 += d2;
    s3 += d2 * d;
    s4 += d2 * d2;
  }
  return k_from_central(n, s2, s3, s4);
}

Cumulant4Estimate univariate_cumulant4(std::span<const double> x) {
  if (x.size() < 100) throw InvalidArgument("univariate_cumulant4: need at least 100 samples");
  const std::size_t n = x.size();
  double c = 0.0;
  for (double v : x) c += v;
  c /= static_cast<double>(n);
  // Raw power sums about the full-sample mean c.
  double p1 = 0.0, p2 = 0.0, p3 = 0.0, p4 = 0.0;
  for (double v : x) {
    const double d = v - c;
    const double d2 = d * d;
    p1 += d;
    p2 += d2;
    p3 += d2 * d;
    p4 += d2 * d2;
  }
  Cumulant4Estimate out;
  out.n = n;
  out.value = k_from_central(static_cast<double>(n), p2, p3, p4).k4;

  const double m = static_cast<double>(n - 1);
  std::vector<double> loo(n);
  double loo_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - c;
    const double q1 = p1 - d, q2 = p2 - d * d, q3 = p3 - d * d * d, q4 = p4 - d * d * d * d;
    // Re-centre the reduced sums at their own mean c + e.
    const double e = q1 / m;
    const double s2 = q2 - 2 * e * q1 + m * e * e;
    const double s3 = q3 - 3 * e * q2 + 3 * e * e * q1 - m * e * e * e;
    const double s4 = q4 - 4 * e * q3 + 6 * e * e * q2 - 4 * e * e * e * q1 + m * e * e * e * e;
    loo[i] = k_from_central(m, s2, s3, s4).k4;
    loo_mean += loo[i];
  }
  loo_mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : loo) ss += (v - loo_mean) * (v - loo_mean);
  out.std_error = std::sqrt(ss * m / static_cast<double>(n));
  return out;
}

// ---------------------------------------------------------------------------

void Ladder::validate(std::size_t r) const {
  if (beta.size() != r + 1) throw InvalidArgument("Ladder: need beta_0..beta_r");
  if (beta[0] != 0.0) throw InvalidArgument("Ladder: beta_0 must be 0");
  if (!(beta[1] > 0.0)) throw InvalidArgument("Ladder: beta_1 must be positive");
  for (std::size_t j = 1; j < r; ++j)
    if (!(beta[j + 1] > 3.0 * beta[j])) throw InvalidArgument("Ladder: need beta_{j+1} > 3 beta_j");
}

Ladder Ladder::standard(std::size_t r) {
  Ladder l;
  l.beta.push_back(0.0);
  double b = 1.0;
  for (std::size_t j = 1; j <= r; ++j) {
    l.beta.push_back(b);
    b = 3.0 * b + 1.0;
  }
  return l;
}

namespace {

double dist(const Point2& a, const Point2& b) {
  const double dx = static_cast<double>(a[0] - b[0]);
  const double dy = static_cast<double>(a[1] - b[1]);
  return std::sqrt(dx * dx + dy * dy);
}

int block_of(const SetPartition& q, int i) {
  for (std::size_t b = 0; b < q.blocks.size(); ++b)
    if (q.blocks[b] >> i & 1u) return static_cast<int>(b);
  return -1;
}

constexpr int kPairA[6] = {0, 0, 0, 1, 1, 2};
constexpr int kPairB[6] = {1, 2, 3, 2, 3, 3};

struct PartitionMasks {
  SetPartition partition;
  unsigned intra = 0;  // pairs inside one block
  unsigned inter = 0;  // pairs across blocks
};

const std::vector<PartitionMasks>& separated_candidates() {
  static const std::vector<PartitionMasks> table = [] {
    std::vector<PartitionMasks> t;
    for (auto& q : enumerate_partitions(4)) {
      if (q.size() < 2) continue;
      PartitionMasks pm{q, 0, 0};
      for (int k = 0; k < 6; ++k) {
        if (block_of(q, kPairA[k]) == block_of(q, kPairB[k])) pm.intra |= 1u << k;
        else pm.inter |= 1u << k;
      }
      t.push_back(std::move(pm));
    }
    return t;
  }();
  return table;
}

struct SqLadder {
  double cluster_sq;                  // beta_r^2
  std::vector<double> alpha_sq;       // (3 beta_j)^2
  std::vector<double> beta_sq;        // beta_{j+1}^2
};

SqLadder squared(const Ladder& l) {
  SqLadder s;
  const std::size_t r = l.beta.size() - 1;
  s.cluster_sq = l.beta[r] * l.beta[r];
  for (std::size_t j = 0; j < r; ++j) {
    s.alpha_sq.push_back(9.0 * l.beta[j] * l.beta[j]);
    s.beta_sq.push_back(l.beta[j + 1] * l.beta[j + 1]);
  }
  return s;
}

// Returns level * 16 + candidate index for the first separated class, -1
// when only the clustered set applies; throws when neither does (which would
// contradict the covering statement).
int classify_sq(const std::int64_t d2[6], const SqLadder& s) {
  const auto& cands = separated_candidates();
  std::int64_t intra_max[16], inter_min[16];
  std::int64_t dmax = 0;
  for (int k = 0; k < 6; ++k) dmax = std::max(dmax, d2[k]);
  for (std::size_t c = 0; c < cands.size(); ++c) {
    std::int64_t hi = 0, lo = std::numeric_limits<std::int64_t>::max();
    for (int k = 0; k < 6; ++k) {
      if (cands[c].intra >> k & 1u) hi = std::max(hi, d2[k]);
      else lo = std::min(lo, d2[k]);
    }
    intra_max[c] = hi;
    inter_min[c] = lo;
  }
  for (std::size_t j = 0; j < s.alpha_sq.size(); ++j)
    for (std::size_t c = 0; c < cands.size(); ++c)
      if (static_cast<double>(intra_max[c]) <= s.alpha_sq[j] && static_cast<double>(inter_min[c]) > s.beta_sq[j])
        return static_cast<int>(j * 16 + c);
  if (static_cast<double>(dmax) <= s.cluster_sq) return -1;
  throw std::logic_error("classify_config_r4: configuration outside every class");
}

void pair_sq(const Config4& h, std::int64_t d2[6]) {
  for (int k = 0; k < 6; ++k) {
    const std::int64_t dx = h[kPairA[k]][0] - h[kPairB[k]][0];
    const std::int64_t dy = h[kPairA[k]][1] - h[kPairB[k]][1];
    d2[k] = dx * dx + dy * dy;
  }
}

}  // namespace

double diameter(const Config4& h) {
  double m = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) m = std::max(m, dist(h[i], h[j]));
  return m;
}

double cluster_diameter(const Config4& h, const SetPartition& q) {
  double m = 0.0;
  for (IndexMask b : q.blocks)
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j)
        if ((b >> i & 1u) && (b >> j & 1u)) m = std::max(m, dist(h[i], h[j]));
  return m;
}

double cluster_separation(const Config4& h, const SetPartition& q) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < q.blocks.size(); ++a)
    for (std::size_t b = a + 1; b < q.blocks.size(); ++b)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          if ((q.blocks[a] >> i & 1u) && (q.blocks[b] >> j & 1u)) m = std::min(m, dist(h[i], h[j]));
  return m;
}

ConfigClass classify_config_r4(const Config4& h, const Ladder& ladder) {
  ladder.validate(4);
  std::int64_t d2[6];
  pair_sq(h, d2);
  const int code = classify_sq(d2, squared(ladder));
  ConfigClass c;
  if (code < 0) {
    c.clustered = true;
    c.beta = ladder.beta[4];
    return c;
  }
  c.clustered = false;
  c.level = static_cast<std::size_t>(code / 16);
  c.alpha = 3.0 * ladder.beta[c.level];
  c.beta = ladder.beta[c.level + 1];
  c.partition = separated_candidates()[static_cast<std::size_t>(code % 16)].partition;
  return c;
}

bool config_in_class(const Config4& h, const ConfigClass& c) {
  if (c.clustered) return diameter(h) <= c.beta;
  if (c.partition.size() < 2) return false;
  return cluster_diameter(h, c.partition) <= c.alpha && cluster_separation(h, c.partition) > c.beta;
}

ConfigScanSummary scan_grid_configs(std::int64_t side, const Ladder& ladder) {
  ladder.validate(4);
  const SqLadder s = squared(ladder);
  const auto& cands = separated_candidates();
  ConfigScanSummary out;
  out.per_level.assign(4, 0);
  std::vector<std::array<int, 4>> block_ids;
  for (const auto& c : cands) {
    if (c.partition.size() < 2) throw std::logic_error("scan_grid_configs: bad candidate");
    block_ids.push_back({block_of(c.partition, 0), block_of(c.partition, 1), block_of(c.partition, 2),
                         block_of(c.partition, 3)});
  }
  const std::int64_t cells = side * side;
  std::vector<std::int64_t> sq(static_cast<std::size_t>(cells * cells));
  for (std::int64_t a = 0; a < cells; ++a)
    for (std::int64_t b = 0; b < cells; ++b) {
      const std::int64_t dx = a % side - b % side, dy = a / side - b / side;
      sq[static_cast<std::size_t>(a * cells + b)] = dx * dx + dy * dy;
    }
  auto D = [&](std::int64_t a, std::int64_t b) { return sq[static_cast<std::size_t>(a * cells + b)]; };
  std::int64_t idx[4];
  std::int64_t d2[6];
  for (idx[0] = 0; idx[0] < cells; ++idx[0])
    for (idx[1] = 0; idx[1] < cells; ++idx[1])
      for (idx[2] = 0; idx[2] < cells; ++idx[2])
        for (idx[3] = 0; idx[3] < cells; ++idx[3]) {
          for (int k = 0; k < 6; ++k) d2[k] = D(idx[kPairA[k]], idx[kPairB[k]]);
          const int code = classify_sq(d2, s);
          ++out.tuples;
          bool ok;
          if (code < 0) {
            ++out.clustered;
            ok = true;
            for (int k = 0; k < 6; ++k) ok = ok && static_cast<double>(d2[k]) <= s.cluster_sq;
          } else {
            ++out.separated;
            const std::size_t j = static_cast<std::size_t>(code / 16);
            ++out.per_level[j];
            // Re-check from the blocks themselves, not from the cached masks.
            const int* blk = block_ids[static_cast<std::size_t>(code % 16)].data();
            ok = true;
            for (int a = 0; a < 4 && ok; ++a)
              for (int b = a + 1; b < 4 && ok; ++b) {
                const double dd = static_cast<double>(D(idx[a], idx[b]));
                ok = blk[a] == blk[b] ? dd <= s.alpha_sq[j] : dd > s.beta_sq[j];
              }
          }
          if (!ok) ++out.membership_failures;
        }
  return out;
}

}  // namespace rwlab

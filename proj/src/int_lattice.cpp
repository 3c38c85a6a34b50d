#include "rwlab/int_lattice.hpp"

#include <algorithm>
#include <utility>

#include "rwlab/error.hpp"

namespace rwlab {

namespace {

// Unimodular row reduction of `rows` on the first `pivot_cols` columns.
// Returns the number of pivot rows; those come first, in echelon order.
std::size_t echelonize(BigRows& rows, std::size_t pivot_cols) {
  std::size_t rank = 0;
  for (std::size_t c = 0; c < pivot_cols && rank < rows.size(); ++c) {
    // Euclid on column c across rows [rank, end) until one nonzero remains.
    while (true) {
      std::size_t best = rows.size();
      for (std::size_t r = rank; r < rows.size(); ++r) {
        if (rows[r][c] != 0 && (best == rows.size() || abs(rows[r][c]) < abs(rows[best][c]))) best = r;
      }
      if (best == rows.size()) break;
      std::swap(rows[rank], rows[best]);
      bool done = true;
      for (std::size_t r = rank + 1; r < rows.size(); ++r) {
        if (rows[r][c] == 0) continue;
        mpz_class q;
        mpz_fdiv_q(q.get_mpz_t(), rows[r][c].get_mpz_t(), rows[rank][c].get_mpz_t());
        for (std::size_t j = 0; j < rows[r].size(); ++j) rows[r][j] -= q * rows[rank][j];
        if (rows[r][c] != 0) done = false;
      }
      if (done) break;
    }
    if (rank < rows.size() && rows[rank][c] != 0) {
      if (rows[rank][c] < 0) {
        for (auto& e : rows[rank]) e = -e;
      }
      for (std::size_t r = 0; r < rank; ++r) {
        mpz_class q;
        mpz_fdiv_q(q.get_mpz_t(), rows[r][c].get_mpz_t(), rows[rank][c].get_mpz_t());
        if (q != 0) {
          for (std::size_t j = 0; j < rows[r].size(); ++j) rows[r][j] -= q * rows[rank][j];
        }
      }
      ++rank;
    }
  }
  return rank;
}

}  // namespace

BigVec to_big(std::span<const std::int64_t> v) {
  BigVec out;
  out.reserve(v.size());
  for (auto x : v) out.emplace_back(static_cast<long>(x));
  return out;
}

BigRows hermite_normal_form(BigRows rows) {
  if (rows.empty()) return rows;
  const std::size_t cols = rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != cols) throw InvalidArgument("hermite_normal_form: ragged rows");
  }
  const std::size_t rank = echelonize(rows, cols);
  rows.resize(rank);
  return rows;
}

bool generates_full_lattice(std::span<const IntVec> generators, std::size_t dim) {
  BigRows rows;
  for (const auto& g : generators) {
    if (g.size() != dim) throw InvalidArgument("generates_full_lattice: dimension mismatch");
    rows.push_back(to_big(g));
  }
  const BigRows h = hermite_normal_form(std::move(rows));
  if (h.size() != dim) return false;
  for (std::size_t i = 0; i < dim; ++i) {
    if (h[i][i] != 1) return false;
  }
  return true;
}

BigRows integer_kernel(const BigRows& m, std::size_t cols) {
  // Rows of [M^T | I]; reduction on the M^T block leaves kernel vectors in
  // the identity block of the rows that become zero.
  const std::size_t nrows = m.size();
  BigRows aug(cols, BigVec(nrows + cols, 0));
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < nrows; ++i) {
      if (m[i].size() != cols) throw InvalidArgument("integer_kernel: ragged matrix");
      aug[j][i] = m[i][j];
    }
    aug[j][nrows + j] = 1;
  }
  const std::size_t rank = echelonize(aug, nrows);
  BigRows kernel;
  for (std::size_t r = rank; r < aug.size(); ++r) {
    kernel.emplace_back(aug[r].begin() + static_cast<std::ptrdiff_t>(nrows), aug[r].end());
  }
  return kernel;
}

}  // namespace rwlab

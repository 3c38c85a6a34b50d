#pragma once

// Exact integer-lattice utilities shared by the walk and algebra modules.

#include <gmpxx.h>

#include <cstdint>
#include <span>
#include <vector>

namespace rwlab {

using IntVec = std::vector<std::int64_t>;
using BigVec = std::vector<mpz_class>;
using BigRows = std::vector<BigVec>;

/// Row-style Hermite normal form of the lattice spanned by `rows`. Zero rows
/// are dropped; pivots are positive and entries above a pivot are reduced
/// into [0, pivot).
BigRows hermite_normal_form(BigRows rows);

/// True when the integer combinations of `generators` are all of Z^dim.
bool generates_full_lattice(std::span<const IntVec> generators, std::size_t dim);

/// Basis of the integer kernel {x in Z^cols : M x = 0} of the row-major
/// matrix `m` (rows x cols).
BigRows integer_kernel(const BigRows& m, std::size_t cols);

BigVec to_big(std::span<const std::int64_t> v);

}  // namespace rwlab

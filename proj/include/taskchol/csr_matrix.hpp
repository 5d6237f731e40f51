#pragma once

/// \file csr_matrix.hpp
/// \brief Scalar compressed-sparse-row matrix, symmetric permutation and
///        upper-triangle extraction.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace taskchol {

using index_t = std::int32_t;
using offset_t = std::int64_t;

/// CSR storage with sorted column indices per row. Houses both the input
/// matrix A and the factor U; the pattern is immutable after construction,
/// only `values` may be rewritten in place.
struct CsrMatrix {
  index_t nrows = 0;
  index_t ncols = 0;
  std::vector<offset_t> row_ptr;  // length nrows+1, row_ptr[0] == 0
  std::vector<index_t> col_idx;   // strictly increasing within each row
  std::vector<double> values;     // aligned with col_idx

  offset_t nnz() const { return static_cast<offset_t>(col_idx.size()); }

  offset_t row_begin(index_t i) const { return row_ptr[i]; }
  offset_t row_end(index_t i) const { return row_ptr[i + 1]; }

  /// Offset of entry (i, j), or -1 when (i, j) is not in the pattern.
  offset_t find(index_t i, index_t j) const {
    const auto first = col_idx.begin() + row_ptr[i];
    const auto last = col_idx.begin() + row_ptr[i + 1];
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return -1;
    return static_cast<offset_t>(it - col_idx.begin());
  }

  bool has_entry(index_t i, index_t j) const { return find(i, j) >= 0; }

  double at(index_t i, index_t j) const {
    const offset_t p = find(i, j);
    return p < 0 ? 0.0 : values[p];
  }
};

/// Validates the CSR invariants; throws std::invalid_argument on violation.
inline void validate(const CsrMatrix& m) {
  if (m.nrows < 0 || m.ncols < 0)
    throw std::invalid_argument("csr: negative dimension");
  if (m.row_ptr.size() != static_cast<std::size_t>(m.nrows) + 1)
    throw std::invalid_argument("csr: row_ptr length mismatch");
  if (m.row_ptr.front() != 0)
    throw std::invalid_argument("csr: row_ptr[0] != 0");
  if (m.row_ptr.back() != m.nnz() ||
      m.col_idx.size() != m.values.size())
    throw std::invalid_argument("csr: array length mismatch");
  for (index_t i = 0; i < m.nrows; ++i) {
    if (m.row_ptr[i] > m.row_ptr[i + 1])
      throw std::invalid_argument("csr: row_ptr not non-decreasing");
    for (offset_t p = m.row_ptr[i]; p < m.row_ptr[i + 1]; ++p) {
      if (m.col_idx[p] < 0 || m.col_idx[p] >= m.ncols)
        throw std::invalid_argument("csr: column index out of range");
      if (p > m.row_ptr[i] && m.col_idx[p - 1] >= m.col_idx[p])
        throw std::invalid_argument("csr: columns not strictly increasing in row " +
                                    std::to_string(i));
    }
  }
}

/// Builds a CSR matrix from unsorted (i, j, v) triplets; duplicates summed.
inline CsrMatrix csr_from_triplets(index_t nrows, index_t ncols,
                                   std::vector<index_t> ti,
                                   std::vector<index_t> tj,
                                   std::vector<double> tv) {
  const std::size_t nt = ti.size();
  std::vector<offset_t> bucket(static_cast<std::size_t>(nrows) + 1, 0);
  for (std::size_t e = 0; e < nt; ++e) bucket[ti[e] + 1]++;
  std::partial_sum(bucket.begin(), bucket.end(), bucket.begin());

  std::vector<offset_t> cursor(bucket.begin(), bucket.end() - 1);
  std::vector<index_t> cols(nt);
  std::vector<double> vals(nt);
  for (std::size_t e = 0; e < nt; ++e) {
    const offset_t p = cursor[ti[e]]++;
    cols[p] = tj[e];
    vals[p] = tv[e];
  }

  // Sort each row and fold duplicates.
  CsrMatrix m;
  m.nrows = nrows;
  m.ncols = ncols;
  m.row_ptr.assign(static_cast<std::size_t>(nrows) + 1, 0);
  m.col_idx.reserve(nt);
  m.values.reserve(nt);
  std::vector<offset_t> order;
  for (index_t i = 0; i < nrows; ++i) {
    const offset_t b = bucket[i], e = bucket[i + 1];
    order.resize(e - b);
    std::iota(order.begin(), order.end(), b);
    std::sort(order.begin(), order.end(),
              [&](offset_t x, offset_t y) { return cols[x] < cols[y]; });
    const offset_t row_start = static_cast<offset_t>(m.col_idx.size());
    for (const offset_t q : order) {
      const index_t c = cols[q];
      if (static_cast<offset_t>(m.col_idx.size()) > row_start &&
          m.col_idx.back() == c) {
        m.values.back() += vals[q];
      } else {
        m.col_idx.push_back(c);
        m.values.push_back(vals[q]);
      }
    }
    m.row_ptr[i + 1] = static_cast<offset_t>(m.col_idx.size());
  }
  return m;
}

/// perm[old] = new and iperm[new] = old, mutually inverse on [0, n).
struct Permutation {
  std::vector<index_t> perm;
  std::vector<index_t> iperm;

  index_t size() const { return static_cast<index_t>(perm.size()); }

  static Permutation identity(index_t n) {
    Permutation p;
    p.perm.resize(n);
    p.iperm.resize(n);
    std::iota(p.perm.begin(), p.perm.end(), 0);
    std::iota(p.iperm.begin(), p.iperm.end(), 0);
    return p;
  }

  /// Builds from the new-index-of-old array; throws if it is not a bijection.
  static Permutation from_perm(std::vector<index_t> perm_of_old) {
    const index_t n = static_cast<index_t>(perm_of_old.size());
    Permutation p;
    p.perm = std::move(perm_of_old);
    p.iperm.assign(n, -1);
    for (index_t i = 0; i < n; ++i) {
      const index_t q = p.perm[i];
      if (q < 0 || q >= n)
        throw std::invalid_argument("permutation: index out of range");
      if (p.iperm[q] != -1)
        throw std::invalid_argument("permutation: not a bijection");
      p.iperm[q] = i;
    }
    return p;
  }
};

/// Returns P^T A P: entry (i, j) of A moves to (perm[i], perm[j]).
inline CsrMatrix permute_symmetric(const CsrMatrix& a, const Permutation& p) {
  if (a.nrows != a.ncols)
    throw std::invalid_argument("permute_symmetric: matrix not square");
  if (p.size() != a.nrows)
    throw std::invalid_argument("permute_symmetric: permutation size mismatch");
  const index_t n = a.nrows;
  CsrMatrix b;
  b.nrows = n;
  b.ncols = n;
  b.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  for (index_t i = 0; i < n; ++i)
    b.row_ptr[p.perm[i] + 1] = a.row_end(i) - a.row_begin(i);
  std::partial_sum(b.row_ptr.begin(), b.row_ptr.end(), b.row_ptr.begin());
  b.col_idx.resize(a.nnz());
  b.values.resize(a.nnz());

  std::vector<std::pair<index_t, double>> row;
  for (index_t r = 0; r < n; ++r) {
    const index_t old_row = p.iperm[r];
    row.clear();
    for (offset_t q = a.row_begin(old_row); q < a.row_end(old_row); ++q)
      row.emplace_back(p.perm[a.col_idx[q]], a.values[q]);
    std::sort(row.begin(), row.end());
    offset_t out = b.row_ptr[r];
    for (const auto& [c, v] : row) {
      b.col_idx[out] = c;
      b.values[out] = v;
      ++out;
    }
  }
  return b;
}

/// Keeps entries with column >= row. Every row must retain its diagonal
/// entry; a structurally missing diagonal cannot be factored.
inline CsrMatrix extract_upper(const CsrMatrix& a) {
  if (a.nrows != a.ncols)
    throw std::invalid_argument("extract_upper: matrix not square");
  CsrMatrix u;
  u.nrows = a.nrows;
  u.ncols = a.ncols;
  u.row_ptr.assign(static_cast<std::size_t>(a.nrows) + 1, 0);
  for (index_t i = 0; i < a.nrows; ++i) {
    bool diag = false;
    for (offset_t q = a.row_begin(i); q < a.row_end(i); ++q) {
      const index_t c = a.col_idx[q];
      if (c < i) continue;
      if (c == i) diag = true;
      u.col_idx.push_back(c);
      u.values.push_back(a.values[q]);
    }
    if (!diag)
      throw std::invalid_argument("extract_upper: missing diagonal entry in row " +
                                  std::to_string(i));
    u.row_ptr[i + 1] = static_cast<offset_t>(u.col_idx.size());
  }
  return u;
}

/// Number of entries with column >= row (diagonal included where present).
inline offset_t count_upper(const CsrMatrix& a) {
  offset_t c = 0;
  for (index_t i = 0; i < a.nrows; ++i)
    for (offset_t q = a.row_begin(i); q < a.row_end(i); ++q)
      if (a.col_idx[q] >= i) ++c;
  return c;
}

inline bool same_pattern(const CsrMatrix& a, const CsrMatrix& b) {
  return a.nrows == b.nrows && a.ncols == b.ncols && a.row_ptr == b.row_ptr &&
         a.col_idx == b.col_idx;
}

}  // namespace taskchol

#pragma once

/// \file symbolic.hpp
/// \brief Level(k) fill pattern of the upper factor.
///
/// An entry (i, j), i < j, has fill level <= k exactly when the adjacency
/// graph contains a path from i to j of at most k+1 edges whose interior
/// vertices are all numbered below i. levelk_pattern_bfs enumerates those
/// targets with a depth-bounded BFS per source row; levelk_pattern_oracle
/// recomputes the same set with the dense elimination recurrence
/// lev(i,j) = min(lev(i,j), lev(p,i) + lev(p,j) + 1) and exists as an
/// independent cross-check for small problems.
///
/// The per-source searches are independent of each other, so the row loop
/// is the natural parallelization seam (per-source BFS plus a prefix-sum
/// assembly of the row pointers). The implementation here is sequential.

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "taskchol/csr_matrix.hpp"

namespace taskchol {

/// Upper-triangular fill pattern (diagonal always present). Values in
/// `pattern` are unused and set to 1.0. `nnz_triu_input` records the
/// upper-triangle count of the matrix the pattern was computed from.
struct FillPattern {
  CsrMatrix pattern;
  index_t level_cap = 0;
  offset_t nnz_triu_input = 0;
};

struct FillStats {
  offset_t nnz_u = 0;
  double fill_ratio = 0.0;
};

inline FillStats fill_stats(const FillPattern& fp) {
  FillStats s;
  s.nnz_u = fp.pattern.nnz();
  s.fill_ratio = fp.nnz_triu_input > 0
                     ? static_cast<double>(s.nnz_u) /
                           static_cast<double>(fp.nnz_triu_input)
                     : 0.0;
  return s;
}

/// Level(k) pattern by per-row BFS on the adjacency graph of the permuted
/// matrix. The search from source i walks only through vertices < i and
/// records every vertex > i reached within k+1 edges. A vertex may be
/// revisited when reached again with more remaining depth: a shorter
/// prefix can enable a longer suffix.
inline FillPattern levelk_pattern_bfs(const CsrMatrix& a_permuted, index_t k) {
  if (a_permuted.nrows != a_permuted.ncols)
    throw std::invalid_argument("levelk_pattern_bfs: matrix not square");
  const index_t n = a_permuted.nrows;

  FillPattern fp;
  fp.level_cap = k;
  fp.nnz_triu_input = count_upper(a_permuted);

  CsrMatrix& u = fp.pattern;
  u.nrows = n;
  u.ncols = n;
  u.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);

  std::vector<index_t> best_rem(n, -1);  // per-source stamp-free via reset list
  std::vector<char> recorded(n, 0);
  std::vector<index_t> touched, targets;
  std::vector<std::pair<index_t, index_t>> queue;  // (vertex, remaining edges)

  // Levels never exceed n, so a huge k degrades to the complete fill.
  const index_t depth_cap = std::min<index_t>(k, n) + 1;

  std::vector<std::vector<index_t>> rows(n);
  for (index_t i = 0; i < n; ++i) {
    targets.clear();
    touched.clear();
    queue.clear();
    queue.emplace_back(i, depth_cap);
    std::size_t head = 0;
    while (head < queue.size()) {
      const auto [v, rem] = queue[head++];
      const index_t rem_next = rem - 1;
      for (offset_t q = a_permuted.row_begin(v); q < a_permuted.row_end(v);
           ++q) {
        const index_t w = a_permuted.col_idx[q];
        if (w > i) {
          if (!recorded[w]) {
            recorded[w] = 1;
            targets.push_back(w);
          }
        } else if (w < i && rem_next >= 1 && best_rem[w] < rem_next) {
          if (best_rem[w] < 0) touched.push_back(w);
          best_rem[w] = rem_next;
          queue.emplace_back(w, rem_next);
        }
      }
    }
    std::sort(targets.begin(), targets.end());
    auto& row = rows[i];
    row.reserve(targets.size() + 1);
    row.push_back(i);  // diagonal
    row.insert(row.end(), targets.begin(), targets.end());
    for (const index_t w : touched) best_rem[w] = -1;
    for (const index_t w : targets) recorded[w] = 0;
  }

  for (index_t i = 0; i < n; ++i)
    u.row_ptr[i + 1] = u.row_ptr[i] + static_cast<offset_t>(rows[i].size());
  u.col_idx.reserve(u.row_ptr[n]);
  for (index_t i = 0; i < n; ++i)
    u.col_idx.insert(u.col_idx.end(), rows[i].begin(), rows[i].end());
  u.values.assign(u.col_idx.size(), 1.0);
  return fp;
}

/// Dense dynamic-programming reference for the same pattern. Quadratic
/// memory in n; callers keep n small.
inline FillPattern levelk_pattern_oracle(const CsrMatrix& a_permuted,
                                         index_t k) {
  if (a_permuted.nrows != a_permuted.ncols)
    throw std::invalid_argument("levelk_pattern_oracle: matrix not square");
  const index_t n = a_permuted.nrows;
  constexpr index_t kInf = std::numeric_limits<index_t>::max() / 4;

  std::vector<index_t> lev(static_cast<std::size_t>(n) * n, kInf);
  auto at = [&](index_t i, index_t j) -> index_t& {
    return lev[static_cast<std::size_t>(i) * n + j];
  };
  for (index_t i = 0; i < n; ++i) {
    at(i, i) = 0;
    for (offset_t q = a_permuted.row_begin(i); q < a_permuted.row_end(i); ++q)
      at(i, a_permuted.col_idx[q]) = 0;
  }

  std::vector<index_t> active;
  for (index_t p = 0; p < n; ++p) {
    active.clear();
    for (index_t i = p + 1; i < n; ++i)
      if (at(p, i) < kInf) active.push_back(i);
    for (const index_t i : active)
      for (const index_t j : active) {
        const index_t v = at(p, i) + at(p, j) + 1;
        if (v < at(i, j)) at(i, j) = v;
      }
  }

  FillPattern fp;
  fp.level_cap = k;
  fp.nnz_triu_input = count_upper(a_permuted);
  CsrMatrix& u = fp.pattern;
  u.nrows = n;
  u.ncols = n;
  u.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  for (index_t i = 0; i < n; ++i) {
    for (index_t j = i; j < n; ++j)
      if (i == j || at(i, j) <= k) u.col_idx.push_back(j);
    u.row_ptr[i + 1] = static_cast<offset_t>(u.col_idx.size());
  }
  u.values.assign(u.col_idx.size(), 1.0);
  return fp;
}

}  // namespace taskchol

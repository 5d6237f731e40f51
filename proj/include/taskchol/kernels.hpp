#pragma once

/// \file kernels.hpp
/// \brief Incomplete block kernels: Chol, Trsm, Herk, Gemm.
///
/// All four mutate factor values in place through views. The fill pattern
/// is fixed by the symbolic phase; an update whose target coordinate is
/// not in the pattern is dropped. Update loops run in ascending pivot and
/// column order so that the by-blocks execution accumulates each
/// coordinate in the same order as the serial scalar factorization.

#include <cmath>
#include <stdexcept>
#include <string>

#include "taskchol/block_layout.hpp"

namespace taskchol {

/// Non-positive pivot encountered; carries the offending global row.
class BreakdownError : public std::runtime_error {
 public:
  BreakdownError(index_t row, double pivot)
      : std::runtime_error("factorization breakdown at row " +
                           std::to_string(row) + ": pivot " +
                           std::to_string(pivot) + " is not positive"),
        row_(row),
        pivot_(pivot) {}

  index_t row() const { return row_; }
  double pivot() const { return pivot_; }

 private:
  index_t row_;
  double pivot_;
};

/// Right-looking scalar incomplete Cholesky restricted to a diagonal
/// block: A_pp := Chol(A_pp) on the pattern.
inline void chol_block(const MatrixView& app) {
  CsrMatrix& u = *app.base;
  for (index_t r = 0; r < app.nrows; ++r) {
    const index_t g = app.row_begin + r;
    const auto [rb, re] = app.row_spans[r];
    // upper factor with full diagonal: the in-block slice starts at (g, g)
    if (rb == re || u.col_idx[rb] != g)
      throw std::invalid_argument("chol_block: missing diagonal entry in row " +
                                  std::to_string(g));
    const double piv = u.values[rb];
    if (!(piv > 0.0)) throw BreakdownError(g, piv);
    const double d = std::sqrt(piv);
    u.values[rb] = d;
    for (offset_t q = rb + 1; q < re; ++q) u.values[q] /= d;

    for (offset_t q1 = rb + 1; q1 < re; ++q1) {
      const index_t c1 = u.col_idx[q1];
      const double v1 = u.values[q1];
      const auto [tb, te] = app.row_spans[c1 - app.row_begin];
      offset_t t = tb;
      for (offset_t q2 = q1; q2 < re; ++q2) {
        const index_t c2 = u.col_idx[q2];
        while (t < te && u.col_idx[t] < c2) ++t;
        if (t < te && u.col_idx[t] == c2) u.values[t] -= v1 * u.values[q2];
      }
    }
  }
}

/// Solves U_pp^T X = A_pj on the pattern, overwriting A_pj with X.
/// Row-by-row right-looking form: once row r of X is final, its
/// contribution is pushed to every later row coupled through U_pp.
inline void trsm_block(const MatrixView& app, const MatrixView& apj) {
  CsrMatrix& u = *app.base;
  for (index_t r = 0; r < app.nrows; ++r) {
    const auto [db, de] = app.row_spans[r];
    const double d = u.values[db];  // diagonal (r, r); chol_block ran first
    const auto [jb, je] = apj.row_spans[r];
    for (offset_t q = jb; q < je; ++q) u.values[q] /= d;

    for (offset_t q1 = db + 1; q1 < de; ++q1) {
      const index_t rr = u.col_idx[q1];  // later row coupled via (g, rr)
      const double v1 = u.values[q1];
      const auto [tb, te] = apj.row_spans[rr - apj.row_begin];
      offset_t t = tb;
      for (offset_t q2 = jb; q2 < je; ++q2) {
        const index_t c = u.col_idx[q2];
        while (t < te && u.col_idx[t] < c) ++t;
        if (t < te && u.col_idx[t] == c) u.values[t] -= v1 * u.values[q2];
      }
    }
  }
}

/// A_jj := A_jj - A_pj^T A_pj on the pattern of the diagonal block ajj.
inline void herk_block(const MatrixView& apj, const MatrixView& ajj) {
  CsrMatrix& u = *apj.base;
  for (index_t r = 0; r < apj.nrows; ++r) {
    const auto [jb, je] = apj.row_spans[r];
    for (offset_t q1 = jb; q1 < je; ++q1) {
      const index_t c1 = u.col_idx[q1];
      const double v1 = u.values[q1];
      const auto [tb, te] = ajj.row_spans[c1 - ajj.row_begin];
      offset_t t = tb;
      for (offset_t q2 = q1; q2 < je; ++q2) {
        const index_t c2 = u.col_idx[q2];
        while (t < te && u.col_idx[t] < c2) ++t;
        if (t < te && u.col_idx[t] == c2) u.values[t] -= v1 * u.values[q2];
      }
    }
  }
}

/// A_ij := A_ij - A_pi^T A_pj on the pattern of the rectangular block aij.
inline void gemm_block(const MatrixView& api, const MatrixView& apj,
                       const MatrixView& aij) {
  CsrMatrix& u = *api.base;
  for (index_t r = 0; r < api.nrows; ++r) {
    const auto [ib, ie] = api.row_spans[r];
    const auto [jb, je] = apj.row_spans[r];
    for (offset_t q1 = ib; q1 < ie; ++q1) {
      const index_t c1 = u.col_idx[q1];
      const double v1 = u.values[q1];
      const auto [tb, te] = aij.row_spans[c1 - aij.row_begin];
      offset_t t = tb;
      for (offset_t q2 = jb; q2 < je; ++q2) {
        const index_t c2 = u.col_idx[q2];
        while (t < te && u.col_idx[t] < c2) ++t;
        if (t < te && u.col_idx[t] == c2) u.values[t] -= v1 * u.values[q2];
      }
    }
  }
}

}  // namespace taskchol

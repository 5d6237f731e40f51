#pragma once

/// \file block_layout.hpp
/// \brief 2D sparse partitioned-block layout over a base CSR factor.
///
/// A block is a lightweight rectangular view: it copies no values, only
/// per-row offset pairs delimiting the slice of each base row that falls
/// inside the view's column range. The block matrix itself is a CSR of
/// such views over the range partition, holding one future slot per block
/// for the task generator.

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "taskchol/csr_matrix.hpp"
#include "taskchol/ordering.hpp"
#include "taskchol/scheduler.hpp"

namespace taskchol {

/// Offsets into the base col_idx/values arrays for one view row.
struct CrsRowView {
  index_t local_row = 0;
  offset_t begin = 0;
  offset_t end = 0;

  offset_t size() const { return end - begin; }
};

/// Rectangular region [row_begin, row_begin+nrows) x [col_begin,
/// col_begin+ncols) of the base matrix, with precomputed row slices.
struct MatrixView {
  CsrMatrix* base = nullptr;
  index_t row_begin = 0;
  index_t col_begin = 0;
  index_t nrows = 0;
  index_t ncols = 0;
  std::vector<std::pair<offset_t, offset_t>> row_spans;  // one per view row

  CrsRowView row_view(index_t local_row) const {
    if (local_row < 0 || local_row >= nrows)
      throw std::out_of_range("row_view: local row out of range");
    const auto [b, e] = row_spans[local_row];
    return {local_row, b, e};
  }

  /// Offset of (global_row, global_col) inside this view, -1 if absent.
  offset_t find(index_t global_row, index_t global_col) const {
    const auto [b, e] = row_spans[global_row - row_begin];
    const auto first = base->col_idx.begin() + b;
    const auto last = base->col_idx.begin() + e;
    const auto it = std::lower_bound(first, last, global_col);
    if (it == last || *it != global_col) return -1;
    return static_cast<offset_t>(it - base->col_idx.begin());
  }

  offset_t entry_count() const {
    offset_t c = 0;
    for (const auto& [b, e] : row_spans) c += e - b;
    return c;
  }
};

/// A view plus the future of the last task writing the block.
struct TaskView {
  MatrixView view;
  Future future;  // empty until the generator records a writer
};

/// Upper block triangle: block (i, j), i <= j, exists iff the factor
/// pattern has at least one entry in rows ranges[i] x columns ranges[j].
struct BlockMatrix {
  index_t m = 0;  // block-row (= block-column) count
  RangeList ranges;
  std::vector<offset_t> brow_ptr;
  std::vector<index_t> bcol_idx;  // sorted within each block row
  std::vector<TaskView> blocks;

  offset_t block_count() const { return static_cast<offset_t>(blocks.size()); }

  /// Index into `blocks` for block (i, j), or -1 when absent.
  offset_t find_block(index_t i, index_t j) const {
    const auto first = bcol_idx.begin() + brow_ptr[i];
    const auto last = bcol_idx.begin() + brow_ptr[i + 1];
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return -1;
    return static_cast<offset_t>(it - bcol_idx.begin());
  }

  TaskView& block_at(offset_t pos) { return blocks[pos]; }
  const TaskView& block_at(offset_t pos) const { return blocks[pos]; }
};

/// Builds the block matrix for an upper-triangular factor whose pattern is
/// fixed. Every factor entry lands in exactly one block; per-block row
/// slices are precomputed in one sweep over the factor rows.
inline BlockMatrix build_block_matrix(CsrMatrix& factor,
                                      const RangeList& ranges) {
  validate(ranges, factor.nrows);
  const index_t m = ranges.count();

  // range id of every global column
  std::vector<index_t> range_of(factor.nrows);
  for (index_t r = 0; r < m; ++r)
    for (index_t i = ranges.ranges[r].begin; i < ranges.ranges[r].end; ++i)
      range_of[i] = r;

  // Pass 1: per block row, which block columns appear.
  std::vector<std::vector<index_t>> present(m);
  for (index_t i = 0; i < factor.nrows; ++i) {
    const index_t bi = range_of[i];
    auto& cols = present[bi];
    for (offset_t q = factor.row_begin(i); q < factor.row_end(i);) {
      const index_t bj = range_of[factor.col_idx[q]];
      if (std::find(cols.begin(), cols.end(), bj) == cols.end())
        cols.push_back(bj);
      // skip the rest of this row's slice of block column bj
      const index_t col_end = ranges.ranges[bj].end;
      while (q < factor.row_end(i) && factor.col_idx[q] < col_end) ++q;
    }
  }

  BlockMatrix bm;
  bm.m = m;
  bm.ranges = ranges;
  bm.brow_ptr.assign(static_cast<std::size_t>(m) + 1, 0);
  for (index_t bi = 0; bi < m; ++bi) {
    std::sort(present[bi].begin(), present[bi].end());
    bm.brow_ptr[bi + 1] = bm.brow_ptr[bi] +
                          static_cast<offset_t>(present[bi].size());
  }
  bm.bcol_idx.reserve(bm.brow_ptr[m]);
  bm.blocks.resize(bm.brow_ptr[m]);
  for (index_t bi = 0; bi < m; ++bi) {
    const Range row_range = ranges.ranges[bi];
    for (const index_t bj : present[bi]) {
      bm.bcol_idx.push_back(bj);
      const Range col_range = ranges.ranges[bj];
      MatrixView v;
      v.base = &factor;
      v.row_begin = row_range.begin;
      v.col_begin = col_range.begin;
      v.nrows = row_range.size();
      v.ncols = col_range.size();
      v.row_spans.assign(v.nrows, {0, 0});
      bm.blocks[bm.bcol_idx.size() - 1].view = std::move(v);
    }
  }

  // Pass 2: fill row spans by splitting each factor row at range borders.
  for (index_t i = 0; i < factor.nrows; ++i) {
    const index_t bi = range_of[i];
    const index_t local = i - ranges.ranges[bi].begin;
    offset_t q = factor.row_begin(i);
    const offset_t qe = factor.row_end(i);
    while (q < qe) {
      const index_t bj = range_of[factor.col_idx[q]];
      const index_t col_end = ranges.ranges[bj].end;
      const offset_t start = q;
      while (q < qe && factor.col_idx[q] < col_end) ++q;
      const offset_t pos = bm.find_block(bi, bj);
      bm.blocks[pos].view.row_spans[local] = {start, q};
    }
  }

  // Rows with no entries in a block keep {0, 0}; normalize those to an
  // empty slice at the row's own start so begin == end always holds.
  for (auto& tv : bm.blocks) {
    MatrixView& v = tv.view;
    for (index_t r = 0; r < v.nrows; ++r) {
      auto& [b, e] = v.row_spans[r];
      if (b == 0 && e == 0) {
        const offset_t anchor = factor.row_begin(v.row_begin + r);
        b = anchor;
        e = anchor;
      }
    }
  }
  return bm;
}

}  // namespace taskchol

#pragma once

/// \file factorize.hpp
/// \brief Serial scalar IC(k) reference and the Cholesky-by-blocks driver.
///
/// factor_serial is the scalar right-looking factorization on the fixed
/// fill pattern and doubles as the timing baseline and numeric oracle.
/// factor_by_blocks walks the block rows of the 2D layout and emits one
/// task per block operation, wiring dependences through the future stored
/// on each block: a task depends on the previous writer of every block it
/// touches, and becomes the recorded writer of its output block. Tasks are
/// spawned eagerly, so execution overlaps generation; a final wait
/// collects the group.
///
/// Because every writer chain is generated in ascending block-row order
/// and each kernel accumulates in ascending pivot order, each coordinate
/// receives its updates in exactly the serial order: the two paths agree
/// to the last bit on any backend. The verification tolerance is kept
/// anyway.

#include <atomic>
#include <chrono>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "taskchol/block_layout.hpp"
#include "taskchol/kernels.hpp"
#include "taskchol/ordering.hpp"
#include "taskchol/scheduler.hpp"
#include "taskchol/symbolic.hpp"

namespace taskchol {

struct FactorStats {
  double ordering_seconds = 0.0;
  double symbolic_seconds = 0.0;
  double block_build_seconds = 0.0;
  double numeric_seconds = 0.0;
  long long chol_tasks = 0;
  long long trsm_tasks = 0;
  long long herk_tasks = 0;
  long long gemm_tasks = 0;
  int workers = 1;
  std::string backend = "serial";
  offset_t nnz_u = 0;
  std::optional<double> relative_overhead;  // T / T_serial when measured

  long long total_tasks() const {
    return chol_tasks + trsm_tasks + herk_tasks + gemm_tasks;
  }
};

struct FactorResult {
  CsrMatrix factor;  // values of U on the fill pattern
  FactorStats stats;
};

namespace detail {

inline double seconds_since(
    std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

/// U starts as triu(P^T A P) scattered onto the fill pattern; pattern
/// slots absent from A start at zero.
inline CsrMatrix init_factor_values(const CsrMatrix& a_permuted,
                                    const FillPattern& fp) {
  CsrMatrix u = fp.pattern;
  std::fill(u.values.begin(), u.values.end(), 0.0);
  for (index_t i = 0; i < a_permuted.nrows; ++i) {
    offset_t t = u.row_begin(i);
    const offset_t te = u.row_end(i);
    for (offset_t q = a_permuted.row_begin(i); q < a_permuted.row_end(i);
         ++q) {
      const index_t c = a_permuted.col_idx[q];
      if (c < i) continue;
      while (t < te && u.col_idx[t] < c) ++t;
      if (t < te && u.col_idx[t] == c) u.values[t] += a_permuted.values[q];
      // entries of A outside the pattern cannot exist: level-0 fill keeps
      // every original entry, so the pattern is a superset of triu(A)
    }
  }
  return u;
}

}  // namespace detail

/// Scalar right-looking IC on the fixed pattern.
inline FactorResult factor_serial(const CsrMatrix& a_permuted,
                                  const FillPattern& fp) {
  FactorResult res;
  res.factor = detail::init_factor_values(a_permuted, fp);
  CsrMatrix& u = res.factor;
  const auto t0 = std::chrono::steady_clock::now();

  for (index_t r = 0; r < u.nrows; ++r) {
    const offset_t rb = u.row_begin(r);
    const offset_t re = u.row_end(r);
    if (rb == re || u.col_idx[rb] != r)
      throw std::invalid_argument("factor_serial: missing diagonal in row " +
                                  std::to_string(r));
    const double piv = u.values[rb];
    if (!(piv > 0.0)) throw BreakdownError(r, piv);
    const double d = std::sqrt(piv);
    u.values[rb] = d;
    for (offset_t q = rb + 1; q < re; ++q) u.values[q] /= d;

    for (offset_t q1 = rb + 1; q1 < re; ++q1) {
      const index_t c1 = u.col_idx[q1];
      const double v1 = u.values[q1];
      offset_t t = u.row_begin(c1);
      const offset_t te = u.row_end(c1);
      for (offset_t q2 = q1; q2 < re; ++q2) {
        const index_t c2 = u.col_idx[q2];
        while (t < te && u.col_idx[t] < c2) ++t;
        if (t < te && u.col_idx[t] == c2) u.values[t] -= v1 * u.values[q2];
      }
    }
  }

  res.stats.backend = "serial";
  res.stats.numeric_seconds = detail::seconds_since(t0);
  res.stats.nnz_u = u.nnz();
  return res;
}

/// Cholesky-by-blocks: builds the block matrix over the initialized factor
/// and generates Chol/Trsm/Herk/Gemm tasks with future-wired dependences.
inline FactorResult factor_by_blocks(const CsrMatrix& a_permuted,
                                     const FillPattern& fp,
                                     const RangeList& ranges,
                                     TaskPolicy& policy) {
  FactorResult res;
  res.factor = detail::init_factor_values(a_permuted, fp);
  CsrMatrix& u = res.factor;

  const auto tb0 = std::chrono::steady_clock::now();
  BlockMatrix bm = build_block_matrix(u, ranges);
  res.stats.block_build_seconds = detail::seconds_since(tb0);

  // Breakdown inside a task is latched; later tasks become no-ops and the
  // error is rethrown after the wait.
  std::atomic<bool> failed{false};
  index_t failed_row = -1;
  double failed_pivot = 0.0;

  auto guarded = [&failed, &failed_row, &failed_pivot](auto&& body) {
    return [&failed, &failed_row, &failed_pivot,
            body = std::forward<decltype(body)>(body)]() {
      if (failed.load(std::memory_order_acquire)) return;
      try {
        body();
      } catch (const BreakdownError& e) {
        bool expected = false;
        if (failed.compare_exchange_strong(expected, true,
                                           std::memory_order_acq_rel)) {
          failed_row = e.row();
          failed_pivot = e.pivot();
        }
      }
    };
  };

  const auto tn0 = std::chrono::steady_clock::now();
  for (index_t p = 0; p < bm.m; ++p) {
    const offset_t row_b = bm.brow_ptr[p];
    const offset_t row_e = bm.brow_ptr[p + 1];
    if (row_b == row_e || bm.bcol_idx[row_b] != p)
      throw std::logic_error("factor_by_blocks: diagonal block missing");
    TaskView& app = bm.block_at(row_b);

    // genTaskChol
    {
      Future f = policy.create(guarded([&v = app.view] { chol_block(v); }));
      if (app.future.valid()) policy.add_dependence(f, app.future);
      app.future = f;
      policy.spawn(f);
      res.stats.chol_tasks++;
    }

    // genTaskTrsm: every off-diagonal block of block row p
    for (offset_t qj = row_b + 1; qj < row_e; ++qj) {
      TaskView& apj = bm.block_at(qj);
      Future f = policy.create(
          guarded([&a = app.view, &b = apj.view] { trsm_block(a, b); }));
      policy.add_dependence(f, app.future);
      if (apj.future.valid()) policy.add_dependence(f, apj.future);
      apj.future = f;
      policy.spawn(f);
      res.stats.trsm_tasks++;
    }

    // genTaskHerk: pairs of blocks of row p whose target block exists
    for (offset_t qi = row_b + 1; qi < row_e; ++qi) {
      const index_t i = bm.bcol_idx[qi];
      TaskView& api = bm.block_at(qi);
      for (offset_t qj = qi; qj < row_e; ++qj) {
        const index_t j = bm.bcol_idx[qj];
        const offset_t target = bm.find_block(i, j);
        if (target < 0) continue;
        TaskView& apj = bm.block_at(qj);
        TaskView& aij = bm.block_at(target);
        Future f;
        if (i == j) {
          f = policy.create(
              guarded([&a = apj.view, &c = aij.view] { herk_block(a, c); }));
          res.stats.herk_tasks++;
        } else {
          f = policy.create(guarded([&a = api.view, &b = apj.view,
                                     &c = aij.view] { gemm_block(a, b, c); }));
          res.stats.gemm_tasks++;
        }
        policy.add_dependence(f, api.future);
        if (qj != qi) policy.add_dependence(f, apj.future);
        if (aij.future.valid()) policy.add_dependence(f, aij.future);
        aij.future = f;
        policy.spawn(f);
      }
    }
  }
  wait(policy);
  res.stats.numeric_seconds = detail::seconds_since(tn0);

  if (failed.load()) throw BreakdownError(failed_row, failed_pivot);

  res.stats.backend = policy.pooled_backend() ? "pool" : "seq";
  res.stats.workers = policy.worker_count();
  res.stats.nnz_u = u.nnz();
  return res;
}

/// Dry-run task graph: same generation walk, no execution. Node labels are
/// CHOL(p,p), TRSM(p,j), HERK(j,j), GEMM(i,j); an edge a -> b means b was
/// wired to wait for a.
struct TaskDag {
  struct Node {
    std::string label;
    index_t block_row = 0;
    index_t block_col = 0;
  };
  std::vector<Node> nodes;
  std::vector<std::pair<int, int>> edges;  // (before, after) node ids

  std::string to_dot() const {
    std::ostringstream out;
    out << "digraph tasks {\n";
    for (std::size_t i = 0; i < nodes.size(); ++i)
      out << "  t" << i << " [label=\"" << nodes[i].label << "\"];\n";
    for (const auto& [a, b] : edges) out << "  t" << a << " -> t" << b << ";\n";
    out << "}\n";
    return out.str();
  }
};

inline TaskDag export_task_dag(const FillPattern& fp,
                               const RangeList& ranges) {
  CsrMatrix u = fp.pattern;
  BlockMatrix bm = build_block_matrix(u, ranges);

  TaskDag dag;
  std::vector<int> last_writer(bm.blocks.size(), -1);

  auto add_node = [&](const std::string& kind, index_t i, index_t j,
                      std::initializer_list<offset_t> reads,
                      offset_t writes) {
    const int id = static_cast<int>(dag.nodes.size());
    dag.nodes.push_back({kind + "(" + std::to_string(i) + "," +
                             std::to_string(j) + ")",
                         i, j});
    for (const offset_t blk : reads)
      if (last_writer[blk] >= 0)
        dag.edges.emplace_back(last_writer[blk], id);
    last_writer[writes] = id;
    return id;
  };

  for (index_t p = 0; p < bm.m; ++p) {
    const offset_t row_b = bm.brow_ptr[p];
    const offset_t row_e = bm.brow_ptr[p + 1];
    add_node("CHOL", p, p, {row_b}, row_b);
    for (offset_t qj = row_b + 1; qj < row_e; ++qj)
      add_node("TRSM", p, bm.bcol_idx[qj], {row_b, qj}, qj);
    for (offset_t qi = row_b + 1; qi < row_e; ++qi) {
      const index_t i = bm.bcol_idx[qi];
      for (offset_t qj = qi; qj < row_e; ++qj) {
        const index_t j = bm.bcol_idx[qj];
        const offset_t target = bm.find_block(i, j);
        if (target < 0) continue;
        if (i == j)
          add_node("HERK", j, j, {qj, target}, target);
        else
          add_node("GEMM", i, j, {qi, qj, target}, target);
      }
    }
  }
  return dag;
}

}  // namespace taskchol

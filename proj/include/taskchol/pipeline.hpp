#pragma once

/// \file pipeline.hpp
/// \brief Analysis pipeline shared by the CLI and the test drivers:
///        ordering, permutation, level(k) pattern.

#include <chrono>
#include <optional>
#include <string>

#include "taskchol/csr_matrix.hpp"
#include "taskchol/factorize.hpp"
#include "taskchol/ordering.hpp"
#include "taskchol/symbolic.hpp"

namespace taskchol {

struct AnalyzeOptions {
  index_t level = 0;       // fill level k
  index_t treecut = 0;     // prune level t
  index_t leaf_size = 64;
  index_t max_depth = 100;
  std::optional<std::string> ordering_path;  // import instead of computing
};

struct Analysis {
  Permutation perm;
  RangeList ranges;
  CsrMatrix a_permuted;
  FillPattern pattern;
  double ordering_seconds = 0.0;
  double symbolic_seconds = 0.0;
};

inline Analysis analyze(const CsrMatrix& a, const AnalyzeOptions& opt) {
  Analysis out;

  auto t0 = std::chrono::steady_clock::now();
  if (opt.ordering_path) {
    auto [perm, ranges] = load_ordering(*opt.ordering_path, a.nrows);
    out.perm = std::move(perm);
    out.ranges = std::move(ranges);
  } else {
    auto [perm, tree] = nested_dissection(a, opt.leaf_size, opt.max_depth);
    out.perm = std::move(perm);
    out.ranges = prune_tree(tree, opt.treecut);
  }
  out.a_permuted = permute_symmetric(a, out.perm);
  out.ordering_seconds = detail::seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  out.pattern = levelk_pattern_bfs(out.a_permuted, opt.level);
  out.symbolic_seconds = detail::seconds_since(t0);
  return out;
}

}  // namespace taskchol

#pragma once

/// \file ordering.hpp
/// \brief Nested-dissection ordering, range tree, tree pruning, and
///        external-ordering import.
///
/// The dissection is a plain BFS bisection: level sets are grown from a
/// pseudo-peripheral vertex, the level structure is cut near the median,
/// and the boundary vertices of the larger half form the separator. Left
/// part, right part, separator are numbered in that order, recursively.
/// Vertices inside each part and separator keep ascending original order,
/// which makes the whole ordering deterministic.

#include <algorithm>
#include <fstream>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "taskchol/csr_matrix.hpp"

namespace taskchol {

struct Range {
  index_t begin = 0;
  index_t end = 0;  // exclusive

  index_t size() const { return end - begin; }
  bool empty() const { return begin == end; }
  friend bool operator==(const Range&, const Range&) = default;
};

/// Ordered ranges tiling [0, n) contiguously; defines the block partition.
struct RangeList {
  std::vector<Range> ranges;

  index_t count() const { return static_cast<index_t>(ranges.size()); }
  index_t total() const { return ranges.empty() ? 0 : ranges.back().end; }
};

inline void validate(const RangeList& rl, index_t n) {
  index_t expect = 0;
  for (const Range& r : rl.ranges) {
    if (r.begin != expect)
      throw std::invalid_argument("ranges not contiguous at index " +
                                  std::to_string(r.begin));
    if (r.end <= r.begin)
      throw std::invalid_argument("empty or inverted range");
    expect = r.end;
  }
  if (expect != n)
    throw std::invalid_argument("ranges do not cover [0, n)");
}

/// One dissection node. `range` is the node's own index range in the
/// permuted matrix: the separator range for internal nodes (possibly empty
/// when the subgraph fell apart into components), the whole leaf range for
/// leaves. Children subtree spans precede the node's own range, so a
/// subtree occupies one contiguous span.
struct NdNode {
  Range range;
  std::vector<index_t> children;
  index_t depth = 0;
};

struct NdTree {
  std::vector<NdNode> nodes;  // children created before parents
  index_t root = -1;

  index_t span_begin(index_t id) const {
    const NdNode* n = &nodes[id];
    while (!n->children.empty()) n = &nodes[n->children.front()];
    return n->range.begin;
  }
  index_t span_end(index_t id) const { return nodes[id].range.end; }

  /// Distance to the deepest leaf beneath `id` (leaf: 0).
  index_t height(index_t id) const {
    const NdNode& n = nodes[id];
    index_t h = 0;
    for (const index_t c : n.children) h = std::max<index_t>(h, height(c) + 1);
    return h;
  }
};

namespace detail {

// Adjacency restricted to off-diagonal entries of a symmetric pattern.
struct Graph {
  const CsrMatrix* a;

  template <typename F>
  void for_neighbors(index_t v, F&& f) const {
    for (offset_t q = a->row_begin(v); q < a->row_end(v); ++q) {
      const index_t w = a->col_idx[q];
      if (w != v) f(w);
    }
  }
};

class NdBuilder {
 public:
  NdBuilder(const CsrMatrix& a, index_t leaf_size, index_t max_depth)
      : graph_{&a},
        n_(a.nrows),
        leaf_size_(std::max<index_t>(leaf_size, 1)),
        max_depth_(max_depth),
        in_set_(a.nrows, 0),
        level_(a.nrows, -1),
        side_(a.nrows, 0) {
    perm_.perm.assign(n_, -1);
    perm_.iperm.assign(n_, -1);
  }

  std::pair<Permutation, NdTree> run() {
    std::vector<index_t> all(n_);
    std::iota(all.begin(), all.end(), 0);
    if (n_ == 0) {
      NdNode node;
      tree_.nodes.push_back(node);
      tree_.root = 0;
    } else {
      tree_.root = dissect(all, 0);
    }
    return {std::move(perm_), std::move(tree_)};
  }

 private:
  // vertices: ascending original indices of the current subgraph.
  index_t dissect(const std::vector<index_t>& vertices, index_t depth) {
    if (static_cast<index_t>(vertices.size()) <= leaf_size_ ||
        depth >= max_depth_)
      return make_leaf(vertices, depth);

    const auto components = connected_components(vertices);
    if (components.size() > 1) {
      NdNode node;
      node.depth = depth;
      for (const auto& comp : components)
        node.children.push_back(dissect(comp, depth + 1));
      node.range = {next_, next_};  // empty separator
      return push_node(std::move(node));
    }

    auto [left, right, sep] = bisect(vertices);
    if (sep.empty() || (left.empty() && right.empty()))
      return make_leaf(vertices, depth);

    NdNode node;
    node.depth = depth;
    if (!left.empty()) node.children.push_back(dissect(left, depth + 1));
    if (!right.empty()) node.children.push_back(dissect(right, depth + 1));
    node.range.begin = next_;
    for (const index_t v : sep) assign(v);
    node.range.end = next_;
    return push_node(std::move(node));
  }

  index_t make_leaf(const std::vector<index_t>& vertices, index_t depth) {
    NdNode node;
    node.depth = depth;
    node.range.begin = next_;
    for (const index_t v : vertices) assign(v);
    node.range.end = next_;
    return push_node(std::move(node));
  }

  void assign(index_t old_index) {
    perm_.perm[old_index] = next_;
    perm_.iperm[next_] = old_index;
    ++next_;
  }

  index_t push_node(NdNode&& node) {
    tree_.nodes.push_back(std::move(node));
    return static_cast<index_t>(tree_.nodes.size()) - 1;
  }

  std::vector<std::vector<index_t>> connected_components(
      const std::vector<index_t>& vertices) {
    ++stamp_;
    for (const index_t v : vertices) in_set_[v] = stamp_;
    std::vector<std::vector<index_t>> comps;
    ++visit_stamp_;
    for (const index_t s : vertices) {
      if (level_[s] == visit_stamp_) continue;
      comps.emplace_back();
      auto& comp = comps.back();
      comp.push_back(s);
      level_[s] = visit_stamp_;
      for (std::size_t head = 0; head < comp.size(); ++head) {
        graph_.for_neighbors(comp[head], [&](index_t w) {
          if (in_set_[w] == stamp_ && level_[w] != visit_stamp_) {
            level_[w] = visit_stamp_;
            comp.push_back(w);
          }
        });
      }
      std::sort(comp.begin(), comp.end());
    }
    // Components ordered by their smallest vertex.
    std::sort(comps.begin(), comps.end(),
              [](const auto& x, const auto& y) { return x.front() < y.front(); });
    return comps;
  }

  // BFS level sets from `root` over the marked vertex set. Returns levels
  // as sorted vertex lists.
  std::vector<std::vector<index_t>> level_sets(index_t root) {
    ++visit_stamp_;
    std::vector<std::vector<index_t>> levels;
    levels.push_back({root});
    level_[root] = visit_stamp_;
    while (true) {
      std::vector<index_t> next;
      for (const index_t v : levels.back()) {
        graph_.for_neighbors(v, [&](index_t w) {
          if (in_set_[w] == stamp_ && level_[w] != visit_stamp_) {
            level_[w] = visit_stamp_;
            next.push_back(w);
          }
        });
      }
      if (next.empty()) break;
      std::sort(next.begin(), next.end());
      levels.push_back(std::move(next));
    }
    return levels;
  }

  // Connected subgraph only. Returns (left, right, separator), each sorted.
  std::tuple<std::vector<index_t>, std::vector<index_t>, std::vector<index_t>>
  bisect(const std::vector<index_t>& vertices) {
    ++stamp_;
    for (const index_t v : vertices) in_set_[v] = stamp_;

    // Pseudo-peripheral root: two BFS sweeps from the lowest-index vertex.
    index_t root = vertices.front();
    auto levels = level_sets(root);
    root = levels.back().front();
    levels = level_sets(root);

    const index_t nlev = static_cast<index_t>(levels.size());
    if (nlev < 2) return {{}, {}, {}};  // caller falls back to a leaf

    // Cut after the level where the cumulative count first reaches half;
    // keep at least one level on each side.
    const index_t half = (static_cast<index_t>(vertices.size()) + 1) / 2;
    index_t cut = 0;
    index_t cum = 0;
    for (index_t l = 0; l < nlev - 1; ++l) {
      cum += static_cast<index_t>(levels[l].size());
      cut = l;
      if (cum >= half) break;
    }

    std::vector<index_t> low, high;
    for (index_t l = 0; l < nlev; ++l)
      for (const index_t v : levels[l]) {
        side_[v] = l <= cut ? 1 : 2;
        (l <= cut ? low : high).push_back(v);
      }

    // Separator: boundary vertices of the larger half, so the smaller half
    // survives intact and the parts stay balanced.
    const bool low_is_larger = low.size() >= high.size();
    auto& larger = low_is_larger ? low : high;
    const char other_side = low_is_larger ? 2 : 1;

    std::vector<index_t> sep, part;
    for (const index_t v : larger) {
      bool boundary = false;
      graph_.for_neighbors(v, [&](index_t w) {
        if (in_set_[w] == stamp_ && side_[w] == other_side) boundary = true;
      });
      (boundary ? sep : part).push_back(v);
    }
    larger = std::move(part);

    std::sort(low.begin(), low.end());
    std::sort(high.begin(), high.end());
    std::sort(sep.begin(), sep.end());
    return {std::move(low), std::move(high), std::move(sep)};
  }

  Graph graph_;
  index_t n_;
  index_t leaf_size_;
  index_t max_depth_;
  Permutation perm_;
  NdTree tree_;
  index_t next_ = 0;
  index_t stamp_ = 0;
  index_t visit_stamp_ = 0;
  std::vector<index_t> in_set_;
  std::vector<index_t> level_;
  std::vector<char> side_;
};

}  // namespace detail

/// Computes a nested-dissection ordering of the symmetric pattern `a`.
/// Recursion stops at subgraphs of at most `leaf_size` vertices or at
/// `max_depth`; disconnected pieces are ordered independently under a
/// shared parent with an empty separator.
inline std::pair<Permutation, NdTree> nested_dissection(const CsrMatrix& a,
                                                        index_t leaf_size,
                                                        index_t max_depth) {
  if (a.nrows != a.ncols)
    throw std::invalid_argument("nested_dissection: matrix not square");
  return detail::NdBuilder(a, leaf_size, max_depth).run();
}

/// Fuses every subtree whose root sits at most `t` levels above its deepest
/// leaf into a single contiguous range; surviving nodes contribute their
/// separator ranges. The result tiles [0, n) in permuted order.
inline RangeList prune_tree(const NdTree& tree, index_t t) {
  RangeList out;
  if (tree.root < 0) return out;

  std::vector<index_t> height(tree.nodes.size(), 0);
  for (index_t id = 0; id < static_cast<index_t>(tree.nodes.size()); ++id) {
    // children precede parents in the node array
    index_t h = 0;
    for (const index_t c : tree.nodes[id].children)
      h = std::max<index_t>(h, height[c] + 1);
    height[id] = h;
  }

  // Iterative emit in permuted (left-to-right) order.
  std::vector<std::pair<index_t, bool>> stack;  // (node, children_done)
  stack.emplace_back(tree.root, false);
  while (!stack.empty()) {
    auto [id, done] = stack.back();
    stack.pop_back();
    const NdNode& node = tree.nodes[id];
    if (!done && height[id] <= t) {
      const Range span{tree.span_begin(id), tree.span_end(id)};
      if (!span.empty()) out.ranges.push_back(span);
      continue;
    }
    if (!done) {
      stack.emplace_back(id, true);
      for (auto it = node.children.rbegin(); it != node.children.rend(); ++it)
        stack.emplace_back(*it, false);
    } else {
      if (!node.range.empty()) out.ranges.push_back(node.range);
    }
  }
  return out;
}

/// Reads a plain-text ordering file: n, then n permutation values
/// (new-index-of-old), then the range count, then "begin end" per range.
inline std::pair<Permutation, RangeList> load_ordering(const std::string& path,
                                                       index_t n) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ordering file '" + path + "'");

  auto fail = [&](const std::string& what) {
    throw std::runtime_error("ordering file '" + path + "': " + what);
  };

  long long file_n = -1;
  if (!(in >> file_n)) fail("missing size");
  if (file_n != n)
    fail("size " + std::to_string(file_n) + " does not match matrix size " +
         std::to_string(n));

  std::vector<index_t> perm(n);
  for (index_t i = 0; i < n; ++i) {
    long long v;
    if (!(in >> v)) fail("truncated permutation");
    perm[i] = static_cast<index_t>(v);
  }
  Permutation p;
  try {
    p = Permutation::from_perm(std::move(perm));
  } catch (const std::invalid_argument&) {
    fail("not a bijection");
  }

  long long r = -1;
  if (!(in >> r) || r < 0) fail("missing range count");
  RangeList rl;
  for (long long k = 0; k < r; ++k) {
    long long b, e;
    if (!(in >> b >> e)) fail("truncated range list");
    rl.ranges.push_back({static_cast<index_t>(b), static_cast<index_t>(e)});
  }
  try {
    validate(rl, n);
  } catch (const std::invalid_argument& ex) {
    fail(std::string("ranges not contiguous: ") + ex.what());
  }
  return {std::move(p), std::move(rl)};
}

}  // namespace taskchol

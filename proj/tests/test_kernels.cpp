#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/test_matrices.hpp"
#include "taskchol/block_layout.hpp"
#include "taskchol/kernels.hpp"

using namespace taskchol;
namespace gen = taskchol::testing;

namespace {

struct Fixture {
  CsrMatrix factor;
  BlockMatrix bm;

  Fixture(index_t n, std::vector<index_t> ti, std::vector<index_t> tj,
          std::vector<double> tv, std::vector<Range> ranges)
      : factor(csr_from_triplets(n, n, std::move(ti), std::move(tj),
                                 std::move(tv))) {
    RangeList rl;
    rl.ranges = std::move(ranges);
    bm = build_block_matrix(factor, rl);
  }

  const MatrixView& view(index_t i, index_t j) {
    const offset_t pos = bm.find_block(i, j);
    REQUIRE(pos >= 0);
    return bm.block_at(pos).view;
  }
};

}  // namespace

TEST_CASE("chol_block", "[kernels]") {
  SECTION("2x2 dense block [[4,2],[.,3]] factors to [[2,1],[.,sqrt 2]]") {
    Fixture f(2, {0, 0, 1}, {0, 1, 1}, {4.0, 2.0, 3.0}, {{0, 2}});
    chol_block(f.view(0, 0));
    CHECK(f.factor.at(0, 0) == 2.0);
    CHECK(f.factor.at(0, 1) == 1.0);
    CHECK(f.factor.at(1, 1) == std::sqrt(2.0));
  }

  SECTION("diagonal block takes square roots") {
    Fixture f(2, {0, 1}, {0, 1}, {4.0, 9.0}, {{0, 2}});
    chol_block(f.view(0, 0));
    CHECK(f.factor.at(0, 0) == 2.0);
    CHECK(f.factor.at(1, 1) == 3.0);
  }

  SECTION("breakdown reports the offending global row") {
    Fixture f(2, {0, 0, 1}, {0, 1, 1}, {1.0, 2.0, 1.0}, {{0, 2}});
    try {
      chol_block(f.view(0, 0));
      FAIL("expected breakdown");
    } catch (const BreakdownError& e) {
      CHECK(e.row() == 1);
      CHECK(e.pivot() < 0.0);
    }
  }

  SECTION("global row index respects the block offset") {
    // rows {2,3} of a 4x4 factor; row 3 breaks down
    Fixture f(4,
              {0, 1, 2, 2, 3},
              {0, 1, 2, 3, 3},
              {1.0, 1.0, 1.0, 4.0, 1.0},
              {{0, 2}, {2, 4}});
    try {
      chol_block(f.view(1, 1));
      FAIL("expected breakdown");
    } catch (const BreakdownError& e) {
      CHECK(e.row() == 3);
    }
  }
}

TEST_CASE("trsm_block", "[kernels]") {
  SECTION("identity diagonal block leaves the panel unchanged") {
    Fixture f(4,
              {0, 1, 0, 1, 2, 3},
              {0, 1, 2, 3, 2, 3},
              {1.0, 1.0, 5.0, 7.0, 1.0, 1.0},
              {{0, 2}, {2, 4}});
    trsm_block(f.view(0, 0), f.view(0, 1));
    CHECK(f.factor.at(0, 2) == 5.0);
    CHECK(f.factor.at(1, 3) == 7.0);
  }

  SECTION("diagonal solve divides rowwise") {
    Fixture f(3,
              {0, 1, 0, 1, 2},
              {0, 1, 2, 2, 2},
              {2.0, 4.0, 3.0, 8.0, 1.0},
              {{0, 2}, {2, 3}});
    trsm_block(f.view(0, 0), f.view(0, 1));
    CHECK(f.factor.at(0, 2) == 1.5);
    CHECK(f.factor.at(1, 2) == 2.0);
  }

  SECTION("coupled solve matches the dense forward substitution") {
    // factored app = [[2,1],[.,1]], right-hand column (4,3)
    Fixture f(3,
              {0, 0, 1, 0, 1, 2},
              {0, 1, 1, 2, 2, 2},
              {2.0, 1.0, 1.0, 4.0, 3.0, 1.0},
              {{0, 2}, {2, 3}});
    trsm_block(f.view(0, 0), f.view(0, 1));
    CHECK(f.factor.at(0, 2) == 2.0);  // 4 / 2
    CHECK(f.factor.at(1, 2) == 1.0);  // (3 - 1*2) / 1
  }

  SECTION("update to a pattern-absent panel entry is dropped") {
    // row 1 of the panel has no entry in the coupled column
    Fixture f(3,
              {0, 0, 1, 0, 2},
              {0, 1, 1, 2, 2},
              {2.0, 1.0, 1.0, 4.0, 1.0},
              {{0, 2}, {2, 3}});
    trsm_block(f.view(0, 0), f.view(0, 1));
    CHECK(f.factor.at(0, 2) == 2.0);
    CHECK(f.factor.at(1, 2) == 0.0);  // absent, stays structurally zero
  }
}

TEST_CASE("herk_block", "[kernels]") {
  SECTION("zero panel leaves the target unchanged") {
    Fixture f(4,
              {0, 1, 0, 1, 2, 2, 3},
              {0, 1, 2, 3, 2, 3, 3},
              {1.0, 1.0, 0.0, 0.0, 5.0, 6.0, 7.0},
              {{0, 2}, {2, 4}});
    herk_block(f.view(0, 1), f.view(1, 1));
    CHECK(f.factor.at(2, 2) == 5.0);
    CHECK(f.factor.at(2, 3) == 6.0);
    CHECK(f.factor.at(3, 3) == 7.0);
  }

  SECTION("single entry u updates one diagonal by -u^2") {
    Fixture f(3,
              {0, 0, 1, 2},
              {0, 2, 1, 2},
              {1.0, 3.0, 1.0, 10.0},
              {{0, 2}, {2, 3}});
    herk_block(f.view(0, 1), f.view(1, 1));
    CHECK(f.factor.at(2, 2) == 1.0);  // 10 - 9
  }

  SECTION("cross term vanishes when the target misses the coordinate") {
    // panel row (1, 2) over columns {2, 3}; target block lacks (2, 3)
    Fixture f(4,
              {0, 0, 0, 1, 2, 3},
              {0, 2, 3, 1, 2, 3},
              {1.0, 1.0, 2.0, 1.0, 10.0, 10.0},
              {{0, 2}, {2, 4}});
    herk_block(f.view(0, 1), f.view(1, 1));
    CHECK(f.factor.at(2, 2) == 9.0);   // -1
    CHECK(f.factor.at(3, 3) == 6.0);   // -4
    CHECK(!f.factor.has_entry(2, 3));  // cross contribution -2 dropped
  }
}

TEST_CASE("gemm_block", "[kernels]") {
  SECTION("empty input leaves the target unchanged") {
    Fixture f(6,
              {0, 1, 0, 1, 2, 3, 2, 4, 5},
              {0, 1, 2, 3, 2, 3, 4, 4, 5},
              {1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 8.0, 1.0, 1.0},
              {{0, 2}, {2, 4}, {4, 6}});
    // panel (0,2) has no entries at all -> block (0,2) may not even exist
    if (f.bm.find_block(0, 2) < 0) {
      SUCCEED("empty panel produced no block, nothing to update");
    }
    CHECK(f.factor.at(2, 4) == 8.0);
  }

  SECTION("one product per matching pair") {
    // api holds u=3 at (0,2); apj holds v=5 at (0,4); target (2,4)=100
    Fixture f(6,
              {0, 0, 0, 1, 2, 2, 3, 4, 5},
              {0, 2, 4, 1, 2, 4, 3, 4, 5},
              {1.0, 3.0, 5.0, 1.0, 1.0, 100.0, 1.0, 1.0, 1.0},
              {{0, 2}, {2, 4}, {4, 6}});
    gemm_block(f.view(0, 1), f.view(0, 2), f.view(1, 2));
    CHECK(f.factor.at(2, 4) == 85.0);  // 100 - 3*5
  }

  SECTION("contributions outside the target pattern are dropped") {
    // pair (0,2),(0,5): target block (1,2) has no (2,5) entry
    Fixture f(6,
              {0, 0, 0, 1, 2, 2, 3, 4, 5},
              {0, 2, 5, 1, 2, 4, 3, 4, 5},
              {1.0, 3.0, 5.0, 1.0, 1.0, 100.0, 1.0, 1.0, 1.0},
              {{0, 2}, {2, 4}, {4, 6}});
    gemm_block(f.view(0, 1), f.view(0, 2), f.view(1, 2));
    CHECK(f.factor.at(2, 4) == 100.0);
  }
}

TEST_CASE("kernels preserve the pattern", "[kernels]") {
  Fixture f(4,
            {0, 0, 0, 1, 1, 2, 2, 3},
            {0, 1, 2, 1, 3, 2, 3, 3},
            {8.0, 1.0, 2.0, 9.0, 1.0, 10.0, 1.0, 12.0},
            {{0, 2}, {2, 4}});
  const auto row_ptr = f.factor.row_ptr;
  const auto col_idx = f.factor.col_idx;
  chol_block(f.view(0, 0));
  trsm_block(f.view(0, 0), f.view(0, 1));
  herk_block(f.view(0, 1), f.view(1, 1));
  chol_block(f.view(1, 1));
  CHECK(f.factor.row_ptr == row_ptr);
  CHECK(f.factor.col_idx == col_idx);
}

// taskchol: sparse level(k) incomplete Cholesky factorization by blocks.
//
// Subcommands: info, symbolic, factor, verify, bench, taskdag.
// Exit codes: 0 success, 1 numerical breakdown / verification failure,
// 2 input or usage error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "taskchol/matrix_market.hpp"
#include "taskchol/pipeline.hpp"
#include "taskchol/taskchol.hpp"

namespace {

using nlohmann::json;
using namespace taskchol;

struct Options {
  std::string matrix;
  index_t level = 0;
  index_t treecut = 0;
  index_t leaf_size = 64;
  index_t max_depth = 100;
  int workers = 1;
  std::string backend = "seq";
  std::string ordering;
  bool baseline = false;
  std::string out;
  std::string stats;
  std::vector<int> bench_workers;
  bool corrupt = false;  // verify-only test hook
  unsigned seed = 0;     // reserved
};

void add_common_flags(CLI::App* cmd, Options& o, bool with_backend) {
  cmd->add_option("--matrix", o.matrix, "Matrix Market input file")
      ->required();
  cmd->add_option("--level", o.level, "fill level k")->check(CLI::NonNegativeNumber);
  cmd->add_option("--treecut", o.treecut, "prune level t, measured from the leaves")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--leaf-size", o.leaf_size, "dissection stops at this subgraph size");
  cmd->add_option("--max-depth", o.max_depth, "dissection depth limit");
  cmd->add_option("--ordering", o.ordering,
                  "import ordering + ranges from file instead of computing");
  cmd->add_option("--seed", o.seed, "random seed (reserved)");
  if (with_backend) {
    cmd->add_option("--backend", o.backend, "task backend")
        ->check(CLI::IsMember({"seq", "pool"}));
    cmd->add_option("--workers", o.workers, "pool worker count")
        ->check(CLI::PositiveNumber);
  }
}

AnalyzeOptions to_analyze_options(const Options& o) {
  AnalyzeOptions a;
  a.level = o.level;
  a.treecut = o.treecut;
  a.leaf_size = o.leaf_size;
  a.max_depth = o.max_depth;
  if (!o.ordering.empty()) a.ordering_path = o.ordering;
  return a;
}

TaskPolicy make_policy(const Options& o) {
  if (o.backend == "pool") return TaskPolicy::pooled(o.workers);
  return TaskPolicy::sequential();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
}

void maybe_write_stats(const std::string& path, const json& j) {
  if (path.empty()) return;
  write_text(path, j.dump(2) + "\n");
}

json stats_skeleton(const Options& o, const CsrMatrix& a) {
  return json{{"matrix", o.matrix},
              {"n", a.nrows},
              {"nnz", a.nnz()},
              {"level", o.level},
              {"treecut", o.treecut},
              {"leaf_size", o.leaf_size},
              {"max_depth", o.max_depth}};
}

int cmd_info(const Options& o) {
  const CsrMatrix a = load_matrix_market(o.matrix);
  const double per_row = a.nrows > 0
                             ? static_cast<double>(a.nnz()) / a.nrows
                             : 0.0;
  std::printf("n = %d\n", a.nrows);
  std::printf("nnz = %lld\n", static_cast<long long>(a.nnz()));
  // truncated, not rounded, to two decimals
  std::printf("nnz/n = %.2f\n", std::floor(per_row * 100.0) / 100.0);
  if (!o.stats.empty())
    maybe_write_stats(o.stats, json{{"matrix", o.matrix},
                                    {"n", a.nrows},
                                    {"nnz", a.nnz()},
                                    {"nnz_per_row", per_row}});
  return 0;
}

int cmd_symbolic(const Options& o) {
  const CsrMatrix a = load_matrix_market(o.matrix);
  const Analysis an = analyze(a, to_analyze_options(o));
  const FillStats fs = fill_stats(an.pattern);

  const auto t0 = std::chrono::steady_clock::now();
  CsrMatrix shape = an.pattern.pattern;
  const BlockMatrix bm = build_block_matrix(shape, an.ranges);
  const double block_build = detail::seconds_since(t0);

  std::printf("n = %d\n", a.nrows);
  std::printf("nnz_u = %lld\n", static_cast<long long>(fs.nnz_u));
  std::printf("fill_ratio = %.4f\n", fs.fill_ratio);
  std::printf("ranges = %d\n", an.ranges.count());
  std::printf("blocks = %lld\n", static_cast<long long>(bm.block_count()));

  json j = stats_skeleton(o, a);
  j["nnz_u"] = fs.nnz_u;
  j["fill_ratio"] = fs.fill_ratio;
  j["num_ranges"] = an.ranges.count();
  j["num_blocks"] = bm.block_count();
  j["phase_seconds"] = {{"ordering", an.ordering_seconds},
                        {"symbolic", an.symbolic_seconds},
                        {"block_build", block_build}};
  maybe_write_stats(o.stats, j);
  return 0;
}

json stats_to_json(const FactorStats& s) {
  json j;
  j["backend"] = s.backend;
  j["workers"] = s.workers;
  j["nnz_u"] = s.nnz_u;
  j["task_counts"] = {{"chol", s.chol_tasks},
                      {"trsm", s.trsm_tasks},
                      {"herk", s.herk_tasks},
                      {"gemm", s.gemm_tasks},
                      {"total", s.total_tasks()}};
  j["phase_seconds"] = {{"ordering", s.ordering_seconds},
                        {"symbolic", s.symbolic_seconds},
                        {"block_build", s.block_build_seconds},
                        {"numeric", s.numeric_seconds}};
  if (s.relative_overhead)
    j["relative_overhead"] = *s.relative_overhead;
  else
    j["relative_overhead"] = nullptr;
  return j;
}

int cmd_factor(const Options& o) {
  const CsrMatrix a = load_matrix_market(o.matrix);
  const Analysis an = analyze(a, to_analyze_options(o));

  TaskPolicy policy = make_policy(o);
  FactorResult res = factor_by_blocks(an.a_permuted, an.pattern, an.ranges,
                                      policy);
  res.stats.ordering_seconds = an.ordering_seconds;
  res.stats.symbolic_seconds = an.symbolic_seconds;

  if (o.baseline) {
    const FactorResult serial = factor_serial(an.a_permuted, an.pattern);
    res.stats.relative_overhead =
        res.stats.numeric_seconds / std::max(serial.stats.numeric_seconds,
                                             1e-12);
  }

  if (!o.out.empty()) write_matrix_market(res.factor, o.out);

  std::printf("n = %d\n", res.factor.nrows);
  std::printf("nnz_u = %lld\n", static_cast<long long>(res.stats.nnz_u));
  std::printf("tasks = %lld\n", res.stats.total_tasks());
  std::printf("numeric_seconds = %.6f\n", res.stats.numeric_seconds);
  if (res.stats.relative_overhead)
    std::printf("relative_overhead = %.4f\n", *res.stats.relative_overhead);

  json j = stats_skeleton(o, a);
  j.update(stats_to_json(res.stats));
  j["num_ranges"] = an.ranges.count();
  maybe_write_stats(o.stats, j);
  return 0;
}

int cmd_verify(const Options& o) {
  const CsrMatrix a = load_matrix_market(o.matrix);
  const Analysis an = analyze(a, to_analyze_options(o));

  const FactorResult serial = factor_serial(an.a_permuted, an.pattern);
  TaskPolicy policy = make_policy(o);
  FactorResult blocks = factor_by_blocks(an.a_permuted, an.pattern, an.ranges,
                                         policy);
  if (o.corrupt && !blocks.factor.values.empty())
    blocks.factor.values.front() += 1.0;

  double worst = 0.0;
  for (std::size_t q = 0; q < serial.factor.values.size(); ++q) {
    const double us = serial.factor.values[q];
    const double ub = blocks.factor.values[q];
    worst = std::max(worst, std::abs(ub - us) / (std::abs(us) + 1e-300));
  }
  std::printf("max_rel_diff = %.3e\n", worst);
  const bool ok = worst <= 1e-12;
  std::printf("%s\n", ok ? "OK" : "MISMATCH");
  return ok ? 0 : 1;
}

int cmd_bench(const Options& o) {
  const CsrMatrix a = load_matrix_market(o.matrix);
  const Analysis an = analyze(a, to_analyze_options(o));

  auto median3_serial = [&] {
    std::vector<double> t;
    for (int rep = 0; rep < 3; ++rep)
      t.push_back(factor_serial(an.a_permuted, an.pattern).stats.numeric_seconds);
    std::sort(t.begin(), t.end());
    return t[1];
  };
  auto median3_pool = [&](int workers) {
    std::vector<double> t;
    for (int rep = 0; rep < 3; ++rep) {
      TaskPolicy policy = TaskPolicy::pooled(workers);
      t.push_back(factor_by_blocks(an.a_permuted, an.pattern, an.ranges, policy)
                      .stats.numeric_seconds);
    }
    std::sort(t.begin(), t.end());
    return t[1];
  };

  std::vector<int> workers = o.bench_workers;
  if (workers.empty()) workers = {1};
  std::sort(workers.begin(), workers.end());
  workers.erase(std::unique(workers.begin(), workers.end()), workers.end());

  const double t_serial = median3_serial();
  const double t_one = median3_pool(1);

  std::string csv = "workers,time_numeric_s,speedup,relative_overhead\n";
  auto row = [&csv](int w, double t, double sp, double ov, bool serial_row) {
    char buf[160];
    if (serial_row)
      std::snprintf(buf, sizeof(buf), "%d,%.6e,,\n", w, t);
    else
      std::snprintf(buf, sizeof(buf), "%d,%.6e,%.4f,%.4f\n", w, t, sp, ov);
    csv += buf;
  };
  row(0, t_serial, 0, 0, true);  // serial scalar baseline
  for (const int w : workers) {
    const double t = w == 1 ? t_one : median3_pool(w);
    row(w, t, t_one / std::max(t, 1e-12), t / std::max(t_serial, 1e-12),
        false);
  }

  if (o.out.empty())
    std::fputs(csv.c_str(), stdout);
  else
    write_text(o.out, csv);
  return 0;
}

int cmd_taskdag(const Options& o) {
  const CsrMatrix a = load_matrix_market(o.matrix);
  const Analysis an = analyze(a, to_analyze_options(o));
  const TaskDag dag = export_task_dag(an.pattern, an.ranges);
  const std::string dot = dag.to_dot();
  if (o.out.empty())
    std::fputs(dot.c_str(), stdout);
  else
    write_text(o.out, dot);
  std::fprintf(stderr, "nodes = %zu, edges = %zu\n", dag.nodes.size(),
               dag.edges.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse level(k) incomplete Cholesky factorization by blocks"};
  app.require_subcommand(1);

  Options o;

  CLI::App* info = app.add_subcommand("info", "print matrix statistics");
  info->add_option("--matrix", o.matrix, "Matrix Market input file")->required();
  info->add_option("--stats", o.stats, "write statistics JSON here");

  CLI::App* symbolic =
      app.add_subcommand("symbolic", "ordering + level(k) fill analysis");
  add_common_flags(symbolic, o, false);
  symbolic->add_option("--stats", o.stats, "write statistics JSON here");

  CLI::App* factor =
      app.add_subcommand("factor", "factorize and write U + stats");
  add_common_flags(factor, o, true);
  factor->add_flag("--baseline", o.baseline,
                   "also run the serial factorization and report T/T_serial");
  factor->add_option("--out", o.out, "write the factor in Matrix Market form");
  factor->add_option("--stats", o.stats, "write statistics JSON here");

  CLI::App* verify = app.add_subcommand(
      "verify", "compare by-blocks against the serial factorization");
  add_common_flags(verify, o, true);
  verify->add_flag("--corrupt", o.corrupt)->group("");  // test hook

  CLI::App* bench =
      app.add_subcommand("bench", "numeric-phase timing sweep, CSV output");
  add_common_flags(bench, o, false);
  bench->add_option("--workers", o.bench_workers,
                    "pool worker counts to measure");
  bench->add_option("--out", o.out, "write CSV here instead of stdout");

  CLI::App* taskdag =
      app.add_subcommand("taskdag", "emit the task DAG in DOT form");
  add_common_flags(taskdag, o, false);
  taskdag->add_option("--out", o.out, "write DOT here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (info->parsed()) return cmd_info(o);
    if (symbolic->parsed()) return cmd_symbolic(o);
    if (factor->parsed()) return cmd_factor(o);
    if (verify->parsed()) return cmd_verify(o);
    if (bench->parsed()) return cmd_bench(o);
    if (taskdag->parsed()) return cmd_taskdag(o);
  } catch (const BreakdownError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}

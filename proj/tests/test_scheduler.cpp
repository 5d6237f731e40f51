#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <random>
#include <vector>

#include "taskchol/scheduler.hpp"

using namespace taskchol;

namespace {

// Shared trace: tasks record start/finish stamps from one global clock.
struct Trace {
  std::atomic<long> clock{0};
  std::vector<long> start;
  std::vector<long> finish;
  std::vector<std::atomic<int>> runs;

  explicit Trace(std::size_t n) : start(n, -1), finish(n, -1), runs(n) {
    for (auto& r : runs) r.store(0);
  }
};

struct RandomDag {
  int nodes = 0;
  std::vector<std::vector<int>> deps;  // deps[i] < i
};

RandomDag make_dag(std::mt19937& rng, int max_nodes, int max_edges) {
  RandomDag d;
  d.nodes = 1 + static_cast<int>(rng() % max_nodes);
  d.deps.resize(d.nodes);
  for (int i = 1; i < d.nodes; ++i) {
    const int edges = static_cast<int>(rng() % (max_edges + 1));
    for (int e = 0; e < edges; ++e) d.deps[i].push_back(static_cast<int>(rng() % i));
    std::sort(d.deps[i].begin(), d.deps[i].end());
    d.deps[i].erase(std::unique(d.deps[i].begin(), d.deps[i].end()),
                    d.deps[i].end());
  }
  return d;
}

void run_dag_and_check(const RandomDag& d, TaskPolicy& policy) {
  Trace trace(d.nodes);
  std::vector<Future> futures(d.nodes);
  for (int i = 0; i < d.nodes; ++i) {
    futures[i] = policy.create([&trace, i] {
      trace.start[i] = trace.clock.fetch_add(1);
      trace.runs[i].fetch_add(1);
      trace.finish[i] = trace.clock.fetch_add(1);
    });
    for (const int dep : d.deps[i])
      policy.add_dependence(futures[i], futures[dep]);
  }
  for (int i = 0; i < d.nodes; ++i) policy.spawn(futures[i]);
  wait(policy);

  for (int i = 0; i < d.nodes; ++i) {
    REQUIRE(trace.runs[i].load() == 1);
    REQUIRE(futures[i].state() == TaskState::complete);
    for (const int dep : d.deps[i]) {
      INFO("edge " << i << " <- " << dep);
      REQUIRE(trace.finish[dep] < trace.start[i]);
    }
  }
}

}  // namespace

TEST_CASE("future states progress through the lifecycle", "[scheduler]") {
  TaskPolicy policy = TaskPolicy::sequential();
  Future gate = policy.create([] {});
  Future f = policy.create([] {});
  CHECK(f.state() == TaskState::created);
  policy.add_dependence(f, gate);
  policy.spawn(f);
  CHECK(f.state() == TaskState::spawned_waiting);
  policy.spawn(gate);  // runs gate, then f
  CHECK(f.state() == TaskState::complete);
  wait(policy);
}

TEST_CASE("dep-free task may complete before spawn returns", "[scheduler]") {
  TaskPolicy policy = TaskPolicy::sequential();
  bool ran = false;
  Future f = policy.create([&ran] { ran = true; });
  policy.spawn(f);
  CHECK(ran);
  CHECK(f.complete());
  wait(policy);
}

TEST_CASE("diamond dependence executes after both parents", "[scheduler]") {
  for (const bool pooled : {false, true}) {
    TaskPolicy policy = pooled ? TaskPolicy::pooled(2)
                               : TaskPolicy::sequential();
    std::atomic<int> done{0};
    std::atomic<bool> z_saw_both{false};
    Future fx = policy.create([&done] { done.fetch_add(1); });
    Future fy = policy.create([&done] { done.fetch_add(1); });
    Future fz = policy.create([&] { z_saw_both = done.load() == 2; });
    policy.add_dependence(fz, fx);
    policy.add_dependence(fz, fy);
    policy.spawn(fz);
    policy.spawn(fx);
    policy.spawn(fy);
    wait(policy);
    CHECK(z_saw_both.load());
  }
}

TEST_CASE("edges to already-complete tasks are no-ops", "[scheduler]") {
  TaskPolicy policy = TaskPolicy::sequential();
  Future done = policy.create([] {});
  policy.spawn(done);
  REQUIRE(done.complete());
  bool ran = false;
  Future f = policy.create([&ran] { ran = true; });
  policy.add_dependence(f, done);
  policy.spawn(f);
  CHECK(ran);
  wait(policy);
}

TEST_CASE("api misuse is rejected", "[scheduler]") {
  TaskPolicy policy = TaskPolicy::sequential();
  Future a = policy.create([] {});
  Future b = policy.create([] {});
  policy.spawn(a);
  CHECK_THROWS_AS(policy.add_dependence(a, b), std::logic_error);
  CHECK_THROWS_AS(policy.spawn(a), std::logic_error);

  TaskPolicy other = TaskPolicy::sequential();
  Future c = other.create([] {});
  CHECK_THROWS_AS(policy.add_dependence(b, c), std::logic_error);
  policy.spawn(b);
  wait(policy);
  other.spawn(c);
  wait(other);
}

TEST_CASE("reverse spawn order still respects the chain", "[scheduler]") {
  TaskPolicy policy = TaskPolicy::sequential();
  std::vector<int> order;
  Future a = policy.create([&order] { order.push_back(0); });
  Future b = policy.create([&order] { order.push_back(1); });
  Future c = policy.create([&order] { order.push_back(2); });
  policy.add_dependence(c, b);
  policy.add_dependence(b, a);
  policy.spawn(c);
  policy.spawn(b);
  policy.spawn(a);
  wait(policy);
  CHECK(order == std::vector<int>{0, 1, 2});
}

TEST_CASE("many independent tasks all run", "[scheduler]") {
  constexpr int n = 100000;
  TaskPolicy policy = TaskPolicy::pooled(4);
  std::atomic<long> sum{0};
  std::vector<Future> fs;
  fs.reserve(n);
  for (int i = 0; i < n; ++i) fs.push_back(policy.create([&sum] { sum++; }));
  for (auto& f : fs) policy.spawn(f);
  wait(policy);
  CHECK(sum.load() == n);
}

TEST_CASE("wait with no tasks returns immediately", "[scheduler]") {
  TaskPolicy seq = TaskPolicy::sequential();
  wait(seq);
  TaskPolicy pool = TaskPolicy::pooled(2);
  wait(pool);
}

TEST_CASE("sequential backend runs ready tasks FIFO and deterministically",
          "[scheduler]") {
  auto run_once = [] {
    TaskPolicy policy = TaskPolicy::sequential();
    std::vector<int> order;
    Future root = policy.create([&order] { order.push_back(-1); });
    std::vector<Future> kids;
    for (int i = 0; i < 6; ++i) {
      kids.push_back(policy.create([&order, i] { order.push_back(i); }));
      policy.add_dependence(kids.back(), root);
    }
    for (auto& k : kids) policy.spawn(k);
    policy.spawn(root);
    wait(policy);
    return order;
  };
  const auto first = run_once();
  CHECK(first == std::vector<int>{-1, 0, 1, 2, 3, 4, 5});
  CHECK(run_once() == first);
}

TEST_CASE("randomized DAG stress keeps dependence soundness", "[scheduler]") {
  std::mt19937 rng(31415);
  for (int rep = 0; rep < 120; ++rep) {
    const RandomDag d = make_dag(rng, 120, 4);
    const int workers = 1 + rep % 8;
    if (rep % 3 == 0) {
      TaskPolicy policy = TaskPolicy::sequential();
      run_dag_and_check(d, policy);
    } else {
      TaskPolicy policy = TaskPolicy::pooled(workers);
      run_dag_and_check(d, policy);
    }
  }
}

TEST_CASE("planted cycle is reported instead of hanging", "[scheduler]") {
  for (const bool pooled : {false, true}) {
    TaskPolicy policy = pooled ? TaskPolicy::pooled(2)
                               : TaskPolicy::sequential();
    policy.enable_cycle_detection();
    Future a = policy.create([] {});
    Future b = policy.create([] {});
    policy.add_dependence(a, b);
    policy.add_dependence(b, a);
    policy.spawn(a);
    policy.spawn(b);
    CHECK_THROWS_WITH(wait(policy),
                      Catch::Matchers::ContainsSubstring("cycle"));
  }
}

TEST_CASE("task exceptions surface at wait", "[scheduler]") {
  TaskPolicy policy = TaskPolicy::pooled(2);
  Future f = policy.create([] { throw std::runtime_error("task body failed"); });
  policy.spawn(f);
  CHECK_THROWS_WITH(wait(policy),
                    Catch::Matchers::ContainsSubstring("task body failed"));
}

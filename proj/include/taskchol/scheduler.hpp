#pragma once

/// \file scheduler.hpp
/// \brief Dependence-driven task execution: policies, futures, spawn, wait.
///
/// A policy owns a group of related tasks. create() allocates a task
/// without scheduling it; add_dependence(f, dep) delays f until dep has
/// completed; spawn() makes the task eligible; wait() returns once every
/// spawned task of the policy, including tasks that become ready during
/// the wait, has completed. Tasks are non-preemptive and non-blocking:
/// a task body never waits on another task.
///
/// Two backends share these semantics. The sequential backend runs ready
/// tasks on the calling thread in FIFO order of becoming ready (ties by
/// spawn order), so runs are reproducible. The pooled backend executes on
/// a fixed set of workers fed from a shared ready queue; completion of a
/// task decrements its dependents' counters and enqueues those that
/// reach zero.

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

namespace taskchol {

enum class TaskState : int {
  created = 0,
  spawned_waiting = 1,
  ready = 2,
  executing = 3,
  complete = 4,
};

class TaskPolicy;

namespace detail {

struct Task {
  std::function<void()> work;
  std::vector<Task*> dependents;  // tasks waiting on this one
  std::vector<Task*> dependences; // kept for cycle reporting
  int unsatisfied = 0;
  bool spawned = false;
  std::atomic<int> state{static_cast<int>(TaskState::created)};
  std::uint64_t id = 0;
  TaskPolicy* owner = nullptr;
};

}  // namespace detail

/// Handle to a task; used to wire dependences and observe completion.
class Future {
 public:
  Future() = default;

  bool valid() const { return task_ != nullptr; }

  TaskState state() const {
    if (!task_) throw std::logic_error("future: empty");
    return static_cast<TaskState>(task_->state.load(std::memory_order_acquire));
  }

  bool complete() const { return state() == TaskState::complete; }

 private:
  friend class TaskPolicy;
  explicit Future(std::shared_ptr<detail::Task> t) : task_(std::move(t)) {}
  std::shared_ptr<detail::Task> task_;
};

class SchedulerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TaskPolicy {
 public:
  static TaskPolicy sequential() { return TaskPolicy(0); }
  static TaskPolicy pooled(int workers) {
    if (workers < 1)
      throw std::invalid_argument("pooled policy needs at least one worker");
    return TaskPolicy(workers);
  }

  ~TaskPolicy() { shutdown(); }

  TaskPolicy(const TaskPolicy&) = delete;
  TaskPolicy& operator=(const TaskPolicy&) = delete;
  TaskPolicy(TaskPolicy&&) = delete;
  TaskPolicy& operator=(TaskPolicy&&) = delete;

  bool pooled_backend() const { return workers_requested_ > 0; }
  int worker_count() const { return pooled_backend() ? workers_requested_ : 1; }

  /// Cycle reporting on stalled waits; costs a DFS, debug use only.
  void enable_cycle_detection(bool on = true) { debug_cycles_ = on; }

  /// Allocates a task around `work`; the task is not runnable until spawned.
  Future create(std::function<void()> work) {
    auto t = std::make_shared<detail::Task>();
    t->work = std::move(work);
    t->owner = this;
    t->id = next_id_++;
    {
      std::lock_guard<std::mutex> lk(mu_);
      registry_.push_back(t);
    }
    return Future(t);
  }

  /// f will not execute until dep completes. A dep that already completed
  /// is a no-op edge. f must not have been spawned yet.
  void add_dependence(const Future& f, const Future& dep) {
    detail::Task* t = require(f);
    detail::Task* d = require(dep);
    if (t->owner != this || d->owner != this)
      throw std::logic_error("add_dependence: tasks belong to another policy");
    std::lock_guard<std::mutex> lk(mu_);
    if (t->spawned)
      throw std::logic_error("add_dependence: task already spawned");
    t->dependences.push_back(d);
    if (d->state.load(std::memory_order_relaxed) ==
        static_cast<int>(TaskState::complete))
      return;
    d->dependents.push_back(t);
    t->unsatisfied++;
  }

  /// Schedules f. With no unsatisfied dependences it may execute at once,
  /// possibly completing before spawn returns (sequential backend).
  void spawn(const Future& f) {
    detail::Task* t = require(f);
    if (t->owner != this)
      throw std::logic_error("spawn: task belongs to another policy");
    bool run_now = false;
    {
      std::lock_guard<std::mutex> lk(mu_);
      if (t->spawned) throw std::logic_error("spawn: task already spawned");
      t->spawned = true;
      ++pending_;
      if (t->unsatisfied == 0) {
        set_state(t, TaskState::ready);
        ready_.push_back(t);
        if (pooled_backend()) {
          start_workers_locked();
          cv_ready_.notify_one();
        } else {
          run_now = !draining_;
        }
      } else {
        set_state(t, TaskState::spawned_waiting);
      }
    }
    if (run_now) drain_sequential();
  }

  /// Blocks until every spawned task has completed. Throws SchedulerError
  /// when no progress is possible; with cycle detection on, the message
  /// names a dependence cycle.
  void wait() {
    if (!pooled_backend()) {
      drain_sequential();
      std::lock_guard<std::mutex> lk(mu_);
      if (pending_ > 0) throw_stalled_locked();
      rethrow_task_error_locked();
      return;
    }
    std::unique_lock<std::mutex> lk(mu_);
    cv_done_.wait(lk, [&] {
      return pending_ == 0 || (ready_.empty() && executing_ == 0);
    });
    if (pending_ > 0) throw_stalled_locked();
    rethrow_task_error_locked();
  }

  std::uint64_t executed_count() const { return executed_.load(); }

 private:
  explicit TaskPolicy(int workers) : workers_requested_(workers) {}

  static detail::Task* require(const Future& f) {
    if (!f.valid()) throw std::logic_error("empty future");
    return f.task_.get();
  }

  static void set_state(detail::Task* t, TaskState s) {
    t->state.store(static_cast<int>(s), std::memory_order_release);
  }

  void drain_sequential() {
    draining_ = true;
    while (true) {
      detail::Task* t = nullptr;
      {
        std::lock_guard<std::mutex> lk(mu_);
        if (ready_.empty()) break;
        t = ready_.front();
        ready_.pop_front();
      }
      run_body(t);
      std::lock_guard<std::mutex> lk(mu_);
      complete_locked(t, false);
    }
    draining_ = false;
  }

  void run_body(detail::Task* t) {
    set_state(t, TaskState::executing);
    if (t->work) {
      try {
        t->work();
      } catch (...) {
        std::lock_guard<std::mutex> lk(mu_);
        if (!task_error_) task_error_ = std::current_exception();
      }
    }
  }

  // Marks t complete and readies its dependents. When `take_continuation`
  // the first newly-ready dependent is returned for the caller to run
  // directly instead of a queue round-trip; the sequential backend keeps
  // strict FIFO and never takes one.
  detail::Task* complete_locked(detail::Task* t, bool take_continuation) {
    set_state(t, TaskState::complete);
    ++executed_;
    detail::Task* next = nullptr;
    for (detail::Task* dep : t->dependents) {
      if (--dep->unsatisfied == 0 && dep->spawned) {
        set_state(dep, TaskState::ready);
        if (take_continuation && next == nullptr) {
          next = dep;
        } else {
          ready_.push_back(dep);
          if (pooled_backend()) cv_ready_.notify_one();
        }
      }
    }
    t->dependents.clear();
    --pending_;
    if (pooled_backend() && pending_ == 0) cv_done_.notify_all();
    return next;
  }

  void worker_loop() {
    std::unique_lock<std::mutex> lk(mu_);
    while (true) {
      cv_ready_.wait(lk, [&] { return stop_ || !ready_.empty(); });
      if (stop_ && ready_.empty()) return;
      detail::Task* t = ready_.front();
      ready_.pop_front();
      ++executing_;
      while (t) {
        lk.unlock();
        run_body(t);
        lk.lock();
        t = complete_locked(t, true);
      }
      --executing_;
      if (pending_ == 0 || (ready_.empty() && executing_ == 0))
        cv_done_.notify_all();
    }
  }

  void start_workers_locked() {
    if (!workers_.empty()) return;
    workers_.reserve(workers_requested_);
    for (int w = 0; w < workers_requested_; ++w)
      workers_.emplace_back([this] { worker_loop(); });
  }

  void shutdown() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      stop_ = true;
      cv_ready_.notify_all();
    }
    for (auto& w : workers_) w.join();
    workers_.clear();
  }

  void rethrow_task_error_locked() {
    if (task_error_) {
      auto e = task_error_;
      task_error_ = nullptr;
      std::rethrow_exception(e);
    }
  }

  [[noreturn]] void throw_stalled_locked() {
    std::string msg = "scheduler stalled: " + std::to_string(pending_) +
                      " spawned task(s) can never become ready";
    if (debug_cycles_) {
      const auto cycle = find_cycle_locked();
      if (!cycle.empty()) {
        msg += "; dependence cycle:";
        for (const auto id : cycle) msg += " task#" + std::to_string(id);
      }
    }
    throw SchedulerError(msg);
  }

  // DFS over dependence edges of incomplete tasks; returns task ids on a
  // cycle, empty when none found.
  std::vector<std::uint64_t> find_cycle_locked() const {
    enum { White, Grey, Black };
    std::unordered_map<const detail::Task*, int> color;
    std::vector<const detail::Task*> path;
    std::vector<std::uint64_t> cycle;

    std::function<bool(const detail::Task*)> dfs = [&](const detail::Task* t) {
      int& mark = color[t];
      if (mark == Grey) {
        for (auto it = path.rbegin(); it != path.rend(); ++it) {
          cycle.push_back((*it)->id);
          if (*it == t) break;
        }
        return true;
      }
      if (mark == Black) return false;
      mark = Grey;
      path.push_back(t);
      for (const detail::Task* d : t->dependences)
        if (d->state.load() != static_cast<int>(TaskState::complete) && dfs(d))
          return true;
      path.pop_back();
      color[t] = Black;
      return false;
    };

    for (const auto& t : registry_)
      if (t->spawned &&
          t->state.load() != static_cast<int>(TaskState::complete) &&
          dfs(t.get()))
        return cycle;
    return cycle;
  }

  const int workers_requested_;
  bool debug_cycles_ = false;

  std::mutex mu_;
  std::condition_variable cv_ready_;
  std::condition_variable cv_done_;
  std::deque<detail::Task*> ready_;
  std::vector<std::shared_ptr<detail::Task>> registry_;
  std::vector<std::thread> workers_;
  std::exception_ptr task_error_;
  long long pending_ = 0;
  int executing_ = 0;
  bool stop_ = false;
  bool draining_ = false;  // sequential backend only; single-threaded use
  std::atomic<std::uint64_t> executed_{0};
  std::uint64_t next_id_ = 0;
};

/// Waits for all tasks of a policy; mirrors the free-function call shape.
inline void wait(TaskPolicy& policy) { policy.wait(); }

}  // namespace taskchol

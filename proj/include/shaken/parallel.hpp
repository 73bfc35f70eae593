#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace shaken {

// Fixed-size worker pool. Work is split into blocks whose boundaries depend
// only on the problem size, never on the thread count; with addressed
// randomness and block-ordered reductions this keeps results bit-identical
// for any pool size.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t threads) : threads_(std::max<std::size_t>(threads, 1)) {
    for (std::size_t i = 1; i < threads_; ++i) workers_.emplace_back([this] { worker_loop(); });
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  ~WorkerPool() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    wake_.notify_all();
    for (auto& t : workers_) t.join();
  }

  std::size_t size() const noexcept { return threads_; }

  // Calls fn(block) for every block in [0, blocks). The caller participates.
  void run(std::size_t blocks, const std::function<void(std::size_t)>& fn) {
    if (blocks == 0) return;
    if (threads_ == 1 || blocks == 1) {
      for (std::size_t b = 0; b < blocks; ++b) fn(b);
      return;
    }
    std::unique_lock run_lock(run_mutex_);
    {
      std::lock_guard lock(mutex_);
      job_ = &fn;
      job_blocks_ = blocks;
      next_block_.store(0);
      active_ = workers_.size();
      error_ = nullptr;
      ++generation_;
    }
    wake_.notify_all();
    drain();
    std::unique_lock lock(mutex_);
    done_.wait(lock, [this] { return active_ == 0; });
    job_ = nullptr;
    if (error_) std::rethrow_exception(error_);
  }

 private:
  void drain() {
    for (;;) {
      const std::size_t b = next_block_.fetch_add(1);
      if (b >= job_blocks_) return;
      try {
        (*job_)(b);
      } catch (...) {
        std::lock_guard lock(mutex_);
        if (!error_) error_ = std::current_exception();
      }
    }
  }

  void worker_loop() {
    std::size_t seen = 0;
    for (;;) {
      {
        std::unique_lock lock(mutex_);
        wake_.wait(lock, [&] { return stopping_ || generation_ != seen; });
        if (stopping_) return;
        seen = generation_;
      }
      drain();
      {
        std::lock_guard lock(mutex_);
        if (--active_ == 0) done_.notify_one();
      }
    }
  }

  std::size_t threads_;
  std::vector<std::thread> workers_;
  std::mutex run_mutex_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(std::size_t)>* job_ = nullptr;
  std::size_t job_blocks_ = 0;
  std::atomic<std::size_t> next_block_{0};
  std::size_t active_ = 0;
  std::size_t generation_ = 0;
  bool stopping_ = false;
  std::exception_ptr error_;
};

namespace detail {
inline std::unique_ptr<WorkerPool>& pool_slot() {
  static std::unique_ptr<WorkerPool> pool;
  return pool;
}
}  // namespace detail

inline std::size_t hardware_threads() {
  return std::max<std::size_t>(std::thread::hardware_concurrency(), 1);
}

// Replaces the process-wide pool. Not safe to call while work is running.
inline void set_thread_count(std::size_t threads) {
  detail::pool_slot() = std::make_unique<WorkerPool>(threads == 0 ? hardware_threads() : threads);
}

inline WorkerPool& worker_pool() {
  auto& slot = detail::pool_slot();
  if (!slot) slot = std::make_unique<WorkerPool>(1);
  return *slot;
}

inline std::size_t thread_count() { return worker_pool().size(); }

inline constexpr std::size_t kParallelGrain = 4096;

// fn(begin, end) over [0, n) in fixed blocks of kParallelGrain.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t blocks = (n + kParallelGrain - 1) / kParallelGrain;
  if (blocks <= 1) {
    if (n > 0) fn(std::size_t{0}, n);
    return;
  }
  worker_pool().run(blocks, [&](std::size_t b) {
    const std::size_t begin = b * kParallelGrain;
    fn(begin, std::min(n, begin + kParallelGrain));
  });
}

// Sum of term(i) over [0, n); per-block partials are combined in block order.
template <class Term>
double deterministic_sum(std::size_t n, Term&& term) {
  const std::size_t blocks = (n + kParallelGrain - 1) / kParallelGrain;
  std::vector<double> partial(blocks, 0.0);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += term(i);
    partial[begin / kParallelGrain] = s;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace shaken

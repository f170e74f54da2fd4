#pragma once

#include <atomic>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace homlab {

// Persistent worker pool with a single blocking ParallelFor. Work items are
// claimed by atomic counter, so scheduling is dynamic; determinism of the
// results is the caller's job (per-index isolation plus ordered reduction).
class ThreadPool {
 public:
  explicit ThreadPool(int threads) {
    const int n = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    size_ = n > 0 ? n : 1;
    for (int i = 1; i < size_; ++i) {
      workers_.emplace_back([this, i] { WorkerLoop(i); });
    }
  }

  ~ThreadPool() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : workers_) t.join();
  }

  int size() const { return size_; }

  // Runs fn(index, worker_slot) for index in [0, n); worker_slot < size().
  // The calling thread participates as slot 0. Exceptions from fn propagate
  // to the caller (first one wins).
  void ParallelFor(int64_t n, const std::function<void(int64_t, int)>& fn) {
    if (n <= 0) return;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      job_ = &fn;
      job_total_ = n;
      job_next_.store(0, std::memory_order_relaxed);
      job_active_ = static_cast<int>(workers_.size());
      ++job_generation_;
    }
    cv_.notify_all();
    RunShare(fn);
    std::unique_lock<std::mutex> lock(mutex_);
    done_cv_.wait(lock, [this] { return job_active_ == 0; });
    job_ = nullptr;
    if (error_) {
      auto e = error_;
      error_ = nullptr;
      std::rethrow_exception(e);
    }
  }

 private:
  void RunShare(const std::function<void(int64_t, int)>& fn, int slot = 0) {
    while (true) {
      const int64_t i = job_next_.fetch_add(1, std::memory_order_relaxed);
      if (i >= job_total_) break;
      try {
        fn(i, slot);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mutex_);
        if (!error_) error_ = std::current_exception();
      }
    }
  }

  void WorkerLoop(int slot) {
    uint64_t seen_generation = 0;
    while (true) {
      const std::function<void(int64_t, int)>* job = nullptr;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] { return stop_ || job_generation_ != seen_generation; });
        if (stop_) return;
        seen_generation = job_generation_;
        job = job_;
      }
      if (job) RunShare(*job, slot);
      {
        std::lock_guard<std::mutex> lock(mutex_);
        --job_active_;
      }
      done_cv_.notify_one();
    }
  }

  std::vector<std::thread> workers_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  const std::function<void(int64_t, int)>* job_ = nullptr;
  std::atomic<int64_t> job_next_{0};
  int64_t job_total_ = 0;
  int job_active_ = 0;
  uint64_t job_generation_ = 0;
  std::exception_ptr error_;
  bool stop_ = false;
  int size_ = 1;
};

}  // namespace homlab

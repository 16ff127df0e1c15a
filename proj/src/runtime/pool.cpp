#include "mies/runtime.hpp"

#include <algorithm>

namespace mies::runtime {

int default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

WorkerPool::WorkerPool(int threads) {
  if (threads < 1) throw std::invalid_argument("worker pool needs at least one thread");
  for (int i = 1; i < threads; ++i) helpers_.emplace_back([this] { helper_loop(); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  wake_.notify_all();
  for (auto& t : helpers_) t.join();
}

// Claims indices of the current job until none are left.
void WorkerPool::drain() {
  std::unique_lock lock(mutex_);
  while (job_ && next_ < job_size_) {
    const int i = next_++;
    const auto* fn = job_;
    lock.unlock();
    (*fn)(i);
    lock.lock();
    if (--pending_ == 0) done_.notify_all();
  }
}

void WorkerPool::helper_loop() {
  long seen = 0;
  for (;;) {
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
    }
    drain();
  }
}

void WorkerPool::parallel_for(int n, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (helpers_.empty() || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  {
    std::lock_guard lock(mutex_);
    job_ = &fn;
    job_size_ = n;
    next_ = 0;
    pending_ = n;
    ++generation_;
  }
  wake_.notify_all();
  drain();
  std::unique_lock lock(mutex_);
  done_.wait(lock, [&] { return pending_ == 0; });
  job_ = nullptr;
}

}  // namespace mies::runtime

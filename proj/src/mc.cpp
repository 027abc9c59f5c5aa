#include "perc/mc.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace perc {

void run_chunks(uint64_t n_chunks, int workers, const std::function<void(uint64_t)>& body) {
  if (workers < 1) workers = 1;
  if (workers == 1 || n_chunks <= 1) {
    std::exception_ptr err;
    for (uint64_t c = 0; c < n_chunks; ++c) {
      try {
        body(c);
      } catch (...) {
        if (!err) err = std::current_exception();
        // keep going so the lowest-index failure is the one reported
        break;
      }
    }
    if (err) std::rethrow_exception(err);
    return;
  }
  std::atomic<uint64_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex err_mu;
  std::exception_ptr err;
  uint64_t err_chunk = UINT64_MAX;
  auto work = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      uint64_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      try {
        body(c);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (c < err_chunk) {
          err_chunk = c;
          err = std::current_exception();
        }
        failed.store(true);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int i = 0; i < workers; ++i) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace perc

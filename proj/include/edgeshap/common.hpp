#pragma once

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace edgeshap {

using NodeId = std::int32_t;

// All errors surface as this type so callers can catch one thing at the
// boundary. The message carries enough context (file, line number, value)
// to act on without a debugger.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) fail(msg);
}

// Binomial coefficient with saturation instead of overflow. Anything past
// ~4.6e18 is treated as "effectively infinite": these values are only ever
// compared against sample budgets, which are far smaller.
inline std::int64_t binom(int n, int r) {
  if (r < 0 || r > n) return 0;
  if (r > n - r) r = n - r;
  constexpr std::int64_t kSat = std::numeric_limits<std::int64_t>::max() / 2;
  unsigned __int128 acc = 1;
  for (int i = 1; i <= r; ++i) {
    acc = acc * static_cast<unsigned>(n - r + i) / static_cast<unsigned>(i);
    if (acc > static_cast<unsigned __int128>(kSat)) return kSat;
  }
  return static_cast<std::int64_t>(acc);
}

// Round half away from zero, the convention used throughout sample
// allocation. llround matches it for the non-negative values we feed in,
// but spelling it out keeps the intent visible.
inline std::int64_t round_half_up(double x) {
  return static_cast<std::int64_t>(x + 0.5);
}

// Resolve a worker count: explicit request wins, then the EDGESHAP_THREADS
// environment variable, then hardware concurrency.
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("EDGESHAP_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<int>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Run fn(chunk_index, begin, end) over [0, total) split into contiguous
// chunks, one per worker. Chunk boundaries depend only on (total, workers),
// never on scheduling, so any value computed per-index is reproducible.
inline void parallel_chunks(
    std::int64_t total, int workers,
    const std::function<void(int, std::int64_t, std::int64_t)>& fn) {
  if (total <= 0) return;
  if (workers < 1) workers = 1;
  if (workers > total) workers = static_cast<int>(total);
  if (workers == 1) {
    fn(0, 0, total);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::vector<std::exception_ptr> errors(workers);
  const std::int64_t base = total / workers;
  const std::int64_t extra = total % workers;
  std::int64_t begin = 0;
  for (int w = 0; w < workers; ++w) {
    std::int64_t len = base + (w < extra ? 1 : 0);
    std::int64_t end = begin + len;
    pool.emplace_back([&fn, &errors, w, begin, end] {
      try {
        fn(w, begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
    begin = end;
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace edgeshap

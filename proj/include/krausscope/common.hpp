#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <string_view>
#include <thread>
#include <vector>

namespace krausscope {

using cd = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s, exact

inline double factorial(int n) { return std::tgamma(n + 1.0); }

// 2-D spatial frequency vector (inverse length).
struct Freq2 {
  double x = 0.0;
  double y = 0.0;
  double norm2() const { return x * x + y * y; }
};

inline Freq2 operator+(Freq2 a, Freq2 b) { return {a.x + b.x, a.y + b.y}; }
inline Freq2 operator-(Freq2 a, Freq2 b) { return {a.x - b.x, a.y - b.y}; }
inline Freq2 operator*(double s, Freq2 a) { return {s * a.x, s * a.y}; }

// Worker count: KRAUS_SCOPE_THREADS caps parallelism, else hardware concurrency.
inline int thread_budget() {
  if (const char* env = std::getenv("KRAUS_SCOPE_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0, n). Each task writes its own slot, so results do not
// depend on the thread count or schedule.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const int workers = std::min<std::size_t>(thread_budget(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace krausscope

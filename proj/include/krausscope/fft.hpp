#pragma once

#include <stdexcept>
#include <vector>

#include "krausscope/common.hpp"

namespace krausscope {

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT, unnormalized. sign = -1 forward, +1 inverse.
inline void fft_radix2(std::vector<cd>& a, int sign) {
  const std::size_t n = a.size();
  if (!is_power_of_two(static_cast<int>(n))) throw std::invalid_argument("fft_radix2: size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * kPi / static_cast<double>(len);
    const cd wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cd w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const cd u = a[i + k];
        const cd v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// Unnormalized 2-D transform of an n-by-n row-major grid.
inline void fft2_radix2(std::vector<cd>& grid, int n, int sign) {
  if (static_cast<std::size_t>(n) * n != grid.size()) throw std::invalid_argument("fft2_radix2: grid size mismatch");
  std::vector<cd> line(n);
  for (int r = 0; r < n; ++r) {
    line.assign(grid.begin() + static_cast<std::size_t>(r) * n, grid.begin() + static_cast<std::size_t>(r + 1) * n);
    fft_radix2(line, sign);
    std::copy(line.begin(), line.end(), grid.begin() + static_cast<std::size_t>(r) * n);
  }
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < n; ++r) line[r] = grid[static_cast<std::size_t>(r) * n + c];
    fft_radix2(line, sign);
    for (int r = 0; r < n; ++r) grid[static_cast<std::size_t>(r) * n + c] = line[r];
  }
}

}  // namespace krausscope

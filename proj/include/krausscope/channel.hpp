#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "krausscope/common.hpp"
#include "krausscope/fft.hpp"
#include "krausscope/modes.hpp"
#include "krausscope/rng.hpp"

namespace krausscope {

// Expected departure of a pure-phase-screen Kraus matrix from exact identity /
// unitarity at the default grid resolutions.
inline constexpr double kDefaultKrausQuadTolerance = 1e-6;

// Sampled 2-D phase grid (radians), row-major, cell-centered coordinates.
struct PhaseScreen {
  int side = 0;
  double dx = 0.0;
  double r0 = -1.0;  // Fried parameter metadata; <= 0 means not applicable
  std::uint64_t seed = 0;
  std::vector<double> grid;

  double at(int ix, int iy) const { return grid[static_cast<std::size_t>(iy) * side + ix]; }
  double& at(int ix, int iy) { return grid[static_cast<std::size_t>(iy) * side + ix]; }
  double coord(int i) const { return (i - side / 2 + 0.5) * dx; }
  double extent() const { return side * dx; }

  static PhaseScreen uniform(int side, double dx, double value) {
    validate_grid(side, dx);
    PhaseScreen s;
    s.side = side;
    s.dx = dx;
    s.grid.assign(static_cast<std::size_t>(side) * side, value);
    return s;
  }

  static void validate_grid(int side, double dx) {
    if (side < 64) throw std::domain_error("PhaseScreen: side must be >= 64 samples");
    if (!(dx > 0.0)) throw std::domain_error("PhaseScreen: grid spacing must be positive");
  }
};

namespace channel_detail {

// Mean of the Kolmogorov PSD over one frequency cell. Point sampling badly
// undercounts the steep f^(-11/3) spectrum near DC; the low-order cells use a
// midpoint sub-grid instead.
inline double kolmogorov_cell_power(int jx, int jy, double df, double r0_pow) {
  const double point_f = std::hypot(jx * df, jy * df);
  if (std::abs(jx) > 4 || std::abs(jy) > 4) return 0.023 * r0_pow * std::pow(point_f, -11.0 / 3.0);
  const int sub = 16;
  double acc = 0.0;
  for (int a = 0; a < sub; ++a) {
    const double fx = (jx - 0.5 + (a + 0.5) / sub) * df;
    for (int b = 0; b < sub; ++b) {
      const double fy = (jy - 0.5 + (b + 0.5) / sub) * df;
      acc += std::pow(fx * fx + fy * fy, -11.0 / 6.0);
    }
  }
  return 0.023 * r0_pow * acc / (sub * sub);
}

}  // namespace channel_detail

// FFT synthesis of a Kolmogorov phase screen: each frequency bin draws a
// complex Gaussian with the cell-integrated power of 0.023 r0^(-5/3) f^(-11/3)
// and the screen is the real part of the inverse transform. No subharmonics,
// so scales at and beyond the grid size carry less power than the ideal
// spectrum; the structure function is accurate at separations well below the
// grid size.
inline PhaseScreen kolmogorov_screen(double r0, int side, double dx, std::uint64_t seed) {
  if (!(r0 > 0.0)) throw std::domain_error("kolmogorov_screen: Fried parameter must be positive");
  PhaseScreen::validate_grid(side, dx);
  if (!is_power_of_two(side)) throw std::domain_error("kolmogorov_screen: side must be a power of two");

  const double df = 1.0 / (side * dx);
  const double r0_pow = std::pow(r0, -5.0 / 3.0);
  Rng rng(seed);
  std::vector<cd> spec(static_cast<std::size_t>(side) * side);
  for (int jy = 0; jy < side; ++jy) {
    const int fy_idx = jy < side / 2 ? jy : jy - side;
    for (int jx = 0; jx < side; ++jx) {
      const int fx_idx = jx < side / 2 ? jx : jx - side;
      const double g1 = rng.gaussian();
      const double g2 = rng.gaussian();
      if (fx_idx == 0 && fy_idx == 0) {
        spec[static_cast<std::size_t>(jy) * side + jx] = cd(0.0, 0.0);
        continue;
      }
      const double amp = std::sqrt(channel_detail::kolmogorov_cell_power(fx_idx, fy_idx, df, r0_pow)) * df;
      spec[static_cast<std::size_t>(jy) * side + jx] = cd(amp * g1, amp * g2);
    }
  }
  fft2_radix2(spec, side, +1);

  PhaseScreen screen;
  screen.side = side;
  screen.dx = dx;
  screen.r0 = r0;
  screen.seed = seed;
  screen.grid.resize(spec.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    screen.grid[i] = spec[i].real();
    mean += screen.grid[i];
  }
  mean /= static_cast<double>(spec.size());
  for (double& v : screen.grid) v -= mean;
  return screen;
}

struct ZernikeTerm {
  int n = 0;          // radial order
  int m = 0;          // signed azimuthal order; m >= 0 -> cos, m < 0 -> sin
  double amplitude = 0.0;  // radians at the aperture edge (for |R| = 1 terms)
};

namespace channel_detail {

inline double zernike_radial(int n, int m_abs, double rho) {
  double sum = 0.0;
  for (int s = 0; s <= (n - m_abs) / 2; ++s) {
    const double num = ((s % 2 == 0) ? 1.0 : -1.0) * factorial(n - s);
    const double den = factorial(s) * factorial((n + m_abs) / 2 - s) * factorial((n - m_abs) / 2 - s);
    sum += num / den * std::pow(rho, n - 2 * s);
  }
  return sum;
}

}  // namespace channel_detail

// Deterministic aberration screen: sum of (unnormalized) Zernike terms on the
// aperture, zero outside.
inline PhaseScreen zernike_screen(const std::vector<ZernikeTerm>& coeffs, int side, double dx,
                                  double aperture_radius) {
  PhaseScreen::validate_grid(side, dx);
  if (!(aperture_radius > 0.0)) throw std::domain_error("zernike_screen: aperture radius must be positive");
  for (const auto& t : coeffs) {
    const int m_abs = t.m < 0 ? -t.m : t.m;
    if (t.n < 0 || m_abs > t.n || (t.n - m_abs) % 2 != 0)
      throw std::domain_error("zernike_screen: invalid order (n " + std::to_string(t.n) + ", m " +
                              std::to_string(t.m) + ")");
  }
  PhaseScreen screen = PhaseScreen::uniform(side, dx, 0.0);
  for (int iy = 0; iy < side; ++iy) {
    const double y = screen.coord(iy);
    for (int ix = 0; ix < side; ++ix) {
      const double x = screen.coord(ix);
      const double rho = std::hypot(x, y) / aperture_radius;
      if (rho > 1.0) continue;
      const double theta = std::atan2(y, x);
      double phase = 0.0;
      for (const auto& t : coeffs) {
        const int m_abs = t.m < 0 ? -t.m : t.m;
        const double radial = channel_detail::zernike_radial(t.n, m_abs, rho);
        const double angular = t.m >= 0 ? std::cos(m_abs * theta) : std::sin(m_abs * theta);
        phase += t.amplitude * radial * angular;
      }
      screen.at(ix, iy) = phase;
    }
  }
  return screen;
}

// Kraus matrix over a labeled OAM basis: entries(m, n) maps input mode
// basis[n] to output mode basis[m].
struct KrausMatrix {
  Eigen::MatrixXcd entries;
  std::vector<int> basis;
  double waist = 1.0;

  int dimension() const { return static_cast<int>(basis.size()); }

  int index_of(int ell) const {
    for (std::size_t i = 0; i < basis.size(); ++i)
      if (basis[i] == ell) return static_cast<int>(i);
    return -1;
  }
};

// T_mn = int conj(LG_m(r)) exp(i phi(r)) LG_n(r) d2r by midpoint quadrature on
// the screen grid, all modes at a common waist.
inline KrausMatrix kraus_from_screen(const PhaseScreen& screen, const std::vector<int>& basis, double waist) {
  if (basis.empty()) throw std::domain_error("kraus_from_screen: basis must be nonempty");
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = i + 1; j < basis.size(); ++j)
      if (basis[i] == basis[j]) throw std::domain_error("kraus_from_screen: basis indices must be distinct");
  const double bound = screen.extent() / 6.0;
  if (!(waist > 0.0) || waist > bound)
    throw std::domain_error("kraus_from_screen: waist must satisfy 0 < waist <= side*dx/6 = " +
                            std::to_string(bound));

  const int d = static_cast<int>(basis.size());
  const int side = screen.side;
  const std::size_t npix = static_cast<std::size_t>(side) * side;
  Eigen::MatrixXcd mode_vals(npix, d);
  Eigen::VectorXcd phase(npix);
  std::vector<AzimuthalMode> modes;
  modes.reserve(d);
  for (int ell : basis) modes.emplace_back(ell, waist);
  for (int iy = 0; iy < side; ++iy) {
    const double y = screen.coord(iy);
    for (int ix = 0; ix < side; ++ix) {
      const double x = screen.coord(ix);
      const std::size_t row = static_cast<std::size_t>(iy) * side + ix;
      phase(row) = std::exp(cd(0.0, screen.at(ix, iy)));
      for (int c = 0; c < d; ++c) mode_vals(row, c) = lg_real_space(modes[c], x, y);
    }
  }
  KrausMatrix out;
  out.entries = mode_vals.adjoint() * phase.asDiagonal() * mode_vals * (screen.dx * screen.dx);
  out.basis = basis;
  out.waist = waist;
  return out;
}

// Haar-random unitary from QR of a complex Ginibre draw, diagonal of R phase
// fixed. Deterministic per seed. Basis labels are consecutive azimuthal
// indices centered on zero; the waist is a nominal tag.
inline KrausMatrix random_unitary_channel(int d, std::uint64_t seed, double waist = 1.0) {
  if (d < 2) throw std::domain_error("random_unitary_channel: dimension must be >= 2");
  Rng rng(seed);
  Eigen::MatrixXcd z(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const double re = rng.gaussian();
      const double im = rng.gaussian();
      z(i, j) = cd(re, im) / std::sqrt(2.0);
    }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
  Eigen::MatrixXcd q = qr.householderQ();
  const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j) {
    const cd rjj = r(j, j);
    const double mag = std::abs(rjj);
    q.col(j) *= (mag > 0.0 ? rjj / mag : cd(1.0, 0.0));
  }
  KrausMatrix out;
  out.entries = q;
  out.basis.resize(d);
  const int start = -((d - 1) / 2);
  for (int i = 0; i < d; ++i) out.basis[i] = start + i;
  out.waist = waist;
  return out;
}

}  // namespace krausscope

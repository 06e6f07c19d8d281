#include <doctest.h>

#include <cmath>

#include "krausscope/modes.hpp"
#include "test_util.hpp"

using namespace krausscope;

TEST_CASE("lg_norm matches the closed form") {
  CHECK(lg_norm(0, 1.0) == doctest::Approx(std::sqrt(2.0 * kPi)).epsilon(1e-14));
  CHECK(lg_norm(2, 1.0) == doctest::Approx(std::sqrt(4.0 * kPi)).epsilon(1e-14));
  // |l| = 3 term by hand: w (2 pi 2^3 / 3!)^(1/2)
  CHECK(lg_norm(-3, 0.5) == doctest::Approx(0.5 * std::sqrt(2.0 * kPi * 8.0 / 6.0)).epsilon(1e-14));
  CHECK_THROWS_AS(lg_norm(1, 0.0), std::domain_error);
  CHECK_THROWS_AS(lg_norm(1, -1.0), std::domain_error);
}

TEST_CASE("angular spectrum special values") {
  CHECK(lg_angular_spectrum(AzimuthalMode(0, 1.0), {0.0, 0.0}).real() ==
        doctest::Approx(std::sqrt(2.0 * kPi)).epsilon(1e-14));
  CHECK(std::abs(lg_angular_spectrum(AzimuthalMode(1, 1.0), {0.0, 0.0})) == doctest::Approx(0.0));
}

TEST_CASE("angular spectrum equals the finite-difference derivative of the generating function") {
  // Generating function in mu at a fixed spatial frequency; |l| derivatives at
  // mu = 0 reproduce the mode (independent oracle for the closed form).
  const double w = 0.8;
  const Freq2 a{0.1, -0.23};
  for (int ell = 1; ell <= 4; ++ell) {
    for (int sign : {+1, -1}) {
      const AzimuthalMode mode(sign * ell, w);
      const auto generating = [&](double mu) {
        const cd exponent = cd(0.0, kPi) * cd(a.x, mode.sign() * a.y) * w * mu;
        return lg_norm(mode.ell, w) * std::exp(exponent - kPi * kPi * w * w * a.norm2());
      };
      const cd oracle = testutil::fd_derivative(generating, ell, 0.02);
      const cd closed = lg_angular_spectrum(mode, a);
      CHECK(std::abs(closed - oracle) / std::abs(closed) < 1e-6);
    }
  }
  // The DERIVED single-point case: ell = 1, w = 1, a = (0.1, 0).
  const AzimuthalMode m1(1, 1.0);
  const auto gen = [&](double mu) {
    return lg_norm(1, 1.0) * std::exp(cd(0.0, kPi * 0.1 * mu) - kPi * kPi * 0.01);
  };
  const cd oracle = testutil::fd_derivative(gen, 1, 0.02);
  CHECK(std::abs(lg_angular_spectrum(m1, {0.1, 0.0}) - oracle) < 1e-8);
}

TEST_CASE("mode orthonormality over the spatial-frequency plane") {
  for (int li = -5; li <= 5; ++li) {
    for (int lj = -5; lj <= 5; ++lj) {
      const auto result = mode_inner_product(AzimuthalMode(li, 1.0), AzimuthalMode(lj, 1.0));
      CHECK_FALSE(result.waist_mismatch);
      const double expected = (li == lj) ? 1.0 : 0.0;
      CHECK(std::abs(std::abs(result.value) - expected) < 1e-8);
    }
  }
}

TEST_CASE("inner product at a non-unit common waist, two resolutions agree") {
  QuadratureSpec q32;
  q32.order = 32;
  QuadratureSpec q64;
  q64.order = 64;
  const AzimuthalMode m(-2, 0.7);
  const auto a = mode_inner_product(m, m, q32);
  const auto b = mode_inner_product(m, m, q64);
  CHECK(std::abs(a.value - b.value) < 1e-10);
  CHECK(std::abs(b.value - 1.0) < 1e-10);
}

TEST_CASE("mismatched waists set the warning flag instead of throwing") {
  const auto result = mode_inner_product(AzimuthalMode(1, 1.0), AzimuthalMode(1, 0.5));
  CHECK(result.waist_mismatch);
}

TEST_CASE("conjugation symmetry: -l at (ax, ay) equals +l at (ax, -ay)") {
  const double points[][2] = {{0.3, 0.1}, {-0.2, 0.4}, {0.05, -0.33}};
  for (int ell = 1; ell <= 4; ++ell) {
    for (const auto& p : points) {
      const cd lhs = lg_angular_spectrum(AzimuthalMode(-ell, 0.9), {p[0], p[1]});
      const cd rhs = lg_angular_spectrum(AzimuthalMode(ell, 0.9), {p[0], -p[1]});
      CHECK(std::abs(lhs - rhs) < 1e-14);
    }
  }
}

TEST_CASE("real-space modes are orthonormal and carry exp(i l theta)") {
  // Midpoint grid quadrature of <LG_i | LG_j>.
  const double w = 1.0;
  const int n = 220;
  const double half = 5.0 * w;
  const double h = 2.0 * half / n;
  for (int li : {-2, 0, 1, 3}) {
    for (int lj : {-2, 0, 1, 3}) {
      cd sum = 0.0;
      for (int iy = 0; iy < n; ++iy) {
        const double y = -half + (iy + 0.5) * h;
        for (int ix = 0; ix < n; ++ix) {
          const double x = -half + (ix + 0.5) * h;
          sum += std::conj(lg_real_space(AzimuthalMode(li, w), x, y)) *
                 lg_real_space(AzimuthalMode(lj, w), x, y);
        }
      }
      sum *= h * h;
      CHECK(std::abs(sum - (li == lj ? 1.0 : 0.0)) < 1e-8);
    }
  }
  // Azimuthal phase: rotating the point by phi multiplies the mode by e^{i l phi}.
  const AzimuthalMode m(3, w);
  const double phi = 0.7;
  const cd before = lg_real_space(m, 0.6, 0.2);
  const cd after = lg_real_space(m, 0.6 * std::cos(phi) - 0.2 * std::sin(phi),
                                 0.6 * std::sin(phi) + 0.2 * std::cos(phi));
  CHECK(std::abs(after - before * std::exp(cd(0.0, 3.0 * phi))) < 1e-12);
}

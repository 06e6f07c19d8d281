#pragma once

#include <cmath>
#include <stdexcept>

#include "krausscope/common.hpp"
#include "krausscope/quadrature.hpp"

namespace krausscope {

// Laguerre-Gauss mode restricted to the azimuthal degree of freedom
// (radial index fixed to zero).
struct AzimuthalMode {
  int ell = 0;   // azimuthal index
  double w = 1.0;  // beam waist, > 0

  AzimuthalMode(int ell_, double w_) : ell(ell_), w(w_) {
    if (!(w > 0.0)) throw std::domain_error("AzimuthalMode: waist must be positive");
  }

  int sign() const { return (ell > 0) - (ell < 0); }
  int order() const { return ell < 0 ? -ell : ell; }
};

struct AngularSpectrumSample {
  Freq2 a;
  cd value;
};

// N = w (2 pi 2^|l| / |l|!)^(1/2)
inline double lg_norm(int ell, double w) {
  if (!(w > 0.0)) throw std::domain_error("lg_norm: waist must be positive");
  const int k = ell < 0 ? -ell : ell;
  return w * std::sqrt(2.0 * kPi * std::pow(2.0, k) / factorial(k));
}

// Angular spectrum of the mode. The |l|-th derivative in the generating
// parameter of exp(i pi (a_x + i T a_y) w mu) at mu = 0 is the closed form
// [i pi w (a_x + i T a_y)]^|l|, times the Gaussian envelope and N.
inline cd lg_angular_spectrum(const AzimuthalMode& m, Freq2 a) {
  const int k = m.order();
  const cd base = cd(0.0, kPi * m.w) * cd(a.x, m.sign() * a.y);
  cd poly = 1.0;
  for (int j = 0; j < k; ++j) poly *= base;
  return lg_norm(m.ell, m.w) * poly * std::exp(-kPi * kPi * m.w * m.w * a.norm2());
}

inline AngularSpectrumSample sample_spectrum(const AzimuthalMode& m, Freq2 a) {
  return {a, lg_angular_spectrum(m, a)};
}

// Real-space form whose Fourier transform (f(r) = int F(a) exp(i 2 pi a.r) d2a)
// is lg_angular_spectrum. Unit L2 norm.
inline cd lg_real_space(const AzimuthalMode& m, double x, double y) {
  const int k = m.order();
  const double w = m.w;
  const cd base = cd(x, m.sign() * y) / w;
  cd poly = 1.0;
  for (int j = 0; j < k; ++j) poly *= base;
  const double amp = std::sqrt(std::pow(2.0, k + 1) / (kPi * factorial(k))) / w;
  const double sgn = (k % 2 == 0) ? 1.0 : -1.0;
  return sgn * amp * poly * std::exp(-(x * x + y * y) / (w * w));
}

struct InnerProductResult {
  cd value;
  bool waist_mismatch = false;  // orthonormality only holds for a common waist
};

// <m1|m2> over the spatial-frequency plane.
inline InnerProductResult mode_inner_product(const AzimuthalMode& m1, const AzimuthalMode& m2,
                                             const QuadratureSpec& quad = {}) {
  quad.validate();
  // Combined Gaussian envelope exp(-pi^2 (w1^2 + w2^2) |a|^2): scale per axis.
  const double s = kPi * std::sqrt(m1.w * m1.w + m2.w * m2.w);
  const auto integrand = [&](double ax, double ay) {
    return std::conj(lg_angular_spectrum(m1, {ax, ay})) * lg_angular_spectrum(m2, {ax, ay});
  };
  cd sum = 0.0;
  if (quad.scheme == QuadratureSpec::Scheme::gauss_hermite) {
    const auto& rule = gauss_hermite_rule(quad.order);
    for (int i = 0; i < quad.order; ++i) {
      for (int j = 0; j < quad.order; ++j) {
        const double ax = rule.nodes[i] / s;
        const double ay = rule.nodes[j] / s;
        sum += rule.weights_over_envelope[i] * rule.weights_over_envelope[j] * integrand(ax, ay);
      }
    }
  } else {
    const double h = 2.0 * quad.extent / quad.order;
    for (int i = 0; i < quad.order; ++i) {
      for (int j = 0; j < quad.order; ++j) {
        const double ux = -quad.extent + (i + 0.5) * h;
        const double uy = -quad.extent + (j + 0.5) * h;
        sum += h * h * integrand(ux / s, uy / s);
      }
    }
  }
  return {sum / (s * s), m1.w != m2.w};
}

}  // namespace krausscope

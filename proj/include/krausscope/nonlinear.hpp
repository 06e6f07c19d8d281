#pragma once

#include <cmath>
#include <stdexcept>

#include "krausscope/common.hpp"
#include "krausscope/modes.hpp"

namespace krausscope {

// Collinear type-1 sum-frequency configuration. Index 1 is the output-state
// (post-channel) beam, index 2 the measurement-state beam. length = 0 is the
// thin-crystal limit.
struct CrystalConfig {
  double lambda1;  // wavelength of the output-state beam
  double lambda2;  // wavelength of the measurement-state beam
  double n1;       // refractive index seen by beam 1
  double n2;       // refractive index seen by beam 2
  double length;   // crystal length, >= 0
  double w_c;      // waist of the Gaussian mode coupled into the fiber

  CrystalConfig(double lambda1_, double lambda2_, double n1_, double n2_, double length_, double w_c_)
      : lambda1(lambda1_), lambda2(lambda2_), n1(n1_), n2(n2_), length(length_), w_c(w_c_) {
    if (!(lambda1 > 0.0) || !(lambda2 > 0.0)) throw std::domain_error("CrystalConfig: wavelengths must be positive");
    if (!(n1 >= 1.0) || !(n2 >= 1.0)) throw std::domain_error("CrystalConfig: refractive indices must be >= 1");
    if (!(length >= 0.0)) throw std::domain_error("CrystalConfig: crystal length must be nonnegative");
    if (!(w_c > 0.0)) throw std::domain_error("CrystalConfig: coupled-mode waist must be positive");
  }
};

// lambda3 = lambda1 lambda2 / (lambda1 + lambda2), energy conservation.
inline double upconverted_wavelength(const CrystalConfig& cfg) {
  return cfg.lambda1 * cfg.lambda2 / (cfg.lambda1 + cfg.lambda2);
}

// n3 = (n1 lambda2 + n2 lambda1) / (lambda1 + lambda2), collinear critical
// phase matching. Satisfies n1/lambda1 + n2/lambda2 = n3/lambda3 identically.
inline double upconverted_index(const CrystalConfig& cfg) {
  return (cfg.n1 * cfg.lambda2 + cfg.n2 * cfg.lambda1) / (cfg.lambda1 + cfg.lambda2);
}

// beta = L lambda3 / (pi w_c^2); the thin-crystal regime is beta -> 0.
inline double thin_crystal_beta(const CrystalConfig& cfg) {
  return cfg.length * upconverted_wavelength(cfg) / (kPi * cfg.w_c * cfg.w_c);
}

// Paraxial longitudinal mismatch pi n1 n2 |l1 a1 - l2 a2|^2 / (l1 n2 + l2 n1).
inline double delta_kz_paraxial(const CrystalConfig& cfg, Freq2 a1, Freq2 a2) {
  const Freq2 d = cfg.lambda1 * a1 - cfg.lambda2 * a2;
  return kPi * cfg.n1 * cfg.n2 * d.norm2() / (cfg.lambda1 * cfg.n2 + cfg.lambda2 * cfg.n1);
}

// a3 = (n1 a1 + n2 a2)(l1 + l2) / (l1 n2 + l2 n1) = (n1 a1 + n2 a2) / n3.
inline Freq2 transverse_matching(const CrystalConfig& cfg, Freq2 a1, Freq2 a2) {
  const double f = (cfg.lambda1 + cfg.lambda2) / (cfg.lambda1 * cfg.n2 + cfg.lambda2 * cfg.n1);
  return f * (cfg.n1 * a1 + cfg.n2 * a2);
}

// Exact longitudinal mismatch built from k_mz = 2 pi sqrt(1/lambda_m^2 - |a_m|^2)
// with a3 fixed by transverse matching. Sign flipped so that the paraxial
// expansion is +delta_kz_paraxial + O(|a|^4). Requires propagating components
// (|a_m| lambda_m < 1).
inline double delta_kz_exact(const CrystalConfig& cfg, Freq2 a1, Freq2 a2) {
  const Freq2 a3 = transverse_matching(cfg, a1, a2);
  const double l3 = upconverted_wavelength(cfg);
  const double n3 = upconverted_index(cfg);
  const auto kz = [](double lambda, Freq2 a) {
    const double s = 1.0 / (lambda * lambda) - a.norm2();
    if (!(s > 0.0)) throw std::domain_error("delta_kz_exact: evanescent spatial frequency");
    return 2.0 * kPi * std::sqrt(s);
  };
  return -(cfg.n1 * kz(cfg.lambda1, a1) + cfg.n2 * kz(cfg.lambda2, a2) - n3 * kz(l3, a3));
}

// Upconversion kernel: Gaussian fiber-coupling envelope times the Gaussian
// approximation of the phase-matching profile. Overall constant fixed to 1;
// probabilities are reported relative to the l = 0 overlap.
inline double spuc_kernel(const CrystalConfig& cfg, Freq2 a1, Freq2 a2) {
  const double n3 = upconverted_index(cfg);
  const Freq2 sum = cfg.n1 * a1 + cfg.n2 * a2;
  const Freq2 dif = cfg.lambda1 * a1 - cfg.lambda2 * a2;
  const double coupling = kPi * kPi * cfg.w_c * cfg.w_c / (n3 * n3) * sum.norm2();
  const double matching = kPi * cfg.n1 * cfg.n2 * cfg.length * dif.norm2() /
                          (2.0 * (cfg.lambda1 * cfg.n2 + cfg.lambda2 * cfg.n1));
  return std::exp(-coupling - matching);
}

namespace detail {

// W = n1^2 w2^2 wc^2 + n2^2 w1^2 wc^2 + n3^2 w1^2 w2^2
inline double overlap_w(const CrystalConfig& cfg, double w1, double w2) {
  const double n3 = upconverted_index(cfg);
  const double wc2 = cfg.w_c * cfg.w_c;
  return cfg.n1 * cfg.n1 * w2 * w2 * wc2 + cfg.n2 * cfg.n2 * w1 * w1 * wc2 + n3 * n3 * w1 * w1 * w2 * w2;
}

// Argument of the Lambda power law: n1 n2 w1 w2 wc^2 / W, in (0, 1).
inline double lambda_base(const CrystalConfig& cfg, double w1, double w2) {
  return cfg.n1 * cfg.n2 * w1 * w2 * cfg.w_c * cfg.w_c / overlap_w(cfg, w1, w2);
}

inline double overlap_prefactor(const CrystalConfig& cfg, double w1, double w2, int order) {
  const double n3 = upconverted_index(cfg);
  return kPi * w1 * w2 * lg_norm(order, w1) * lg_norm(order, w2) * n3 * n3 / overlap_w(cfg, w1, w2);
}

}  // namespace detail

// Lambda(|l|) = (n1 n2 w1 w2 wc^2 / W)^|l|, normalized so Lambda(0) = 1.
inline double lambda_coefficient(const CrystalConfig& cfg, double w1, double w2, int ell) {
  if (!(w1 > 0.0) || !(w2 > 0.0)) throw std::domain_error("lambda_coefficient: waists must be positive");
  const int k = ell < 0 ? -ell : ell;
  return std::pow(detail::lambda_base(cfg, w1, w2), k);
}

// Taylor coefficient of (mu1 mu2)^order in the thin-crystal measurement
// generating function: prefactor * [(1 - T1 T2) n1 n2 w1 w2 wc^2 / (2W)]^order
// / order!, with the normalization constants taken at |l| = order.
inline double overlap_generating(const CrystalConfig& cfg, double w1, double w2, int sign1, int sign2,
                                 int order) {
  if (!(w1 > 0.0) || !(w2 > 0.0)) throw std::domain_error("overlap_generating: waists must be positive");
  if (order < 0) throw std::domain_error("overlap_generating: order must be nonnegative");
  if (sign1 < -1 || sign1 > 1 || sign2 < -1 || sign2 > 1)
    throw std::domain_error("overlap_generating: signs must be -1, 0 or +1");
  const double c = (1.0 - sign1 * sign2) * detail::lambda_base(cfg, w1, w2) / 2.0;
  return detail::overlap_prefactor(cfg, w1, w2, order) * std::pow(c, order) / factorial(order);
}

struct OverlapResult {
  cd value;            // upconversion amplitude M
  double probability;  // |M|^2
};

// Thin-crystal upconversion amplitude for a pair of modes. Zero unless the
// azimuthal indices have equal magnitude and opposite sign; otherwise the
// |l|-th mu1,mu2-derivative of the measurement generating function, i.e.
// (|l|!)^2 times its Taylor coefficient, which is what a mode pair produced
// by the generating-function prescription overlaps to.
inline OverlapResult overlap_closed_form(const CrystalConfig& cfg, const AzimuthalMode& mode_out,
                                         const AzimuthalMode& mode_mea) {
  if (mode_out.ell != -mode_mea.ell) return {cd(0.0, 0.0), 0.0};
  const int k = mode_out.order();
  const double kfac = factorial(k);
  const double value = overlap_generating(cfg, mode_out.w, mode_mea.w, mode_out.sign(), mode_mea.sign(), k) *
                       kfac * kfac;
  return {cd(value, 0.0), value * value};
}

}  // namespace krausscope

#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "krausscope/common.hpp"
#include "krausscope/modes.hpp"
#include "krausscope/nonlinear.hpp"
#include "krausscope/quadrature.hpp"

namespace krausscope {

struct OracleConvergenceError : std::runtime_error {
  cd coarse;
  cd fine;
  OracleConvergenceError(cd coarse_, cd fine_)
      : std::runtime_error("quadrature_overlap: successive orders disagree beyond tolerance (coarse " +
                           std::to_string(std::abs(coarse_)) + ", fine " + std::to_string(std::abs(fine_)) + ")"),
        coarse(coarse_),
        fine(fine_) {}
};

struct ConvergenceRow {
  int order;
  cd value;
  double successive_delta;  // NaN on the first row
};

namespace oracle_detail {

// 2x2 positive quadratic form Q(u, v) = A u^2 + B v^2 + 2 C u v, diagonalized
// into principal axes so the Gaussian part of the integrand becomes the
// Gauss-Hermite weight exactly.
struct Block2 {
  double rc, rs;      // rotation (cos, sin)
  double inv_s1, inv_s2;  // 1/sqrt(eigenvalue) per principal axis
  double jac;         // Jacobian of (u1, u2) -> (x, y)

  void map(double u1, double u2, double& x, double& y) const {
    const double p = u1 * inv_s1;
    const double q = u2 * inv_s2;
    x = rc * p - rs * q;
    y = rs * p + rc * q;
  }
};

inline Block2 diagonalize(double a, double b, double c) {
  const double half_diff = 0.5 * (a - b);
  const double r = std::hypot(half_diff, c);
  const double l1 = 0.5 * (a + b) + r;
  const double l2 = 0.5 * (a + b) - r;
  if (!(l2 > 0.0)) throw std::domain_error("quadrature_overlap: Gaussian form not positive definite");
  const double theta = 0.5 * std::atan2(2.0 * c, a - b);
  Block2 blk;
  blk.rc = std::cos(theta);
  blk.rs = std::sin(theta);
  blk.inv_s1 = 1.0 / std::sqrt(l1);
  blk.inv_s2 = 1.0 / std::sqrt(l2);
  blk.jac = blk.inv_s1 * blk.inv_s2;
  return blk;
}

// Probes the Gaussian part of kernel * envelope1 * envelope2 as a black box to
// recover its quadratic form, one 2x2 block per transverse axis. Envelopes are
// taken from the l = 0 spectra so no closed-form overlap code is shared.
struct ProbedForm {
  Block2 x_block;
  Block2 y_block;
};

inline ProbedForm probe_gaussian_form(const CrystalConfig& cfg, double w1, double w2) {
  const AzimuthalMode g1(0, w1);
  const AzimuthalMode g2(0, w2);
  const double env10 = lg_angular_spectrum(g1, {0.0, 0.0}).real();
  const double env20 = lg_angular_spectrum(g2, {0.0, 0.0}).real();
  const auto log_gauss = [&](Freq2 a1, Freq2 a2) {
    const double v = spuc_kernel(cfg, a1, a2) * (lg_angular_spectrum(g1, a1).real() / env10) *
                     (lg_angular_spectrum(g2, a2).real() / env20);
    return -std::log(v);
  };
  const double s = 1.0 / (kPi * (w1 + w2 + cfg.w_c));
  const auto quad_at = [&](double c1x, double c1y, double c2x, double c2y) {
    return log_gauss({s * c1x, s * c1y}, {s * c2x, s * c2y}) / (s * s);
  };
  const double ax = quad_at(1, 0, 0, 0);
  const double bx = quad_at(0, 0, 1, 0);
  const double cx = 0.5 * (quad_at(1, 0, 1, 0) - ax - bx);
  const double ay = quad_at(0, 1, 0, 0);
  const double by = quad_at(0, 0, 0, 1);
  const double cy = 0.5 * (quad_at(0, 1, 0, 1) - ay - by);
  // The kernel couples x components only to x components; verify there is no
  // cross-plane term before factorizing the 4-D integral.
  const double cross = quad_at(1, 0, 0, 1) - ax - by;
  const double scale = std::abs(ax) + std::abs(by);
  if (std::abs(cross) > 1e-9 * scale)
    throw std::logic_error("quadrature_overlap: unexpected cross-plane coupling in kernel");
  return {diagonalize(ax, bx, cx), diagonalize(ay, by, cy)};
}

struct Estimate {
  cd value;
  double l1_mass;  // sum of |terms|, used as a rounding-noise floor
};

inline Estimate evaluate(const CrystalConfig& cfg, const AzimuthalMode& mode_out, const AzimuthalMode& mode_mea,
                         const ProbedForm& form, const QuadratureSpec& quad, int order) {
  const auto integrand = [&](double a1x, double a1y, double a2x, double a2y) {
    const Freq2 a1{a1x, a1y};
    const Freq2 a2{a2x, a2y};
    return spuc_kernel(cfg, a1, a2) * lg_angular_spectrum(mode_out, a1) * lg_angular_spectrum(mode_mea, a2);
  };
  std::vector<double> nodes(order), eff(order);
  if (quad.scheme == QuadratureSpec::Scheme::gauss_hermite) {
    const auto& rule = gauss_hermite_rule(order);
    nodes = rule.nodes;
    eff = rule.weights_over_envelope;
  } else {
    // Plain midpoint rule in the transformed coordinates; the integrand keeps
    // its own Gaussian decay, so the weight is just the cell width.
    const double h = 2.0 * quad.extent / order;
    for (int i = 0; i < order; ++i) {
      nodes[i] = -quad.extent + (i + 0.5) * h;
      eff[i] = h;
    }
  }

  // Outer two axes parallelized; per-slot partials are reduced in index order
  // so the sum is independent of the thread count.
  const std::size_t outer = static_cast<std::size_t>(order) * order;
  std::vector<cd> partial(outer, cd(0.0, 0.0));
  std::vector<double> partial_mass(outer, 0.0);
  parallel_for(outer, [&](std::size_t idx) {
    const int i = static_cast<int>(idx) / order;
    const int j = static_cast<int>(idx) % order;
    double a1x, a2x;
    form.x_block.map(nodes[i], nodes[j], a1x, a2x);
    const double wij = eff[i] * eff[j];
    cd acc(0.0, 0.0);
    double mass = 0.0;
    for (int k = 0; k < order; ++k) {
      for (int l = 0; l < order; ++l) {
        double a1y, a2y;
        form.y_block.map(nodes[k], nodes[l], a1y, a2y);
        const cd term = wij * eff[k] * eff[l] * integrand(a1x, a1y, a2x, a2y);
        acc += term;
        mass += std::abs(term);
      }
    }
    partial[idx] = acc;
    partial_mass[idx] = mass;
  });
  cd total(0.0, 0.0);
  double mass = 0.0;
  for (std::size_t idx = 0; idx < outer; ++idx) {
    total += partial[idx];
    mass += partial_mass[idx];
  }
  const double jac = form.x_block.jac * form.y_block.jac;
  return {total * jac, mass * jac};
}

}  // namespace oracle_detail

// Brute-force evaluation of the three-way overlap integral
// int kernel(a1, a2) psi_out(a1) psi_mea(a2) d2a1 d2a2 with the finite-length
// kernel; the independent check on the thin-crystal closed form. Throws
// OracleConvergenceError when the half-order estimate disagrees beyond
// quad.tolerance (with an absolute floor at the summation rounding noise).
inline cd quadrature_overlap(const CrystalConfig& cfg, const AzimuthalMode& mode_out,
                             const AzimuthalMode& mode_mea, const QuadratureSpec& quad = {}) {
  quad.validate();
  const auto form = oracle_detail::probe_gaussian_form(cfg, mode_out.w, mode_mea.w);
  const auto fine = oracle_detail::evaluate(cfg, mode_out, mode_mea, form, quad, quad.order);
  const int coarse_order = std::max(8, quad.order / 2);
  const auto coarse = oracle_detail::evaluate(cfg, mode_out, mode_mea, form, quad, coarse_order);
  const double delta = std::abs(fine.value - coarse.value);
  const double rel_scale = std::max(std::abs(fine.value), std::abs(coarse.value));
  const double noise_floor = 1e3 * std::numeric_limits<double>::epsilon() * fine.l1_mass;
  if (delta > quad.tolerance * rel_scale + noise_floor) throw OracleConvergenceError(coarse.value, fine.value);
  return fine.value;
}

inline std::vector<ConvergenceRow> convergence_sweep(const CrystalConfig& cfg, const AzimuthalMode& mode_out,
                                                     const AzimuthalMode& mode_mea, const std::vector<int>& orders,
                                                     const QuadratureSpec& quad = {}) {
  if (orders.size() < 2) throw std::domain_error("convergence_sweep: need at least two orders");
  const auto form = oracle_detail::probe_gaussian_form(cfg, mode_out.w, mode_mea.w);
  std::vector<ConvergenceRow> rows;
  rows.reserve(orders.size());
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const cd v = oracle_detail::evaluate(cfg, mode_out, mode_mea, form, quad, orders[i]).value;
    const double delta = rows.empty() ? std::numeric_limits<double>::quiet_NaN() : std::abs(v - rows.back().value);
    rows.push_back({orders[i], v, delta});
  }
  return rows;
}

// Divides the mode-generation factors (normalization constants and the |l|!
// from the double derivative) out of an overlap ratio, leaving the Lambda
// coefficient that the ratio encodes.
inline double lambda_from_overlap_ratio(cd m_ell, cd m_zero, int ell, double w1, double w2) {
  const int k = ell < 0 ? -ell : ell;
  const double gen_factors = lg_norm(k, w1) * lg_norm(k, w2) * factorial(k) / (lg_norm(0, w1) * lg_norm(0, w2));
  return (m_ell / m_zero).real() / gen_factors;
}

}  // namespace krausscope

#pragma once

#include <Eigen/Dense>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "krausscope/common.hpp"

namespace krausscope {

// Nodes/weights for int exp(-t^2) f(t) dt.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  // weights premultiplied by exp(node^2); O(1) factors that let callers fold
  // the Gaussian envelope into the integrand without under/overflow.
  std::vector<double> weights_over_envelope;
};

// Golub-Welsch on the Jacobi matrix of the Hermite recurrence.
inline GaussHermiteRule compute_gauss_hermite(int order) {
  if (order < 1) throw std::domain_error("gauss_hermite: order must be >= 1");
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(order, order);
  for (int k = 0; k + 1 < order; ++k) {
    const double b = std::sqrt((k + 1) / 2.0);
    jac(k, k + 1) = b;
    jac(k + 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  GaussHermiteRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  rule.weights_over_envelope.resize(order);
  const double sqrt_pi = std::sqrt(kPi);
  for (int i = 0; i < order; ++i) {
    const double x = es.eigenvalues()(i);
    const double q0 = es.eigenvectors()(0, i);
    rule.nodes[i] = x;
    rule.weights[i] = sqrt_pi * q0 * q0;
    rule.weights_over_envelope[i] = rule.weights[i] * std::exp(x * x);
  }
  return rule;
}

inline const GaussHermiteRule& gauss_hermite_rule(int order) {
  static std::map<int, GaussHermiteRule> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, compute_gauss_hermite(order)).first;
  return it->second;
}

struct QuadratureSpec {
  enum class Scheme { gauss_hermite, cartesian_grid };
  Scheme scheme = Scheme::gauss_hermite;
  int order = 64;        // points per axis
  double extent = 6.0;   // half-width in Gaussian sigmas (cartesian scheme)
  double tolerance = 1e-9;  // target relative error between successive orders

  void validate() const {
    if (order < 16) throw std::domain_error("QuadratureSpec: order must be >= 16");
    if (scheme == Scheme::gauss_hermite && order > 96)
      throw std::domain_error("QuadratureSpec: gauss-hermite order capped at 96");
    if (scheme == Scheme::cartesian_grid && extent < 4.0)
      throw std::domain_error("QuadratureSpec: cartesian extent must be >= 4");
    if (!(tolerance > 0.0)) throw std::domain_error("QuadratureSpec: tolerance must be positive");
  }
};

}  // namespace krausscope

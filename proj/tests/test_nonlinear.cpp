#include <doctest.h>

#include <cmath>

#include "krausscope/nonlinear.hpp"
#include "krausscope/rng.hpp"
#include "test_util.hpp"

using namespace krausscope;

TEST_CASE("upconverted wavelength") {
  CHECK(upconverted_wavelength(CrystalConfig(1e-6, 1e-6, 1.5, 1.5, 0, 1e-5)) ==
        doctest::Approx(0.5e-6).epsilon(1e-14));
  // lambda2 -> infinity limit
  CHECK(upconverted_wavelength(CrystalConfig(1e-6, 1e3, 1.5, 1.5, 0, 1e-5)) ==
        doctest::Approx(1e-6).epsilon(1e-8));
  const double l3 = upconverted_wavelength(CrystalConfig(1.064e-6, 1.550e-6, 1.5, 1.5, 0, 1e-5));
  CHECK(l3 == doctest::Approx(1.064e-6 * 1.550e-6 / (1.064e-6 + 1.550e-6)).epsilon(1e-14));
  CHECK(l3 == doctest::Approx(0.6308e-6).epsilon(5e-4));  // hand value, 4 digits
}

TEST_CASE("upconverted index") {
  CHECK(upconverted_index(CrystalConfig(1e-6, 3e-6, 1.4, 1.4, 0, 1e-5)) == doctest::Approx(1.4).epsilon(1e-14));
  CHECK(upconverted_index(CrystalConfig(2e-6, 2e-6, 1.4, 1.8, 0, 1e-5)) == doctest::Approx(1.6).epsilon(1e-14));
  CHECK(upconverted_index(CrystalConfig(1e-6, 2e-6, 1.6, 1.7, 0, 1e-5)) ==
        doctest::Approx((1.6 * 2.0 + 1.7 * 1.0) / 3.0).epsilon(1e-14));
}

TEST_CASE("index/wavelength consistency: n1/l1 + n2/l2 = n3/l3") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const CrystalConfig cfg(0.5e-6 + rng.uniform() * 2e-6, 0.5e-6 + rng.uniform() * 2e-6,
                            1.0 + rng.uniform(), 1.0 + rng.uniform(), rng.uniform() * 1e-3,
                            1e-6 + rng.uniform() * 1e-4);
    const double lhs = cfg.n1 / cfg.lambda1 + cfg.n2 / cfg.lambda2;
    const double rhs = upconverted_index(cfg) / upconverted_wavelength(cfg);
    CHECK(std::abs(lhs - rhs) / lhs < 1e-14);
  }
}

TEST_CASE("thin-crystal beta") {
  CHECK(thin_crystal_beta(CrystalConfig(1e-6, 1e-6, 1.5, 1.5, 0.0, 1e-4)) == 0.0);
  // L = 1 mm, lambda3 = 0.5 um, w_c = 100 um
  const CrystalConfig cfg(1e-6, 1e-6, 1.5, 1.5, 1e-3, 100e-6);
  CHECK(thin_crystal_beta(cfg) == doctest::Approx(1.5915e-2).epsilon(1e-4));
  const CrystalConfig doubled(1e-6, 1e-6, 1.5, 1.5, 1e-3, 200e-6);
  CHECK(thin_crystal_beta(doubled) == doctest::Approx(thin_crystal_beta(cfg) / 4.0).epsilon(1e-12));
}

TEST_CASE("transverse matching") {
  const auto cfg = testutil::default_crystal();
  const Freq2 zero = transverse_matching(cfg, {0, 0}, {0, 0});
  CHECK(zero.x == 0.0);
  CHECK(zero.y == 0.0);
  const CrystalConfig degenerate(1e-6, 1e-6, 1.5, 1.5, 0, 1e-5);
  const Freq2 sum = transverse_matching(degenerate, {1e4, -2e4}, {3e4, 5e3});
  CHECK(sum.x == doctest::Approx(4e4).epsilon(1e-12));
  CHECK(sum.y == doctest::Approx(-1.5e4).epsilon(1e-12));
  // (n1 a1 + n2 a2) / n3 form of the same condition
  const Freq2 a1{2.3e4, -1.1e4}, a2{-0.7e4, 1.9e4};
  const Freq2 lhs = transverse_matching(cfg, a1, a2);
  const double n3 = upconverted_index(cfg);
  CHECK(lhs.x == doctest::Approx((cfg.n1 * a1.x + cfg.n2 * a2.x) / n3).epsilon(1e-12));
  CHECK(lhs.y == doctest::Approx((cfg.n1 * a1.y + cfg.n2 * a2.y) / n3).epsilon(1e-12));
}

TEST_CASE("paraxial delta_kz zeros and quartic accuracy") {
  const auto cfg = testutil::default_crystal();
  CHECK(delta_kz_paraxial(cfg, {0, 0}, {0, 0}) == 0.0);
  // lambda1 a1 = lambda2 a2 kills the numerator
  const Freq2 a1{4e4, -1e4};
  const Freq2 a2{cfg.lambda1 / cfg.lambda2 * a1.x, cfg.lambda1 / cfg.lambda2 * a1.y};
  CHECK(delta_kz_paraxial(cfg, a1, a2) == doctest::Approx(0.0));
  // Error vs the exact mismatch shrinks ~16x when |a| halves.
  const Freq2 b1{3.0e4, 1.0e4}, b2{-2.0e4, 2.5e4};
  double err_prev = -1.0;
  for (double scale : {1.0, 0.5, 0.25}) {
    const Freq2 s1 = scale * b1;
    const Freq2 s2 = scale * b2;
    const double err = std::abs(delta_kz_paraxial(cfg, s1, s2) - delta_kz_exact(cfg, s1, s2));
    if (err_prev > 0.0) {
      const double ratio = err_prev / err;
      CHECK(ratio > 14.0);
      CHECK(ratio < 18.0);
    }
    err_prev = err;
  }
}

TEST_CASE("spuc kernel values and factorization") {
  const auto cfg = testutil::default_crystal(1e-4);
  CHECK(spuc_kernel(cfg, {0, 0}, {0, 0}) == doctest::Approx(1.0).epsilon(1e-15));
  // Thin crystal with the coupling argument nulled: n1 a1 = -n2 a2.
  const auto thin = testutil::default_crystal(0.0);
  const Freq2 a1{2e4, -3e4};
  const Freq2 a2{-thin.n1 / thin.n2 * a1.x, -thin.n1 / thin.n2 * a1.y};
  CHECK(spuc_kernel(thin, a1, a2) == doctest::Approx(1.0).epsilon(1e-12));
  // Generic point: product of the two factors computed independently.
  const Freq2 c1{1.5e4, 2e4}, c2{-1e4, 0.5e4};
  const double n3 = upconverted_index(cfg);
  const Freq2 sum = cfg.n1 * c1 + cfg.n2 * c2;
  const Freq2 dif = cfg.lambda1 * c1 - cfg.lambda2 * c2;
  const double coupling = std::exp(-kPi * kPi * cfg.w_c * cfg.w_c / (n3 * n3) * sum.norm2());
  const double matching = std::exp(-kPi * cfg.n1 * cfg.n2 * cfg.length * dif.norm2() /
                                   (2.0 * (cfg.lambda1 * cfg.n2 + cfg.lambda2 * cfg.n1)));
  CHECK(spuc_kernel(cfg, c1, c2) == doctest::Approx(coupling * matching).epsilon(1e-13));
}

TEST_CASE("overlap generating coefficients") {
  const auto cfg = testutil::default_crystal();
  const double w1 = 1e-5, w2 = 1.2e-5;
  // Same signs kill every order >= 1.
  CHECK(overlap_generating(cfg, w1, w2, +1, +1, 1) == 0.0);
  CHECK(overlap_generating(cfg, w1, w2, -1, -1, 3) == 0.0);
  // Order zero is the prefactor.
  const double n3 = upconverted_index(cfg);
  const double wc2 = cfg.w_c * cfg.w_c;
  const double w_factor = cfg.n1 * cfg.n1 * w2 * w2 * wc2 + cfg.n2 * cfg.n2 * w1 * w1 * wc2 +
                          n3 * n3 * w1 * w1 * w2 * w2;
  const double pref0 = kPi * w1 * w2 * lg_norm(0, w1) * lg_norm(0, w2) * n3 * n3 / w_factor;
  CHECK(overlap_generating(cfg, w1, w2, 0, 0, 0) == doctest::Approx(pref0).epsilon(1e-13));
  // Opposite signs, order 2: Taylor coefficient from a finite-difference
  // expansion of the generating exponential in the product mu1 mu2.
  const double c = cfg.n1 * cfg.n2 * w1 * w2 * wc2 / w_factor;  // (1 - T1 T2)/2 = 1
  const auto exp_in_s = [&](double s) { return cd(std::exp(c * s), 0.0); };  // s = mu1 mu2
  const double coeff2 = testutil::fd_derivative(exp_in_s, 2, 5e-3).real() / 2.0;  // c^2 / 2!... via d^2/ds^2 / 2!
  const double pref2 = kPi * w1 * w2 * lg_norm(2, w1) * lg_norm(2, w2) * n3 * n3 / w_factor;
  CHECK(overlap_generating(cfg, w1, w2, +1, -1, 2) == doctest::Approx(pref2 * coeff2).epsilon(1e-7));
}

TEST_CASE("closed-form overlap selection rule and zero order") {
  const auto cfg = testutil::default_crystal();
  for (int lo = -5; lo <= 5; ++lo) {
    for (int lm = -5; lm <= 5; ++lm) {
      const auto result = overlap_closed_form(cfg, AzimuthalMode(lo, 1e-5), AzimuthalMode(lm, 1.1e-5));
      if (lo != -lm) {
        CHECK(result.value == cd(0.0, 0.0));
        CHECK(result.probability == 0.0);
      } else {
        CHECK(result.value.real() > 0.0);
        CHECK(result.probability == doctest::Approx(std::norm(result.value)).epsilon(1e-14));
      }
    }
  }
  const auto zero = overlap_closed_form(cfg, AzimuthalMode(0, 1e-5), AzimuthalMode(0, 1.1e-5));
  CHECK(zero.value.real() == doctest::Approx(overlap_generating(cfg, 1e-5, 1.1e-5, 0, 0, 0)).epsilon(1e-14));
}

TEST_CASE("lambda coefficient law") {
  // Symmetric configuration: Lambda = (2 + alpha)^-|l| with alpha = w0^2/w_c^2.
  for (double alpha : {0.01, 0.5, 1.0, 4.0}) {
    const double w0 = 1e-5;
    const double w_c = w0 / std::sqrt(alpha);
    const auto cfg = testutil::symmetric_crystal(w_c);
    for (int ell = 0; ell <= 6; ++ell) {
      const double expected = std::pow(2.0 + alpha, -ell);
      CHECK(std::abs(lambda_coefficient(cfg, w0, w0, ell) - expected) / expected < 1e-12);
      CHECK(lambda_coefficient(cfg, w0, w0, -ell) == lambda_coefficient(cfg, w0, w0, ell));
    }
  }
  // w0/w_c -> 0 limit: Lambda(1) -> 1/2.
  const auto best = testutil::symmetric_crystal(1.0);  // w_c = 1 m >> w0
  CHECK(lambda_coefficient(best, 1e-5, 1e-5, 1) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("lambda monotonicity and W positivity over random parameters") {
  Rng rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    const CrystalConfig cfg(0.4e-6 + 2e-6 * rng.uniform(), 0.4e-6 + 2e-6 * rng.uniform(),
                            1.0 + 1.5 * rng.uniform(), 1.0 + 1.5 * rng.uniform(), 0.0,
                            0.5e-6 + 1e-4 * rng.uniform());
    const double w1 = 1e-6 + 1e-4 * rng.uniform();
    const double w2 = 1e-6 + 1e-4 * rng.uniform();
    CHECK(detail::overlap_w(cfg, w1, w2) > 0.0);
    double prev = lambda_coefficient(cfg, w1, w2, 0);
    CHECK(prev == 1.0);
    for (int ell = 1; ell <= 6; ++ell) {
      const double lam = lambda_coefficient(cfg, w1, w2, ell);
      CHECK(lam > 0.0);
      CHECK(lam <= prev);
      prev = lam;
    }
  }
}

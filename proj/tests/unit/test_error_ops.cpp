// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <vector>

#include "spdelab/error_ops.hpp"
#include "spdelab/errors.hpp"

using namespace spdelab;

namespace {

template <typename F>
double simpson(F f, double a, double b, int n = 20000) {
  const double dx = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * dx);
  return s * dx / 3.0;
}

}  // namespace

TEST_CASE("spectral error operators act per mode") {
  const auto basis = EigenBasis::build(64, EigenBasis::default_quadrature_size(64));
  const auto space = GalerkinSpace::spectral(basis, 8);
  SobolevVector x(basis);
  for (std::size_t n = 1; n <= 64; ++n) x[n] = 1.0 / n;
  const double t = 0.01, k = 0.004;
  const auto fh = apply_Fh(space, t, x);
  const auto fkh = apply_Fkh(space, k, t, x);
  const std::size_t j = 3;  // floor(t / k) + 1
  for (std::size_t n = 1; n <= 64; ++n) {
    const double lam = basis.eigenvalue(n);
    const double e = std::exp(-lam * t);
    CHECK(fh[n] == doctest::Approx(n <= 8 ? 0.0 : -e * x[n]).scale(1e-12));
    const double r = n <= 8 ? std::pow(1.0 / (1.0 + k * lam), j) : 0.0;
    CHECK(fkh[n] == doctest::Approx((r - e) * x[n]).epsilon(1e-12).scale(1e-12));
  }
  // t = 0: P_h - I
  const auto f0 = apply_Fh(space, 0.0, x);
  CHECK(f0[3] == 0.0);
  CHECK(f0[9] == doctest::Approx(-x[9]));
  CHECK_THROWS_AS(apply_Fh(space, -1.0, x), DomainError);
  CHECK_THROWS_AS(apply_Fkh(space, 0.0, 0.1, x), DomainError);
}

TEST_CASE("closed-form time integrals") {
  const double k = 0.01, t = 0.137;
  const ModeFunction e{25.0, false}, r{40.0, true}, r2{900.0, true};
  auto val = [&](const ModeFunction& f, double s) {
    if (!f.rational) return std::exp(-f.lambda * s);
    return std::pow(1.0 / (1.0 + k * f.lambda), std::floor(s / k) + 1.0);
  };
  CHECK(time_integral(e, k, t) == doctest::Approx(simpson([&](double s) { return val(e, s); }, 0, t)).epsilon(1e-10));
  // piecewise constant: integrate exactly on each step
  double ref = 0.0;
  for (int j = 0; j * k < t; ++j) {
    const double a = j * k, b = std::min(t, (j + 1) * k);
    ref += (b - a) * val(r, a);
  }
  CHECK(time_integral(r, k, t) == doctest::Approx(ref).epsilon(1e-12));
  double ref2 = 0.0;
  for (int j = 0; j * k < t; ++j) {
    const double a = j * k, b = std::min(t, (j + 1) * k);
    ref2 += simpson([&](double s) { return val(r2, a) * val(e, s); }, a, b, 200);
  }
  CHECK(time_integral_product(r2, e, k, t) == doctest::Approx(ref2).epsilon(1e-10));
}

TEST_CASE("lemma identifiers round trip") {
  for (const char* id : {"Fh1_i", "Fh2_ii", "Fkh1_iii", "smoothing_r"}) CHECK(to_string(parse_lemma_id(id)) == id);
  CHECK(lemma_uses_time_levels(parse_lemma_id("Fkh2_i")));
  CHECK(!lemma_uses_time_levels(parse_lemma_id("Fh2_i")));
  CHECK_THROWS_AS(parse_lemma_id("Fh9"), ConfigurationError);
}

TEST_CASE("spectral Fh1_i rate for mu = 2") {
  LemmaParams p;
  p.mu = 2.0;
  p.nu = 0.0;
  const auto rep = lemma_rate_check(LemmaId::Fh1_i, p, SpaceKind::spectral, {4, 8, 16, 32});
  CHECK(rep.pass);
  CHECK(rep.slope == doctest::Approx(2.0).epsilon(0.025));
  for (const auto& l : rep.levels) CHECK(l.interior);
}

TEST_CASE("integral functional Fh2_ii in spectral space") {
  LemmaParams p;
  p.rho = 0.5;
  const auto rep = lemma_rate_check(LemmaId::Fh2_ii, p, SpaceKind::spectral, {4, 8, 16, 32, 64});
  CHECK(rep.pass);
  CHECK(std::fabs(rep.slope - 1.5) <= 0.1);
}

TEST_CASE("smoothing constants") {
  CHECK(smoothing_constant_E(1.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(smoothing_constant_E(0.0) == doctest::Approx(1.0));
  LemmaParams p;
  p.nu = 1.0;
  const auto rep = lemma_rate_check(LemmaId::smoothing_E, p, SpaceKind::spectral, {8, 16, 32});
  CHECK(rep.pass);
}

TEST_CASE("Ritz projection rates and stability constants") {
  const auto r1 = ritz_rate_probe(SpaceKind::fem_p1, {8, 16, 32}, 1.0, 512);
  CHECK(r1.slope == doctest::Approx(1.0).epsilon(0.1));
  const auto r2 = ritz_rate_probe(SpaceKind::fem_p1, {8, 16, 32}, 2.0, 512);
  CHECK(r2.slope == doctest::Approx(2.0).epsilon(0.05));
  const auto basis = EigenBasis::build(64, EigenBasis::default_quadrature_size(64));
  CHECK(stability_constant(GalerkinSpace::spectral(basis, 16), 64) == doctest::Approx(1.0));
  const double c = stability_constant(GalerkinSpace::fem_p1(16), 512);
  CHECK(c >= 1.0);
  CHECK(c < 3.0);
}

TEST_CASE("Lanczos finds the largest eigenvalue") {
  Eigen::VectorXd d(5);
  d << 1, 7, 3, 2, 5;
  Eigen::VectorXd start = Eigen::VectorXd::Ones(5);
  const double top = lanczos_max([&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = d.cwiseProduct(x); }, start);
  CHECK(top == doctest::Approx(7.0).epsilon(1e-10));
}

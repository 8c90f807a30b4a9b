// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "spdelab/errors.hpp"
#include "spdelab/galerkin_space.hpp"
#include "spdelab/noise.hpp"

using namespace spdelab;

namespace {

constexpr double kPi = std::numbers::pi;

double hat(std::size_t i, double h, double y) {
  const double xi = static_cast<double>(i) * h;
  return std::max(0.0, 1.0 - std::fabs(y - xi) / h);
}

// Composite Simpson on [a, b].
template <typename F>
double simpson(F f, double a, double b, int n = 2000) {
  const double dx = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * dx);
  return s * dx / 3.0;
}

SobolevVector random_vector(const EigenBasis& basis, std::uint64_t seed, double decay) {
  SobolevVector v(basis);
  for (std::size_t n = 1; n <= basis.mode_count(); ++n)
    v[n] = rng::standard_normal(seed, 1, n) * std::pow(static_cast<double>(n), -decay);
  return v;
}

}  // namespace

TEST_CASE("P1 mass and stiffness entries") {
  const auto s = GalerkinSpace::fem_p1(8);
  const double h = 1.0 / 8;
  CHECK(s.dim() == 7);
  CHECK(s.h() == doctest::Approx(h));
  CHECK(s.stiffness().diag[0] == doctest::Approx(2.0 / h));
  CHECK(s.stiffness().off[0] == doctest::Approx(-1.0 / h));
  CHECK(s.mass().diag[3] == doctest::Approx(2.0 * h / 3.0));
  CHECK(s.mass().off[2] == doctest::Approx(h / 6.0));
  CHECK_THROWS(GalerkinSpace::fem_p1(1));
}

TEST_CASE("P1 discrete eigenvalues have the closed form") {
  for (std::size_t ne : {4, 16, 33}) {
    const auto s = GalerkinSpace::fem_p1(ne);
    const double h = 1.0 / static_cast<double>(ne);
    const auto ev = s.discrete_eigenvalues();
    for (std::size_t n = 1; n < ne; ++n) {
      const double c = std::cos(static_cast<double>(n) * kPi * h);
      CHECK(ev[n - 1] == doctest::Approx(6.0 / (h * h) * (1.0 - c) / (2.0 + c)).epsilon(1e-11));
    }
  }
}

TEST_CASE("spectral space mirrors the first N modes") {
  const auto basis = EigenBasis::build(64, EigenBasis::default_quadrature_size(64));
  const auto s = GalerkinSpace::spectral(basis, 10);
  CHECK(s.dim() == 10);
  CHECK(s.h() == doctest::Approx(1.0 / (11.0 * kPi)));
  for (std::size_t n = 1; n <= 10; ++n)
    CHECK(s.discrete_eigenvalues()[n - 1] == doctest::Approx(basis.eigenvalue(n)));
  CHECK_THROWS_AS(GalerkinSpace::spectral(basis, 64), ConfigurationError);
}

TEST_CASE("hat function against sine modes") {
  const auto s = GalerkinSpace::fem_p1(8);
  const double h = 1.0 / 8;
  for (std::size_t i : {1, 4, 7})
    for (std::size_t n : {1, 3, 8, 15, 40}) {
      const double ref = simpson(
          [&](double y) { return hat(i, h, y) * std::sqrt(2.0) * std::sin(n * kPi * y); },
          (i - 1.0) * h, (i + 1.0) * h);
      CHECK(s.basis_mode_inner(i, n) == doctest::Approx(ref).epsilon(1e-10).scale(1e-3));
    }
}

TEST_CASE("L2 projection is Galerkin orthogonal") {
  const auto basis = EigenBasis::build(256, EigenBasis::default_quadrature_size(256));
  const auto s = GalerkinSpace::fem_p1(16);
  const auto x = random_vector(basis, 5, 1.0);
  const auto p = project_l2(s, x);
  // (P_h x, phi_i) = (x, phi_i)
  std::vector<double> mc(s.dim()), b(s.dim());
  s.mass().apply(p.coords, mc);
  for (std::size_t i = 1; i <= s.dim(); ++i) {
    double xb = 0.0;
    for (std::size_t n = 1; n <= 256; ++n) xb += x[n] * s.basis_mode_inner(i, n);
    CHECK(mc[i - 1] == doctest::Approx(xb).epsilon(1e-12).scale(1e-6));
  }
}

TEST_CASE("Ritz projection is energy orthogonal") {
  const auto basis = EigenBasis::build(256, EigenBasis::default_quadrature_size(256));
  const auto s = GalerkinSpace::fem_p1(16);
  const auto x = random_vector(basis, 6, 1.5);
  const auto r = project_ritz(s, x);
  std::vector<double> kc(s.dim());
  s.stiffness().apply(r.coords, kc);
  for (std::size_t i = 1; i <= s.dim(); ++i) {
    double a = 0.0;
    for (std::size_t n = 1; n <= 256; ++n) a += basis.eigenvalue(n) * x[n] * s.basis_mode_inner(i, n);
    CHECK(kc[i - 1] == doctest::Approx(a).epsilon(1e-10).scale(1e-6));
  }
}

TEST_CASE("discrete operator identities") {
  const auto basis = EigenBasis::build(256, EigenBasis::default_quadrature_size(256));
  for (const auto& s : {GalerkinSpace::fem_p1(12), GalerkinSpace::spectral(basis, 20)}) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto x = random_vector(basis, seed, 1.0);
      const auto ph = project_l2(s, x);
      // ||A_h^{1/2} y||^2 = a(y, y)
      const double e = energy_norm(ph);
      CHECK(norm(discrete_fractional(ph, 0.5)) == doctest::Approx(e).epsilon(1e-10));
      // A_h^{-1} P_h x = R_h A^{-1} x
      const auto lhs = discrete_fractional(ph, -1.0);
      const auto rhs = project_ritz(s, apply_fractional_power(x, -1.0));
      CHECK(l2_distance(lhs, rhs) <= 1e-10 * norm(lhs));
      // A_h applied then inverted
      const auto back = discrete_fractional(apply_Ah(ph), -1.0);
      CHECK(l2_distance(back, ph) <= 1e-10 * norm(ph));
      // R(k A_h) is a contraction and matches the eigen-expansion
      const auto r1 = rational_step(ph, 0.01, 3);
      CHECK(norm(r1) <= norm(ph));
      const auto r2 = apply_spectral_function(ph, [](double l) { return std::pow(1.0 / (1.0 + 0.01 * l), 3); });
      CHECK(l2_distance(r1, r2) <= 1e-12 * norm(ph));
      // discrete semigroup at t = 0 is the identity
      CHECK(l2_distance(discrete_semigroup(ph, 0.0), ph) <= 1e-14 * norm(ph));
    }
  }
}

TEST_CASE("exact L2 distances") {
  const auto basis = EigenBasis::build(128, EigenBasis::default_quadrature_size(128));
  const auto coarse = GalerkinSpace::fem_p1(4);
  const auto fine = GalerkinSpace::fem_p1(8);
  const DiscreteField a(coarse, {1.0, -0.5, 0.25});
  DiscreteField b = DiscreteField::zero(fine);
  b.coords[1] = 1.0;
  auto fa = [&](double y) {
    return 1.0 * hat(1, 0.25, y) - 0.5 * hat(2, 0.25, y) + 0.25 * hat(3, 0.25, y);
  };
  double ref = 0.0;
  for (int e = 0; e < 8; ++e)
    ref += simpson([&](double y) { const double d = fa(y) - hat(2, 0.125, y); return d * d; }, e / 8.0, (e + 1) / 8.0, 200);
  CHECK(l2_distance(a, b) == doctest::Approx(std::sqrt(ref)).epsilon(1e-10));
  CHECK(l2_distance(b, a) == doctest::Approx(std::sqrt(ref)).epsilon(1e-10));

  // against a reference-frame vector: a single mode
  const auto e3 = SobolevVector::unit(basis, 3);
  double ref2 = 0.0;
  for (int e = 0; e < 4; ++e)
    ref2 += simpson([&](double y) { const double d = fa(y) - std::sqrt(2.0) * std::sin(3 * kPi * y); return d * d; }, e / 4.0, (e + 1) / 4.0, 400);
  CHECK(l2_distance(a, e3) == doctest::Approx(std::sqrt(ref2)).epsilon(1e-6));
}

TEST_CASE("rational function and domain errors") {
  CHECK(rational_function(0.0) == 1.0);
  CHECK(rational_function(3.0) == doctest::Approx(0.25));
  const auto s = GalerkinSpace::fem_p1(4);
  const DiscreteField x(s, {1.0, 2.0, 3.0});
  CHECK_THROWS_AS(rational_step(x, 0.0, 1), DomainError);
  CHECK_THROWS_AS(discrete_semigroup(x, -1.0), DomainError);
}

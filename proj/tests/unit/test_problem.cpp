// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "spdelab/errors.hpp"
#include "spdelab/problem.hpp"

using namespace spdelab;

namespace {

constexpr double kPi = std::numbers::pi;

template <typename F>
double simpson(F f, int n = 4000) {
  const double dx = 1.0 / n;
  double s = f(0.0) + f(1.0);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * dx);
  return s * dx / 3.0;
}

EigenBasis small_basis() { return EigenBasis::build(64, EigenBasis::default_quadrature_size(64)); }

}  // namespace

TEST_CASE("built-in problems") {
  const auto basis = small_basis();
  for (const auto& name : builtin_problem_names()) {
    const auto p = make_problem(name, basis, 32);
    CHECK(p.name == name);
    CHECK(p.covariance.truncation == 32);
    CHECK(p.initial.size() == 64);
  }
  CHECK_THROWS_AS(make_problem("P9", basis, 32), ConfigurationError);
  const auto p3 = make_problem("P3", basis, 32);
  CHECK(p3.diffusion == DiffusionKind::nemytskii_mult);
  CHECK(p3.sigma(0.3) == doctest::Approx(1.0 + 0.5 * std::sin(0.3)));
  CHECK(p3.phi(0.3) == doctest::Approx(-std::sin(0.3)));
  CHECK(p3.diffusion_lipschitz == doctest::Approx(0.5 * std::sqrt(2.0 * p3.covariance.trace)));
  CHECK(make_problem("P1", basis, 32).r == 1.0);
}

TEST_CASE("initial profile is y(1-y)") {
  const auto basis = small_basis();
  const auto x0 = initial_profile(basis);
  for (std::size_t n : {1, 2, 3, 9}) {
    const double ref = simpson([&](double y) { return y * (1 - y) * std::sqrt(2.0) * std::sin(n * kPi * y); });
    CHECK(x0[n] == doctest::Approx(ref).epsilon(1e-10).scale(1e-3));
  }
}

TEST_CASE("Nemytskii drift by collocation") {
  const auto basis = small_basis();
  const auto p = make_problem("P3", basis, 32);
  SobolevVector u(basis);
  u[1] = 1.2;
  u[2] = -0.4;
  const auto f = eval_drift(p, u);
  auto uy = [&](double y) { return 1.2 * std::sqrt(2.0) * std::sin(kPi * y) - 0.4 * std::sqrt(2.0) * std::sin(2 * kPi * y); };
  for (std::size_t n : {1, 2, 5}) {
    const double ref = simpson([&](double y) { return -std::sin(uy(y)) * std::sqrt(2.0) * std::sin(n * kPi * y); });
    CHECK(f[n] == doctest::Approx(ref).epsilon(1e-9).scale(1e-3));
  }
  CHECK(sobolev_norm(eval_drift(make_problem("P1", basis, 32), u), 0.0) == 0.0);
}

TEST_CASE("diffusion actions") {
  const auto basis = small_basis();
  const auto p1 = make_problem("P1", basis, 16);
  SobolevVector u(basis);
  u[1] = 0.7;
  std::vector<double> dw(16);
  for (std::size_t m = 0; m < 16; ++m) dw[m] = 0.1 * (m + 1);
  const auto g = eval_diffusion_action(p1, u, dw);
  for (std::size_t m = 1; m <= 16; ++m) CHECK(g[m] == doctest::Approx(p1.gamma[m - 1] * dw[m - 1]));
  CHECK(g[17] == 0.0);
  const auto p4 = make_problem("P4", basis, 16);
  const auto g4 = eval_diffusion_action(p4, u, dw);
  CHECK(g4[1] == doctest::Approx(p4.kappa * p4.gamma[0] * 0.7 * dw[0]));
  CHECK(g4[2] == 0.0);
  std::vector<double> wrong(5);
  CHECK_THROWS_AS(eval_diffusion_action(p1, u, wrong), ShapeError);
}

TEST_CASE("Hilbert-Schmidt norms of the diffusion") {
  const auto basis = EigenBasis::build(128, EigenBasis::default_quadrature_size(128));
  const auto p1 = make_problem("P1", basis, 64);
  SobolevVector u(basis);
  double ref = 0.0;
  for (std::size_t m = 1; m <= 64; ++m) ref += std::pow(p1.gamma[m - 1], 2) * p1.covariance.q(m) * basis.eigenvalue(m);
  CHECK(diffusion_hs_norm(p1, u, 1.0) == doctest::Approx(std::sqrt(ref)).epsilon(1e-12));
  // sigma == 1 everywhere at u = 0: ||g||^2 = sum_m q_m ||e_m||^2
  const auto p3 = make_problem("P3", basis, 32);
  CHECK(diffusion_hs_norm(p3, u, 0.0) == doctest::Approx(std::sqrt(p3.covariance.trace)).epsilon(1e-10));
}

TEST_CASE("Lipschitz and growth probes stay within the declared bounds") {
  const auto basis = EigenBasis::build(128, EigenBasis::default_quadrature_size(128));
  for (const auto& name : builtin_problem_names()) {
    const auto p = make_problem(name, basis, 64);
    const auto lr = lipschitz_probe(p, 10, 1);
    CAPTURE(name);
    CHECK(lr.within_bounds);
    CHECK(lr.f_ratio_max <= 1.05 * lr.f_bound + 1e-15);
    CHECK(lr.g_ratio_max <= 1.05 * lr.g_bound + 1e-15);
    const auto gr = growth_probe(p, 5, 1);
    CHECK(std::isfinite(gr.overall_max));
    CHECK(gr.ratio_max.size() == gr.amplitudes.size());
  }
}

TEST_CASE("random fields are normalized and reproducible") {
  const auto basis = small_basis();
  const auto a = random_field(basis, 3, 1, 2.5, 1.0);
  const auto b = random_field(basis, 3, 1, 2.5, 1.0);
  CHECK(sobolev_norm(a, 0.0) == doctest::Approx(2.5));
  CHECK(inner(a, b) == doctest::Approx(6.25));
}

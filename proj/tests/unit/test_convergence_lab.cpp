// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "spdelab/convergence_lab.hpp"
#include "spdelab/errors.hpp"

using namespace spdelab;

namespace {

EigenBasis test_basis() { return EigenBasis::build(128, EigenBasis::default_quadrature_size(128)); }

ProblemSpec short_p1(const EigenBasis& basis) {
  auto p = make_problem("P1", basis, 64);
  p.T = 0.25;
  return p;
}

}  // namespace

TEST_CASE("identical discretizations have zero error") {
  const auto basis = test_basis();
  const auto p = short_p1(basis);
  const Discretization d{GalerkinSpace::spectral(basis, 16), 1.0 / 64};
  const auto est = strong_error(p, d, d, 8, 2.0, 3, 1);
  CHECK(est.value == 0.0);
  for (double e : est.sample_errors) CHECK(e == 0.0);
}

TEST_CASE("per-sample errors match two independent AR(1) recursions") {
  const auto basis = test_basis();
  const auto p = short_p1(basis);
  const double kr = 1.0 / 256, kc = 4 * kr;
  const Discretization coarse{GalerkinSpace::spectral(basis, 8), kc};
  const Discretization ref{GalerkinSpace::spectral(basis, 16), kr};
  const auto est = strong_error(p, coarse, ref, 4, 2.0, 100, 1);
  REQUIRE(est.sample_errors.size() == 4);
  CHECK(est.eval_time == doctest::Approx(0.25));
  for (std::size_t i = 0; i < 4; ++i) {
    const IncrementGenerator gen(p.covariance, kr, 100 + i);
    std::vector<double> cf(16), cc(8), acc(gen.modes(), 0.0), dw(gen.modes());
    for (std::size_t n = 1; n <= 16; ++n) cf[n - 1] = p.initial[n];
    for (std::size_t n = 1; n <= 8; ++n) cc[n - 1] = p.initial[n];
    for (std::size_t j = 1; j <= 64; ++j) {
      gen.fill(j, dw);
      for (std::size_t n = 1; n <= 16; ++n)
        cf[n - 1] = (cf[n - 1] + p.gamma[n - 1] * dw[n - 1]) / (1.0 + kr * basis.eigenvalue(n));
      for (std::size_t m = 0; m < acc.size(); ++m) acc[m] += dw[m];
      if (j % 4) continue;
      for (std::size_t n = 1; n <= 8; ++n)
        cc[n - 1] = (cc[n - 1] + p.gamma[n - 1] * acc[n - 1]) / (1.0 + kc * basis.eigenvalue(n));
      std::fill(acc.begin(), acc.end(), 0.0);
    }
    double s = 0.0;
    for (std::size_t n = 1; n <= 16; ++n) {
      const double d = (n <= 8 ? cc[n - 1] : 0.0) - cf[n - 1];
      s += d * d;
    }
    CHECK(est.sample_errors[i] == doctest::Approx(std::sqrt(s)).epsilon(1e-12));
  }
  // second moment and its bootstrap error
  double m2 = 0.0;
  for (double e : est.sample_errors) m2 += e * e;
  CHECK(est.value == doctest::Approx(std::sqrt(m2 / 4)).epsilon(1e-14));
}

TEST_CASE("reruns are bit identical and independent of the worker count") {
  const auto basis = test_basis();
  const auto p = make_problem("P3", basis, 64);
  auto q = p;
  q.T = 0.125;
  const Discretization coarse{GalerkinSpace::fem_p1(8), 1.0 / 32};
  const Discretization ref{GalerkinSpace::fem_p1(32), 1.0 / 128};
  const auto a = strong_error(q, coarse, ref, 12, 2.0, 7, 1);
  const auto b = strong_error(q, coarse, ref, 12, 2.0, 7, 3);
  const auto c = strong_error(q, coarse, ref, 12, 2.0, 7, 3);
  CHECK(a.sample_errors == b.sample_errors);
  CHECK(b.sample_errors == c.sample_errors);
  CHECK(a.value == b.value);
  CHECK(a.stderr_ == b.stderr_);
}

TEST_CASE("more samples stay within the bootstrap error") {
  const auto basis = test_basis();
  const auto p = short_p1(basis);
  const Discretization coarse{GalerkinSpace::spectral(basis, 4), 1.0 / 64};
  const Discretization ref{GalerkinSpace::spectral(basis, 32), 1.0 / 64};
  const auto a = strong_error(p, coarse, ref, 100, 2.0, 1, 0);
  const auto b = strong_error(p, coarse, ref, 200, 2.0, 1, 0);
  CHECK(a.stderr_ > 0.0);
  CHECK(std::fabs(a.value - b.value) <= 3.0 * a.stderr_);
}

TEST_CASE("estimate_moment") {
  const std::vector<double> e{1.0, 2.0, 3.0, 4.0};
  const auto est = estimate_moment(e, 2.0, 5);
  CHECK(est.value == doctest::Approx(std::sqrt(7.5)).epsilon(1e-15));
  CHECK(estimate_moment(e, 1.0, 5).value == doctest::Approx(2.5));
  CHECK(est.stderr_ > 0.0);
  CHECK(est.stderr_ < 1.5);
  CHECK(estimate_moment(e, 2.0, 5).stderr_ == est.stderr_);
  CHECK(estimate_moment({2.0, 2.0, 2.0}, 2.0, 1).stderr_ == 0.0);
  CHECK_THROWS_AS(estimate_moment({}, 2.0, 1), ConfigurationError);
  CHECK_THROWS_AS(estimate_moment(e, 0.5, 1), ConfigurationError);
}

TEST_CASE("common time") {
  const std::vector<double> nested{0.125, 0.25, 0.5};
  CHECK(common_time(1.0, nested) == 1.0);
  CHECK(common_time(0.9, nested) == 0.5);
  const std::vector<double> odd{0.75, 0.5};
  CHECK_THROWS_AS(common_time(1.0, odd), ConfigurationError);
  const std::vector<double> big{0.5, 0.25};
  CHECK_THROWS_AS(common_time(0.4, big), ConfigurationError);
}

TEST_CASE("thread resolution") {
  CHECK(resolve_threads(3) == 3);
  CHECK(resolve_threads(0) >= 1);
}

TEST_CASE("study validation") {
  const auto basis = test_basis();
  const auto p = short_p1(basis);
  const double k = 1.0 / 64;
  std::vector<Discretization> two{{GalerkinSpace::spectral(basis, 4), k},
                                  {GalerkinSpace::spectral(basis, 8), k}};
  StudySpec s{.axis = Axis::spatial, .levels = two, .ref = {GalerkinSpace::spectral(basis, 64), k},
              .samples = 4, .base_seed = 1, .bias_check = false};
  CHECK_THROWS_AS(convergence_study(p, s), ConfigurationError);
  s.levels.push_back({GalerkinSpace::spectral(basis, 16), k});
  s.ref = {GalerkinSpace::spectral(basis, 32), k};  // only 2x the finest level
  CHECK_THROWS_AS(convergence_study(p, s), ConfigurationError);
  s.ref = {GalerkinSpace::spectral(basis, 64), k};
  const auto rep = convergence_study(p, s);
  CHECK(rep.failure.empty());
  REQUIRE(rep.levels.size() == 3);
  CHECK(rep.monotone);
  CHECK(rep.slope_ci_low <= rep.fit.slope);
  CHECK(rep.fit.slope <= rep.slope_ci_high);
}

TEST_CASE("deterministic increments are Lipschitz in the lag") {
  const auto basis = test_basis();
  auto p = short_p1(basis);
  p.gamma.assign(p.gamma.size(), 0.0);
  const Discretization ref{GalerkinSpace::spectral(basis, 32), 1.0 / 1024};
  const auto rep = holder_check(p, ref, {1, 2, 4, 8}, 0.125, 2, 1, 1);
  CHECK(rep.monotone);
  CHECK(rep.fit.slope == doctest::Approx(1.0).epsilon(0.05));
  CHECK_THROWS_AS(holder_check(p, ref, {1}, 0.125, 2, 1, 1), ConfigurationError);
  CHECK_THROWS_AS(holder_check(p, ref, {4, 2}, 0.125, 2, 1, 1), ConfigurationError);
  CHECK_THROWS_AS(holder_check(p, ref, {1, 2}, 0.2499, 2, 1, 1), ConfigurationError);
}

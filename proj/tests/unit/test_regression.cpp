// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <vector>

#include "spdelab/errors.hpp"
#include "spdelab/noise.hpp"
#include "spdelab/regression.hpp"

using namespace spdelab;

TEST_CASE("exact power law") {
  std::vector<FitPoint> pts;
  for (double h : {0.5, 0.25, 0.125, 0.0625}) pts.push_back({h, 3.0 * h * h, 0.0});
  const auto fit = fit_rate(pts);
  CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::exp(fit.intercept) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fit.slope_stderr <= 1e-12);
}

TEST_CASE("two points give the line through both") {
  const std::vector<FitPoint> pts{{0.1, 0.5, 0.0}, {0.01, 0.02, 0.0}};
  const auto fit = fit_rate(pts);
  CHECK(fit.slope == doctest::Approx(std::log(0.5 / 0.02) / std::log(10.0)).epsilon(1e-14));
  CHECK(fit.intercept + fit.slope * std::log(0.1) == doctest::Approx(std::log(0.5)).epsilon(1e-14));
}

TEST_CASE("weighted fit follows the stderr weights") {
  // a point with a huge stderr hardly moves the fit
  const std::vector<FitPoint> pts{{1.0, 1.0, 0.01}, {0.5, 0.5, 0.005}, {0.25, 0.25, 0.0025},
                                  {0.125, 10.0, 1e6}};
  CHECK(fit_rate(pts).slope == doctest::Approx(1.0).epsilon(1e-6));
  // weighted stderr = sqrt(1 / sum w (x - xbar)^2) with w = (e / se)^2
  const std::vector<FitPoint> q{{1.0, 1.0, 0.1}, {0.5, 0.25, 0.025}, {0.25, 0.0625, 0.00625}};
  const double w = 100.0, l2 = std::log(2.0);
  const double sxx = w * (l2 * l2 + 0.0 + l2 * l2);
  CHECK(fit_rate(q).slope_stderr == doctest::Approx(1.0 / std::sqrt(sxx)).epsilon(1e-12));
}

TEST_CASE("noisy synthetic power law recovers the slope") {
  int within = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    std::vector<FitPoint> pts;
    for (int i = 0; i < 6; ++i) {
      const double h = std::ldexp(1.0, -i - 2);
      const double e = std::sqrt(h) * (1.0 + 0.05 * rng::standard_normal(trial, 0, i, 7));
      pts.push_back({h, e, 0.05 * std::sqrt(h)});
    }
    if (std::fabs(fit_rate(pts).slope - 0.5) <= 0.05) ++within;
  }
  CHECK(within >= 95);
}

TEST_CASE("flat errors give a zero slope") {
  const std::vector<FitPoint> pts{{1.0, 0.3, 0.01}, {0.5, 0.3, 0.01}, {0.25, 0.3, 0.01}};
  const auto fit = fit_rate(pts);
  CHECK(std::fabs(fit.slope) <= 1e-12);
  CHECK(fit.slope - 1.96 * fit.slope_stderr <= 0.0);
  CHECK(fit.slope + 1.96 * fit.slope_stderr >= 0.0);
}

TEST_CASE("invalid inputs") {
  const std::vector<FitPoint> one{{1.0, 1.0, 0.0}};
  CHECK_THROWS_AS(fit_rate(one), ConfigurationError);
  const std::vector<FitPoint> zero{{1.0, 1.0, 0.0}, {0.5, 0.0, 0.0}};
  CHECK_THROWS_AS(fit_rate(zero), DomainError);
}

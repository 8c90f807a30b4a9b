// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "spdelab/errors.hpp"
#include "spdelab/noise.hpp"

using namespace spdelab;

TEST_CASE("Philox4x32-10 known answers") {
  using rng::Counter;
  CHECK(rng::philox4x32({0, 0, 0, 0}, {0, 0}) ==
        Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(rng::philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                        {0xffffffffu, 0xffffffffu}) ==
        Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(rng::philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                        {0xa4093822u, 0x299f31d0u}) ==
        Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("normal quantile inverts the normal CDF") {
  auto cdf = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  for (double p : {1e-12, 1e-6, 0.01, 0.2, 0.5, 0.75, 0.975, 1.0 - 1e-9}) {
    const double x = rng::normal_quantile(p);
    CHECK(cdf(x) == doctest::Approx(p).epsilon(1e-13));
  }
  CHECK(rng::normal_quantile(0.5) == 0.0);
  CHECK(rng::normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-15));
}

TEST_CASE("standard normals are reproducible and standard") {
  CHECK(rng::standard_normal(7, 3, 11) == rng::standard_normal(7, 3, 11));
  CHECK(rng::standard_normal(7, 3, 11) != rng::standard_normal(8, 3, 11));
  std::vector<double> v(200000);
  rng::standard_normals(42, 1, 0, v);
  double m = 0.0, s2 = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  for (double x : v) s2 += (x - m) * (x - m);
  s2 /= static_cast<double>(v.size() - 1);
  CHECK(std::fabs(m) < 0.01);
  CHECK(std::fabs(s2 - 1.0) < 0.015);
  CHECK(v[12345] == rng::standard_normal(42, 1, 12345, 0));
}

TEST_CASE("covariance requires trace class") {
  const auto cov = make_covariance(1.0, 100);
  CHECK(cov.q(1) == 1.0);
  CHECK(cov.q(10) == doctest::Approx(0.01));
  double t = 0.0;
  for (int m = 1; m <= 100; ++m) t += 1.0 / (m * m);
  CHECK(cov.trace == doctest::Approx(t).epsilon(1e-14));
  CHECK(cov.tail_bound >= std::pow(std::acos(-1.0), 2) / 6.0 - t);
  const auto scaled = make_covariance(1.0, 100, 4.0);
  CHECK(scaled.q(3) == doctest::Approx(4.0 / 9.0));
  try {
    make_covariance(0.4, 10);
    FAIL("expected an error");
  } catch (const ConfigurationError& e) {
    CHECK(std::string(e.what()).find("trace class") != std::string::npos);
  }
}

TEST_CASE("increments scale with sqrt(q k)") {
  const auto cov = make_covariance(1.0, 8);
  const auto path = sample_increments(cov, 0.01, 3, 99);
  CHECK(path.increments.size() == 24);
  for (std::size_t j = 1; j <= 3; ++j)
    for (std::size_t m = 1; m <= 8; ++m)
      CHECK(path.increment(j)[m - 1] ==
            doctest::Approx(std::sqrt(cov.q(m) * 0.01) * rng::standard_normal(99, j, m - 1)).epsilon(1e-15));
}

TEST_CASE("coarsen_path sums fine increments in ascending order") {
  const auto cov = make_covariance(0.8, 16);
  const auto fine = sample_increments(cov, 1.0 / 64, 64, 5);
  const auto coarse = coarsen_path(fine, 4);
  CHECK(coarse.steps == 16);
  CHECK(coarse.k == doctest::Approx(1.0 / 16));
  for (std::size_t j = 1; j <= 16; ++j)
    for (std::size_t m = 0; m < 16; ++m) {
      double s = 0.0;
      for (std::size_t i = 4 * (j - 1) + 1; i <= 4 * j; ++i) s += fine.increment(i)[m];
      CHECK(coarse.increment(j)[m] == s);
    }
  CHECK_THROWS_AS(coarsen_path(fine, 3), ConfigurationError);
}

TEST_CASE("generator matches sampled paths and refines by bridges") {
  const auto cov = make_covariance(1.0, 32);
  const IncrementGenerator g0(cov, 0.125, 17);
  const auto path = sample_increments(cov, 0.125, 8, 17);
  std::vector<double> dw(32);
  for (std::size_t j = 1; j <= 8; ++j) {
    g0.fill(j, dw);
    for (std::size_t m = 0; m < 32; ++m) CHECK(dw[m] == path.increment(j)[m]);
  }
  const IncrementGenerator g2(cov, 0.125, 17, 2);
  CHECK(g2.step() == doctest::Approx(0.125 / 4));
  std::vector<double> sum(32), part(32);
  double var = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 1; j <= 8; ++j) {
    std::fill(sum.begin(), sum.end(), 0.0);
    for (std::size_t i = 4 * (j - 1) + 1; i <= 4 * j; ++i) {
      g2.fill(i, part);
      for (std::size_t m = 0; m < 32; ++m) sum[m] += part[m];
      var += part[0] * part[0];
      ++count;
    }
    for (std::size_t m = 0; m < 32; ++m)
      CHECK(sum[m] == doctest::Approx(path.increment(j)[m]).epsilon(1e-13).scale(1e-3));
  }
  CHECK(count == 32);
}

TEST_CASE("bridge increments have the fine-grid variance") {
  const auto cov = make_covariance(1.0, 1);
  const IncrementGenerator g(cov, 1.0, 3, 3);
  std::vector<double> dw(1);
  double s2 = 0.0;
  const std::size_t n = 40000;
  for (std::size_t j = 1; j <= n; ++j) {
    g.fill(j, dw);
    s2 += dw[0] * dw[0];
  }
  CHECK(s2 / n == doctest::Approx(0.125).epsilon(0.03));
}

TEST_CASE("Hilbert-Schmidt norm of the identity is the trace") {
  const auto basis = EigenBasis::build(16, EigenBasis::default_quadrature_size(16));
  const auto cov = make_covariance(1.0, 16);
  const double hs = hs_norm(
      [&](std::size_t m) { return std::sqrt(cov.q(m)) * SobolevVector::unit(basis, m); }, cov, 0.0);
  CHECK(hs == doctest::Approx(std::sqrt(cov.trace)).epsilon(1e-14));
}

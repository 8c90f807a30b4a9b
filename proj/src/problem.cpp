// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#include "spdelab/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "spdelab/errors.hpp"

namespace spdelab {

namespace {

constexpr double kPi = std::numbers::pi;

void require_grid(const ProblemSpec& problem) {
  if (problem.covariance.truncation > problem.basis.quadrature_size())
    throw ConfigurationError("noise truncation exceeds the quadrature grid");
}

std::vector<double> power_weights(std::size_t count, double decay) {
  std::vector<double> w(count);
  for (std::size_t m = 1; m <= count; ++m) w[m - 1] = std::pow(static_cast<double>(m), -decay);
  return w;
}

// 2 sum_m q_m sin^2(m pi y_i) at the quadrature nodes.
std::vector<double> noise_frame_weight(const ProblemSpec& problem) {
  const auto nodes = problem.basis.nodes();
  std::vector<double> s(nodes.size(), 0.0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    double acc = 0.0;
    for (std::size_t m = problem.covariance.truncation; m >= 1; --m) {
      const double v = std::sin(static_cast<double>(m) * kPi * nodes[i]);
      acc += problem.covariance.q(m) * v * v;
    }
    s[i] = 2.0 * acc;
  }
  return s;
}

}  // namespace

double ScalarMap::sup_bound() const noexcept {
  if (kind == Kind::sine) return std::fabs(a) + std::fabs(b);
  return b == 0.0 ? std::fabs(a) : std::numeric_limits<double>::infinity();
}

std::vector<std::string> builtin_problem_names() { return {"P1", "P2", "P3", "P3f", "P4"}; }

SobolevVector initial_profile(const EigenBasis& basis) {
  SobolevVector x(basis);
  const double c = 4.0 * std::numbers::sqrt2 / (kPi * kPi * kPi);
  for (std::size_t n = 1; n <= basis.mode_count(); n += 2) {
    const double nn = static_cast<double>(n);
    x[n] = c / (nn * nn * nn);
  }
  return x;
}

void declare_bounds(ProblemSpec& p) {
  const double lambda1 = kPi * kPi;
  switch (p.drift) {
    case DriftKind::zero: p.drift_lipschitz = 0.0; break;
    case DriftKind::nemytskii:
      p.drift_lipschitz = p.phi.lipschitz() * std::pow(lambda1, 0.5 * (p.r - 1.0));
      break;
    case DriftKind::fractional_nemytskii: p.drift_lipschitz = p.phi.lipschitz(); break;
  }
  switch (p.diffusion) {
    case DiffusionKind::additive: p.diffusion_lipschitz = 0.0; break;
    case DiffusionKind::linear_diagonal: {
      double m = 0.0;
      for (std::size_t i = 1; i <= p.covariance.truncation; ++i)
        m = std::max(m, std::fabs(p.gamma[i - 1]) * std::sqrt(p.covariance.q(i)));
      p.diffusion_lipschitz = std::fabs(p.kappa) * m;
      break;
    }
    case DiffusionKind::nemytskii_mult:
      p.diffusion_lipschitz = p.sigma.lipschitz() * std::sqrt(2.0 * p.covariance.trace);
      break;
  }
}

ProblemSpec make_problem(const std::string& name, const EigenBasis& basis,
                         std::size_t noise_modes) {
  ProblemSpec p{.name = name, .basis = basis, .initial = initial_profile(basis)};
  p.p = 2.0;
  p.T = 1.0;
  if (name == "P1") {
    p.r = 1.0;
    p.covariance = make_covariance(1.0, noise_modes);
    p.diffusion = DiffusionKind::additive;
    p.gamma = power_weights(noise_modes, 0.55);
  } else if (name == "P2") {
    p.r = 0.5;
    p.covariance = make_covariance(0.75, noise_modes);
    p.diffusion = DiffusionKind::additive;
    p.gamma = power_weights(noise_modes, 0.3);
  } else if (name == "P3" || name == "P3f") {
    p.r = 0.5;
    p.covariance = make_covariance(1.05, noise_modes, 16.0);
    p.diffusion = DiffusionKind::nemytskii_mult;
    p.sigma = {ScalarMap::Kind::sine, 1.0, 0.5};
    p.phi = {ScalarMap::Kind::sine, 0.0, -1.0};
    if (name == "P3") {
      p.drift = DriftKind::nemytskii;
    } else {
      p.drift = DriftKind::fractional_nemytskii;
      p.drift_exponent = 0.5 * (1.0 - p.r);
    }
  } else if (name == "P4") {
    p.r = 1.0;
    p.covariance = make_covariance(1.0, noise_modes);
    p.diffusion = DiffusionKind::linear_diagonal;
    p.gamma.assign(noise_modes, 1.0);
    p.kappa = 1.0;
  } else {
    throw ConfigurationError("unknown problem '" + name + "' (expected P1, P2, P3, P3f or P4)");
  }

  declare_bounds(p);
  return p;
}

SobolevVector eval_drift(const ProblemSpec& problem, const SobolevVector& u) {
  SobolevVector out(problem.basis);
  if (problem.drift == DriftKind::zero) return out;
  if (!u.basis().same_as(problem.basis)) throw ShapeError("field is not on the problem basis");
  auto values = problem.basis.synthesize(u.coeffs());
  for (double& v : values) v = problem.phi(v);
  problem.basis.analyze(values, out.coeffs());
  if (problem.drift == DriftKind::fractional_nemytskii)
    return apply_fractional_power(out, problem.drift_exponent);
  return out;
}

SobolevVector eval_diffusion_action(const ProblemSpec& problem, const SobolevVector& u,
                                    std::span<const double> dW) {
  const std::size_t mn = problem.covariance.truncation;
  if (dW.size() != mn) throw ShapeError("increment length does not match the noise truncation");
  if (!u.basis().same_as(problem.basis)) throw ShapeError("field is not on the problem basis");
  SobolevVector out(problem.basis);
  const std::size_t shared = std::min(mn, out.size());
  switch (problem.diffusion) {
    case DiffusionKind::additive:
      for (std::size_t m = 1; m <= shared; ++m) out[m] = problem.gamma[m - 1] * dW[m - 1];
      break;
    case DiffusionKind::linear_diagonal:
      for (std::size_t m = 1; m <= shared; ++m)
        out[m] = problem.kappa * problem.gamma[m - 1] * u[m] * dW[m - 1];
      break;
    case DiffusionKind::nemytskii_mult: {
      require_grid(problem);
      auto uv = problem.basis.synthesize(u.coeffs());
      const auto wv = problem.basis.synthesize(dW);
      for (std::size_t i = 0; i < uv.size(); ++i) uv[i] = problem.sigma(uv[i]) * wv[i];
      problem.basis.analyze(uv, out.coeffs());
      break;
    }
  }
  return out;
}

double diffusion_hs_norm(const ProblemSpec& problem, const SobolevVector& u, double s) {
  const auto& cov = problem.covariance;
  double sum = 0.0;
  switch (problem.diffusion) {
    case DiffusionKind::additive:
    case DiffusionKind::linear_diagonal:
      for (std::size_t m = cov.truncation; m >= 1; --m) {
        const double lam = static_cast<double>(m * m) * kPi * kPi;
        double g = problem.gamma[m - 1];
        if (problem.diffusion == DiffusionKind::linear_diagonal)
          g *= problem.kappa * (m <= u.size() ? u[m] : 0.0);
        sum += cov.q(m) * g * g * std::pow(lam, s);
      }
      return std::sqrt(sum);
    case DiffusionKind::nemytskii_mult: {
      require_grid(problem);
      const auto& basis = problem.basis;
      auto sv = basis.synthesize(u.coeffs());
      for (double& v : sv) v = problem.sigma(v);
      const auto nodes = basis.nodes();
      const double w = basis.weights()[0];
      if (s == 0.0) {
        const auto frame = noise_frame_weight(problem);
        for (std::size_t i = 0; i < sv.size(); ++i) sum += w * sv[i] * sv[i] * frame[i];
        return std::sqrt(sum);
      }
      std::vector<double> prod(sv.size());
      SobolevVector img(basis);
      for (std::size_t m = 1; m <= cov.truncation; ++m) {
        for (std::size_t i = 0; i < sv.size(); ++i)
          prod[i] = sv[i] * EigenBasis::eigenfunction(m, nodes[i]);
        basis.analyze(prod, img.coeffs());
        const double v = sobolev_norm(img, s);
        sum += cov.q(m) * v * v;
      }
      return std::sqrt(sum);
    }
  }
  return 0.0;
}

SobolevVector random_field(const EigenBasis& basis, std::uint64_t seed, std::uint64_t index,
                           double amplitude, double decay, std::size_t modes) {
  SobolevVector v(basis);
  const std::size_t count = modes == 0 ? basis.mode_count() : std::min(modes, basis.mode_count());
  double norm2 = 0.0;
  for (std::size_t n = 1; n <= count; ++n) {
    v[n] = rng::standard_normal(seed, index, n, 0x5eedu) *
           std::pow(static_cast<double>(n), -decay);
    norm2 += v[n] * v[n];
  }
  if (norm2 > 0.0) v *= amplitude / std::sqrt(norm2);
  return v;
}

LipschitzReport lipschitz_probe(const ProblemSpec& problem, std::size_t trials,
                                std::uint64_t seed) {
  if (trials < 1) throw ConfigurationError("lipschitz_probe needs at least one trial");
  LipschitzReport rep;
  rep.f_bound = problem.drift_lipschitz;
  rep.g_bound = problem.diffusion_lipschitz;
  const bool nemytskii_g = problem.diffusion == DiffusionKind::nemytskii_mult;
  std::vector<double> frame;
  if (nemytskii_g) {
    require_grid(problem);
    frame = noise_frame_weight(problem);
  }
  const double amplitudes[] = {0.5, 2.0, 8.0};
  const double gaps[] = {1.0, 0.1, 0.01};
  const double w = problem.basis.weights()[0];
  for (std::size_t t = 0; t < trials; ++t) {
    const double amp = amplitudes[t % 3];
    const double gap = gaps[(t / 3) % 3];
    const SobolevVector u = random_field(problem.basis, seed, 2 * t, amp, 1.5);
    const SobolevVector v = u + random_field(problem.basis, seed, 2 * t + 1, amp * gap, 1.5);
    const double dist = sobolev_norm(u - v, 0.0);
    if (dist == 0.0) continue;

    if (problem.drift != DriftKind::zero) {
      const double df = sobolev_norm(eval_drift(problem, u) - eval_drift(problem, v), problem.r - 1.0);
      rep.f_ratio_max = std::max(rep.f_ratio_max, df / dist);
    }
    double dg = 0.0;
    switch (problem.diffusion) {
      case DiffusionKind::additive: break;
      case DiffusionKind::linear_diagonal:
        dg = diffusion_hs_norm(problem, u - v, 0.0);
        break;
      case DiffusionKind::nemytskii_mult: {
        const auto uv = problem.basis.synthesize(u.coeffs());
        const auto vv = problem.basis.synthesize(v.coeffs());
        double sum = 0.0;
        for (std::size_t i = 0; i < uv.size(); ++i) {
          const double d = problem.sigma(uv[i]) - problem.sigma(vv[i]);
          sum += w * d * d * frame[i];
        }
        dg = std::sqrt(sum);
        break;
      }
    }
    rep.g_ratio_max = std::max(rep.g_ratio_max, dg / dist);
  }
  rep.within_bounds = rep.f_ratio_max <= 1.05 * rep.f_bound + 1e-14 &&
                      rep.g_ratio_max <= 1.05 * rep.g_bound + 1e-14;
  return rep;
}

GrowthReport growth_probe(const ProblemSpec& problem, std::size_t trials, std::uint64_t seed) {
  if (trials < 1) throw ConfigurationError("growth_probe needs at least one trial");
  GrowthReport rep;
  rep.amplitudes = {1.0, 4.0, 16.0, 64.0};
  for (std::size_t a = 0; a < rep.amplitudes.size(); ++a) {
    double worst = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const SobolevVector u =
          random_field(problem.basis, seed, a * trials + t, rep.amplitudes[a], 2.0);
      const double ratio = diffusion_hs_norm(problem, u, problem.r) /
                           (1.0 + sobolev_norm(u, problem.r));
      worst = std::max(worst, ratio);
    }
    rep.ratio_max.push_back(worst);
    rep.overall_max = std::max(rep.overall_max, worst);
  }
  return rep;
}

}  // namespace spdelab

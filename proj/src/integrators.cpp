// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#include "spdelab/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "spdelab/errors.hpp"

namespace spdelab {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::size_t step_count(double T, double k) {
  if (!(k > 0.0)) throw DomainError("time step must be positive");
  if (k > T * (1.0 + 1e-12))
    throw ConfigurationError("time step " + std::to_string(k) + " exceeds the final time");
  // Tolerate round-off when T is an exact multiple of k.
  return static_cast<std::size_t>(std::floor(T / k * (1.0 + 1e-12)));
}

Stepper::Stepper(const ProblemSpec& problem, const GalerkinSpace& space, double k)
    : problem_(problem), space_(space), k_(k) {
  if (!(k > 0.0)) throw DomainError("time step must be positive");
  grid_needed_ = problem_.drift != DriftKind::zero ||
                 problem_.diffusion == DiffusionKind::nemytskii_mult;
  noise_field_needed_ = problem_.diffusion == DiffusionKind::nemytskii_mult;
  const std::size_t q = problem_.basis.quadrature_size();
  const std::size_t mn = problem_.covariance.truncation;
  if (noise_field_needed_ && mn > q)
    throw ConfigurationError("noise truncation exceeds the quadrature grid");
  const std::size_t dim = space_.dim();
  if (space_.kind() == SpaceKind::spectral && dim >= problem_.basis.mode_count())
    throw ConfigurationError("spectral space is not coarser than the reference basis");
  coords_.assign(dim, 0.0);
  rhs_.assign(dim, 0.0);
  load_.assign(dim, 0.0);
  if (space_.kind() == SpaceKind::spectral) {
    inv_denominator_.resize(dim);
    for (std::size_t n = 0; n < dim; ++n)
      inv_denominator_[n] = 1.0 / (1.0 + k_ * space_.discrete_eigenvalues()[n]);
  } else {
    system_ = space_.mass();
    const auto& K = space_.stiffness();
    for (std::size_t i = 0; i < dim; ++i) system_.diag[i] += k_ * K.diag[i];
    for (std::size_t i = 0; i + 1 < dim; ++i) system_.off[i] += k_ * K.off[i];
    system_factor_ = TridiagonalFactor(system_);
  }
  if (grid_needed_) {
    u_grid_.assign(q, 0.0);
    w_grid_.assign(q, 0.0);
    values_.assign(q, 0.0);
    modal_drift_.assign(q, 0.0);
  }
  const std::size_t modal_len =
      space_.kind() == SpaceKind::spectral ? dim : std::max(mn, grid_needed_ ? q : std::size_t{0});
  modal_.assign(modal_len, 0.0);
  if (problem_.diffusion == DiffusionKind::linear_diagonal) lifted_.assign(mn, 0.0);
  reset();
}

void Stepper::reset() {
  coords_ = project_l2(space_, problem_.initial).coords;
  steps_ = 0;
}

void Stepper::set_state(std::span<const double> coords) {
  if (coords.size() != coords_.size()) throw ShapeError("state has the wrong dimension");
  std::copy(coords.begin(), coords.end(), coords_.begin());
}

void Stepper::grid_values(std::span<double> values) const {
  if (space_.kind() == SpaceKind::spectral) {
    problem_.basis.synthesize(coords_, values);
    return;
  }
  const std::size_t ne = space_.resolution();
  const std::size_t q = values.size();
  const double scale = static_cast<double>(ne) / static_cast<double>(q + 1);
  auto nodal = [&](std::size_t i) { return (i == 0 || i >= ne) ? 0.0 : coords_[i - 1]; };
  for (std::size_t i = 0; i < q; ++i) {
    const double s = static_cast<double>(i + 1) * scale;
    const std::size_t left = std::min(static_cast<std::size_t>(s), ne - 1);
    const double frac = s - static_cast<double>(left);
    values[i] = (1.0 - frac) * nodal(left) + frac * nodal(left + 1);
  }
}

// Modal coefficients (first out.size()) of -k f(u) + [sigma(u) dW] from collocation.
void Stepper::collocation_source(std::span<const double> dW,
                                 std::span<const double> noise_field, std::span<double> out) {
  const auto& basis = problem_.basis;
  grid_values(u_grid_);
  const bool fractional = problem_.drift == DriftKind::fractional_nemytskii;
  std::fill(out.begin(), out.end(), 0.0);
  if (fractional) {
    for (std::size_t i = 0; i < u_grid_.size(); ++i) values_[i] = problem_.phi(u_grid_[i]);
    std::span<double> drift(modal_drift_.data(), out.size());
    basis.analyze(values_, drift);
    for (std::size_t n = 0; n < out.size(); ++n)
      out[n] = -k_ * std::pow(basis.eigenvalue(n + 1), problem_.drift_exponent) * drift[n];
  }
  const bool local_drift = problem_.drift == DriftKind::nemytskii;
  const bool mult = problem_.diffusion == DiffusionKind::nemytskii_mult;
  if (!local_drift && !mult) return;
  std::span<const double> w = noise_field;
  if (mult && w.empty()) {
    basis.synthesize(dW, w_grid_);
    w = w_grid_;
  }
  const bool need_sin = (local_drift && problem_.phi.kind == ScalarMap::Kind::sine) ||
                        (mult && problem_.sigma.kind == ScalarMap::Kind::sine);
  for (std::size_t i = 0; i < u_grid_.size(); ++i) {
    const double u = u_grid_[i];
    const double su = need_sin ? std::sin(u) : 0.0;
    double v = local_drift ? -k_ * problem_.phi(u, su) : 0.0;
    if (mult) v += problem_.sigma(u, su) * w[i];
    values_[i] = v;
  }
  std::span<double> tmp(modal_drift_.data(), out.size());
  basis.analyze(values_, tmp);
  for (std::size_t n = 0; n < out.size(); ++n) out[n] += tmp[n];
}

void Stepper::advance(std::span<const double> dW, std::span<const double> noise_field) {
  const std::size_t mn = problem_.covariance.truncation;
  if (dW.size() != mn) throw ShapeError("increment length does not match the noise truncation");
  const std::size_t dim = coords_.size();
  const std::size_t shared = std::min(dim, mn);

  if (space_.kind() == SpaceKind::spectral) {
    std::copy(coords_.begin(), coords_.end(), rhs_.begin());
    if (grid_needed_) {
      collocation_source(dW, noise_field, modal_);
      for (std::size_t n = 0; n < dim; ++n) rhs_[n] += modal_[n];
    }
    if (problem_.diffusion == DiffusionKind::additive) {
      for (std::size_t n = 0; n < shared; ++n) rhs_[n] += problem_.gamma[n] * dW[n];
    } else if (problem_.diffusion == DiffusionKind::linear_diagonal) {
      for (std::size_t n = 0; n < shared; ++n)
        rhs_[n] += problem_.kappa * problem_.gamma[n] * coords_[n] * dW[n];
    }
    for (std::size_t n = 0; n < dim; ++n) coords_[n] = rhs_[n] * inv_denominator_[n];
  } else {
    space_.mass().apply(coords_, rhs_);
    if (grid_needed_) {
      collocation_source(dW, noise_field, modal_);
    } else {
      std::fill(modal_.begin(), modal_.end(), 0.0);
    }
    if (problem_.diffusion == DiffusionKind::additive) {
      for (std::size_t m = 0; m < mn; ++m) modal_[m] += problem_.gamma[m] * dW[m];
    } else if (problem_.diffusion == DiffusionKind::linear_diagonal) {
      space_.lift(coords_, lifted_);
      for (std::size_t m = 0; m < mn; ++m)
        modal_[m] += problem_.kappa * problem_.gamma[m] * lifted_[m] * dW[m];
    }
    space_.load(modal_, load_);
    for (std::size_t i = 0; i < dim; ++i) rhs_[i] += load_[i];
    system_factor_.solve(rhs_);
    std::copy(rhs_.begin(), rhs_.end(), coords_.begin());
  }
  ++steps_;
  double probe = 0.0;
  for (double c : coords_) probe += c;
  if (!std::isfinite(probe))
    throw NumericError("non-finite state at step " + std::to_string(steps_));
}

namespace {

void check_path(const ProblemSpec& problem, double k, const NoisePath& path) {
  const std::size_t steps = step_count(problem.T, k);
  if (std::fabs(path.k - k) > 1e-12 * k)
    throw ConfigurationError("noise path step " + std::to_string(path.k) +
                             " does not match k = " + std::to_string(k));
  if (path.steps != steps)
    throw ConfigurationError("noise path has " + std::to_string(path.steps) +
                             " steps, the grid needs " + std::to_string(steps));
  if (path.modes != problem.covariance.truncation)
    throw ConfigurationError("noise path truncation does not match the covariance");
}

}  // namespace

SolutionPath implicit_euler_maruyama(const ProblemSpec& problem, const GalerkinSpace& space,
                                     double k, const NoisePath& path) {
  check_path(problem, k, path);
  Stepper stepper(problem, space, k);
  SolutionPath out{space, k, {}, path.seed};
  out.states.reserve(path.steps + 1);
  out.states.push_back(stepper.field());
  for (std::size_t j = 1; j <= path.steps; ++j) {
    stepper.advance(path.increment(j));
    out.states.push_back(stepper.field());
  }
  return out;
}

SolutionPath reference_solution(const ProblemSpec& problem, const GalerkinSpace& ref_space,
                                double k_ref, const NoisePath& path,
                                std::span<const double> test_steps) {
  for (double k : test_steps) {
    const double ratio = k / k_ref;
    if (ratio < 1.0 - 1e-12 || std::fabs(ratio - std::round(ratio)) > 1e-9)
      throw ConfigurationError("reference step " + std::to_string(k_ref) +
                               " does not divide test step " + std::to_string(k));
  }
  return implicit_euler_maruyama(problem, ref_space, k_ref, path);
}

SolutionPath exact_linear_additive(const ProblemSpec& problem, const GalerkinSpace& space,
                                   double k, const NoisePath& path) {
  if (space.kind() != SpaceKind::spectral)
    throw ConfigurationError("the per-mode oracle needs a spectral space");
  if (problem.diffusion != DiffusionKind::additive)
    throw ConfigurationError("the per-mode oracle needs additive noise");
  double b = 0.0;
  if (problem.drift == DriftKind::nemytskii && problem.phi.kind == ScalarMap::Kind::linear &&
      problem.phi.a == 0.0) {
    b = problem.phi.b;
  } else if (problem.drift != DriftKind::zero) {
    throw ConfigurationError("the per-mode oracle needs a zero or linear drift");
  }
  check_path(problem, k, path);
  const std::size_t n_modes = space.dim();
  SolutionPath out{space, k, {}, path.seed};
  std::vector<double> c(n_modes);
  for (std::size_t m = 1; m <= n_modes; ++m) c[m - 1] = problem.initial[m];
  out.states.emplace_back(space, c);
  for (std::size_t j = 1; j <= path.steps; ++j) {
    const auto dw = path.increment(j);
    for (std::size_t m = 1; m <= n_modes; ++m) {
      const double lam = static_cast<double>(m * m) * kPi * kPi;
      const double noise = m <= dw.size() ? problem.gamma[m - 1] * dw[m - 1] : 0.0;
      c[m - 1] = (c[m - 1] - k * b * c[m - 1] + noise) / (1.0 + k * lam);
    }
    out.states.emplace_back(space, c);
  }
  return out;
}

}  // namespace spdelab

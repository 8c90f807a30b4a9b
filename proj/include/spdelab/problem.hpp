// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spdelab/noise.hpp"
#include "spdelab/spectral_core.hpp"

namespace spdelab {

/// Scalar map xi -> a + b xi (linear) or xi -> a + b sin(xi) (sine).
struct ScalarMap {
  enum class Kind { linear, sine };
  Kind kind = Kind::linear;
  double a = 0.0;
  double b = 0.0;

  double operator()(double xi) const noexcept {
    return kind == Kind::linear ? a + b * xi : a + b * std::sin(xi);
  }
  // Same value with sin(xi) supplied by the caller.
  double operator()(double xi, double sin_xi) const noexcept {
    return kind == Kind::linear ? a + b * xi : a + b * sin_xi;
  }
  double lipschitz() const noexcept { return std::fabs(b); }
  double sup_bound() const noexcept;  // sup |map|; infinite for non-constant linear maps
};

enum class DriftKind { zero, nemytskii, fractional_nemytskii };
enum class DiffusionKind { additive, linear_diagonal, nemytskii_mult };

/// dX + [A X + f(X)] dt = g(X) dW on (0,1) with Dirichlet conditions.
struct ProblemSpec {
  std::string name;
  double r = 0.0;
  double p = 2.0;
  double T = 1.0;

  DriftKind drift = DriftKind::zero;
  ScalarMap phi;               // Nemytskii map of the drift
  double drift_exponent = 0.0; // f = A^{drift_exponent} phi(u) for fractional_nemytskii

  DiffusionKind diffusion = DiffusionKind::additive;
  std::vector<double> gamma;   // diagonal weights, one per noise mode
  double kappa = 1.0;          // linear_diagonal factor
  ScalarMap sigma;             // nemytskii_mult map

  EigenBasis basis;
  SobolevVector initial;
  CovarianceSpec covariance;

  double drift_lipschitz = 0.0;      // declared bound for ||f(u)-f(v)||_{r-1} / ||u-v||
  double diffusion_lipschitz = 0.0;  // declared bound for ||g(u)-g(v)||_{L_2^0} / ||u-v||
};

/// Names accepted by make_problem.
std::vector<std::string> builtin_problem_names();

/// Built-in problems P1..P4 (and P3f, P3 with the fractional drift variant)
/// on the given reference basis with noise_modes Karhunen-Loeve terms.
/// X_0(y) = y(1-y) throughout.
ProblemSpec make_problem(const std::string& name, const EigenBasis& basis,
                         std::size_t noise_modes);

/// Recomputes drift_lipschitz and diffusion_lipschitz from phi, sigma, gamma
/// and the covariance (after any of those was changed).
void declare_bounds(ProblemSpec& p);

/// Coefficients of y(1-y) against e_1..e_M.
SobolevVector initial_profile(const EigenBasis& basis);

/// f(u) in the reference frame.
SobolevVector eval_drift(const ProblemSpec& problem, const SobolevVector& u);

/// g(u) Delta W, where dW holds (Delta W, e_m) for m = 1..noise modes.
SobolevVector eval_diffusion_action(const ProblemSpec& problem, const SobolevVector& u,
                                    std::span<const double> dW);

/// ||g(u)||_{L_{2,s}^0}; the image of each U_0 basis vector q_m^{1/2} e_m is
/// resolved in the reference frame.
double diffusion_hs_norm(const ProblemSpec& problem, const SobolevVector& u, double s);

struct LipschitzReport {
  double f_ratio_max = 0.0;
  double g_ratio_max = 0.0;
  double f_bound = 0.0;
  double g_bound = 0.0;
  bool within_bounds = false;  // both ratios <= 1.05 x declared bound
};

/// Random pairs (u, v) of smooth fields with amplitudes spanning the
/// nonlinear regime of phi and sigma.
LipschitzReport lipschitz_probe(const ProblemSpec& problem, std::size_t trials,
                                std::uint64_t seed);

struct GrowthReport {
  std::vector<double> amplitudes;
  std::vector<double> ratio_max;  // per amplitude: max ||g(u)||_{L_{2,r}^0} / (1 + ||u||_r)
  double overall_max = 0.0;
};

GrowthReport growth_probe(const ProblemSpec& problem, std::size_t trials,
                          std::uint64_t seed);

/// Random smooth field with coefficients amplitude * xi_n * n^{-decay}
/// scaled to unit L2 norm before the amplitude is applied.
SobolevVector random_field(const EigenBasis& basis, std::uint64_t seed, std::uint64_t index,
                           double amplitude, double decay, std::size_t modes = 0);

}  // namespace spdelab

// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spdelab/galerkin_space.hpp"
#include "spdelab/noise.hpp"
#include "spdelab/problem.hpp"

namespace spdelab {

/// X_h^0 .. X_h^{N_k} on the grid t_j = j k.
struct SolutionPath {
  GalerkinSpace space;
  double k = 0.0;
  std::vector<DiscreteField> states;
  std::uint64_t noise_seed = 0;
};

/// N_k with N_k k <= T < (N_k + 1) k. Rejects k <= 0 (domain) and k > T
/// (configuration).
std::size_t step_count(double T, double k);

/// One linear implicit Euler-Maruyama step at a time:
///   (M + kK) c^j = M c^{j-1} - k b_f(X^{j-1}) + b_g(X^{j-1}, Delta W^j).
/// Holds the factorized system and the scratch buffers of the collocation
/// path, so a stepper is cheap to advance but not safe to share across threads.
class Stepper {
 public:
  Stepper(const ProblemSpec& problem, const GalerkinSpace& space, double k);

  /// State := P_h X_0.
  void reset();
  void set_state(std::span<const double> coords);

  /// Whether advance() evaluates the noise on the quadrature grid.
  bool uses_noise_field() const noexcept { return noise_field_needed_; }

  /// dW holds (Delta W^j, e_m); noise_field, when non-empty, holds the same
  /// increment synthesized on the quadrature grid (shared between steppers).
  void advance(std::span<const double> dW, std::span<const double> noise_field = {});

  std::span<const double> coords() const noexcept { return coords_; }
  DiscreteField field() const { return DiscreteField(space_, coords_); }
  const GalerkinSpace& space() const noexcept { return space_; }
  double k() const noexcept { return k_; }
  std::size_t steps_taken() const noexcept { return steps_; }

 private:
  void collocation_source(std::span<const double> dW, std::span<const double> noise_field,
                          std::span<double> out);
  void grid_values(std::span<double> values) const;

  ProblemSpec problem_;
  GalerkinSpace space_;
  double k_;
  bool grid_needed_ = false;
  bool noise_field_needed_ = false;
  std::vector<double> coords_;
  std::vector<double> rhs_;
  std::vector<double> inv_denominator_;  // spectral: 1 / (1 + k lambda_n)
  Tridiagonal system_;                   // FEM: M + kK
  TridiagonalFactor system_factor_;
  std::vector<double> u_grid_;
  std::vector<double> w_grid_;
  std::vector<double> values_;
  std::vector<double> modal_;
  std::vector<double> modal_drift_;
  std::vector<double> load_;
  std::vector<double> lifted_;
  std::size_t steps_ = 0;
};

/// Fully discrete scheme driven by path; the path grid must match k and T.
SolutionPath implicit_euler_maruyama(const ProblemSpec& problem, const GalerkinSpace& space,
                                     double k, const NoisePath& path);

/// The same scheme on the finest configuration; every test step listed must be
/// a multiple of k_ref.
SolutionPath reference_solution(const ProblemSpec& problem, const GalerkinSpace& ref_space,
                                double k_ref, const NoisePath& path,
                                std::span<const double> test_steps = {});

/// Scalar per-mode recursion c_m^j = (c_m^{j-1} - k b c_m^{j-1} + gamma_m dW_m) / (1 + k lambda_m)
/// for additive noise with zero or linear (phi = b xi) drift on a spectral space.
SolutionPath exact_linear_additive(const ProblemSpec& problem, const GalerkinSpace& space,
                                   double k, const NoisePath& path);

}  // namespace spdelab

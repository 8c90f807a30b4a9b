// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spdelab/galerkin_space.hpp"
#include "spdelab/integrators.hpp"
#include "spdelab/problem.hpp"
#include "spdelab/regression.hpp"

namespace spdelab {

/// A space together with a time step.
struct Discretization {
  GalerkinSpace space;
  double k = 0.0;
};

struct ErrorEstimate {
  double value = 0.0;    // (mean ||e||^p)^{1/p}
  double stderr_ = 0.0;  // bootstrap standard error
  std::size_t samples = 0;
  double p = 2.0;
  double eval_time = 0.0;
  std::vector<double> sample_errors;  // ||e|| per sample, in sample order
};

/// Worker count: requested if positive, else SPDELAB_THREADS, else the
/// hardware concurrency.
std::size_t resolve_threads(std::size_t requested);

/// Runs fn(worker, index) for index = 0..count-1 on up to `threads` workers.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t, std::size_t)>& fn);

/// (mean e^p)^{1/p} over the given per-sample errors, with the standard
/// deviation of `resamples` bootstrap replicates drawn from a Philox stream
/// keyed by seed.
ErrorEstimate estimate_moment(std::vector<double> sample_errors, double p, std::uint64_t seed,
                              std::size_t resamples = 1000);

/// Largest time that lies on every grid j k_c and does not exceed T.
double common_time(double T, std::span<const double> steps);

/// Final states at the common time of several discretizations driven by one
/// Brownian path (sample seed), generated on the grid k_base / 2^refinement
/// and accumulated in ascending order for the coarser steps.
std::vector<DiscreteField> coupled_run(const ProblemSpec& problem,
                                       const std::vector<Discretization>& configs,
                                       double k_base, unsigned refinement, std::uint64_t seed);

/// ||X_coarse(T') - X_ref(T')||_{L^p(Omega;H)} with sample i driven by seed
/// base_seed + i, the coarse run consuming the coarsened reference increments.
ErrorEstimate strong_error(const ProblemSpec& problem, const Discretization& coarse,
                           const Discretization& ref, std::size_t samples, double p,
                           std::uint64_t base_seed, std::size_t threads = 0);

enum class Axis { spatial, temporal, holder };

std::string to_string(Axis axis);

struct StudyLevel {
  double param = 0.0;       // h, k, or the time lag
  double resolution = 0.0;  // N, elements, or k
  ErrorEstimate estimate;
};

struct BiasCheck {
  bool performed = false;
  double error_ref = 0.0;     // finest level against the reference
  double error_finer = 0.0;   // finest level against a 2x finer reference
  double relative_change = 0.0;
  bool pass = true;
};

struct ConvergenceReport {
  Axis axis = Axis::spatial;
  std::vector<StudyLevel> levels;
  RateFit fit;
  double slope_ci_low = 0.0;
  double slope_ci_high = 0.0;
  double eval_time = 0.0;
  bool monotone = false;
  BiasCheck bias;
  std::string failure;  // non-empty when the study aborted
};

struct StudySpec {
  Axis axis = Axis::spatial;
  std::vector<Discretization> levels;  // coarse to fine
  Discretization ref;
  std::size_t samples = 200;
  double p = 2.0;
  std::uint64_t base_seed = 0;
  bool bias_check = true;
  std::size_t threads = 0;
};

/// Every level shares the reference realizations of one coupled run; the
/// rate is fitted by fit_rate with a 95% interval of +-1.96 slope_stderr.
ConvergenceReport convergence_study(const ProblemSpec& problem, const StudySpec& spec);

/// (E ||X(t0 + d) - X(t0)||^2)^{1/2} across lags d (multiples of ref.k) for the
/// reference scheme, with the fitted slope in d.
ConvergenceReport holder_check(const ProblemSpec& problem, const Discretization& ref,
                               const std::vector<std::size_t>& lag_steps, double t0,
                               std::size_t samples, std::uint64_t seed, std::size_t threads = 0);

}  // namespace spdelab

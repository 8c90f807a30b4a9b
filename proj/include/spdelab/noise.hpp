// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "spdelab/spectral_core.hpp"

namespace spdelab {

/// Trace-class covariance Q with eigenpairs (q_m, e_m), q_m = m^{-2 beta}.
struct CovarianceSpec {
  double beta = 1.0;
  double intensity = 1.0;  // q_m = intensity * m^{-2 beta}
  std::size_t truncation = 0;
  std::vector<double> eigenvalues;  // q_1..q_M
  double trace = 0.0;               // partial sum at the truncation
  double tail_bound = 0.0;          // upper bound on sum_{m > M} q_m

  double q(std::size_t m) const { return eigenvalues[m - 1]; }
};

/// Throws ConfigurationError unless beta > 1/2 (trace class).
CovarianceSpec make_covariance(double beta, std::size_t truncation, double intensity = 1.0);

namespace rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds.
Counter philox4x32(Counter ctr, Key key) noexcept;

/// Inverse of the standard normal CDF (Wichura, AS241), p in (0,1).
double normal_quantile(double p) noexcept;

/// Uniform in the open interval (0,1) from the top 53 bits.
inline double to_open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal variate keyed by (seed, step, index, stream); the value
/// does not depend on the order in which variates are requested.
double standard_normal(std::uint64_t seed, std::uint64_t step, std::uint64_t index,
                       std::uint32_t stream = 0) noexcept;

/// Fills out[i] with standard_normal(seed, step, i, stream) for i = 0..n-1.
void standard_normals(std::uint64_t seed, std::uint64_t step, std::uint32_t stream,
                      std::span<double> out) noexcept;

}  // namespace rng

/// Truncated Q-Wiener increments on the uniform grid t_j = j k.
/// Row j-1 of `increments` holds (Delta W^j, e_m), m = 1..modes.
struct NoisePath {
  double k = 0.0;
  std::size_t steps = 0;
  std::size_t modes = 0;
  std::uint64_t seed = 0;
  double beta = 0.0;
  std::vector<double> increments;

  /// Delta W^j for 1-based j.
  std::span<const double> increment(std::size_t j) const {
    return {increments.data() + (j - 1) * modes, modes};
  }
};

/// On-demand generator of the increments of one Brownian path. Refinement
/// level r yields the path on the grid k_base / 2^r by Brownian-bridge
/// subdivision, so summing pairs of level-r increments reproduces level r-1.
class IncrementGenerator {
 public:
  IncrementGenerator(const CovarianceSpec& cov, double k_base, std::uint64_t seed,
                     unsigned refinement = 0);

  double step() const noexcept { return k_; }
  std::size_t modes() const noexcept { return sqrt_q_.size(); }
  std::uint64_t seed() const noexcept { return seed_; }

  /// Delta W^j (1-based) into out, which must have modes() entries.
  void fill(std::size_t j, std::span<double> out) const;

 private:
  void fill_level(unsigned level, std::size_t j, std::span<double> out) const;

  std::vector<double> sqrt_q_;
  double k_base_;
  double k_;
  std::uint64_t seed_;
  unsigned refinement_;
};

/// (Delta W^j, e_m) = sqrt(q_m k) xi_{j,m}, xi keyed by (seed, j, m).
NoisePath sample_increments(const CovarianceSpec& cov, double k, std::size_t steps,
                            std::uint64_t seed);

/// Coarse increment j is the ascending sum of fine increments
/// (j-1) factor + 1 .. j factor.
NoisePath coarsen_path(const NoisePath& path, std::size_t factor);

/// (sum_m ||A^{r/2} op_action(m)||^2)^{1/2}, where op_action(m) is the image of
/// the U_0 basis vector q_m^{1/2} e_m.
double hs_norm(const std::function<SobolevVector(std::size_t)>& op_action,
               const CovarianceSpec& cov, double r);

}  // namespace spdelab

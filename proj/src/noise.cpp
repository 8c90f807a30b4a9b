// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#include "spdelab/noise.hpp"

#include <cmath>
#include <string>

#include "spdelab/errors.hpp"

namespace spdelab {

CovarianceSpec make_covariance(double beta, std::size_t truncation, double intensity) {
  if (!(beta > 0.5))
    throw ConfigurationError("covariance decay beta = " + std::to_string(beta) +
                             " must exceed 1/2 for Q to be trace class");
  if (truncation < 1) throw ConfigurationError("noise truncation must be at least 1");
  if (!(intensity > 0.0) || !std::isfinite(intensity))
    throw ConfigurationError("noise intensity must be positive");
  CovarianceSpec cov;
  cov.beta = beta;
  cov.intensity = intensity;
  cov.truncation = truncation;
  cov.eigenvalues.resize(truncation);
  for (std::size_t m = 1; m <= truncation; ++m)
    cov.eigenvalues[m - 1] = intensity * std::pow(static_cast<double>(m), -2.0 * beta);
  // Sum smallest terms first.
  double trace = 0.0;
  for (std::size_t m = truncation; m >= 1; --m) trace += cov.eigenvalues[m - 1];
  cov.trace = trace;
  cov.tail_bound = intensity *
      std::pow(static_cast<double>(truncation), 1.0 - 2.0 * beta) / (2.0 * beta - 1.0);
  return cov;
}

namespace rng {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) noexcept {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

inline Counter philox_round(Counter ctr, Key key) noexcept {
  std::uint32_t hi0, lo0, hi1, lo1;
  mulhilo(kMul0, ctr[0], hi0, lo0);
  mulhilo(kMul1, ctr[2], hi1, lo1);
  return {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace

Counter philox4x32(Counter ctr, Key key) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    ctr = philox_round(ctr, key);
  }
  return ctr;
}

double normal_quantile(double p) noexcept {
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
              6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
            1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
          1.3314166789178437745e+2) * r + 3.3871328727963666080e+0);
    const double den =
        (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
              3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
            5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
          4.2313330701600911252e+1) * r + 1.0);
    return q * num / den;
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
            3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
          4.63033784615654529590e+0) * r + 1.42343711074968357734e+0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
          2.05319162663775882187e+0) * r + 1.0);
    value = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
          5.46378491116411436990e+0) * r + 6.65790464350110377720e+0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
    value = num / den;
  }
  return q < 0.0 ? -value : value;
}

namespace {

inline Counter counter_for(std::uint64_t step, std::uint64_t pair,
                           std::uint32_t stream) noexcept {
  return {static_cast<std::uint32_t>(pair), static_cast<std::uint32_t>(step),
          static_cast<std::uint32_t>(step >> 32), stream};
}

inline Key key_for(std::uint64_t seed) noexcept {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

}  // namespace

double standard_normal(std::uint64_t seed, std::uint64_t step, std::uint64_t index,
                       std::uint32_t stream) noexcept {
  const Counter out = philox4x32(counter_for(step, index >> 1, stream), key_for(seed));
  const std::uint64_t bits =
      (index & 1u) == 0
          ? (static_cast<std::uint64_t>(out[0]) << 32) | out[1]
          : (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
  return normal_quantile(to_open_unit(bits));
}

void standard_normals(std::uint64_t seed, std::uint64_t step, std::uint32_t stream,
                      std::span<double> out) noexcept {
  const Key key = key_for(seed);
  const std::size_t n = out.size();
  for (std::size_t pair = 0; 2 * pair < n; ++pair) {
    const Counter c = philox4x32(counter_for(step, pair, stream), key);
    const std::uint64_t a = (static_cast<std::uint64_t>(c[0]) << 32) | c[1];
    out[2 * pair] = normal_quantile(to_open_unit(a));
    if (2 * pair + 1 < n) {
      const std::uint64_t b = (static_cast<std::uint64_t>(c[2]) << 32) | c[3];
      out[2 * pair + 1] = normal_quantile(to_open_unit(b));
    }
  }
}

}  // namespace rng

IncrementGenerator::IncrementGenerator(const CovarianceSpec& cov, double k_base,
                                       std::uint64_t seed, unsigned refinement)
    : sqrt_q_(cov.eigenvalues.size()),
      k_base_(k_base),
      k_(k_base / std::ldexp(1.0, static_cast<int>(refinement))),
      seed_(seed),
      refinement_(refinement) {
  if (!(k_base > 0.0)) throw DomainError("time step must be positive");
  for (std::size_t m = 0; m < sqrt_q_.size(); ++m) sqrt_q_[m] = std::sqrt(cov.eigenvalues[m]);
}

void IncrementGenerator::fill(std::size_t j, std::span<double> out) const {
  if (out.size() != sqrt_q_.size()) throw ShapeError("increment buffer has wrong length");
  if (j < 1) throw DomainError("increment index is 1-based");
  fill_level(refinement_, j, out);
}

void IncrementGenerator::fill_level(unsigned level, std::size_t j,
                                    std::span<double> out) const {
  const std::size_t n = out.size();
  if (level == 0) {
    rng::standard_normals(seed_, j, 0, out);
    const double sqrt_k = std::sqrt(k_base_);
    for (std::size_t m = 0; m < n; ++m) out[m] *= sqrt_q_[m] * sqrt_k;
    return;
  }
  // Bridge: a parent increment D over 2h splits into D/2 +- sqrt(q h / 2) eta.
  const std::size_t parent = (j + 1) / 2;
  fill_level(level - 1, parent, out);
  std::vector<double> eta(n);
  rng::standard_normals(seed_, parent, level, eta);
  const double h = k_base_ / std::ldexp(1.0, static_cast<int>(level));
  const double scale = std::sqrt(0.5 * h);
  const double sign = (j % 2 == 1) ? 1.0 : -1.0;
  for (std::size_t m = 0; m < n; ++m)
    out[m] = 0.5 * out[m] + sign * scale * sqrt_q_[m] * eta[m];
}

NoisePath sample_increments(const CovarianceSpec& cov, double k, std::size_t steps,
                            std::uint64_t seed) {
  if (!(k > 0.0)) throw DomainError("time step must be positive");
  if (steps < 1) throw ConfigurationError("a noise path needs at least one step");
  IncrementGenerator gen(cov, k, seed);
  NoisePath path;
  path.k = k;
  path.steps = steps;
  path.modes = cov.truncation;
  path.seed = seed;
  path.beta = cov.beta;
  path.increments.resize(steps * path.modes);
  for (std::size_t j = 1; j <= steps; ++j)
    gen.fill(j, {path.increments.data() + (j - 1) * path.modes, path.modes});
  return path;
}

NoisePath coarsen_path(const NoisePath& path, std::size_t factor) {
  if (factor < 1 || path.steps % factor != 0)
    throw ConfigurationError("coarsening factor " + std::to_string(factor) +
                             " does not divide " + std::to_string(path.steps) + " steps");
  NoisePath coarse;
  coarse.k = path.k * static_cast<double>(factor);
  coarse.steps = path.steps / factor;
  coarse.modes = path.modes;
  coarse.seed = path.seed;
  coarse.beta = path.beta;
  coarse.increments.assign(coarse.steps * coarse.modes, 0.0);
  for (std::size_t j = 1; j <= coarse.steps; ++j) {
    double* acc = coarse.increments.data() + (j - 1) * coarse.modes;
    for (std::size_t i = (j - 1) * factor + 1; i <= j * factor; ++i) {
      const auto fine = path.increment(i);
      for (std::size_t m = 0; m < coarse.modes; ++m) acc[m] += fine[m];
    }
  }
  return coarse;
}

double hs_norm(const std::function<SobolevVector(std::size_t)>& op_action,
               const CovarianceSpec& cov, double r) {
  double sum = 0.0;
  for (std::size_t m = 1; m <= cov.truncation; ++m) {
    const double v = sobolev_norm(op_action(m), r);
    sum += v * v;
  }
  return std::sqrt(sum);
}

}  // namespace spdelab

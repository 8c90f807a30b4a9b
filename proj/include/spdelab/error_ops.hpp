// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "spdelab/galerkin_space.hpp"
#include "spdelab/spectral_core.hpp"

namespace spdelab {

/// F_h(t) x = E_h(t) P_h x - E(t) x in the reference frame; t = 0 gives
/// (P_h - I) x. Throws DomainError for t < 0.
SobolevVector apply_Fh(const GalerkinSpace& space, double t, const SobolevVector& x);

/// F_kh(t) x = R(k A_h)^j P_h x - E(t) x with j = floor(t/k) + 1.
SobolevVector apply_Fkh(const GalerkinSpace& space, double k, double t, const SobolevVector& x);

struct IntegralFunctionals {
  double int_norm = 0.0;  // || int_0^t F(s) x ds ||
  double sq_int = 0.0;    // (int_0^t ||F(s) x||^2 ds)^{1/2}
};

/// Exact time integrals of F_h (k = 0) or F_kh (k > 0). Norms are exact L2
/// norms of S_h + span{e_1..e_M} elements, including the part of S_h outside
/// the reference truncation.
IntegralFunctionals integral_functionals(const GalerkinSpace& space, double k, double t,
                                         const SobolevVector& x);

/// Scalar time integrals used by the closed forms. A mode function is either
/// exp(-lambda s) or, for k > 0, R(k lambda)^{floor(s/k)+1}.
struct ModeFunction {
  double lambda = 0.0;
  bool rational = false;
};
double time_integral(const ModeFunction& a, double k, double t);
double time_integral_product(const ModeFunction& a, const ModeFunction& b, double k, double t);

enum class LemmaId {
  Fh1_i, Fh1_ii, Fh1_iii, Fh2_i, Fh2_ii,
  Fkh1_i, Fkh1_ii, Fkh1_iii, Fkh2_i, Fkh2_ii,
  smoothing_E, smoothing_Eh, smoothing_r
};

LemmaId parse_lemma_id(const std::string& id);
std::string to_string(LemmaId id);
/// Lemmas whose levels are time steps rather than spaces.
bool lemma_uses_time_levels(LemmaId id);

struct LemmaParams {
  double mu = 2.0;
  double nu = 0.0;
  double rho = 0.0;
  double T = 1.0;
  std::size_t ref_modes = 0;         // 0: 4096 spectral, 2048 FEM
  std::size_t fine_resolution = 0;   // fixed space for time-step levels (0: 1024 spectral, 128 FEM)
  double fixed_k = 0.0;              // unused for space levels
  double t_min = 1e-6;
  int per_decade = 40;
};

struct RateLevel {
  double param = 0.0;        // h or k
  double resolution = 0.0;   // N, number of elements, or k
  double value = 0.0;        // Q(level)
  double argmax_t = 0.0;
  bool interior = true;      // supremum attained away from the t-grid ends
  double ratio = 0.0;        // value / param^expected (rate lemmas), value / bound otherwise
};

enum class CheckKind { rate, bounded, bound };

struct RateReport {
  std::string lemma;
  std::string param_kind;    // "h" or "k"
  std::string space_kind;    // "spectral" or "fem"
  CheckKind check = CheckKind::rate;
  std::vector<RateLevel> levels;
  double expected = 0.0;     // slope (rate) or constant (bound)
  double tolerance = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  bool interior_required = false;
  bool pass = false;
};

/// Q(level) = sup_t sup_x t^w ||F(t) x|| / ||x||_s (or the integral
/// functional analogue) over a log-spaced t-grid, worst case over x taken
/// exactly for spectral spaces (single modes) and by Lanczos iteration on the
/// exact quadratic form for FEM spaces.
RateReport lemma_rate_check(LemmaId id, const LemmaParams& params, SpaceKind kind,
                            const std::vector<double>& levels);

/// sup_x ||(R_h - I) x|| / ||x||_s over levels (spectral N or FEM elements).
RateReport ritz_rate_probe(SpaceKind kind, const std::vector<double>& levels, double s,
                           std::size_t ref_modes = 2048);

/// sup_x ||P_h x||_1 / ||x||_1 over the reference truncation.
double stability_constant(const GalerkinSpace& space, std::size_t ref_modes);

/// (rho/e)^rho style scalar maxima used by the smoothing checks.
double smoothing_constant_E(double nu);
double smoothing_constant_r(double rho);

/// Largest eigenvalue of a symmetric operator by Lanczos with full
/// reorthogonalization; start is used as the initial vector and overwritten
/// with the Ritz vector.
double lanczos_max(const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& op,
                   Eigen::VectorXd& start, int max_iter = 60, double tol = 1e-10);

}  // namespace spdelab

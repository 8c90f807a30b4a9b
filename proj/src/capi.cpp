// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#include "spdelab/spdelab.h"

#include <cstring>
#include <new>
#include <string>
#include <vector>

#include "spdelab/convergence_lab.hpp"
#include "spdelab/error_ops.hpp"
#include "spdelab/errors.hpp"
#include "spdelab/experiment.hpp"
#include "spdelab/problem.hpp"
#include "spdelab/version.hpp"

struct spdelab_basis {
  spdelab::EigenBasis basis;
};
struct spdelab_space {
  spdelab::GalerkinSpace space;
};
struct spdelab_problem {
  spdelab::ProblemSpec problem;
};

namespace {

thread_local std::string g_last_error;

spdelab_status fail(spdelab_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <typename Fn>
spdelab_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return SPDELAB_OK;
  } catch (const spdelab::ConfigurationError& e) {
    return fail(SPDELAB_ERR_CONFIGURATION, e.what());
  } catch (const spdelab::DomainError& e) {
    return fail(SPDELAB_ERR_DOMAIN, e.what());
  } catch (const spdelab::ShapeError& e) {
    return fail(SPDELAB_ERR_SHAPE, e.what());
  } catch (const spdelab::NumericError& e) {
    return fail(SPDELAB_ERR_NUMERIC, e.what());
  } catch (const spdelab::IoError& e) {
    return fail(SPDELAB_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SPDELAB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SPDELAB_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SPDELAB_ERR_INTERNAL, "unknown error");
  }
}

void copy_out(const std::string& s, char* buf, std::size_t size) {
  if (!buf || size == 0) return;
  const std::size_t n = std::min(s.size(), size - 1);
  std::memcpy(buf, s.data(), n);
  buf[n] = '\0';
}

}  // namespace

extern "C" {

const char* spdelab_version(void) { return spdelab::kVersion; }

const char* spdelab_last_error(void) { return g_last_error.c_str(); }

spdelab_status spdelab_basis_create(size_t mode_count, size_t quadrature_size, spdelab_basis** out) {
  if (!out) return fail(SPDELAB_ERR_INVALID_ARGUMENT, "null output handle");
  *out = nullptr;
  return guarded([&] {
    const std::size_t q =
        quadrature_size ? quadrature_size : spdelab::EigenBasis::default_quadrature_size(mode_count);
    *out = new spdelab_basis{spdelab::EigenBasis::build(mode_count, q)};
  });
}

void spdelab_basis_destroy(spdelab_basis* basis) { delete basis; }

size_t spdelab_basis_quadrature_size(const spdelab_basis* basis) {
  return basis ? basis->basis.quadrature_size() : 0;
}

spdelab_status spdelab_space_create(spdelab_space_kind kind, const spdelab_basis* basis,
                                    size_t resolution, spdelab_space** out) {
  if (!out) return fail(SPDELAB_ERR_INVALID_ARGUMENT, "null output handle");
  *out = nullptr;
  if (kind == SPDELAB_SPACE_SPECTRAL && !basis)
    return fail(SPDELAB_ERR_INVALID_ARGUMENT, "spectral spaces need a basis");
  if (kind != SPDELAB_SPACE_SPECTRAL && kind != SPDELAB_SPACE_FEM_P1)
    return fail(SPDELAB_ERR_INVALID_ARGUMENT, "unknown space kind");
  return guarded([&] {
    *out = new spdelab_space{kind == SPDELAB_SPACE_SPECTRAL
                                 ? spdelab::GalerkinSpace::spectral(basis->basis, resolution)
                                 : spdelab::GalerkinSpace::fem_p1(resolution)};
  });
}

void spdelab_space_destroy(spdelab_space* space) { delete space; }

size_t spdelab_space_dim(const spdelab_space* space) { return space ? space->space.dim() : 0; }

double spdelab_space_h(const spdelab_space* space) { return space ? space->space.h() : 0.0; }

spdelab_status spdelab_problem_create(const char* name, const spdelab_basis* basis,
                                      size_t noise_modes, spdelab_problem** out) {
  if (!out) return fail(SPDELAB_ERR_INVALID_ARGUMENT, "null output handle");
  *out = nullptr;
  if (!name || !basis) return fail(SPDELAB_ERR_INVALID_ARGUMENT, "null name or basis");
  return guarded([&] {
    *out = new spdelab_problem{spdelab::make_problem(name, basis->basis, noise_modes)};
  });
}

void spdelab_problem_destroy(spdelab_problem* problem) { delete problem; }

spdelab_status spdelab_problem_set_final_time(spdelab_problem* problem, double T) {
  if (!problem) return fail(SPDELAB_ERR_INVALID_ARGUMENT, "null problem");
  if (!(T > 0.0)) return fail(SPDELAB_ERR_DOMAIN, "final time must be positive");
  problem->problem.T = T;
  return SPDELAB_OK;
}

spdelab_status spdelab_strong_error(const spdelab_problem* problem, const spdelab_space* coarse,
                                    double k, const spdelab_space* ref, double k_ref,
                                    size_t samples, double p, uint64_t base_seed, size_t threads,
                                    spdelab_estimate* out) {
  if (!problem || !coarse || !ref || !out)
    return fail(SPDELAB_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto est = spdelab::strong_error(problem->problem, {coarse->space, k},
                                           {ref->space, k_ref}, samples, p, base_seed, threads);
    *out = spdelab_estimate{est.value, est.stderr_, est.eval_time, est.samples, est.p};
  });
}

spdelab_status spdelab_lemma_check(const char* id, double mu, double nu, double rho,
                                   spdelab_space_kind kind, const double* levels,
                                   size_t level_count, spdelab_rate* out) {
  if (!id || !out || (!levels && level_count > 0))
    return fail(SPDELAB_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    spdelab::LemmaParams lp;
    lp.mu = mu;
    lp.nu = nu;
    lp.rho = rho;
    const auto rep = spdelab::lemma_rate_check(
        spdelab::parse_lemma_id(id), lp,
        kind == SPDELAB_SPACE_FEM_P1 ? spdelab::SpaceKind::fem_p1 : spdelab::SpaceKind::spectral,
        std::vector<double>(levels, levels + level_count));
    *out = spdelab_rate{rep.slope, rep.slope_stderr, rep.expected, rep.tolerance, rep.pass ? 1 : 0};
  });
}

size_t spdelab_config_validate(const char* json, char* errors, size_t errors_size) {
  const auto vc = spdelab::validate_config(json ? json : "");
  std::string joined;
  for (const auto& e : vc.errors) joined += e + "\n";
  copy_out(joined, errors, errors_size);
  return vc.errors.size();
}

int spdelab_run_experiment(const char* json, char* diagnostics, size_t diagnostics_size) {
  try {
    const auto out = spdelab::run_experiment(json ? json : "");
    copy_out(out.diagnostics, diagnostics, diagnostics_size);
    return out.exit_code;
  } catch (const std::exception& e) {
    copy_out(std::string("internal error: ") + e.what() + "\n", diagnostics, diagnostics_size);
    return spdelab::kExitFail;
  }
}

}  // extern "C"

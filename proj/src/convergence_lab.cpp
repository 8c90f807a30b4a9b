// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#include "spdelab/convergence_lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <memory>
#include <numeric>
#include <string>
#include <thread>

#include "spdelab/errors.hpp"
#include "spdelab/noise.hpp"

namespace spdelab {

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SPDELAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t, std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(0, i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(w, i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(count);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

std::size_t bootstrap_index(std::uint64_t seed, std::uint64_t replicate, std::uint64_t draw,
                            std::size_t n) {
  const rng::Counter ctr{static_cast<std::uint32_t>(draw), static_cast<std::uint32_t>(draw >> 32),
                         static_cast<std::uint32_t>(replicate), 0xB0075u};
  const rng::Key key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  const auto out = rng::philox4x32(ctr, key);
  const std::uint64_t bits = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
  const auto idx = static_cast<std::size_t>(rng::to_open_unit(bits) * static_cast<double>(n));
  return std::min(idx, n - 1);
}

double moment(const std::vector<double>& e, double p, const std::vector<std::size_t>* pick) {
  const std::size_t n = pick ? pick->size() : e.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = e[pick ? (*pick)[i] : i];
    sum += p == 2.0 ? v * v : std::pow(v, p);
  }
  const double mean = sum / static_cast<double>(n);
  return p == 2.0 ? std::sqrt(mean) : std::pow(mean, 1.0 / p);
}

bool is_multiple(double k, double base) {
  const double r = k / base;
  return r >= 1.0 - 1e-12 && std::fabs(r - std::round(r)) <= 1e-9 * std::max(1.0, r);
}

std::size_t ratio_of(double k, double base) { return static_cast<std::size_t>(std::llround(k / base)); }

// Every discretization of one Brownian path; reusable across samples.
class CoupledRunner {
 public:
  CoupledRunner(const ProblemSpec& problem, const std::vector<Discretization>& configs,
                double k_base, unsigned refinement)
      : problem_(problem),
        k_base_(k_base),
        refinement_(refinement),
        k_fine_(k_base / std::ldexp(1.0, static_cast<int>(refinement))) {
    if (configs.empty()) throw ConfigurationError("no discretizations to run");
    std::vector<double> steps;
    for (const auto& c : configs) {
      if (!is_multiple(c.k, k_fine_))
        throw ConfigurationError("time step " + std::to_string(c.k) +
                                 " is not a multiple of the noise grid " + std::to_string(k_fine_));
      steps.push_back(c.k);
      steppers_.emplace_back(problem_, c.space, c.k);
    }
    eval_time_ = common_time(problem_.T, steps);
    fine_steps_ = ratio_of(eval_time_, k_fine_);
    const std::size_t mn = problem_.covariance.truncation;
    for (std::size_t c = 0; c < configs.size(); ++c) {
      const std::size_t factor = ratio_of(configs[c].k, k_fine_);
      auto it = std::find_if(groups_.begin(), groups_.end(),
                             [&](const Group& g) { return g.factor == factor; });
      if (it == groups_.end()) {
        groups_.push_back({factor, {}, false, std::vector<double>(mn, 0.0), {}});
        it = groups_.end() - 1;
      }
      it->members.push_back(c);
      if (steppers_[c].uses_noise_field()) it->needs_field = true;
    }
    for (auto& g : groups_)
      if (g.needs_field) g.field.assign(problem_.basis.quadrature_size(), 0.0);
    dw_.assign(mn, 0.0);
  }

  double eval_time() const noexcept { return eval_time_; }

  void run(std::uint64_t seed) {
    const IncrementGenerator gen(problem_.covariance, k_base_, seed, refinement_);
    for (auto& s : steppers_) s.reset();
    for (auto& g : groups_) std::fill(g.acc.begin(), g.acc.end(), 0.0);
    try {
      for (std::size_t j = 1; j <= fine_steps_; ++j) {
        gen.fill(j, dw_);
        for (auto& g : groups_) {
          for (std::size_t m = 0; m < dw_.size(); ++m) g.acc[m] += dw_[m];
          if (j % g.factor != 0) continue;
          if (g.needs_field) problem_.basis.synthesize(g.acc, g.field);
          for (std::size_t c : g.members) steppers_[c].advance(g.acc, g.field);
          std::fill(g.acc.begin(), g.acc.end(), 0.0);
        }
      }
    } catch (const NumericError& e) {
      throw NumericError("sample seed " + std::to_string(seed) + ": " + e.what());
    }
  }

  const Stepper& stepper(std::size_t c) const { return steppers_[c]; }
  std::size_t size() const noexcept { return steppers_.size(); }

 private:
  struct Group {
    std::size_t factor;
    std::vector<std::size_t> members;
    bool needs_field;
    std::vector<double> acc;
    std::vector<double> field;
  };

  const ProblemSpec& problem_;
  double k_base_;
  unsigned refinement_;
  double k_fine_;
  double eval_time_ = 0.0;
  std::size_t fine_steps_ = 0;
  std::vector<Stepper> steppers_;
  std::vector<Group> groups_;
  std::vector<double> dw_;
};

// errors[c][i] = || X_c(T') - X_ref(T') || for sample i, c over `tests`.
std::vector<std::vector<double>> coupled_errors(const ProblemSpec& problem,
                                                const std::vector<Discretization>& configs,
                                                const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                                double k_base, unsigned refinement,
                                                std::size_t samples, std::uint64_t base_seed,
                                                std::size_t threads, double* eval_time) {
  threads = std::max<std::size_t>(1, std::min(resolve_threads(threads), samples));
  std::vector<std::unique_ptr<CoupledRunner>> runners(threads);
  runners[0] = std::make_unique<CoupledRunner>(problem, configs, k_base, refinement);
  if (eval_time) *eval_time = runners[0]->eval_time();
  std::vector<std::vector<double>> errors(pairs.size(), std::vector<double>(samples, 0.0));
  parallel_for(samples, threads, [&](std::size_t worker, std::size_t i) {
    if (!runners[worker])
      runners[worker] = std::make_unique<CoupledRunner>(problem, configs, k_base, refinement);
    CoupledRunner& run = *runners[worker];
    run.run(base_seed + i);
    for (std::size_t q = 0; q < pairs.size(); ++q) {
      const double e = l2_distance(run.stepper(pairs[q].first).field(),
                                   run.stepper(pairs[q].second).field());
      if (!std::isfinite(e))
        throw NumericError("non-finite error for sample seed " + std::to_string(base_seed + i));
      errors[q][i] = e;
    }
  });
  return errors;
}

std::size_t resolution_of(const GalerkinSpace& s) { return s.resolution(); }

bool finer_or_equal(const GalerkinSpace& ref, const GalerkinSpace& coarse, std::size_t factor) {
  if (ref.kind() != coarse.kind()) return false;
  const std::size_t r = resolution_of(ref), c = resolution_of(coarse);
  if (ref.kind() == SpaceKind::fem_p1) return r % c == 0 && r >= factor * c;
  return r >= factor * c;
}

GalerkinSpace refine(const ProblemSpec& problem, const GalerkinSpace& s) {
  if (s.kind() == SpaceKind::fem_p1) return GalerkinSpace::fem_p1(2 * s.resolution());
  const std::size_t n = 2 * s.resolution();
  if (n >= problem.basis.mode_count())
    throw ConfigurationError("bias check needs a spectral reference with " + std::to_string(n) +
                             " modes, beyond the basis truncation");
  return GalerkinSpace::spectral(problem.basis, n);
}

}  // namespace

ErrorEstimate estimate_moment(std::vector<double> sample_errors, double p, std::uint64_t seed,
                              std::size_t resamples) {
  if (sample_errors.empty()) throw ConfigurationError("no samples");
  if (!(p >= 1.0)) throw ConfigurationError("moment order must be at least 1");
  ErrorEstimate est;
  est.p = p;
  est.samples = sample_errors.size();
  est.value = moment(sample_errors, p, nullptr);
  const std::size_t n = sample_errors.size();
  if (n > 1 && resamples > 1) {
    std::vector<std::size_t> pick(n);
    std::vector<double> reps(resamples);
    for (std::size_t b = 0; b < resamples; ++b) {
      for (std::size_t i = 0; i < n; ++i) pick[i] = bootstrap_index(seed, b, i, n);
      reps[b] = moment(sample_errors, p, &pick);
    }
    const double mean = std::accumulate(reps.begin(), reps.end(), 0.0) / static_cast<double>(resamples);
    double var = 0.0;
    for (double r : reps) var += (r - mean) * (r - mean);
    est.stderr_ = std::sqrt(var / static_cast<double>(resamples - 1));
  }
  est.sample_errors = std::move(sample_errors);
  return est;
}

double common_time(double T, std::span<const double> steps) {
  if (steps.empty()) throw ConfigurationError("no time steps");
  const double k_min = *std::min_element(steps.begin(), steps.end());
  if (!(k_min > 0.0)) throw DomainError("time steps must be positive");
  std::size_t l = 1;
  for (double k : steps) {
    if (!is_multiple(k, k_min))
      throw ConfigurationError("time steps are not nested: " + std::to_string(k) + " vs " +
                               std::to_string(k_min));
    l = std::lcm(l, ratio_of(k, k_min));
  }
  const double big = static_cast<double>(l) * k_min;
  const double n = std::floor(T / big * (1.0 + 1e-12));
  if (n < 1.0) throw ConfigurationError("no common grid point in (0, T]");
  return n * big;
}

std::vector<DiscreteField> coupled_run(const ProblemSpec& problem,
                                       const std::vector<Discretization>& configs,
                                       double k_base, unsigned refinement, std::uint64_t seed) {
  CoupledRunner run(problem, configs, k_base, refinement);
  run.run(seed);
  std::vector<DiscreteField> out;
  for (std::size_t c = 0; c < run.size(); ++c) out.push_back(run.stepper(c).field());
  return out;
}

ErrorEstimate strong_error(const ProblemSpec& problem, const Discretization& coarse,
                           const Discretization& ref, std::size_t samples, double p,
                           std::uint64_t base_seed, std::size_t threads) {
  if (samples < 1) throw ConfigurationError("samples must be positive");
  if (!is_multiple(coarse.k, ref.k))
    throw ConfigurationError("reference step does not divide the coarse step");
  if (!finer_or_equal(ref.space, coarse.space, 1))
    throw ConfigurationError("reference space is not a refinement of the coarse space");
  double t_eval = 0.0;
  auto errors = coupled_errors(problem, {coarse, ref}, {{0, 1}}, ref.k, 0, samples, base_seed,
                               threads, &t_eval);
  ErrorEstimate est = estimate_moment(std::move(errors[0]), p, base_seed);
  est.eval_time = t_eval;
  return est;
}

std::string to_string(Axis axis) {
  switch (axis) {
    case Axis::spatial: return "spatial";
    case Axis::temporal: return "temporal";
    case Axis::holder: return "holder";
  }
  return "unknown";
}

ConvergenceReport convergence_study(const ProblemSpec& problem, const StudySpec& spec) {
  ConvergenceReport rep;
  rep.axis = spec.axis;
  const auto& lv = spec.levels;
  if (lv.size() < 3) throw ConfigurationError("a convergence study needs at least 3 levels");
  if (spec.samples < 2) throw ConfigurationError("a convergence study needs at least 2 samples");
  const bool spatial = spec.axis == Axis::spatial;
  if (spec.axis == Axis::holder) throw ConfigurationError("use holder_check for the holder axis");
  auto param = [&](const Discretization& d) { return spatial ? d.space.h() : d.k; };
  for (std::size_t i = 1; i < lv.size(); ++i)
    if (!(param(lv[i]) < param(lv[i - 1])))
      throw ConfigurationError("level parameters must be strictly decreasing");
  const Discretization& finest = lv.back();
  for (const auto& d : lv) {
    if (!is_multiple(d.k, spec.ref.k))
      throw ConfigurationError("reference step does not divide a level step");
    if (!finer_or_equal(spec.ref.space, d.space, 1))
      throw ConfigurationError("reference space is not a refinement of a level space");
  }
  if (spatial && !finer_or_equal(spec.ref.space, finest.space, 4))
    throw ConfigurationError("spatial reference must be at least 4x finer than the finest level");
  if (!spatial && finest.k < 4.0 * spec.ref.k * (1.0 - 1e-12))
    throw ConfigurationError("temporal reference must be at least 4x finer than the finest level");

  std::vector<Discretization> configs = lv;
  configs.push_back(spec.ref);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < lv.size(); ++i) pairs.push_back({i, lv.size()});
  try {
    auto errors = coupled_errors(problem, configs, pairs, spec.ref.k, 0, spec.samples,
                                 spec.base_seed, spec.threads, &rep.eval_time);
    for (std::size_t i = 0; i < lv.size(); ++i) {
      ErrorEstimate est = estimate_moment(std::move(errors[i]), spec.p, spec.base_seed + i);
      est.eval_time = rep.eval_time;
      rep.levels.push_back({param(lv[i]),
                            spatial ? static_cast<double>(lv[i].space.resolution()) : lv[i].k,
                            std::move(est)});
    }
  } catch (const Error& e) {
    rep.failure = e.what();
    return rep;
  }

  std::vector<FitPoint> pts;
  for (const auto& l : rep.levels) pts.push_back({l.param, l.estimate.value, l.estimate.stderr_});
  rep.fit = fit_rate(pts);
  rep.slope_ci_low = rep.fit.slope - 1.96 * rep.fit.slope_stderr;
  rep.slope_ci_high = rep.fit.slope + 1.96 * rep.fit.slope_stderr;
  rep.monotone = true;
  for (std::size_t i = 1; i < rep.levels.size(); ++i)
    rep.monotone = rep.monotone && rep.levels[i].estimate.value < rep.levels[i - 1].estimate.value;

  if (spec.bias_check) {
    try {
      std::vector<Discretization> bc{finest, spec.ref, spec.ref};
      unsigned refinement = 0;
      if (spatial) {
        bc[2].space = refine(problem, spec.ref.space);
      } else {
        bc[2].k = 0.5 * spec.ref.k;
        refinement = 1;
      }
      auto errors = coupled_errors(problem, bc, {{0, 1}, {0, 2}}, spec.ref.k, refinement,
                                   spec.samples, spec.base_seed, spec.threads, nullptr);
      rep.bias.performed = true;
      rep.bias.error_ref = estimate_moment(errors[0], spec.p, spec.base_seed, 0).value;
      rep.bias.error_finer = estimate_moment(errors[1], spec.p, spec.base_seed, 0).value;
      rep.bias.relative_change =
          std::fabs(rep.bias.error_finer - rep.bias.error_ref) / rep.bias.error_ref;
      rep.bias.pass = rep.bias.relative_change < 0.1;
    } catch (const Error& e) {
      rep.failure = std::string("bias check: ") + e.what();
      rep.bias.performed = false;
      rep.bias.pass = false;
    }
  }
  return rep;
}

ConvergenceReport holder_check(const ProblemSpec& problem, const Discretization& ref,
                               const std::vector<std::size_t>& lag_steps, double t0,
                               std::size_t samples, std::uint64_t seed, std::size_t threads) {
  if (lag_steps.size() < 2) throw ConfigurationError("holder_check needs at least two lags");
  if (samples < 2) throw ConfigurationError("holder_check needs at least two samples");
  for (std::size_t i = 0; i < lag_steps.size(); ++i)
    if (lag_steps[i] == 0 || (i > 0 && lag_steps[i] <= lag_steps[i - 1]))
      throw ConfigurationError("lags must be positive and strictly increasing multiples of k");
  if (t0 < 0.0 || !(is_multiple(t0, ref.k) || t0 == 0.0))
    throw ConfigurationError("t0 must be a non-negative multiple of the reference step");
  const std::size_t j0 = t0 == 0.0 ? 0 : ratio_of(t0, ref.k);
  const std::size_t total = j0 + lag_steps.back();
  if (total > step_count(problem.T, ref.k))
    throw ConfigurationError("t0 plus the largest lag exceeds T");

  threads = std::max<std::size_t>(1, std::min(resolve_threads(threads), samples));
  std::vector<std::unique_ptr<Stepper>> steppers(threads);
  std::vector<std::vector<double>> errors(lag_steps.size(), std::vector<double>(samples, 0.0));
  const std::size_t mn = problem.covariance.truncation;
  parallel_for(samples, threads, [&](std::size_t w, std::size_t i) {
    if (!steppers[w]) steppers[w] = std::make_unique<Stepper>(problem, ref.space, ref.k);
    Stepper& st = *steppers[w];
    st.reset();
    const IncrementGenerator gen(problem.covariance, ref.k, seed + i);
    std::vector<double> dw(mn);
    std::vector<double> base(st.coords().begin(), st.coords().end());
    std::size_t next = 0;
    for (std::size_t j = 1; j <= total; ++j) {
      gen.fill(j, dw);
      st.advance(dw);
      if (j == j0) base.assign(st.coords().begin(), st.coords().end());
      if (j > j0 && next < lag_steps.size() && j - j0 == lag_steps[next]) {
        errors[next][i] = l2_distance(st.field(), DiscreteField(ref.space, base));
        ++next;
      }
    }
  });
  ConvergenceReport rep;
  rep.axis = Axis::holder;
  rep.eval_time = t0;
  for (std::size_t l = 0; l < lag_steps.size(); ++l) {
    const double lag = static_cast<double>(lag_steps[l]) * ref.k;
    rep.levels.push_back({lag, lag, estimate_moment(std::move(errors[l]), 2.0, seed + l)});
  }
  std::vector<FitPoint> pts;
  for (const auto& l : rep.levels) pts.push_back({l.param, l.estimate.value, l.estimate.stderr_});
  rep.fit = fit_rate(pts);
  rep.slope_ci_low = rep.fit.slope - 1.96 * rep.fit.slope_stderr;
  rep.slope_ci_high = rep.fit.slope + 1.96 * rep.fit.slope_stderr;
  rep.monotone = true;
  for (std::size_t i = 1; i < rep.levels.size(); ++i)
    rep.monotone = rep.monotone && rep.levels[i].estimate.value > rep.levels[i - 1].estimate.value;
  return rep;
}

}  // namespace spdelab

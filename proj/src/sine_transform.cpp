// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#include "sine_transform.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

#include "spdelab/errors.hpp"

namespace spdelab::detail {

namespace {

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

// Plans live for the lifetime of the process.
fftw_plan plan_for(std::size_t n) {
  std::lock_guard<std::mutex> lock(plan_mutex());
  static std::map<std::size_t, fftw_plan> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> in(n), out(n);
  fftw_plan p = fftw_plan_r2r_1d(static_cast<int>(n), in.data(), out.data(),
                                 FFTW_RODFT00, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (p == nullptr) throw NumericError("FFTW could not plan a sine transform");
  cache.emplace(n, p);
  return p;
}

}  // namespace

SineTransform::SineTransform(std::size_t n) : n_(n), plan_(nullptr) {
  if (n == 0) throw ConfigurationError("sine transform length must be positive");
  plan_ = plan_for(n);
}

void SineTransform::apply(const double* in, double* out) const {
  fftw_execute_r2r(static_cast<fftw_plan>(plan_), const_cast<double*>(in), out);
}

}  // namespace spdelab::detail

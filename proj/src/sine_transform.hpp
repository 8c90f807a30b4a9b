// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

namespace spdelab::detail {

/// Type-I discrete sine transform of length n, backed by FFTW (RODFT00):
///   out[k] = 2 * sum_{j=0}^{n-1} in[j] * sin(pi (j+1)(k+1) / (n+1)).
/// Plans are created once per length and shared; apply() is thread-safe.
class SineTransform {
 public:
  explicit SineTransform(std::size_t n);

  std::size_t size() const noexcept { return n_; }

  // in and out must not alias.
  void apply(const double* in, double* out) const;

 private:
  std::size_t n_;
  void* plan_;
};

}  // namespace spdelab::detail

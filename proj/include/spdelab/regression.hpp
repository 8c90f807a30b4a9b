// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

namespace spdelab {

struct FitPoint {
  double param = 0.0;
  double error = 0.0;
  double stderr_ = 0.0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

/// Least squares line through (log param, log error). With positive standard
/// errors on every point the fit is weighted by (error / stderr)^2, the
/// inverse variance of log(error) to first order, and slope_stderr is the
/// propagated standard error. Otherwise ordinary least squares with the
/// residual standard error (zero for two points). Throws DomainError for
/// non-positive params or errors.
RateFit fit_rate(std::span<const FitPoint> points);

}  // namespace spdelab

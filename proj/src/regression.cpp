// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#include "spdelab/regression.hpp"

#include <cmath>
#include <vector>

#include "spdelab/errors.hpp"

namespace spdelab {

RateFit fit_rate(std::span<const FitPoint> points) {
  const std::size_t n = points.size();
  if (n < 2) throw ConfigurationError("a rate fit needs at least two points");
  std::vector<double> x(n), y(n), w(n);
  bool weighted = true;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = points[i];
    if (!(p.param > 0.0) || !(p.error > 0.0))
      throw DomainError("rate fit needs positive parameters and errors");
    x[i] = std::log(p.param);
    y[i] = std::log(p.error);
    if (!(p.stderr_ > 0.0)) weighted = false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double rel = points[i].stderr_ / points[i].error;
    w[i] = weighted ? 1.0 / (rel * rel) : 1.0;
  }
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double xm = sx / sw, ym = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += w[i] * (x[i] - xm) * (x[i] - xm);
    sxy += w[i] * (x[i] - xm) * (y[i] - ym);
  }
  if (!(sxx > 0.0)) throw DomainError("rate fit needs at least two distinct parameters");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ym - fit.slope * xm;
  if (weighted) {
    fit.slope_stderr = std::sqrt(1.0 / sxx);
  } else if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += r * r;
    }
    fit.slope_stderr = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

}  // namespace spdelab

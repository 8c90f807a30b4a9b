// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#include "spdelab/spectral_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sine_transform.hpp"
#include "spdelab/errors.hpp"

namespace spdelab {

namespace detail {

struct BasisData {
  std::size_t mode_count = 0;
  std::size_t quadrature_size = 0;
  std::vector<double> eigenvalues;
  std::vector<double> nodes;
  std::vector<double> weights;
  SineTransform dst;

  BasisData(std::size_t m, std::size_t q) : mode_count(m), quadrature_size(q), dst(q) {}
};

}  // namespace detail

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;

std::vector<double>& scratch(std::size_t n) {
  thread_local std::vector<double> buf;
  if (buf.size() < n) buf.resize(n);
  return buf;
}

void require_same_basis(const SobolevVector& a, const SobolevVector& b) {
  if (a.size() != b.size())
    throw ShapeError("SobolevVector operands have different truncations");
}

}  // namespace

EigenBasis EigenBasis::build(std::size_t mode_count, std::size_t quadrature_size) {
  if (mode_count < 1) throw ConfigurationError("mode_count must be at least 1");
  if (quadrature_size < 2 * mode_count)
    throw ConfigurationError("quadrature_size " + std::to_string(quadrature_size) +
                             " must be at least 2*mode_count = " +
                             std::to_string(2 * mode_count));
  auto data = std::make_shared<detail::BasisData>(mode_count, quadrature_size);
  data->eigenvalues.resize(mode_count);
  for (std::size_t n = 1; n <= mode_count; ++n) {
    const double nd = static_cast<double>(n);
    data->eigenvalues[n - 1] = nd * nd * kPi * kPi;
  }
  const double spacing = 1.0 / static_cast<double>(quadrature_size + 1);
  data->nodes.resize(quadrature_size);
  data->weights.assign(quadrature_size, spacing);
  for (std::size_t i = 0; i < quadrature_size; ++i)
    data->nodes[i] = static_cast<double>(i + 1) * spacing;
  return EigenBasis(std::move(data));
}

std::size_t EigenBasis::default_quadrature_size(std::size_t mode_count) {
  std::size_t q = 1;
  while (q < 2 * mode_count) q = 2 * q + 1;
  return q;
}

std::size_t EigenBasis::mode_count() const { return data_->mode_count; }
std::size_t EigenBasis::quadrature_size() const { return data_->quadrature_size; }

double EigenBasis::eigenvalue(std::size_t n) const {
  if (n < 1 || n > data_->mode_count)
    throw DomainError("eigenvalue index " + std::to_string(n) + " out of range");
  return data_->eigenvalues[n - 1];
}

std::span<const double> EigenBasis::eigenvalues() const { return data_->eigenvalues; }
std::span<const double> EigenBasis::nodes() const { return data_->nodes; }
std::span<const double> EigenBasis::weights() const { return data_->weights; }

double EigenBasis::eigenfunction(std::size_t n, double y) {
  return kSqrt2 * std::sin(static_cast<double>(n) * kPi * y);
}

void EigenBasis::synthesize(std::span<const double> coeffs,
                            std::span<double> values) const {
  const std::size_t q = data_->quadrature_size;
  if (coeffs.size() > q) throw ShapeError("too many coefficients for the quadrature grid");
  if (values.size() != q) throw ShapeError("value buffer must match the quadrature size");
  auto& buf = scratch(q);
  std::copy(coeffs.begin(), coeffs.end(), buf.begin());
  std::fill(buf.begin() + static_cast<std::ptrdiff_t>(coeffs.size()),
            buf.begin() + static_cast<std::ptrdiff_t>(q), 0.0);
  data_->dst.apply(buf.data(), values.data());
  const double scale = kSqrt2 / 2.0;
  for (double& v : values) v *= scale;
}

std::vector<double> EigenBasis::synthesize(std::span<const double> coeffs) const {
  std::vector<double> values(data_->quadrature_size);
  synthesize(coeffs, values);
  return values;
}

void EigenBasis::analyze(std::span<const double> values, std::span<double> coeffs) const {
  const std::size_t q = data_->quadrature_size;
  if (values.size() != q)
    throw ShapeError("expected " + std::to_string(q) + " node values, got " +
                     std::to_string(values.size()));
  if (coeffs.size() > q) throw ShapeError("cannot resolve more modes than nodes");
  auto& buf = scratch(q);
  data_->dst.apply(values.data(), buf.data());
  const double scale = kSqrt2 / (2.0 * static_cast<double>(q + 1));
  for (std::size_t n = 0; n < coeffs.size(); ++n) coeffs[n] = scale * buf[n];
}

SobolevVector::SobolevVector(EigenBasis basis)
    : basis_(std::move(basis)), coeffs_(basis_.mode_count(), 0.0) {}

SobolevVector::SobolevVector(EigenBasis basis, std::vector<double> coeffs)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() > basis_.mode_count())
    throw ShapeError("more coefficients than basis modes");
  coeffs_.resize(basis_.mode_count(), 0.0);
}

SobolevVector SobolevVector::unit(const EigenBasis& basis, std::size_t n) {
  if (n < 1 || n > basis.mode_count()) throw DomainError("mode index out of range");
  SobolevVector v(basis);
  v[n] = 1.0;
  return v;
}

SobolevVector& SobolevVector::operator+=(const SobolevVector& other) {
  require_same_basis(*this, other);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
  return *this;
}

SobolevVector& SobolevVector::operator-=(const SobolevVector& other) {
  require_same_basis(*this, other);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
  return *this;
}

SobolevVector& SobolevVector::operator*=(double a) {
  for (double& c : coeffs_) c *= a;
  return *this;
}

SobolevVector operator+(SobolevVector a, const SobolevVector& b) { return a += b; }
SobolevVector operator-(SobolevVector a, const SobolevVector& b) { return a -= b; }
SobolevVector operator*(double a, SobolevVector v) { return v *= a; }

double sobolev_norm(const SobolevVector& v, double s) {
  const auto lambda = v.basis().eigenvalues();
  const auto c = v.coeffs();
  double sum = 0.0;
  if (s == 0.0) {
    for (double x : c) sum += x * x;
  } else {
    for (std::size_t n = 0; n < c.size(); ++n)
      if (c[n] != 0.0) sum += std::pow(lambda[n], s) * c[n] * c[n];
  }
  return std::sqrt(sum);
}

double inner(const SobolevVector& a, const SobolevVector& b) {
  require_same_basis(a, b);
  double sum = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) sum += a.coeffs()[n] * b.coeffs()[n];
  return sum;
}

SobolevVector apply_semigroup(const SobolevVector& v, double t) {
  if (!(t >= 0.0)) throw DomainError("semigroup time must be nonnegative");
  SobolevVector out = v;
  if (t == 0.0) return out;
  const auto lambda = v.basis().eigenvalues();
  auto c = out.coeffs();
  for (std::size_t n = 0; n < c.size(); ++n) c[n] *= std::exp(-lambda[n] * t);
  return out;
}

SobolevVector apply_fractional_power(const SobolevVector& v, double s) {
  SobolevVector out = v;
  if (s == 0.0) return out;
  const auto lambda = v.basis().eigenvalues();
  auto c = out.coeffs();
  for (std::size_t n = 0; n < c.size(); ++n) c[n] *= std::pow(lambda[n], s);
  return out;
}

std::vector<double> evaluate_field(const SobolevVector& v,
                                   std::span<const double> points) {
  std::vector<double> out(points.size(), 0.0);
  const auto c = v.coeffs();
  std::size_t last = c.size();
  while (last > 0 && c[last - 1] == 0.0) --last;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double y = points[i];
    if (!(y > 0.0 && y < 1.0))
      throw DomainError("evaluation point " + std::to_string(y) + " outside (0,1)");
    // sin((n+1)x) = 2 cos(x) sin(nx) - sin((n-1)x)
    const double x = kPi * y;
    const double two_cos = 2.0 * std::cos(x);
    double s_prev = 0.0;
    double s_cur = std::sin(x);
    double sum = 0.0;
    for (std::size_t n = 0; n < last; ++n) {
      sum += c[n] * s_cur;
      const double s_next = two_cos * s_cur - s_prev;
      s_prev = s_cur;
      s_cur = s_next;
    }
    out[i] = kSqrt2 * sum;
  }
  return out;
}

SobolevVector analyze_field(std::span<const double> values, const EigenBasis& basis,
                            std::size_t mode_count) {
  if (mode_count > basis.mode_count())
    throw ShapeError("mode_count exceeds the basis truncation");
  SobolevVector out(basis);
  basis.analyze(values, out.coeffs().subspan(0, mode_count));
  return out;
}

}  // namespace spdelab

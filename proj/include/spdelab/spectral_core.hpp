// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace spdelab {

namespace detail {
struct BasisData;
}

/// Eigensystem of the Dirichlet Laplacian on (0,1):
///   lambda_n = n^2 pi^2,  e_n(y) = sqrt(2) sin(n pi y),  n = 1..mode_count.
///
/// The quadrature is the uniform interior grid y_i = i/(Q+1), i = 1..Q, with
/// weights 1/(Q+1). On this grid the sampled eigenfunctions e_1..e_Q are
/// exactly orthonormal, and synthesis/analysis are type-I sine transforms.
/// Instances are cheap handles to immutable shared data.
class EigenBasis {
 public:
  static EigenBasis build(std::size_t mode_count, std::size_t quadrature_size);

  /// Smallest admissible grid of the form 2^p - 1 with at least twice as many
  /// nodes as modes.
  static std::size_t default_quadrature_size(std::size_t mode_count);

  std::size_t mode_count() const;
  std::size_t quadrature_size() const;

  /// lambda_n for 1-based n.
  double eigenvalue(std::size_t n) const;
  /// lambda_1..lambda_M (index 0 holds lambda_1).
  std::span<const double> eigenvalues() const;

  std::span<const double> nodes() const;
  std::span<const double> weights() const;

  static double eigenfunction(std::size_t n, double y);

  /// Values at the quadrature nodes of sum_n c_n e_n; coeffs may hold up to
  /// quadrature_size() entries.
  void synthesize(std::span<const double> coeffs, std::span<double> values) const;
  std::vector<double> synthesize(std::span<const double> coeffs) const;

  /// First `modes` coefficients (u, e_n) by quadrature of node values.
  void analyze(std::span<const double> values, std::span<double> coeffs) const;

  bool same_as(const EigenBasis& other) const noexcept {
    return data_ == other.data_;
  }

 private:
  explicit EigenBasis(std::shared_ptr<const detail::BasisData> data)
      : data_(std::move(data)) {}
  std::shared_ptr<const detail::BasisData> data_;
};

/// Truncated coefficient sequence (x, e_n), n = 1..M, of an element of the
/// fractional scale H^s. Always carries exactly basis.mode_count() entries.
class SobolevVector {
 public:
  explicit SobolevVector(EigenBasis basis);
  SobolevVector(EigenBasis basis, std::vector<double> coeffs);

  static SobolevVector unit(const EigenBasis& basis, std::size_t n);

  const EigenBasis& basis() const noexcept { return basis_; }
  std::span<const double> coeffs() const noexcept { return coeffs_; }
  std::span<double> coeffs() noexcept { return coeffs_; }
  std::size_t size() const noexcept { return coeffs_.size(); }
  /// Coefficient of e_n for 1-based n.
  double operator[](std::size_t n) const { return coeffs_[n - 1]; }
  double& operator[](std::size_t n) { return coeffs_[n - 1]; }

  SobolevVector& operator+=(const SobolevVector& other);
  SobolevVector& operator-=(const SobolevVector& other);
  SobolevVector& operator*=(double a);

 private:
  EigenBasis basis_;
  std::vector<double> coeffs_;
};

SobolevVector operator+(SobolevVector a, const SobolevVector& b);
SobolevVector operator-(SobolevVector a, const SobolevVector& b);
SobolevVector operator*(double a, SobolevVector v);

/// (sum_n lambda_n^s c_n^2)^{1/2}; any real s.
double sobolev_norm(const SobolevVector& v, double s);

/// L2 inner product, which in this frame is also the duality pairing.
double inner(const SobolevVector& a, const SobolevVector& b);

/// E(t) v = sum_n exp(-lambda_n t) c_n e_n. Throws DomainError for t < 0.
SobolevVector apply_semigroup(const SobolevVector& v, double t);

/// c_n -> lambda_n^s c_n. Pass s = r/2 to realize A^{r/2}.
SobolevVector apply_fractional_power(const SobolevVector& v, double s);

/// Point values sum_n c_n e_n(y); points must lie in (0,1).
std::vector<double> evaluate_field(const SobolevVector& v,
                                   std::span<const double> points);

/// Projection of node samples onto e_1..e_{mode_count}; remaining
/// coefficients are zero.
SobolevVector analyze_field(std::span<const double> values,
                            const EigenBasis& basis, std::size_t mode_count);

}  // namespace spdelab

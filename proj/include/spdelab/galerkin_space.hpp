// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "spdelab/spectral_core.hpp"

namespace spdelab {

enum class SpaceKind { spectral, fem_p1 };

/// Symmetric tridiagonal matrix; off[i] couples rows i and i+1.
struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> off;

  std::size_t size() const noexcept { return diag.size(); }
  void apply(std::span<const double> x, std::span<double> y) const;
  double quadratic_form(std::span<const double> x) const;
};

/// LDL^T factorization of a symmetric positive definite tridiagonal matrix.
class TridiagonalFactor {
 public:
  TridiagonalFactor() = default;
  explicit TridiagonalFactor(const Tridiagonal& a);
  /// Solves in place.
  void solve(std::span<double> x) const;
  std::size_t size() const noexcept { return d_.size(); }

 private:
  std::vector<double> d_;
  std::vector<double> l_;
};

namespace detail {
struct SpaceData;
}

/// Finite-dimensional subspace S_h of H^1_0(0,1): either span{e_1..e_N}
/// (spectral Galerkin) or continuous piecewise linears on a uniform mesh.
/// Immutable; the generalized eigendecomposition of (K, M) is computed at
/// construction.
class GalerkinSpace {
 public:
  /// Requires N < basis.mode_count(); h = lambda_{N+1}^{-1/2}.
  static GalerkinSpace spectral(const EigenBasis& basis, std::size_t n);
  /// Uniform mesh of (0,1) with num_elements >= 2 elements; h = 1/num_elements.
  static GalerkinSpace fem_p1(std::size_t num_elements);

  SpaceKind kind() const;
  double h() const;
  std::size_t dim() const;
  /// Spectral: N. FEM: number of elements.
  std::size_t resolution() const;

  const Tridiagonal& mass() const;
  const Tridiagonal& stiffness() const;

  /// lambda_{h,1} <= ... <= lambda_{h,N_h}.
  std::span<const double> discrete_eigenvalues() const;
  /// Columns are the M-orthonormal generalized eigenvectors.
  const Eigen::MatrixXd& discrete_eigenvectors() const;

  /// b_i = (x, phi_i) from closed-form inner products; x holds (x, e_n) for
  /// n = 1..x.size().
  void load(std::span<const double> x, std::span<double> b) const;
  /// out_n = (x_h, e_n) for n = 1..out.size().
  void lift(std::span<const double> coords, std::span<double> out) const;
  /// (phi_i, e_n) with 1-based i and n.
  double basis_mode_inner(std::size_t i, std::size_t n) const;

  void solve_mass(std::span<double> x) const;
  void solve_stiffness(std::span<double> x) const;

  bool same_as(const GalerkinSpace& other) const noexcept {
    return data_ == other.data_;
  }

 private:
  explicit GalerkinSpace(std::shared_ptr<const detail::SpaceData> data)
      : data_(std::move(data)) {}
  std::shared_ptr<const detail::SpaceData> data_;
};

/// Element of S_h in coordinates of the nodal (FEM) or modal (spectral) basis.
struct DiscreteField {
  GalerkinSpace space;
  std::vector<double> coords;

  DiscreteField(GalerkinSpace s, std::vector<double> c);
  static DiscreteField zero(const GalerkinSpace& s);
};

/// ||x_h|| = (c^T M c)^{1/2}.
double norm(const DiscreteField& x);
/// ||A_h^{1/2} x_h|| = (c^T K c)^{1/2}.
double energy_norm(const DiscreteField& x);

/// Exact L2 distance between two discrete fields (nested FEM meshes,
/// spectral spaces, or via closed-form mixed inner products).
double l2_distance(const DiscreteField& a, const DiscreteField& b);
/// Exact L2 distance between x_h and a reference-frame vector.
double l2_distance(const DiscreteField& a, const SobolevVector& v);

GalerkinSpace make_spectral_space(const EigenBasis& basis, std::size_t n);
GalerkinSpace make_fem_space(std::size_t num_elements);

/// (P_h x, y_h) = <x, y_h> for all y_h in S_h.
DiscreteField project_l2(const GalerkinSpace& space, const SobolevVector& x);
/// a(R_h x, y_h) = a(x, y_h) for all y_h in S_h.
DiscreteField project_ritz(const GalerkinSpace& space, const SobolevVector& x);
/// Coordinates M^{-1} K c.
DiscreteField apply_Ah(const DiscreteField& x);
/// exp(-A_h t) x_h. Throws DomainError for t < 0.
DiscreteField discrete_semigroup(const DiscreteField& x, double t);
/// (I + k A_h)^{-j} x_h. Throws DomainError for k <= 0.
DiscreteField rational_step(const DiscreteField& x, double k, std::size_t j);
/// A_h^s x_h.
DiscreteField discrete_fractional(const DiscreteField& x, double s);
/// (x_h, e_n) for n = 1..basis.mode_count().
SobolevVector lift(const DiscreteField& x, const EigenBasis& basis);

/// Scales each discrete eigencomponent of x by f(lambda_{h,m}).
DiscreteField apply_spectral_function(const DiscreteField& x,
                                      const std::function<double(double)>& f);

/// R(z) = 1/(1+z), the implicit Euler stability function.
constexpr double rational_function(double z) { return 1.0 / (1.0 + z); }

}  // namespace spdelab

// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#include "spdelab/galerkin_space.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "sine_transform.hpp"
#include "spdelab/errors.hpp"

namespace spdelab {

namespace detail {

struct SpaceData {
  SpaceKind kind = SpaceKind::spectral;
  double h = 0.0;
  std::size_t dim = 0;
  std::size_t resolution = 0;
  Tridiagonal mass;
  Tridiagonal stiffness;
  TridiagonalFactor mass_factor;
  TridiagonalFactor stiffness_factor;
  std::vector<double> eigenvalues;
  Eigen::MatrixXd eigenvectors;
  std::optional<SineTransform> dst;  // FEM only, length dim
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

// (phi_i, e_n) = sqrt(2) * hat_weight(n) * sin(n pi i h) on a uniform mesh.
double hat_weight(std::size_t n, double h) {
  const double x = static_cast<double>(n) * kPi;
  const double s = std::sin(0.5 * x * h);
  return 4.0 * s * s / (x * x * h);
}

// sin(n pi i / ne) = sign * sin(m pi i / ne) with m in [1, ne-1]; sign 0 when
// the mode vanishes at every node.
struct Folded {
  std::size_t m;
  int sign;
};

Folded fold(std::size_t n, std::size_t ne) {
  const std::size_t r = n % (2 * ne);
  if (r == 0 || r == ne) return {0, 0};
  if (r < ne) return {r, 1};
  return {2 * ne - r, -1};
}

void check_coords(const DiscreteField& x) {
  if (x.coords.size() != x.space.dim())
    throw ShapeError("coordinate vector does not match the space dimension");
}

std::vector<double> prolongate(std::span<const double> coarse, std::size_t ne_coarse,
                               std::size_t ne_fine) {
  const std::size_t ratio = ne_fine / ne_coarse;
  std::vector<double> fine(ne_fine - 1);
  auto nodal = [&](std::size_t i) { return (i == 0 || i == ne_coarse) ? 0.0 : coarse[i - 1]; };
  for (std::size_t j = 1; j < ne_fine; ++j) {
    const std::size_t left = j / ratio;
    const double theta = static_cast<double>(j % ratio) / static_cast<double>(ratio);
    const double value = theta == 0.0 ? nodal(left)
                                      : (1.0 - theta) * nodal(left) + theta * nodal(left + 1);
    fine[j - 1] = value;
  }
  return fine;
}

}  // namespace

void Tridiagonal::apply(std::span<const double> x, std::span<double> y) const {
  const std::size_t n = diag.size();
  for (std::size_t i = 0; i < n; ++i) {
    double v = diag[i] * x[i];
    if (i > 0) v += off[i - 1] * x[i - 1];
    if (i + 1 < n) v += off[i] * x[i + 1];
    y[i] = v;
  }
}

double Tridiagonal::quadratic_form(std::span<const double> x) const {
  double sum = 0.0;
  const std::size_t n = diag.size();
  for (std::size_t i = 0; i < n; ++i) {
    sum += diag[i] * x[i] * x[i];
    if (i + 1 < n) sum += 2.0 * off[i] * x[i] * x[i + 1];
  }
  return sum;
}

TridiagonalFactor::TridiagonalFactor(const Tridiagonal& a) {
  const std::size_t n = a.size();
  d_.resize(n);
  l_.assign(n > 0 ? n - 1 : 0, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double di = a.diag[i];
    if (i > 0) di -= l_[i - 1] * l_[i - 1] * d_[i - 1];
    if (!(di > 0.0)) throw NumericError("tridiagonal matrix is not positive definite");
    d_[i] = di;
    if (i + 1 < n) l_[i] = a.off[i] / di;
  }
}

void TridiagonalFactor::solve(std::span<double> x) const {
  const std::size_t n = d_.size();
  for (std::size_t i = 1; i < n; ++i) x[i] -= l_[i - 1] * x[i - 1];
  for (std::size_t i = 0; i < n; ++i) x[i] /= d_[i];
  for (std::size_t i = n - 1; i-- > 0;) x[i] -= l_[i] * x[i + 1];
}

GalerkinSpace GalerkinSpace::spectral(const EigenBasis& basis, std::size_t n) {
  if (n < 1) throw ConfigurationError("spectral space needs at least one mode");
  if (n >= basis.mode_count())
    throw ConfigurationError("spectral space with N = " + std::to_string(n) +
                             " needs a reference basis with more than N modes");
  auto data = std::make_shared<detail::SpaceData>();
  data->kind = SpaceKind::spectral;
  data->dim = n;
  data->resolution = n;
  data->h = 1.0 / std::sqrt(basis.eigenvalue(n + 1));
  data->mass.diag.assign(n, 1.0);
  data->mass.off.assign(n - 1, 0.0);
  data->stiffness.diag.assign(basis.eigenvalues().begin(),
                              basis.eigenvalues().begin() + static_cast<std::ptrdiff_t>(n));
  data->stiffness.off.assign(n - 1, 0.0);
  data->mass_factor = TridiagonalFactor(data->mass);
  data->stiffness_factor = TridiagonalFactor(data->stiffness);
  data->eigenvalues = data->stiffness.diag;
  data->eigenvectors = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                 static_cast<Eigen::Index>(n));
  return GalerkinSpace(std::move(data));
}

GalerkinSpace GalerkinSpace::fem_p1(std::size_t num_elements) {
  if (num_elements < 2) throw ConfigurationError("FEM space needs at least 2 elements");
  auto data = std::make_shared<detail::SpaceData>();
  const std::size_t n = num_elements - 1;
  const double h = 1.0 / static_cast<double>(num_elements);
  data->kind = SpaceKind::fem_p1;
  data->dim = n;
  data->resolution = num_elements;
  data->h = h;
  data->mass.diag.assign(n, 2.0 * h / 3.0);
  data->mass.off.assign(n - 1, h / 6.0);
  data->stiffness.diag.assign(n, 2.0 / h);
  data->stiffness.off.assign(n - 1, -1.0 / h);
  data->mass_factor = TridiagonalFactor(data->mass);
  data->stiffness_factor = TridiagonalFactor(data->stiffness);
  data->dst.emplace(n);

  const auto dn = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(dn, dn);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dn, dn);
  for (Eigen::Index i = 0; i < dn; ++i) {
    k(i, i) = data->stiffness.diag[static_cast<std::size_t>(i)];
    m(i, i) = data->mass.diag[static_cast<std::size_t>(i)];
    if (i + 1 < dn) {
      k(i, i + 1) = k(i + 1, i) = data->stiffness.off[static_cast<std::size_t>(i)];
      m(i, i + 1) = m(i + 1, i) = data->mass.off[static_cast<std::size_t>(i)];
    }
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      k, m, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success)
    throw NumericError("generalized eigensolve of (K, M) failed");
  data->eigenvectors = solver.eigenvectors();
  data->eigenvalues.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + dn);
  if (data->eigenvalues.front() <= 0.0)
    throw NumericError("discrete operator has a nonpositive eigenvalue");
  const Eigen::MatrixXd gram = data->eigenvectors.transpose() * m * data->eigenvectors;
  const double residual = (gram - Eigen::MatrixXd::Identity(dn, dn)).cwiseAbs().maxCoeff();
  if (residual > 1e-10)
    throw NumericError("discrete eigenvectors are not M-orthonormal (residual " +
                       std::to_string(residual) + ")");
  return GalerkinSpace(std::move(data));
}

SpaceKind GalerkinSpace::kind() const { return data_->kind; }
double GalerkinSpace::h() const { return data_->h; }
std::size_t GalerkinSpace::dim() const { return data_->dim; }
std::size_t GalerkinSpace::resolution() const { return data_->resolution; }
const Tridiagonal& GalerkinSpace::mass() const { return data_->mass; }
const Tridiagonal& GalerkinSpace::stiffness() const { return data_->stiffness; }
std::span<const double> GalerkinSpace::discrete_eigenvalues() const {
  return data_->eigenvalues;
}
const Eigen::MatrixXd& GalerkinSpace::discrete_eigenvectors() const {
  return data_->eigenvectors;
}

void GalerkinSpace::load(std::span<const double> x, std::span<double> b) const {
  const std::size_t n = data_->dim;
  if (b.size() != n) throw ShapeError("load vector does not match the space dimension");
  if (data_->kind == SpaceKind::spectral) {
    const std::size_t m = std::min(n, x.size());
    std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(m), b.begin());
    std::fill(b.begin() + static_cast<std::ptrdiff_t>(m), b.end(), 0.0);
    return;
  }
  const std::size_t ne = data_->resolution;
  auto& folded = scratch(n);
  std::fill(folded.begin(), folded.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
  for (std::size_t idx = 0; idx < x.size(); ++idx) {
    if (x[idx] == 0.0) continue;
    const std::size_t mode = idx + 1;
    const Folded f = fold(mode, ne);
    if (f.sign == 0) continue;
    folded[f.m - 1] += f.sign * hat_weight(mode, data_->h) * x[idx];
  }
  data_->dst->apply(folded.data(), b.data());
  const double scale = kSqrt2 / 2.0;
  for (double& v : b) v *= scale;
}

void GalerkinSpace::lift(std::span<const double> coords, std::span<double> out) const {
  const std::size_t n = data_->dim;
  if (coords.size() != n) throw ShapeError("coordinates do not match the space dimension");
  if (data_->kind == SpaceKind::spectral) {
    const std::size_t m = std::min(n, out.size());
    std::copy(coords.begin(), coords.begin() + static_cast<std::ptrdiff_t>(m), out.begin());
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(m), out.end(), 0.0);
    return;
  }
  const std::size_t ne = data_->resolution;
  auto& sums = scratch(n);
  data_->dst->apply(coords.data(), sums.data());  // 2 * sum_i c_i sin(m pi i / ne)
  for (std::size_t idx = 0; idx < out.size(); ++idx) {
    const std::size_t mode = idx + 1;
    const Folded f = fold(mode, ne);
    out[idx] = f.sign == 0
                   ? 0.0
                   : f.sign * (kSqrt2 / 2.0) * hat_weight(mode, data_->h) * sums[f.m - 1];
  }
}

double GalerkinSpace::basis_mode_inner(std::size_t i, std::size_t n) const {
  if (i < 1 || i > data_->dim) throw DomainError("basis index out of range");
  if (data_->kind == SpaceKind::spectral) return i == n ? 1.0 : 0.0;
  const double y = static_cast<double>(i) * data_->h;
  return kSqrt2 * hat_weight(n, data_->h) * std::sin(static_cast<double>(n) * kPi * y);
}

void GalerkinSpace::solve_mass(std::span<double> x) const { data_->mass_factor.solve(x); }
void GalerkinSpace::solve_stiffness(std::span<double> x) const {
  data_->stiffness_factor.solve(x);
}

DiscreteField::DiscreteField(GalerkinSpace s, std::vector<double> c)
    : space(std::move(s)), coords(std::move(c)) {
  if (coords.size() != space.dim())
    throw ShapeError("coordinate vector does not match the space dimension");
}

DiscreteField DiscreteField::zero(const GalerkinSpace& s) {
  return DiscreteField(s, std::vector<double>(s.dim(), 0.0));
}

double norm(const DiscreteField& x) {
  check_coords(x);
  return std::sqrt(std::max(0.0, x.space.mass().quadratic_form(x.coords)));
}

double energy_norm(const DiscreteField& x) {
  check_coords(x);
  return std::sqrt(std::max(0.0, x.space.stiffness().quadratic_form(x.coords)));
}

double l2_distance(const DiscreteField& a, const DiscreteField& b) {
  check_coords(a);
  check_coords(b);
  const GalerkinSpace& sa = a.space;
  const GalerkinSpace& sb = b.space;
  if (sa.same_as(sb) || (sa.kind() == sb.kind() && sa.resolution() == sb.resolution())) {
    std::vector<double> diff(a.coords.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = a.coords[i] - b.coords[i];
    return std::sqrt(std::max(0.0, sa.mass().quadratic_form(diff)));
  }
  if (sa.kind() == SpaceKind::spectral && sb.kind() == SpaceKind::spectral) {
    const std::size_t n = std::max(a.coords.size(), b.coords.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double va = i < a.coords.size() ? a.coords[i] : 0.0;
      const double vb = i < b.coords.size() ? b.coords[i] : 0.0;
      sum += (va - vb) * (va - vb);
    }
    return std::sqrt(sum);
  }
  if (sa.kind() == SpaceKind::fem_p1 && sb.kind() == SpaceKind::fem_p1) {
    const bool a_coarse = sa.resolution() < sb.resolution();
    const DiscreteField& coarse = a_coarse ? a : b;
    const DiscreteField& fine = a_coarse ? b : a;
    if (fine.space.resolution() % coarse.space.resolution() != 0)
      throw ConfigurationError("FEM distance requires nested meshes");
    auto up = prolongate(coarse.coords, coarse.space.resolution(), fine.space.resolution());
    for (std::size_t i = 0; i < up.size(); ++i) up[i] -= fine.coords[i];
    return std::sqrt(std::max(0.0, fine.space.mass().quadratic_form(up)));
  }
  const DiscreteField& fem = sa.kind() == SpaceKind::fem_p1 ? a : b;
  const DiscreteField& spec = sa.kind() == SpaceKind::fem_p1 ? b : a;
  std::vector<double> lifted(spec.coords.size());
  fem.space.lift(fem.coords, lifted);
  double cross = 0.0, spec_sq = 0.0;
  for (std::size_t i = 0; i < lifted.size(); ++i) {
    cross += lifted[i] * spec.coords[i];
    spec_sq += spec.coords[i] * spec.coords[i];
  }
  const double fem_sq = fem.space.mass().quadratic_form(fem.coords);
  return std::sqrt(std::max(0.0, fem_sq - 2.0 * cross + spec_sq));
}

double l2_distance(const DiscreteField& a, const SobolevVector& v) {
  check_coords(a);
  const auto c = v.coeffs();
  if (a.space.kind() == SpaceKind::spectral) {
    double sum = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double va = i < a.coords.size() ? a.coords[i] : 0.0;
      sum += (va - c[i]) * (va - c[i]);
    }
    for (std::size_t i = c.size(); i < a.coords.size(); ++i) sum += a.coords[i] * a.coords[i];
    return std::sqrt(sum);
  }
  std::vector<double> lifted(c.size());
  a.space.lift(a.coords, lifted);
  double cross = 0.0, v_sq = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    cross += lifted[i] * c[i];
    v_sq += c[i] * c[i];
  }
  const double a_sq = a.space.mass().quadratic_form(a.coords);
  return std::sqrt(std::max(0.0, a_sq - 2.0 * cross + v_sq));
}

GalerkinSpace make_spectral_space(const EigenBasis& basis, std::size_t n) {
  return GalerkinSpace::spectral(basis, n);
}

GalerkinSpace make_fem_space(std::size_t num_elements) {
  return GalerkinSpace::fem_p1(num_elements);
}

DiscreteField project_l2(const GalerkinSpace& space, const SobolevVector& x) {
  std::vector<double> b(space.dim());
  space.load(x.coeffs(), b);
  space.solve_mass(b);
  return DiscreteField(space, std::move(b));
}

DiscreteField project_ritz(const GalerkinSpace& space, const SobolevVector& x) {
  // a(x, phi_i) = (x, A phi_i) = sum_n lambda_n x_n (phi_i, e_n)
  std::vector<double> weighted(x.coeffs().begin(), x.coeffs().end());
  const auto lambda = x.basis().eigenvalues();
  for (std::size_t n = 0; n < weighted.size(); ++n) weighted[n] *= lambda[n];
  std::vector<double> r(space.dim());
  space.load(weighted, r);
  space.solve_stiffness(r);
  return DiscreteField(space, std::move(r));
}

DiscreteField apply_Ah(const DiscreteField& x) {
  check_coords(x);
  std::vector<double> y(x.coords.size());
  x.space.stiffness().apply(x.coords, y);
  x.space.solve_mass(y);
  return DiscreteField(x.space, std::move(y));
}

DiscreteField apply_spectral_function(const DiscreteField& x,
                                      const std::function<double(double)>& f) {
  check_coords(x);
  const GalerkinSpace& s = x.space;
  const auto lambda = s.discrete_eigenvalues();
  if (s.kind() == SpaceKind::spectral) {
    std::vector<double> y(x.coords);
    for (std::size_t m = 0; m < y.size(); ++m) y[m] *= f(lambda[m]);
    return DiscreteField(s, std::move(y));
  }
  const auto n = static_cast<Eigen::Index>(s.dim());
  std::vector<double> mc(x.coords.size());
  s.mass().apply(x.coords, mc);
  const Eigen::Map<const Eigen::VectorXd> mcv(mc.data(), n);
  Eigen::VectorXd a = s.discrete_eigenvectors().transpose() * mcv;
  for (Eigen::Index m = 0; m < n; ++m) a(m) *= f(lambda[static_cast<std::size_t>(m)]);
  const Eigen::VectorXd c = s.discrete_eigenvectors() * a;
  return DiscreteField(s, std::vector<double>(c.data(), c.data() + n));
}

DiscreteField discrete_semigroup(const DiscreteField& x, double t) {
  if (!(t >= 0.0)) throw DomainError("discrete semigroup time must be nonnegative");
  if (t == 0.0) return x;
  return apply_spectral_function(x, [t](double lambda) { return std::exp(-lambda * t); });
}

DiscreteField rational_step(const DiscreteField& x, double k, std::size_t j) {
  if (!(k > 0.0)) throw DomainError("time step must be positive");
  if (j == 0) return x;
  const double power = static_cast<double>(j);
  return apply_spectral_function(x, [k, power](double lambda) {
    return std::pow(rational_function(k * lambda), power);
  });
}

DiscreteField discrete_fractional(const DiscreteField& x, double s) {
  if (s == 0.0) return x;
  return apply_spectral_function(x, [s](double lambda) { return std::pow(lambda, s); });
}

SobolevVector lift(const DiscreteField& x, const EigenBasis& basis) {
  SobolevVector out(basis);
  x.space.lift(x.coords, out.coeffs());
  return out;
}

}  // namespace spdelab

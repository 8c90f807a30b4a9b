// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#include "spdelab/error_ops.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "spdelab/errors.hpp"
#include "spdelab/noise.hpp"
#include "spdelab/regression.hpp"

namespace spdelab {

namespace {

constexpr double kPi = std::numbers::pi;

double one_minus_exp(double x) { return -std::expm1(-x); }

double rational_power(double z, double j) { return std::exp(-j * std::log1p(z)); }

// a(t) for a mode function; j is the rational exponent in force at t.
double mode_value(const ModeFunction& a, double k, double t, double j) {
  return a.rational ? rational_power(k * a.lambda, j) : std::exp(-a.lambda * t);
}

std::size_t step_index(double k, double t) {
  return static_cast<std::size_t>(std::floor(t / k)) + 1;
}

}  // namespace

double time_integral(const ModeFunction& a, double k, double t) {
  if (t <= 0.0) return 0.0;
  if (!a.rational) return one_minus_exp(a.lambda * t) / a.lambda;
  if (!(k > 0.0)) throw DomainError("rational mode functions need k > 0");
  const double z = k * a.lambda;
  const double n = std::floor(t / k);
  const double one_minus_rn = one_minus_exp(n * std::log1p(z));
  return one_minus_rn / a.lambda + (t - n * k) * rational_power(z, n + 1.0);
}

double time_integral_product(const ModeFunction& a, const ModeFunction& b, double k, double t) {
  if (t <= 0.0) return 0.0;
  if (!a.rational && !b.rational) {
    const double s = a.lambda + b.lambda;
    return one_minus_exp(s * t) / s;
  }
  if (!(k > 0.0)) throw DomainError("rational mode functions need k > 0");
  const double n = std::floor(t / k);
  const double rem = t - n * k;
  if (a.rational && b.rational) {
    const double za = k * a.lambda, zb = k * b.lambda;
    const double log_rho = -std::log1p(za) - std::log1p(zb);
    const double rho = std::exp(log_rho);
    const double one_minus_rho = (za + zb + za * zb) / ((1.0 + za) * (1.0 + zb));
    const double full = k * rho * one_minus_exp(-n * log_rho) / one_minus_rho;
    return full + rem * std::exp((n + 1.0) * log_rho);
  }
  const ModeFunction& r = a.rational ? a : b;
  const ModeFunction& e = a.rational ? b : a;
  const double z = k * r.lambda;
  const double x = k * e.lambda;
  const double ra = 1.0 / (1.0 + z);
  const double log_rho = -std::log1p(z) - x;
  const double one_minus_rho = (z + one_minus_exp(x)) / (1.0 + z);
  const double piece = one_minus_exp(x) / e.lambda;
  const double full = ra * piece * one_minus_exp(-n * log_rho) / one_minus_rho;
  const double tail = ra * std::exp(n * log_rho) * one_minus_exp(e.lambda * rem) / e.lambda;
  return full + tail;
}

SobolevVector apply_Fh(const GalerkinSpace& space, double t, const SobolevVector& x) {
  if (t < 0.0) throw DomainError("F_h(t) needs t >= 0");
  const DiscreteField xh = discrete_semigroup(project_l2(space, x), t);
  return lift(xh, x.basis()) - apply_semigroup(x, t);
}

SobolevVector apply_Fkh(const GalerkinSpace& space, double k, double t, const SobolevVector& x) {
  if (t < 0.0) throw DomainError("F_kh(t) needs t >= 0");
  if (!(k > 0.0)) throw DomainError("F_kh needs k > 0");
  const DiscreteField xh = rational_step(project_l2(space, x), k, step_index(k, t));
  return lift(xh, x.basis()) - apply_semigroup(x, t);
}

namespace {

// W = V^T L with L_in = (phi_i, e_n): row i holds (phi_{h,i}, e_n).
Eigen::MatrixXd mode_coupling(const GalerkinSpace& space, std::size_t modes) {
  const std::size_t dim = space.dim();
  if (space.kind() == SpaceKind::spectral) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(dim, modes);
    for (std::size_t i = 0; i < std::min(dim, modes); ++i) w(i, i) = 1.0;
    return w;
  }
  Eigen::MatrixXd l(dim, modes);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t n = 0; n < modes; ++n) l(i, n) = space.basis_mode_inner(i + 1, n + 1);
  return space.discrete_eigenvectors().transpose() * l;
}

double lambda_n(std::size_t n) { return static_cast<double>(n * n) * kPi * kPi; }

}  // namespace

IntegralFunctionals integral_functionals(const GalerkinSpace& space, double k, double t,
                                         const SobolevVector& x) {
  if (!(t > 0.0)) throw DomainError("integral functionals need t > 0");
  if (k < 0.0) throw DomainError("time step must be non-negative");
  const bool rational = k > 0.0;
  const std::size_t modes = x.size();
  const auto lam_h = space.discrete_eigenvalues();
  IntegralFunctionals out;
  if (space.kind() == SpaceKind::spectral) {
    double int2 = 0.0, sq2 = 0.0;
    const std::size_t n_h = space.dim();
    for (std::size_t n = 1; n <= modes; ++n) {
      const double c = x[n];
      if (c == 0.0) continue;
      const ModeFunction b{lambda_n(n), false};
      double in, sq;
      if (n <= n_h) {
        if (!rational) continue;
        const ModeFunction a{lam_h[n - 1], true};
        in = time_integral(a, k, t) - time_integral(b, k, t);
        sq = time_integral_product(a, a, k, t) - 2.0 * time_integral_product(a, b, k, t) +
             time_integral_product(b, b, k, t);
      } else {
        in = -time_integral(b, k, t);
        sq = time_integral_product(b, b, k, t);
      }
      int2 += in * in * c * c;
      sq2 += std::max(sq, 0.0) * c * c;
    }
    out.int_norm = std::sqrt(int2);
    out.sq_int = std::sqrt(sq2);
    return out;
  }
  const Eigen::MatrixXd w = mode_coupling(space, modes);
  Eigen::VectorXd xv(modes);
  for (std::size_t n = 0; n < modes; ++n) xv(n) = x[n + 1];
  const Eigen::VectorXd alpha = w * xv;
  const std::size_t dim = space.dim();
  // || sum_i beta_i phi_{h,i} - sum_n y_n e_n ||^2 with M-orthonormal phi_{h,i}.
  Eigen::VectorXd beta(dim), y(modes);
  for (std::size_t i = 0; i < dim; ++i)
    beta(i) = time_integral({lam_h[i], rational}, k, t) * alpha(i);
  for (std::size_t n = 0; n < modes; ++n) y(n) = time_integral({lambda_n(n + 1), false}, k, t) * xv(n);
  const double int2 = beta.squaredNorm() - 2.0 * beta.dot(w * y) + y.squaredNorm();
  double sq2 = 0.0;
  for (std::size_t n = 0; n < modes; ++n)
    sq2 += xv(n) * xv(n) *
           time_integral_product({lambda_n(n + 1), false}, {lambda_n(n + 1), false}, k, t);
  for (std::size_t i = 0; i < dim; ++i) {
    const ModeFunction a{lam_h[i], rational};
    sq2 += alpha(i) * alpha(i) * time_integral_product(a, a, k, t);
    double cross = 0.0;
    for (std::size_t n = 0; n < modes; ++n) {
      if (xv(n) == 0.0) continue;
      cross += w(i, n) * xv(n) * time_integral_product(a, {lambda_n(n + 1), false}, k, t);
    }
    sq2 -= 2.0 * alpha(i) * cross;
  }
  out.int_norm = std::sqrt(std::max(int2, 0.0));
  out.sq_int = std::sqrt(std::max(sq2, 0.0));
  return out;
}

double lanczos_max(const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& op,
                   Eigen::VectorXd& start, int max_iter, double tol) {
  const Eigen::Index n = start.size();
  const int m = static_cast<int>(std::min<Eigen::Index>(max_iter, n));
  Eigen::MatrixXd v(n, m + 1);
  double s = start.norm();
  if (!(s > 0.0)) {
    start = Eigen::VectorXd::Ones(n);
    s = start.norm();
  }
  v.col(0) = start / s;
  std::vector<double> alpha, beta;
  Eigen::VectorXd w(n);
  double theta = 0.0;
  Eigen::VectorXd ritz;
  int used = 0;
  for (int it = 0; it < m; ++it) {
    op(v.col(it), w);
    const double a = v.col(it).dot(w);
    alpha.push_back(a);
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd coef = v.leftCols(it + 1).transpose() * w;
      w -= v.leftCols(it + 1) * coef;
    }
    const double b = w.norm();
    used = it + 1;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(used, used);
    for (int i = 0; i < used; ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < used) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    theta = es.eigenvalues()(used - 1);
    ritz = es.eigenvectors().col(used - 1);
    const double resid = b * std::fabs(ritz(used - 1));
    if (resid <= tol * std::max(std::fabs(theta), 1e-300) || b <= 1e-300) break;
    beta.push_back(b);
    v.col(it + 1) = w / b;
  }
  start = v.leftCols(used) * ritz;
  return theta;
}

LemmaId parse_lemma_id(const std::string& id) {
  static const std::pair<const char*, LemmaId> table[] = {
      {"Fh1_i", LemmaId::Fh1_i},       {"Fh1_ii", LemmaId::Fh1_ii},
      {"Fh1_iii", LemmaId::Fh1_iii},   {"Fh2_i", LemmaId::Fh2_i},
      {"Fh2_ii", LemmaId::Fh2_ii},     {"Fkh1_i", LemmaId::Fkh1_i},
      {"Fkh1_ii", LemmaId::Fkh1_ii},   {"Fkh1_iii", LemmaId::Fkh1_iii},
      {"Fkh2_i", LemmaId::Fkh2_i},     {"Fkh2_ii", LemmaId::Fkh2_ii},
      {"smoothing_E", LemmaId::smoothing_E}, {"smoothing_Eh", LemmaId::smoothing_Eh},
      {"smoothing_r", LemmaId::smoothing_r}};
  for (const auto& [name, value] : table)
    if (id == name) return value;
  throw ConfigurationError("unknown lemma id '" + id + "'");
}

std::string to_string(LemmaId id) {
  switch (id) {
    case LemmaId::Fh1_i: return "Fh1_i";
    case LemmaId::Fh1_ii: return "Fh1_ii";
    case LemmaId::Fh1_iii: return "Fh1_iii";
    case LemmaId::Fh2_i: return "Fh2_i";
    case LemmaId::Fh2_ii: return "Fh2_ii";
    case LemmaId::Fkh1_i: return "Fkh1_i";
    case LemmaId::Fkh1_ii: return "Fkh1_ii";
    case LemmaId::Fkh1_iii: return "Fkh1_iii";
    case LemmaId::Fkh2_i: return "Fkh2_i";
    case LemmaId::Fkh2_ii: return "Fkh2_ii";
    case LemmaId::smoothing_E: return "smoothing_E";
    case LemmaId::smoothing_Eh: return "smoothing_Eh";
    case LemmaId::smoothing_r: return "smoothing_r";
  }
  return "unknown";
}

bool lemma_uses_time_levels(LemmaId id) {
  switch (id) {
    case LemmaId::Fkh1_i: case LemmaId::Fkh1_ii: case LemmaId::Fkh1_iii:
    case LemmaId::Fkh2_i: case LemmaId::Fkh2_ii: case LemmaId::smoothing_r:
      return true;
    default:
      return false;
  }
}

double smoothing_constant_E(double nu) {
  return nu == 0.0 ? 1.0 : std::pow(nu / std::numbers::e, nu);
}

// sup over j >= 1, z > 0 of (j z)^rho (1 + z)^{-j}.
double smoothing_constant_r(double rho) {
  if (rho == 0.0) return 1.0;
  double best = smoothing_constant_E(rho);
  for (int j = 1; j <= 100000; ++j) {
    const double jj = j;
    double v;
    if (jj <= rho) {
      v = 1.0;  // j = rho = 1: sup is the limit z -> infinity
    } else {
      v = std::pow(jj * rho / (jj - rho), rho) * std::pow((jj - rho) / jj, jj);
    }
    best = std::max(best, v);
  }
  return best;
}

namespace {

enum class Functional { pointwise, int_norm, sq_int };

struct TPoint {
  double t;
  double j;  // rational exponent in force (ignored for semidiscrete)
  bool grid_end;
};

struct Setup {
  Functional functional = Functional::pointwise;
  double s = 0.0;  // input norm ||x||_s
  double w = 0.0;  // time weight t^w
  double expected = 0.0;
  CheckKind check = CheckKind::rate;
  bool rational = false;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigurationError(what);
}

Setup make_setup(LemmaId id, const LemmaParams& p) {
  Setup s;
  const auto rho_range = [&] { require(p.rho >= 0.0 && p.rho <= 1.0, "rho must lie in [0, 1]"); };
  const auto mu_nu_range = [&] {
    require(0.0 <= p.nu && p.nu <= p.mu && p.mu <= 2.0, "need 0 <= nu <= mu <= 2");
  };
  switch (id) {
    case LemmaId::Fh1_i:
    case LemmaId::Fkh1_i:
      mu_nu_range();
      s.s = p.nu;
      s.w = 0.5 * (p.mu - p.nu);
      s.expected = p.mu;
      break;
    case LemmaId::Fh1_ii:
    case LemmaId::Fkh1_ii:
      rho_range();
      s.s = -p.rho;
      s.w = 0.5 * p.rho;
      s.check = CheckKind::bounded;
      break;
    case LemmaId::Fh1_iii:
    case LemmaId::Fkh1_iii:
      rho_range();
      s.s = -p.rho;
      s.w = 1.0;
      s.expected = 2.0 - p.rho;
      break;
    case LemmaId::Fh2_i:
    case LemmaId::Fkh2_i:
      rho_range();
      s.functional = Functional::int_norm;
      s.s = -p.rho;
      s.expected = 2.0 - p.rho;
      break;
    case LemmaId::Fh2_ii:
    case LemmaId::Fkh2_ii:
      rho_range();
      s.functional = Functional::sq_int;
      s.s = p.rho;
      s.expected = 1.0 + p.rho;
      break;
    case LemmaId::smoothing_E:
      require(p.nu >= 0.0, "nu must be non-negative");
      s.check = CheckKind::bound;
      s.expected = smoothing_constant_E(p.nu);
      break;
    case LemmaId::smoothing_Eh:
      require(p.rho >= 0.0, "rho must be non-negative");
      s.check = CheckKind::bound;
      s.expected = smoothing_constant_E(p.rho);
      break;
    case LemmaId::smoothing_r:
      rho_range();
      s.check = CheckKind::bound;
      s.expected = smoothing_constant_r(p.rho);
      break;
  }
  if (lemma_uses_time_levels(id) && id != LemmaId::smoothing_r) {
    s.rational = true;
    s.expected *= 0.5;
  }
  return s;
}

std::vector<double> log_grid(double t_min, double T, int per_decade) {
  const int n = static_cast<int>(std::ceil(per_decade * std::log10(T / t_min) - 1e-9));
  std::vector<double> t;
  for (int i = 0; i < n; ++i) t.push_back(t_min * std::pow(10.0, static_cast<double>(i) / per_decade));
  t.push_back(T);
  return t;
}

std::vector<TPoint> time_points(const Setup& s, const LemmaParams& p, double k,
                                std::size_t breakpoint_cap) {
  std::vector<TPoint> pts;
  const bool pointwise = s.functional == Functional::pointwise;
  if (pointwise && s.w == 0.0) pts.push_back({0.0, 1.0, true});
  const auto grid = log_grid(p.t_min, p.T, p.per_decade);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const bool end = (i == 0 && !(pointwise && s.w == 0.0)) || i + 1 == grid.size();
    const double j = s.rational ? static_cast<double>(step_index(k, grid[i])) : 0.0;
    pts.push_back({grid[i], j, end});
  }
  if (s.rational) {
    const std::size_t jmax =
        std::min<std::size_t>(static_cast<std::size_t>(std::floor(p.T / k * (1.0 + 1e-12))),
                              breakpoint_cap);
    for (std::size_t j = 1; j <= jmax; ++j) {
      const double t = static_cast<double>(j) * k;
      if (t < p.t_min || t > p.T) continue;
      const bool end = std::fabs(t - p.T) <= 1e-12 * p.T;
      pts.push_back({t, static_cast<double>(j), end});  // left limit
      if (pointwise && !end) pts.push_back({t, static_cast<double>(j + 1), false});
    }
  }
  return pts;
}

struct LevelValue {
  double value = 0.0;
  double argmax_t = 0.0;
  bool interior = true;
};

// Exact sup over single modes; rows n <= n_h are resolved by the space.
LevelValue spectral_level(const Setup& s, const std::vector<TPoint>& pts, std::size_t n_h,
                          std::size_t modes, double k) {
  std::vector<double> lam(modes), wgt(modes);
  for (std::size_t n = 1; n <= modes; ++n) {
    lam[n - 1] = lambda_n(n);
    wgt[n - 1] = std::pow(lam[n - 1], -0.5 * s.s);
  }
  LevelValue best;
  best.value = -1.0;
  for (const auto& tp : pts) {
    double sup = 0.0;
    for (std::size_t n = 1; n <= modes; ++n) {
      const double l = lam[n - 1];
      const ModeFunction b{l, false};
      const ModeFunction a{l, s.rational};
      double v = 0.0;
      const bool resolved = n <= n_h;
      if (resolved && !s.rational) continue;
      switch (s.functional) {
        case Functional::pointwise: {
          const double bv = std::exp(-l * tp.t);
          v = resolved ? std::fabs(mode_value(a, k, tp.t, tp.j) - bv) : bv;
          break;
        }
        case Functional::int_norm:
          v = std::fabs((resolved ? time_integral(a, k, tp.t) : 0.0) - time_integral(b, k, tp.t));
          break;
        case Functional::sq_int: {
          double q = time_integral_product(b, b, k, tp.t);
          if (resolved)
            q += time_integral_product(a, a, k, tp.t) - 2.0 * time_integral_product(a, b, k, tp.t);
          v = std::sqrt(std::max(q, 0.0));
          break;
        }
      }
      sup = std::max(sup, v * wgt[n - 1]);
    }
    const double val = (s.w == 0.0 ? 1.0 : std::pow(tp.t, s.w)) * sup;
    if (val > best.value) best = {val, tp.t, !tp.grid_end};
  }
  return best;
}

struct FemData {
  Eigen::MatrixXd w;        // dim x modes
  Eigen::VectorXd lam_h;    // dim
  Eigen::VectorXd lam;      // modes
  Eigen::VectorXd wgt;      // lambda^{-s/2}
};

LevelValue fem_level(const Setup& s, const std::vector<TPoint>& pts, const FemData& d, double k,
                     std::uint64_t seed) {
  const Eigen::Index dim = d.w.rows(), modes = d.w.cols();
  Eigen::VectorXd warm(modes);
  for (Eigen::Index n = 0; n < modes; ++n)
    warm(n) = 1.0 + 0.1 * rng::standard_normal(seed, 0, static_cast<std::uint64_t>(n), 11);
  Eigen::VectorXd p(dim), a(dim), q(modes), b(modes);
  Eigen::MatrixXd z;
  LevelValue best;
  best.value = -1.0;
  for (const auto& tp : pts) {
    bool full = false;
    for (Eigen::Index i = 0; i < dim; ++i) {
      const ModeFunction ai{d.lam_h(i), s.rational};
      switch (s.functional) {
        case Functional::pointwise: a(i) = mode_value(ai, k, tp.t, tp.j); p(i) = a(i) * a(i); break;
        case Functional::int_norm: a(i) = time_integral(ai, k, tp.t); p(i) = a(i) * a(i); break;
        case Functional::sq_int: p(i) = time_integral_product(ai, ai, k, tp.t); full = true; break;
      }
    }
    for (Eigen::Index n = 0; n < modes; ++n) {
      const ModeFunction bn{d.lam(n), false};
      switch (s.functional) {
        case Functional::pointwise: b(n) = std::exp(-d.lam(n) * tp.t); q(n) = b(n) * b(n); break;
        case Functional::int_norm: b(n) = time_integral(bn, k, tp.t); q(n) = b(n) * b(n); break;
        case Functional::sq_int: q(n) = time_integral_product(bn, bn, k, tp.t); break;
      }
    }
    if (full) {
      z.resize(dim, modes);
      for (Eigen::Index n = 0; n < modes; ++n) {
        const ModeFunction bn{d.lam(n), false};
        for (Eigen::Index i = 0; i < dim; ++i)
          z(i, n) = d.w(i, n) * time_integral_product({d.lam_h(i), s.rational}, bn, k, tp.t);
      }
    }
    auto op = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
      const Eigen::VectorXd y = d.wgt.cwiseProduct(v);
      const Eigen::VectorXd alpha = d.w * y;
      if (full) {
        const Eigen::VectorXd zy = z * y;
        out = d.w.transpose() * (p.cwiseProduct(alpha) - zy) - z.transpose() * alpha +
              q.cwiseProduct(y);
      } else {
        const Eigen::VectorXd beta = d.w * b.cwiseProduct(y);
        out = d.w.transpose() * (p.cwiseProduct(alpha) - a.cwiseProduct(beta)) -
              b.cwiseProduct(d.w.transpose() * a.cwiseProduct(alpha)) + q.cwiseProduct(y);
      }
      out = d.wgt.cwiseProduct(out);
    };
    const double top = lanczos_max(op, warm, 80, 1e-9);
    const double val = (s.w == 0.0 ? 1.0 : std::pow(tp.t, s.w)) * std::sqrt(std::max(top, 0.0));
    if (val > best.value) best = {val, tp.t, !tp.grid_end};
  }
  return best;
}

FemData fem_data(const GalerkinSpace& space, std::size_t modes, double s) {
  FemData d;
  d.w = mode_coupling(space, modes);
  const auto lh = space.discrete_eigenvalues();
  d.lam_h = Eigen::Map<const Eigen::VectorXd>(lh.data(), static_cast<Eigen::Index>(lh.size()));
  d.lam.resize(static_cast<Eigen::Index>(modes));
  d.wgt.resize(static_cast<Eigen::Index>(modes));
  for (std::size_t n = 0; n < modes; ++n) {
    d.lam(n) = lambda_n(n + 1);
    d.wgt(n) = std::pow(d.lam(n), -0.5 * s);
  }
  return d;
}

GalerkinSpace level_space(SpaceKind kind, double level, const EigenBasis& basis) {
  const double rounded = std::round(level);
  require(rounded >= 1.0 && std::fabs(level - rounded) < 1e-9, "space levels must be integers");
  const auto n = static_cast<std::size_t>(rounded);
  return kind == SpaceKind::spectral ? GalerkinSpace::spectral(basis, n)
                                     : GalerkinSpace::fem_p1(n);
}

void finish(RateReport& rep) {
  std::vector<FitPoint> pts;
  for (const auto& l : rep.levels)
    if (l.value > 0.0) pts.push_back({l.param, l.value, 0.0});
  if (pts.size() >= 2) {
    const RateFit fit = fit_rate(pts);
    rep.slope = fit.slope;
    rep.intercept = fit.intercept;
    rep.slope_stderr = fit.slope_stderr;
  }
  bool interior_ok = true;
  if (rep.interior_required)
    for (const auto& l : rep.levels) interior_ok = interior_ok && l.interior;
  switch (rep.check) {
    case CheckKind::rate:
      for (auto& l : rep.levels) l.ratio = l.value / std::pow(l.param, rep.expected);
      rep.pass = pts.size() >= 2 && std::fabs(rep.slope - rep.expected) <= rep.tolerance &&
                 interior_ok;
      break;
    case CheckKind::bounded: {
      const double first = rep.levels.front().value;
      bool ok = first > 0.0;
      for (auto& l : rep.levels) {
        l.ratio = first > 0.0 ? l.value / first : 0.0;
        ok = ok && l.value <= (1.0 + rep.tolerance) * first;
      }
      rep.pass = ok;
      break;
    }
    case CheckKind::bound: {
      bool ok = true;
      for (auto& l : rep.levels) {
        l.ratio = l.value / rep.expected;
        ok = ok && l.value <= rep.expected * (1.0 + 1e-12);
      }
      rep.pass = ok;
      break;
    }
  }
}

}  // namespace

RateReport lemma_rate_check(LemmaId id, const LemmaParams& params, SpaceKind kind,
                            const std::vector<double>& levels) {
  require(levels.size() >= 2, "a rate check needs at least two levels");
  require(params.T > 0.0 && params.t_min > 0.0 && params.t_min < params.T,
          "need 0 < t_min < T");
  require(params.per_decade >= 1, "per_decade must be positive");
  const Setup setup = make_setup(id, params);
  const bool spectral = kind == SpaceKind::spectral;
  const std::size_t modes = params.ref_modes ? params.ref_modes : (spectral ? 4096 : 2048);
  const bool time_levels = lemma_uses_time_levels(id);

  RateReport rep;
  rep.lemma = to_string(id);
  rep.param_kind = time_levels ? "k" : "h";
  rep.space_kind = spectral ? "spectral" : "fem";
  rep.check = setup.check;
  rep.expected = setup.expected;
  const bool integral = setup.functional != Functional::pointwise;
  rep.tolerance = setup.check == CheckKind::bounded ? 0.05
                  : spectral ? (integral ? 0.1 : 0.05)
                             : 0.15;
  rep.interior_required = setup.check == CheckKind::rate && !integral && setup.w > 0.0;

  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (time_levels)
      require(levels[i] < levels[i - 1], "time-step levels must be strictly decreasing");
    else
      require(levels[i] > levels[i - 1], "space levels must be strictly increasing");
  }

  const EigenBasis basis = EigenBasis::build(modes, EigenBasis::default_quadrature_size(modes));

  if (id == LemmaId::smoothing_E) {
    const auto grid = log_grid(params.t_min, params.T, params.per_decade);
    for (double level : levels) {
      const auto n_max = static_cast<std::size_t>(std::round(level));
      require(n_max >= 1, "mode-count levels must be positive");
      double best = 0.0, arg = 0.0;
      for (double t : grid)
        for (std::size_t n = 1; n <= n_max; ++n) {
          const double x = lambda_n(n) * t;
          const double v = (params.nu == 0.0 ? 1.0 : std::pow(x, params.nu)) * std::exp(-x);
          if (v > best) best = v, arg = t;
        }
      rep.levels.push_back({1.0 / ((level + 1.0) * kPi), level, best, arg, true, 0.0});
    }
    finish(rep);
    return rep;
  }

  if (id == LemmaId::smoothing_Eh) {
    const auto grid = log_grid(params.t_min, params.T, params.per_decade);
    for (double level : levels) {
      const GalerkinSpace space = level_space(kind, level, basis);
      double best = 0.0, arg = 0.0;
      for (double t : grid)
        for (double l : space.discrete_eigenvalues()) {
          const double x = l * t;
          const double v = (params.rho == 0.0 ? 1.0 : std::pow(x, params.rho)) * std::exp(-x);
          if (v > best) best = v, arg = t;
        }
      rep.levels.push_back({space.h(), level, best, arg, true, 0.0});
    }
    finish(rep);
    return rep;
  }

  if (time_levels) {
    const double fine = params.fine_resolution ? static_cast<double>(params.fine_resolution)
                                               : (spectral ? 1024.0 : 128.0);
    const GalerkinSpace space = level_space(kind, fine, basis);
    std::optional<FemData> fem;
    if (!spectral && id != LemmaId::smoothing_r) fem = fem_data(space, modes, setup.s);
    for (double k : levels) {
      require(k > 0.0 && k <= params.T, "time-step levels must lie in (0, T]");
      LevelValue lv;
      if (id == LemmaId::smoothing_r) {
        const auto jmax = static_cast<std::size_t>(std::floor(params.T / k * (1.0 + 1e-12)));
        lv.value = 0.0;
        for (std::size_t j = 1; j <= jmax; ++j)
          for (double l : space.discrete_eigenvalues()) {
            const double z = k * l;
            const double v = (params.rho == 0.0 ? 1.0 : std::pow(static_cast<double>(j) * z, params.rho)) *
                             rational_power(z, static_cast<double>(j));
            if (v > lv.value) lv.value = v, lv.argmax_t = static_cast<double>(j) * k;
          }
      } else {
        const auto pts = time_points(setup, params, k, spectral ? 4096 : 64);
        lv = spectral ? spectral_level(setup, pts, space.dim(), modes, k)
                      : fem_level(setup, pts, *fem, k, 0x1a2c);
      }
      rep.levels.push_back({k, k, lv.value, lv.argmax_t, lv.interior, 0.0});
    }
    finish(rep);
    return rep;
  }

  const auto pts = time_points(setup, params, 0.0, 0);
  for (double level : levels) {
    const GalerkinSpace space = level_space(kind, level, basis);
    const LevelValue lv = spectral ? spectral_level(setup, pts, space.dim(), modes, 0.0)
                                   : fem_level(setup, pts, fem_data(space, modes, setup.s), 0.0,
                                               0x1a2c);
    rep.levels.push_back({space.h(), level, lv.value, lv.argmax_t, lv.interior, 0.0});
  }
  finish(rep);
  return rep;
}

RateReport ritz_rate_probe(SpaceKind kind, const std::vector<double>& levels, double s,
                           std::size_t ref_modes) {
  require(levels.size() >= 2, "a rate check needs at least two levels");
  require(s > 0.0 && s <= 2.0, "Ritz rates need 0 < s <= 2");
  const EigenBasis basis =
      EigenBasis::build(ref_modes, EigenBasis::default_quadrature_size(ref_modes));
  RateReport rep;
  rep.lemma = "ritz";
  rep.param_kind = "h";
  rep.space_kind = kind == SpaceKind::spectral ? "spectral" : "fem";
  rep.expected = s;
  rep.tolerance = 0.1;
  const auto modes = static_cast<Eigen::Index>(ref_modes);
  Eigen::VectorXd lam(modes), wgt(modes);
  for (Eigen::Index n = 0; n < modes; ++n) {
    lam(n) = lambda_n(static_cast<std::size_t>(n) + 1);
    wgt(n) = std::pow(lam(n), -0.5 * s);
  }
  for (double level : levels) {
    const GalerkinSpace space = level_space(kind, level, basis);
    const auto dim = static_cast<Eigen::Index>(space.dim());
    Eigen::MatrixXd l(dim, modes);
    for (Eigen::Index i = 0; i < dim; ++i)
      for (Eigen::Index n = 0; n < modes; ++n)
        l(i, n) = space.basis_mode_inner(static_cast<std::size_t>(i) + 1,
                                         static_cast<std::size_t>(n) + 1);
    // ||R_h x - x||^2 = c^T M c - 2 c^T L x + |x|^2 with K c = L Lambda x;
    // the gradient of c^T M c is Lambda L^T K^{-1} M c.
    auto op = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
      const Eigen::VectorXd y = wgt.cwiseProduct(v);
      Eigen::VectorXd c = l * lam.cwiseProduct(y);
      Eigen::VectorXd d = l * y;
      space.solve_stiffness({c.data(), static_cast<std::size_t>(dim)});
      space.solve_stiffness({d.data(), static_cast<std::size_t>(dim)});
      Eigen::VectorXd mc(dim);
      space.mass().apply({c.data(), static_cast<std::size_t>(dim)},
                         {mc.data(), static_cast<std::size_t>(dim)});
      space.solve_stiffness({mc.data(), static_cast<std::size_t>(dim)});
      out = lam.cwiseProduct(l.transpose() * (mc - d)) - l.transpose() * c + y;
      out = wgt.cwiseProduct(out);
    };
    Eigen::VectorXd start = Eigen::VectorXd::Ones(modes);
    const double top = lanczos_max(op, start, 80, 1e-9);
    rep.levels.push_back({space.h(), level, std::sqrt(std::max(top, 0.0)), 0.0, true, 0.0});
  }
  finish(rep);
  return rep;
}

double stability_constant(const GalerkinSpace& space, std::size_t ref_modes) {
  const auto dim = static_cast<Eigen::Index>(space.dim());
  if (space.kind() == SpaceKind::spectral) return 1.0;
  const auto modes = static_cast<Eigen::Index>(ref_modes);
  Eigen::MatrixXd l(dim, modes);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index n = 0; n < modes; ++n)
      l(i, n) = space.basis_mode_inner(static_cast<std::size_t>(i) + 1,
                                       static_cast<std::size_t>(n) + 1) /
                (kPi * static_cast<double>(n + 1));
  // Y = M^{-1} L Lambda^{-1} L^T M^{-1}; C^2 = lambda_max(R Y R^T) with K = R^T R.
  Eigen::MatrixXd y = l * l.transpose();
  for (Eigen::Index c = 0; c < dim; ++c) space.solve_mass({y.col(c).data(), static_cast<std::size_t>(dim)});
  y.transposeInPlace();
  for (Eigen::Index c = 0; c < dim; ++c) space.solve_mass({y.col(c).data(), static_cast<std::size_t>(dim)});
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(dim, dim);
  const auto& kt = space.stiffness();
  for (Eigen::Index i = 0; i < dim; ++i) {
    k(i, i) = kt.diag[i];
    if (i + 1 < dim) k(i, i + 1) = k(i + 1, i) = kt.off[i];
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(k);
  const Eigen::MatrixXd r = llt.matrixU();
  const Eigen::MatrixXd sym = r * y * r.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (sym + sym.transpose()),
                                                   Eigen::EigenvaluesOnly);
  return std::sqrt(es.eigenvalues().maxCoeff());
}

}  // namespace spdelab

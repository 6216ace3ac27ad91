#pragma once

// Discretized 1D Helmholtz operators.
//
// The transverse scalar reduction turns -curl curl into +d^2/dx^2, discretized
// by second-order central differences. Dirichlet grids exclude the wall nodes
// and give a complex-symmetric tridiagonal matrix; Bloch grids carry the
// quasi-momentum in the off-diagonal phases exp(+-ikh) and wrap cyclically.
//
//   dispersive     H_e(z)    diag = z^2 eps(x, z) mu0
//   two_frequency  H(z, xi)  diag = z^2 eps0 mu0 + z mu0 xi [eps(x, xi) - eps0]
//   nondispersive  H_d(z)    diag = z^2 eps(x, w0) mu0, eps from the gap construction

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hg/banded.hpp"
#include "hg/core.hpp"
#include "hg/dispersion.hpp"
#include "hg/parallel.hpp"

namespace hg {

using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

enum class Boundary { dirichlet, bloch };

class Grid1D {
 public:
  static Grid1D dirichlet(double length, std::size_t n) {
    return Grid1D(length, n, Boundary::dirichlet, {0.0, 0.0});
  }
  static Grid1D bloch(double length, std::size_t n, cplx k) {
    return Grid1D(length, n, Boundary::bloch, k);
  }

  double length() const noexcept { return length_; }
  std::size_t size() const noexcept { return n_; }
  Boundary boundary() const noexcept { return boundary_; }
  cplx bloch_k() const noexcept { return k_; }

  double h() const noexcept {
    return boundary_ == Boundary::dirichlet ? length_ / static_cast<double>(n_ + 1)
                                            : length_ / static_cast<double>(n_);
  }
  double x(std::size_t i) const noexcept {
    return boundary_ == Boundary::dirichlet ? h() * static_cast<double>(i + 1)
                                            : h() * static_cast<double>(i);
  }
  std::vector<double> nodes() const {
    std::vector<double> xs(n_);
    for (std::size_t i = 0; i < n_; ++i) xs[i] = x(i);
    return xs;
  }

  Grid1D with_bloch_k(cplx k) const { return Grid1D(length_, n_, Boundary::bloch, k); }

 private:
  Grid1D(double length, std::size_t n, Boundary b, cplx k)
      : length_(length), n_(n), boundary_(b), k_(k) {
    if (!(length_ > 0.0) || !std::isfinite(length_)) throw DomainError("grid length must be > 0");
    if (n_ < 8) throw DomainError("grid needs N >= 8");
  }

  double length_;
  std::size_t n_;
  Boundary boundary_;
  cplx k_;
};

enum class OperatorKind { dispersive, two_frequency, nondispersive, bloch };

struct OperatorSpec {
  OperatorKind kind = OperatorKind::dispersive;
  cplx z;
  cplx xi;              // two_frequency only
  double omega0 = 0.0;  // nondispersive only

  static OperatorSpec dispersive(cplx z) { return {OperatorKind::dispersive, z, z, 0.0}; }
  static OperatorSpec two_frequency(cplx z, cplx xi) {
    return {OperatorKind::two_frequency, z, xi, 0.0};
  }
  static OperatorSpec nondispersive(cplx z, double omega0) {
    return {OperatorKind::nondispersive, z, z, omega0};
  }
};

// Upper bound on ||H^{-1}|| for Im z > 0: 1 / (|z| eps0 mu0 Im z).
inline double inverse_norm_bound(cplx z) {
  return 1.0 / (std::abs(z) * kEps0 * kMu0 * z.imag());
}

// Eigenvalues {Im z, Im z + c|k''|, Im z - c|k''|} of the imaginary part of the
// free first-order Maxwell operator at complex wavevector.
inline std::array<double, 3> bloch_imag_eigs(double k_imag, cplx z) {
  const double s = kLightSpeed * std::abs(k_imag);
  return {z.imag(), z.imag() + s, z.imag() - s};
}

class DiscreteHelmholtz {
 public:
  DiscreteHelmholtz(Grid1D grid, OperatorSpec spec, std::vector<cplx> diag, cplx off_up,
                    cplx off_down)
      : grid_(std::move(grid)), spec_(spec), diag_(std::move(diag)), up_(off_up),
        down_(off_down) {
    const std::size_t n = diag_.size();
    if (grid_.boundary() == Boundary::dirichlet) {
      lu_.emplace(std::vector<cplx>(n - 1, down_), diag_, std::vector<cplx>(n - 1, up_));
    } else {
      dense_lu_.emplace(matrix());
      if (dense_lu_->determinant() == cplx{} || !std::isfinite(std::abs(dense_lu_->rcond())) ||
          dense_lu_->rcond() < 1e-15)
        throw SingularMatrixError("Bloch operator is numerically singular");
    }
  }

  const Grid1D& grid() const noexcept { return grid_; }
  const OperatorSpec& spec() const noexcept { return spec_; }
  OperatorKind kind() const noexcept {
    return grid_.boundary() == Boundary::bloch ? OperatorKind::bloch : spec_.kind;
  }
  std::size_t size() const noexcept { return diag_.size(); }
  const std::vector<cplx>& diagonal() const noexcept { return diag_; }
  cplx upper() const noexcept { return up_; }
  cplx lower() const noexcept { return down_; }
  bool is_cyclic() const noexcept { return grid_.boundary() == Boundary::bloch; }

  CMatrix matrix() const {
    const std::size_t n = size();
    const auto ni = static_cast<Eigen::Index>(n);
    CMatrix a = CMatrix::Zero(ni, ni);
    for (Eigen::Index i = 0; i < ni; ++i) {
      a(i, i) = diag_[static_cast<std::size_t>(i)];
      if (i + 1 < ni) {
        a(i, i + 1) = up_;
        a(i + 1, i) = down_;
      }
    }
    if (is_cyclic()) {
      a(ni - 1, 0) += up_;
      a(0, ni - 1) += down_;
    }
    return a;
  }

  std::vector<cplx> apply(std::span<const cplx> v) const {
    const std::size_t n = size();
    std::vector<cplx> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      cplx s = diag_[i] * v[i];
      if (i + 1 < n) s += up_ * v[i + 1];
      if (i > 0) s += down_ * v[i - 1];
      out[i] = s;
    }
    if (is_cyclic()) {
      out[n - 1] += up_ * v[0];
      out[0] += down_ * v[n - 1];
    }
    return out;
  }

  std::vector<cplx> solve(std::span<const cplx> b) const {
    if (b.size() != size()) throw DomainError("source length does not match the grid");
    if (lu_) return lu_->solve(b);
    const Eigen::Map<const CVector> rhs(b.data(), static_cast<Eigen::Index>(b.size()));
    const CVector x = dense_lu_->solve(rhs);
    return {x.data(), x.data() + x.size()};
  }

  // H^{-dagger} b.
  std::vector<cplx> solve_adjoint(std::span<const cplx> b) const {
    if (lu_) {
      // Dirichlet matrices are complex symmetric: H^dagger = conj(H).
      std::vector<cplx> c(b.size());
      for (std::size_t i = 0; i < b.size(); ++i) c[i] = std::conj(b[i]);
      lu_->solve_in_place(c);
      for (auto& v : c) v = std::conj(v);
      return c;
    }
    const Eigen::Map<const CVector> rhs(b.data(), static_cast<Eigen::Index>(b.size()));
    const CVector x = dense_lu_->adjoint().solve(rhs);
    return {x.data(), x.data() + x.size()};
  }

  CMatrix inverse() const {
    const auto n = static_cast<Eigen::Index>(size());
    CMatrix inv(n, n);
    std::vector<cplx> e(size());
    for (Eigen::Index j = 0; j < n; ++j) {
      std::fill(e.begin(), e.end(), cplx{});
      e[static_cast<std::size_t>(j)] = 1.0;
      const auto col = solve(e);
      for (Eigen::Index i = 0; i < n; ++i) inv(i, j) = col[static_cast<std::size_t>(i)];
    }
    return inv;
  }

 private:
  Grid1D grid_;
  OperatorSpec spec_;
  std::vector<cplx> diag_;
  cplx up_, down_;
  std::optional<TridiagonalLU> lu_;
  std::optional<Eigen::PartialPivLU<CMatrix>> dense_lu_;
};

namespace detail {

inline void check_periodic(const PermittivityModel& model, const Grid1D& grid) {
  for (const auto& l : model.layers())
    if (l.x0 < 0.0 || l.x1 > grid.length())
      throw PeriodicityError("Bloch media must have every layer inside one cell [0, L]");
}

inline bool is_damped(const PermittivityModel& model) {
  if (model.layers().empty() || model.has_lines()) return false;
  return std::all_of(model.layers().begin(), model.layers().end(),
                     [](const Layer& l) { return !l.density.lorentz().empty(); });
}

// eps(x, w0) of the non-dispersive medium built from each layer's gap density.
inline double nondispersive_eps(const PermittivityModel& model, double x, double omega0) {
  const OscillatorDensity* d = model.density_at(x);
  if (d == nullptr) return model.background();
  return model.background() + (build_nondispersive(*d, omega0) - kEps0);
}

}  // namespace detail

inline DiscreteHelmholtz assemble(const Grid1D& grid, const PermittivityModel& model,
                                  const OperatorSpec& spec) {
  const cplx z = spec.z;
  if (grid.boundary() == Boundary::bloch) {
    detail::check_periodic(model, grid);
    if (!(z.imag() - kLightSpeed * std::abs(grid.bloch_k().imag()) > 0.0))
      throw DomainError("Bloch operator requires Im z > c |Im k|");
  }
  switch (spec.kind) {
    case OperatorKind::dispersive:
    case OperatorKind::bloch:
      if (!(z.imag() > 0.0) && !(z.imag() == 0.0 && detail::is_damped(model)))
        throw DomainError("dispersive operator requires Im z > 0 (or real z with a damped medium)");
      break;
    case OperatorKind::two_frequency:
      if (!(z.imag() > 0.0) || !(spec.xi.imag() > 0.0))
        throw DomainError("two-frequency operator requires Im z > 0 and Im xi > 0");
      break;
    case OperatorKind::nondispersive:
      if (!(z.imag() > 0.0)) throw DomainError("non-dispersive operator requires Im z > 0");
      break;
  }

  const std::size_t n = grid.size();
  const double h = grid.h();
  std::vector<cplx> diag(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = grid.x(i);
    cplx coeff;
    switch (spec.kind) {
      case OperatorKind::dispersive:
      case OperatorKind::bloch:
        coeff = z * z * eval_permittivity(model, x, z) * kMu0;
        break;
      case OperatorKind::two_frequency:
        coeff = z * z * kEps0 * kMu0 +
                z * kMu0 * spec.xi * (eval_permittivity(model, x, spec.xi) - kEps0);
        break;
      case OperatorKind::nondispersive:
        coeff = z * z * detail::nondispersive_eps(model, x, spec.omega0) * kMu0;
        break;
    }
    diag[i] = coeff - 2.0 / (h * h);
  }
  cplx up = 1.0 / (h * h), down = 1.0 / (h * h);
  if (grid.boundary() == Boundary::bloch) {
    const cplx phase = std::exp(kI * grid.bloch_k() * h);
    up *= phase;
    down /= phase;
  }
  return DiscreteHelmholtz(grid, spec, std::move(diag), up, down);
}

struct SolveResult {
  std::vector<cplx> field;
  double residual = 0.0;  // ||H E - s|| / ||s||
};

inline SolveResult solve(const DiscreteHelmholtz& op, std::span<const cplx> source) {
  SolveResult r{op.solve(source), 0.0};
  double snorm = 0.0, rnorm = 0.0;
  const auto back = op.apply(r.field);
  for (std::size_t i = 0; i < source.size(); ++i) {
    snorm += std::norm(source[i]);
    rnorm += std::norm(back[i] - source[i]);
  }
  r.residual = snorm > 0.0 ? std::sqrt(rnorm / snorm) : 0.0;
  return r;
}

struct GreenSamples {
  Grid1D grid;
  OperatorSpec spec;
  CMatrix values;  // values(i, j) ~ G(x_i, x_j; z)
};

// Column j is the response to the discrete delta e_j / h.
inline GreenSamples green_matrix(const DiscreteHelmholtz& op) {
  return {op.grid(), op.spec(), op.inverse() / op.grid().h()};
}

// h * sum conj(phi_i) (H^{-1} psi)_i
inline cplx coefficient(const DiscreteHelmholtz& op, std::span<const cplx> phi,
                        std::span<const cplx> psi) {
  if (phi.size() != op.size() || psi.size() != op.size())
    throw DomainError("probe length does not match the grid");
  const auto u = op.solve(psi);
  std::vector<cplx> terms(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) terms[i] = std::conj(phi[i]) * u[i];
  return op.grid().h() * pairwise_sum(terms);
}

struct NormOptions {
  std::size_t dense_limit = 512;
  double tol = 1e-10;
  std::size_t max_iter = 10000;
};

inline double largest_singular_value(const CMatrix& a) {
  Eigen::BDCSVD<CMatrix> svd(a);
  return svd.singularValues()(0);
}

// ||H^{-1}||_2: 1/sigma_min(H) from a dense SVD for small grids, power
// iteration on H^{-1} H^{-dagger} otherwise.
inline double inverse_norm(const DiscreteHelmholtz& op, const NormOptions& opt = {}) {
  if (op.size() <= opt.dense_limit) {
    Eigen::BDCSVD<CMatrix> svd(op.matrix());
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    if (!(smin > 0.0)) throw SingularMatrixError("operator is singular");
    return 1.0 / smin;
  }
  std::vector<cplx> v(op.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = cplx(1.0 + 0.37 * std::sin(1.3 * static_cast<double>(i)), 0.11 * static_cast<double>(i % 7));
  double prev = 0.0;
  for (std::size_t it = 0; it < opt.max_iter; ++it) {
    double nv = 0.0;
    for (const auto& c : v) nv += std::norm(c);
    nv = std::sqrt(nv);
    for (auto& c : v) c /= nv;
    const auto u = op.solve(v);
    double nu = 0.0;
    for (const auto& c : u) nu += std::norm(c);
    const double sigma = std::sqrt(nu);
    if (it > 0 && std::abs(sigma - prev) <= opt.tol * sigma) return sigma;
    prev = sigma;
    v = op.solve_adjoint(u);
  }
  throw ConvergenceError("power iteration for ||H^{-1}|| did not converge", prev);
}

// ||z^2 (H_e(z)^{-1} - H_0(z)^{-1})|| along z = omega + i eta for each omega.
inline std::vector<double> resolvent_difference_ray(const PermittivityModel& model,
                                                    const Grid1D& grid, double eta,
                                                    std::span<const double> omegas) {
  if (!(eta > 0.0)) throw DomainError("resolvent difference requires eta > 0");
  const auto vacuum = PermittivityModel::vacuum();
  std::vector<double> out(omegas.size());
  parallel_for(omegas.size(), [&](std::size_t i) {
    if (model.layers().empty() && model.background() == kEps0) return;
    const cplx z{omegas[i], eta};
    const auto he = assemble(grid, model, OperatorSpec::dispersive(z));
    const auto h0 = assemble(grid, vacuum, OperatorSpec::dispersive(z));
    const CMatrix diff = z * z * (he.inverse() - h0.inverse());
    out[i] = largest_singular_value(diff);
  });
  return out;
}

// Asymptotic cap d/dt chi(0+) / (eps0 mu0 Im z)^2.
inline double resolvent_difference_cap(double chi_dot, double eta) {
  return chi_dot / sqr(kEps0 * kMu0 * eta);
}

}  // namespace hg

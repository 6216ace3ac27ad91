#pragma once

// Closed-cavity eigenmodes, the spectral density D(nu + i zeta) of the
// relative resolvent R(z) = H_e(z)^{-1} - H_ref(z)^{-1}, the Kramers-Kronig
// reconstruction of Green's-function coefficients from D, and time-domain
// quantities obtained by contour inversion.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hg/core.hpp"
#include "hg/dispersion.hpp"
#include "hg/helmholtz.hpp"
#include "hg/parallel.hpp"
#include "hg/transforms.hpp"

namespace hg {

inline constexpr double kResonanceFloor = 1e-10;

struct ModeSet {
  Grid1D grid;
  double epsilon = kEps0;
  std::vector<double> omega;  // increasing
  Eigen::MatrixXd phi;        // column n holds mode n on the grid

  std::size_t size() const noexcept { return omega.size(); }

  // c_n(psi) = h sum phi_n psi
  cplx overlap(std::size_t n, std::span<const cplx> psi) const {
    cplx s{};
    for (std::size_t i = 0; i < psi.size(); ++i)
      s += phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n)) * psi[i];
    return grid.h() * s;
  }
};

// Eigenpairs of L = -(eps mu0)^{-1} d^2/dx^2 on a Dirichlet grid, normalized
// so that h sum eps mu0 phi_n phi_m = delta_nm. Mode signs are fixed by a
// positive first component.
inline ModeSet cavity_modes(const Grid1D& grid, double epsilon) {
  if (grid.boundary() != Boundary::dirichlet) throw DomainError("cavity modes need a Dirichlet grid");
  if (!(epsilon >= kEps0) || !std::isfinite(epsilon))
    throw DomainError("cavity permittivity must be real and >= eps0");
  const auto n = static_cast<Eigen::Index>(grid.size());
  const double h = grid.h();
  Eigen::VectorXd diag = Eigen::VectorXd::Constant(n, 2.0 / (h * h));
  Eigen::VectorXd sub = Eigen::VectorXd::Constant(n - 1, -1.0 / (h * h));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw ConvergenceError("tridiagonal eigensolver failed", 0.0);

  ModeSet m{grid, epsilon, std::vector<double>(static_cast<std::size_t>(n)),
            es.eigenvectors() / std::sqrt(h * epsilon * kMu0)};
  for (Eigen::Index k = 0; k < n; ++k) {
    m.omega[static_cast<std::size_t>(k)] = std::sqrt(es.eigenvalues()(k) / (epsilon * kMu0));
    if (m.phi(0, k) < 0.0) m.phi.col(k) *= -1.0;
  }
  return m;
}

// (2/h) sin(n pi h / 2L) / sqrt(eps mu0): exact discrete cavity frequencies.
inline double discrete_cavity_frequency(const Grid1D& grid, double epsilon, std::size_t n) {
  const double h = grid.h();
  return 2.0 / h * std::sin(static_cast<double>(n) * kPi * h / (2.0 * grid.length())) /
         std::sqrt(epsilon * kMu0);
}

struct ModeExpansion {
  GreenSamples green;
  double tail_bound = 0.0;  // entry-wise cap on the omitted modes
};

// G = sum_{n < M} phi_n phi_n^T / (z^2 - omega_n^2); equals the discrete
// inverse kernel of z^2 eps mu0 + d^2/dx^2 at M = N.
inline ModeExpansion mode_expansion_green(const ModeSet& modes, cplx z, std::size_t truncation) {
  if (z.imag() < 0.0) throw DomainError("mode expansion requires Im z >= 0");
  if (truncation == 0 || truncation > modes.size())
    throw DomainError("truncation M must satisfy 1 <= M <= N");
  const cplx z2 = z * z;
  std::vector<cplx> inv(modes.size());
  for (std::size_t n = 0; n < modes.size(); ++n) {
    const cplx d = z2 - modes.omega[n] * modes.omega[n];
    if (std::abs(d) < kResonanceFloor) throw PoleProximityError("z is on a cavity resonance");
    inv[n] = 1.0 / d;
  }
  const auto nn = static_cast<Eigen::Index>(modes.size());
  const auto mm = static_cast<Eigen::Index>(truncation);
  const Eigen::MatrixXd& p = modes.phi;
  Eigen::VectorXcd w(mm);
  for (Eigen::Index k = 0; k < mm; ++k) w(k) = inv[static_cast<std::size_t>(k)];
  CMatrix g = p.leftCols(mm).cast<cplx>() * w.asDiagonal() * p.leftCols(mm).transpose().cast<cplx>();

  double tail = 0.0;
  for (Eigen::Index k = mm; k < nn; ++k)
    tail += p.col(k).cwiseAbs2().maxCoeff() * std::abs(inv[static_cast<std::size_t>(k)]);
  return {GreenSamples{modes.grid, OperatorSpec::dispersive(z), std::move(g)}, tail};
}

// Coefficient <phi, G psi> from the full mode sum.
inline cplx mode_expansion_coefficient(const ModeSet& modes, std::span<const cplx> phi,
                                       std::span<const cplx> psi, cplx z) {
  std::vector<cplx> terms(modes.size());
  for (std::size_t n = 0; n < modes.size(); ++n) {
    const cplx d = z * z - modes.omega[n] * modes.omega[n];
    if (std::abs(d) < kResonanceFloor) throw PoleProximityError("z is on a cavity resonance");
    terms[n] = std::conj(modes.overlap(n, phi)) * modes.overlap(n, psi) / d;
  }
  return pairwise_sum(terms);
}

// Probe pairs (phi, psi) on a grid.
struct Probe {
  enum class Kind { mode_index, point_pair, gaussian };
  Kind kind = Kind::mode_index;
  std::size_t mode = 1;      // sqrt(2/L) sin(n pi x / L), n >= 1
  std::size_t i = 0, j = 0;  // discrete deltas e_i/h, e_j/h
  double center = 0.0, width = 0.0;

  static Probe mode_index(std::size_t n) { return {Kind::mode_index, n, 0, 0, 0.0, 0.0}; }
  static Probe point_pair(std::size_t i, std::size_t j) {
    return {Kind::point_pair, 0, i, j, 0.0, 0.0};
  }
  static Probe gaussian(double center, double width) {
    return {Kind::gaussian, 0, 0, 0, center, width};
  }
};

struct ProbeVectors {
  std::vector<cplx> phi, psi;
};

inline ProbeVectors probe_vectors(const Grid1D& grid, const Probe& p) {
  const std::size_t n = grid.size();
  ProbeVectors v{std::vector<cplx>(n), std::vector<cplx>(n)};
  switch (p.kind) {
    case Probe::Kind::mode_index: {
      if (p.mode == 0) throw DomainError("mode probe index starts at 1");
      const double a = std::sqrt(2.0 / grid.length());
      for (std::size_t i = 0; i < n; ++i)
        v.phi[i] = a * std::sin(static_cast<double>(p.mode) * kPi * grid.x(i) / grid.length());
      v.psi = v.phi;
      break;
    }
    case Probe::Kind::point_pair:
      if (p.i >= n || p.j >= n) throw DomainError("point probe outside the grid");
      v.phi[p.i] = 1.0 / grid.h();
      v.psi[p.j] = 1.0 / grid.h();
      break;
    case Probe::Kind::gaussian:
      if (!(p.width > 0.0)) throw DomainError("gaussian probe width must be > 0");
      for (std::size_t i = 0; i < n; ++i)
        v.phi[i] = std::exp(-sqr((grid.x(i) - p.center) / p.width));
      v.psi = v.phi;
      break;
  }
  return v;
}

// Medium inside the cavity; omega0 selects the non-dispersive construction.
struct CavityMedium {
  PermittivityModel model;
  std::optional<double> omega0;

  OperatorSpec spec(cplx z) const {
    return omega0 ? OperatorSpec::nondispersive(z, *omega0) : OperatorSpec::dispersive(z);
  }
  bool is_vacuum() const {
    return model.background() == kEps0 &&
           std::all_of(model.layers().begin(), model.layers().end(),
                       [](const Layer& l) { return l.density.empty(); });
  }
};

enum class Reference { vacuum, none };

// <phi, R(z) psi> with R = H_e(z)^{-1} - H_ref(z)^{-1}.
inline cplx relative_coefficient(const CavityMedium& medium, const Grid1D& grid,
                                 const ProbeVectors& p, cplx z, Reference ref) {
  if (ref == Reference::vacuum && medium.is_vacuum()) return {0.0, 0.0};
  cplx c = coefficient(assemble(grid, medium.model, medium.spec(z)), p.phi, p.psi);
  if (ref == Reference::vacuum)
    c -= coefficient(assemble(grid, PermittivityModel::vacuum(), OperatorSpec::dispersive(z)),
                     p.phi, p.psi);
  return c;
}

struct SpectralDensity {
  Grid1D grid;
  ProbeVectors probes;
  Reference reference = Reference::vacuum;
  double zeta = 0.0;
  std::vector<double> nu;
  std::vector<cplx> samples;  // D(nu + i zeta)
};

// D(xi) = [xi <phi,R(xi)psi> - conj(xi) <phi,R(-conj xi)psi>] / (2 i pi) on xi = nu + i zeta.
inline SpectralDensity d_density(const CavityMedium& medium, const Grid1D& grid,
                                 const ProbeVectors& probes, std::span<const double> nu,
                                 double zeta, Reference ref = Reference::vacuum) {
  if (!(zeta > 0.0)) throw DomainError("broadening zeta must be > 0");
  detail::check_symmetric(nu);
  SpectralDensity d{grid, probes, ref, zeta, {nu.begin(), nu.end()},
                    std::vector<cplx>(nu.size())};
  parallel_for(nu.size(), [&](std::size_t k) {
    const cplx xi{nu[k], zeta};
    const cplx a = relative_coefficient(medium, grid, probes, xi, ref);
    const cplx b = relative_coefficient(medium, grid, probes, -std::conj(xi), ref);
    d.samples[k] = (xi * a - std::conj(xi) * b) / (2.0 * kI * kPi);
  });
  return d;
}

// Integrated -D over [lo, hi]: the spectral weight of the peaks inside.
inline Estimated<double> density_weight(const SpectralDensity& d, double lo, double hi) {
  std::vector<double> x;
  std::vector<cplx> g;
  for (std::size_t k = 0; k < d.nu.size(); ++k)
    if (d.nu[k] >= lo && d.nu[k] <= hi) {
      x.push_back(d.nu[k]);
      g.push_back(-d.samples[k]);
    }
  if (x.size() < 3) throw DomainError("weight window holds fewer than 3 grid nodes");
  auto [fine, coarse] = detail::trapezoid_pair<cplx>(x, g);
  return {fine.real(), x.size() % 2 == 1 ? std::abs(fine - coarse) / 3.0 : 0.0, true};
}

enum class KernelForm {
  broadened,  // z R(z) = -\int D(nu + i zeta) / (z - nu - i zeta) dnu, exact for Im z > zeta
  limit       // R(z) = -\int D / (z^2 - nu^2) dnu, the zeta -> 0 form
};

inline cplx reference_coefficient(const SpectralDensity& d, cplx z) {
  if (d.reference == Reference::none) return {0.0, 0.0};
  return coefficient(assemble(d.grid, PermittivityModel::vacuum(), OperatorSpec::dispersive(z)),
                     d.probes.phi, d.probes.psi);
}

// <phi, H_e(z)^{-1} psi> rebuilt from the sampled density.
inline Estimated<cplx> kk_reconstruct_green(const SpectralDensity& d, cplx z,
                                            KernelForm form = KernelForm::broadened) {
  const cplx ref = reference_coefficient(d, z);
  if (form == KernelForm::limit) {
    const auto k = kk_kernel_integral<cplx>(d.nu, d.samples, z);
    return {ref + k.value, k.error, !k.grid_too_coarse};
  }
  if (!(z.imag() > d.zeta)) throw DomainError("broadened reconstruction requires Im z > zeta");
  std::vector<cplx> g(d.nu.size());
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = -d.samples[k] / (z - d.nu[k] - kI * d.zeta);
  auto [fine, coarse] = detail::trapezoid_pair<cplx>(d.nu, g);
  const double err = d.nu.size() % 2 == 1 ? std::abs(fine - coarse) / 3.0 : 0.0;
  return {ref + fine / z, err / std::abs(z), true};
}

// X(t) = \int_{Gamma_eta} exp(-izt) <phi, R(z) psi> dz.
inline std::vector<Estimated<cplx>> x_operator_coefficient(const CavityMedium& medium,
                                                           const Grid1D& grid,
                                                           const ProbeVectors& probes,
                                                           std::span<const double> times,
                                                           const ContourSpec& contour,
                                                           Reference ref = Reference::vacuum) {
  auto out = laplace_invert(
      [&](cplx z) { return relative_coefficient(medium, grid, probes, z, ref); }, contour, times);
  for (auto& v : out) {
    v.value *= 2.0 * kPi;
    v.error *= 2.0 * kPi;
  }
  return out;
}

// Current time profiles switched on at t = 0 with closed-form transforms
// \int_0^inf exp(izt) J(t) dt.
struct SourceProfile {
  enum class Kind {
    exp_switch,   // exp(-i omega_s t) step(t)
    smooth_pulse  // (t/tau)^2 exp(-t/tau) step(t)
  };
  Kind kind = Kind::smooth_pulse;
  double omega_s = 0.0;
  double tau = 1.0;

  cplx transform(cplx z) const {
    if (kind == Kind::exp_switch) return kI / (z - omega_s);
    const cplx d = 1.0 - kI * z * tau;
    return 2.0 * tau / (d * d * d);
  }
};

struct SpatialSource {
  double center = 0.0;
  double width = 1.0;
  double amplitude = 1.0;

  std::vector<cplx> on(const Grid1D& grid) const {
    if (!(width > 0.0)) throw DomainError("source width must be > 0");
    std::vector<cplx> s(grid.size());
    for (std::size_t i = 0; i < s.size(); ++i)
      s[i] = amplitude * std::exp(-sqr((grid.x(i) - center) / width));
    return s;
  }
};

// E(x_obs, t) from H(z) E = -i z mu0 J(z), inverted along Gamma_eta. The real
// part is returned: for exp_switch it is the response to cos(omega_s t) step(t).
inline std::vector<Estimated<double>> time_domain_field(const CavityMedium& medium,
                                                        const Grid1D& grid,
                                                        const SourceProfile& profile,
                                                        const SpatialSource& source,
                                                        std::size_t observe,
                                                        std::span<const double> times,
                                                        const ContourSpec& contour) {
  if (observe >= grid.size()) throw DomainError("observation index outside the grid");
  const auto s = source.on(grid);
  std::vector<Estimated<double>> out(times.size());
  if (source.amplitude == 0.0) return out;
  auto values = laplace_invert(
      [&](cplx z) {
        const auto op = assemble(grid, medium.model, medium.spec(z));
        std::vector<cplx> rhs(s.size());
        const cplx scale = -kI * z * kMu0 * profile.transform(z);
        for (std::size_t i = 0; i < s.size(); ++i) rhs[i] = scale * s[i];
        return op.solve(rhs)[observe];
      },
      contour, times);
  for (std::size_t i = 0; i < times.size(); ++i)
    out[i] = {values[i].value.real(), values[i].error, values[i].converged};
  return out;
}

}  // namespace hg

#pragma once

// Fourier-space inverse of the free 3D Helmholtz operator and coefficient
// quadratures against Gaussian test fields.
//
//   H0(k, z)^{-1} = kk/(k^2 Z) + (1 - kk/k^2)/(Z - k^2),   Z = z^2 eps0 mu0
//
// written as I/Z + (k^2 I - kk)/(Z (Z - k^2)) so that k = 0 needs no branch.

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hg/core.hpp"
#include "hg/parallel.hpp"
#include "hg/transforms.hpp"

namespace hg {

using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using CMat3 = Eigen::Matrix3cd;

// phi^(k) = p exp(-|k - kc|^2 / (2 s^2)) exp(-i k.x0)
struct TestField3D {
  Vec3 center_k = Vec3::Zero();
  double width = 1.0;
  CVec3 polarization = CVec3(1.0, 0.0, 0.0);
  Vec3 position = Vec3::Zero();

  void validate() const {
    if (!(width > 0.0) || !std::isfinite(width)) throw DomainError("test field width must be > 0");
  }

  CVec3 transform(const Vec3& k) const {
    const double g = std::exp(-(k - center_k).squaredNorm() / (2.0 * width * width));
    return polarization * (g * std::polar(1.0, -k.dot(position)));
  }
};

inline constexpr double kFourierMeasure = 1.0 / (8.0 * kPi * kPi * kPi);  // (2 pi)^-3

inline CMat3 free_symbol(const Vec3& k, cplx z) {
  if (!(z.imag() > 0.0)) throw DomainError("free symbol requires Im z > 0");
  const cplx zz = z * z * kEps0 * kMu0;
  const double k2 = k.squaredNorm();
  const CMat3 eye = CMat3::Identity();
  const CMat3 kk = (k * k.transpose()).cast<cplx>();
  return eye / zz + (k2 * eye - kk) / (zz * (zz - k2));
}

namespace detail {

// Parameters of conj(phi^) . psi^ = (conj p . q) exp(-alpha |k|^2 + beta.k + gamma).
struct GaussianProduct {
  double alpha;
  CVec3 beta;
  cplx gamma;
  cplx pol;

  Vec3 center() const { return (beta.real() / (2.0 * alpha)); }
  double sigma() const { return 1.0 / std::sqrt(2.0 * alpha); }
};

inline GaussianProduct gaussian_product(const TestField3D& phi, const TestField3D& psi) {
  phi.validate();
  psi.validate();
  const double a1 = 1.0 / (2.0 * phi.width * phi.width);
  const double a2 = 1.0 / (2.0 * psi.width * psi.width);
  GaussianProduct g;
  g.alpha = a1 + a2;
  g.beta = (2.0 * a1 * phi.center_k + 2.0 * a2 * psi.center_k).cast<cplx>() +
           kI * (phi.position - psi.position).cast<cplx>();
  g.gamma = -a1 * phi.center_k.squaredNorm() - a2 * psi.center_k.squaredNorm();
  g.pol = phi.polarization.dot(psi.polarization);  // dot() conjugates the first argument
  return g;
}

}  // namespace detail

// <phi, psi> = (2 pi)^-3 \int conj(phi^) . psi^ dk in closed form.
inline cplx inner_product(const TestField3D& phi, const TestField3D& psi) {
  const auto g = detail::gaussian_product(phi, psi);
  const cplx bb = g.beta.transpose() * g.beta;  // bilinear, no conjugation
  return kFourierMeasure * g.pol * std::pow(kPi / g.alpha, 1.5) *
         std::exp(bb / (4.0 * g.alpha) + g.gamma);
}

struct FreeQuadrature {
  std::size_t panels = 6;        // 16-point Gauss-Legendre panels per axis
  double box_sigmas = 12.0;      // half-width of the box in product-Gaussian widths
};

struct FreeCoefficient {
  cplx value;
  double error = 0.0;            // |fine - coarse| between two panel counts
  double tail_estimate = 0.0;    // Gaussian mass outside the box, bounded
  bool tail_dominant = false;    // tail above 1e-9 of |value|
};

namespace detail {

// (2 pi)^-3 \int f(k) dk over the product-Gaussian box with the given panels.
template <class F>
cplx box_integral(F&& f, const GaussianProduct& g, const FreeQuadrature& q, std::size_t panels) {
  const Vec3 c = g.center();
  const double half = q.box_sigmas * g.sigma();
  std::array<std::vector<double>, 3> x, w;
  for (int a = 0; a < 3; ++a)
    gauss_panels(c(a) - half, c(a) + half, panels * 16, x[a], w[a]);
  const std::size_t n = x[0].size();
  std::vector<cplx> planes(n);
  parallel_for(n, [&](std::size_t i) {
    std::vector<cplx> row(n * n);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t l = 0; l < n; ++l)
        row[j * n + l] = w[1][j] * w[2][l] * f(Vec3(x[0][i], x[1][j], x[2][l]));
    planes[i] = w[0][i] * pairwise_sum(row);
  });
  return kFourierMeasure * pairwise_sum(planes);
}

// Distance from Z to the spectrum [0, inf) of k^2.
inline double spectral_distance(cplx zz) {
  return zz.real() <= 0.0 ? std::abs(zz) : std::abs(zz.imag());
}

// kernel_sup(k_max) bounds |f| / |conj(phi^).psi^| for |k| <= k_max.
template <class F, class K>
FreeCoefficient free_integral(F&& f, K&& kernel_sup, const TestField3D& phi,
                              const TestField3D& psi, const FreeQuadrature& q) {
  if (q.panels < 2) throw DomainError("free quadrature needs at least 2 panels per axis");
  const auto g = gaussian_product(phi, psi);
  FreeCoefficient out;
  out.value = box_integral(f, g, q, q.panels);
  const cplx coarse = box_integral(f, g, q, q.panels - 1);
  out.error = std::abs(out.value - coarse);
  // Gaussian mass outside the box (at most 3 erfc per axis pair of faces)
  // times a kernel bound at the box corners. The kernels are polynomially
  // bounded, so the corner value stands in for the far tail.
  const double mass = kFourierMeasure * std::abs(g.pol) * std::pow(kPi / g.alpha, 1.5) *
                      std::exp(g.beta.real().squaredNorm() / (4.0 * g.alpha) + g.gamma.real());
  const double k_max = g.center().norm() + std::sqrt(3.0) * q.box_sigmas * g.sigma();
  out.tail_estimate = 3.0 * std::erfc(q.box_sigmas / std::sqrt(2.0)) * mass * kernel_sup(k_max);
  out.tail_dominant = out.tail_estimate > 1e-9 * std::abs(out.value);
  return out;
}

}  // namespace detail

// <phi, H0(z)^{-1} psi> by tensor Gauss-Legendre quadrature.
inline FreeCoefficient free_coefficient(const TestField3D& phi, const TestField3D& psi, cplx z,
                                        const FreeQuadrature& q = {}) {
  if (!(z.imag() > 0.0)) throw DomainError("free coefficient requires Im z > 0");
  const cplx zz = z * z * kEps0 * kMu0;
  auto f = [&](const Vec3& k) {
    const CVec3 a = phi.transform(k), b = psi.transform(k);
    const double k2 = k.squaredNorm();
    const cplx ab = a.dot(b);
    const cplx ak = a.dot(k.cast<cplx>());  // conj(a) . k
    const cplx kb = k.cast<cplx>().dot(b);
    return ab / zz + (k2 * ab - ak * kb) / (zz * (zz - k2));
  };
  const double dist = detail::spectral_distance(zz);
  auto sup = [&](double km) { return (1.0 + 2.0 * km * km / dist) / std::abs(zz); };
  return detail::free_integral(f, sup, phi, psi, q);
}

inline constexpr double kMinSinSquared = 1e-2;

// |z^2 eps0 mu0 <phi, H0(z)^{-1} psi> - <phi, psi>| at z = r exp(i theta) for
// each r, computed as the defect integral (2 pi)^-3 \int (k^2 a - b)/(Z - k^2)
// with a = conj(phi^).psi^ and b = (conj(phi^).k)(k.psi^).
inline std::vector<Estimated<double>> asymptotic_defect(const TestField3D& phi,
                                                        const TestField3D& psi, double theta,
                                                        std::span<const double> radii,
                                                        const FreeQuadrature& q = {}) {
  if (!(theta > 0.0 && theta < kPi) || sqr(std::sin(theta)) < kMinSinSquared)
    throw DomainError("ray angle must keep sin^2(theta) >= 1e-2");
  std::vector<Estimated<double>> out;
  out.reserve(radii.size());
  for (double r : radii) {
    if (!(r > 0.0)) throw DomainError("ladder radii must be > 0");
    const cplx z = std::polar(r, theta);
    const cplx zz = z * z * kEps0 * kMu0;
    auto f = [&](const Vec3& k) {
      const CVec3 a = phi.transform(k), b = psi.transform(k);
      const double k2 = k.squaredNorm();
      const cplx ab = a.dot(b);
      const cplx ak = a.dot(k.cast<cplx>());
      const cplx kb = k.cast<cplx>().dot(b);
      return (k2 * ab - ak * kb) / (zz - k2);
    };
    const double dist = detail::spectral_distance(zz);
    auto sup = [&](double km) { return 2.0 * km * km / dist; };
    const auto c = detail::free_integral(f, sup, phi, psi, q);
    out.push_back({std::abs(c.value), c.error + c.tail_estimate, !c.tail_dominant});
  }
  return out;
}

}  // namespace hg

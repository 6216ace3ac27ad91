#pragma once

// Contour machinery shared by the other modules: inversion along the
// horizontal line Gamma_eta = {omega + i eta}, rectangle Cauchy loops used as
// analyticity certificates, the broadened delta, and the Kramers-Kronig
// kernel integral over a real frequency grid.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "hg/core.hpp"
#include "hg/parallel.hpp"

namespace hg {

enum class ContourRule { trapezoid, gauss_panel };

struct ContourSpec {
  double eta = 1.0;
  double half_width = 1000.0;
  std::size_t n_points = 1 << 15;
  ContourRule rule = ContourRule::trapezoid;

  void validate() const {
    if (!(eta > 0.0)) throw DomainError("contour height eta must be > 0");
    if (!(half_width > 0.0)) throw DomainError("contour window must be > 0");
    if (n_points < 16) throw DomainError("contour needs at least 16 points");
  }
};

struct LaplaceOptions {
  // Subtract a fitted -A/(z + i eta)^2 tail and add its inverse back exactly.
  bool subtract_tail = true;
  // Reject samplers whose window-edge magnitude exceeds this fraction of the
  // peak magnitude.
  double max_edge_ratio = 1e-2;
};

namespace detail {

using GL16 = boost::math::quadrature::gauss<double, 16>;

// Nodes and weights of a 16-point Gauss-Legendre rule on [-1, 1].
inline const std::vector<std::pair<double, double>>& gl16_rule() {
  static const std::vector<std::pair<double, double>> rule = [] {
    std::vector<std::pair<double, double>> r;
    const auto& x = GL16::abscissa();
    const auto& w = GL16::weights();
    for (std::size_t i = x.size(); i-- > 0;) {
      if (x[i] != 0.0) r.emplace_back(-x[i], w[i]);
    }
    for (std::size_t i = 0; i < x.size(); ++i) r.emplace_back(x[i], w[i]);
    return r;
  }();
  return rule;
}

// Composite 16-point Gauss-Legendre nodes on [a, b] with at least n nodes.
inline void gauss_panels(double a, double b, std::size_t n, std::vector<double>& nodes,
                         std::vector<double>& weights) {
  const auto& rule = gl16_rule();
  const std::size_t panels = std::max<std::size_t>(1, (n + rule.size() - 1) / rule.size());
  const double width = (b - a) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + width * static_cast<double>(p);
    for (const auto& [x, w] : rule) {
      nodes.push_back(lo + 0.5 * width * (x + 1.0));
      weights.push_back(0.5 * width * w);
    }
  }
}

inline void contour_nodes(const ContourSpec& c, std::vector<double>& nodes,
                          std::vector<double>& weights) {
  nodes.clear();
  weights.clear();
  if (c.rule == ContourRule::trapezoid) {
    const std::size_t n = c.n_points;
    const double step = 2.0 * c.half_width / static_cast<double>(n - 1);
    nodes.resize(n);
    weights.assign(n, step);
    for (std::size_t k = 0; k < n; ++k)
      nodes[k] = -c.half_width + step * static_cast<double>(k);
    nodes[n - 1] = c.half_width;
    weights.front() = weights.back() = 0.5 * step;
  } else {
    gauss_panels(-c.half_width, c.half_width, c.n_points, nodes, weights);
  }
}

}  // namespace detail

// (1/2pi) \int_{Gamma_eta} exp(-izt) f(z) dz for each t, evaluated as
// exp(eta t)/(2pi) times a windowed quadrature over omega in [-W, W].
// Each value carries a truncation estimate derived from the sampler magnitude
// at the window edges plus an aliasing estimate from the node spacing.
template <class Sampler>
std::vector<Estimated<cplx>> laplace_invert(Sampler&& sampler, const ContourSpec& contour,
                                            std::span<const double> times,
                                            const LaplaceOptions& opt = {}) {
  contour.validate();
  std::vector<double> omega, weight;
  detail::contour_nodes(contour, omega, weight);
  const std::size_t n = omega.size();
  const double eta = contour.eta;

  std::vector<cplx> f(n);
  parallel_for(n, [&](std::size_t k) { f[k] = sampler(cplx{omega[k], eta}); });

  double peak = 0.0;
  for (const auto& v : f) peak = std::max(peak, std::abs(v));
  std::vector<Estimated<cplx>> out(times.size());
  if (peak == 0.0) return out;

  const cplx z_lo{omega.front(), eta}, z_hi{omega.back(), eta};
  const double edge = std::max(std::abs(f.front()), std::abs(f.back()));
  if (edge > opt.max_edge_ratio * peak)
    throw NonDecayingError("sampler does not decay inside the contour window");

  // Tail model -A/(z + i eta)^2, whose inverse is A t exp(-eta t) for t > 0.
  cplx amp{0.0, 0.0};
  if (opt.subtract_tail) amp = -0.5 * (z_lo * z_lo * f.front() + z_hi * z_hi * f.back());
  auto tail = [&](cplx z) { return -amp / ((z + kI * eta) * (z + kI * eta)); };
  std::vector<cplx> r(n);
  for (std::size_t k = 0; k < n; ++k) r[k] = f[k] - tail(cplx{omega[k], eta});

  const double w = contour.half_width;
  const double edge_tail =
      opt.subtract_tail
          ? 0.5 * w * (std::abs(r.front()) + std::abs(r.back()))
          : w * (std::abs(f.front()) + std::abs(f.back()));

  parallel_for(times.size(), [&](std::size_t i) {
    const double t = times[i];
    std::vector<cplx> terms(n);
    for (std::size_t k = 0; k < n; ++k)
      terms[k] = weight[k] * std::polar(1.0, -omega[k] * t) * r[k];
    const double scale = std::exp(eta * t) / (2.0 * kPi);
    cplx value = scale * pairwise_sum(terms);
    if (t > 0.0) value += amp * t * std::exp(-eta * t);
    out[i] = {value, scale * edge_tail, true};
  });

  // Periodic images: the rule returns sum_k g(t + kT) exp(-eta k T) with
  // T = 2 pi / step, so each value also carries peak * e^{-eta T} / (1 - e^{-eta T}).
  const double step = (omega.back() - omega.front()) / static_cast<double>(n - 1);
  const double decay = std::exp(-eta * 2.0 * kPi / step);
  double out_peak = 0.0;
  for (const auto& v : out) out_peak = std::max(out_peak, std::abs(v.value));
  for (auto& v : out) v.error += out_peak * decay / (1.0 - decay);
  return out;
}

struct RectangleLoop {
  cplx lo;
  cplx hi;
  std::size_t n_per_edge = 64;
  bool require_upper_half = true;

  void validate() const {
    if (!(lo.real() < hi.real()) || !(lo.imag() < hi.imag()))
      throw DomainError("rectangle loop needs lo < hi componentwise");
    if (require_upper_half && !(lo.imag() > 0.0))
      throw DomainError("rectangle loop must lie in the open upper half-plane");
  }
  double perimeter() const {
    return 2.0 * ((hi.real() - lo.real()) + (hi.imag() - lo.imag()));
  }
};

// |\oint f dz| / (perimeter * max|f| on the loop): a scale-free analyticity
// defect. Edges use composite Gauss-Legendre panels.
template <class Sampler>
double cauchy_loop(Sampler&& f, const RectangleLoop& loop) {
  loop.validate();
  const std::array<cplx, 5> corners{loop.lo, cplx{loop.hi.real(), loop.lo.imag()}, loop.hi,
                                    cplx{loop.lo.real(), loop.hi.imag()}, loop.lo};
  std::vector<cplx> points, dz;
  for (std::size_t e = 0; e < 4; ++e) {
    std::vector<double> s, w;
    detail::gauss_panels(0.0, 1.0, loop.n_per_edge, s, w);
    const cplx a = corners[e], b = corners[e + 1];
    for (std::size_t k = 0; k < s.size(); ++k) {
      points.push_back(a + (b - a) * s[k]);
      dz.push_back((b - a) * w[k]);
    }
  }
  std::vector<cplx> terms(points.size());
  std::vector<double> mags(points.size());
  parallel_for(points.size(), [&](std::size_t k) {
    const cplx v = f(points[k]);
    terms[k] = v * dz[k];
    mags[k] = std::abs(v);
  });
  const double peak = *std::max_element(mags.begin(), mags.end());
  if (peak == 0.0) return 0.0;
  return std::abs(pairwise_sum(terms)) / (loop.perimeter() * peak);
}

// (1/2pi) [zeta/((nu - w)^2 + zeta^2) + zeta/((nu + w)^2 + zeta^2)]
inline double broadened_delta(double nu, double omega_n, double zeta) {
  if (!(zeta > 0.0)) throw DomainError("broadening zeta must be > 0");
  return (zeta / (sqr(nu - omega_n) + zeta * zeta) +
          zeta / (sqr(nu + omega_n) + zeta * zeta)) /
         (2.0 * kPi);
}

// Symmetric real-frequency grid: `count` equispaced nodes on [-max, max].
struct FrequencyGrid {
  double max = 10.0;
  std::size_t count = 2001;

  std::vector<double> nodes() const {
    if (!(max > 0.0) || count < 3) throw DomainError("frequency grid needs max > 0, count >= 3");
    std::vector<double> nu(count);
    const double step = 2.0 * max / static_cast<double>(count - 1);
    for (std::size_t k = 0; k < count; ++k) nu[k] = -max + step * static_cast<double>(k);
    nu.back() = max;
    return nu;
  }
};

namespace detail {

inline void check_symmetric(std::span<const double> nu) {
  const std::size_t n = nu.size();
  if (n < 3) throw DomainError("frequency grid needs at least 3 nodes");
  const double scale = std::max(std::abs(nu.front()), std::abs(nu.back()));
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0 && !(nu[k] > nu[k - 1])) throw DomainError("frequency grid must increase");
    if (std::abs(nu[k] + nu[n - 1 - k]) > 1e-12 * scale)
      throw DomainError("frequency grid must be symmetric about 0");
  }
}

// Trapezoid sum of g over the grid, plus the same sum over every other node.
template <class T>
std::pair<T, T> trapezoid_pair(std::span<const double> nu, std::span<const T> g) {
  const std::size_t n = nu.size();
  std::vector<T> fine(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) fine[k] = 0.5 * (nu[k + 1] - nu[k]) * (g[k] + g[k + 1]);
  T coarse{};
  if (n % 2 == 1) {
    std::vector<T> c((n - 1) / 2);
    for (std::size_t k = 0; k + 2 < n; k += 2)
      c[k / 2] = 0.5 * (nu[k + 2] - nu[k]) * (g[k] + g[k + 2]);
    coarse = pairwise_sum(c);
  }
  return {pairwise_sum(fine), coarse};
}

}  // namespace detail

struct KernelIntegral {
  cplx value;
  double error = 0.0;
  bool grid_too_coarse = false;
};

// -\int samples(nu) / (z^2 - nu^2) dnu on a symmetric grid, after
// even-symmetrizing the samples.
template <class T>
KernelIntegral kk_kernel_integral(std::span<const double> nu, std::span<const T> samples,
                                  cplx z) {
  if (!(z.imag() > 0.0)) throw DomainError("kernel integral requires Im z > 0");
  detail::check_symmetric(nu);
  if (samples.size() != nu.size()) throw DomainError("samples and grid sizes differ");
  const std::size_t n = nu.size();
  std::vector<cplx> g(n);
  const cplx z2 = z * z;
  for (std::size_t k = 0; k < n; ++k) {
    const cplx even = 0.5 * (cplx(samples[k]) + cplx(samples[n - 1 - k]));
    g[k] = -even / (z2 - nu[k] * nu[k]);
  }
  auto [fine, coarse] = detail::trapezoid_pair<cplx>(nu, g);
  KernelIntegral out{fine, n % 2 == 1 ? std::abs(fine - coarse) / 3.0 : 0.0, false};
  // Grid spacing near the kernel peak |nu| = |Re z| against the peak width.
  const auto it = std::lower_bound(nu.begin(), nu.end(), std::abs(z.real()));
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - nu.begin()), n - 1);
  const double local = k > 0 ? nu[k] - nu[k - 1] : nu[1] - nu[0];
  out.grid_too_coarse = z.imag() < 4.0 * local;
  return out;
}

}  // namespace hg

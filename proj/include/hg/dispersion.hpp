#pragma once

// Dispersive permittivity models built from a nonnegative oscillator density
//
//   eps(x, z) = eps_b - \int sigma(x, nu) / (z^2 - nu^2) dnu,
//
// where sigma is a mixture of discrete lines and closed-form Lorentz parts.
// A stored line (nu_j, w_j) stands for w_j [delta(nu - nu_j) + delta(nu + nu_j)],
// so it contributes -2 w_j / (z^2 - nu_j^2) to eps and 2 w_j to the sum rule.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hg/core.hpp"
#include "hg/transforms.hpp"

namespace hg {

inline constexpr double kPoleFloor = 1e-12;

struct Line {
  double nu = 0.0;      // rad/s, > 0
  double weight = 0.0;  // eps-units (rad/s)^2, > 0
};

struct LorentzPart {
  double plasma = 0.0;     // omega_p
  double resonance = 0.0;  // omega_1
  double damping = 0.0;    // gamma
};

class OscillatorDensity {
 public:
  OscillatorDensity() = default;
  OscillatorDensity(std::vector<Line> lines, std::vector<LorentzPart> lorentz,
                    double gap = 0.0)
      : lines_(std::move(lines)), lorentz_(std::move(lorentz)), gap_(gap) {
    for (const auto& l : lines_) {
      if (!(l.nu > 0.0) || !(l.weight > 0.0) || !std::isfinite(l.nu) ||
          !std::isfinite(l.weight))
        throw DomainError("oscillator line needs nu > 0 and weight > 0");
    }
    for (const auto& p : lorentz_) {
      if (!(p.plasma > 0.0) || !(p.resonance > 0.0) || !(p.damping > 0.0))
        throw DomainError("Lorentz part needs wp, w1, gamma > 0");
    }
    if (!(gap_ >= 0.0) || !std::isfinite(gap_))
      throw DomainError("gap nu0 must be finite and >= 0");
  }

  const std::vector<Line>& lines() const noexcept { return lines_; }
  const std::vector<LorentzPart>& lorentz() const noexcept { return lorentz_; }
  double gap() const noexcept { return gap_; }
  bool empty() const noexcept { return lines_.empty() && lorentz_.empty(); }
  bool has_lines() const noexcept { return !lines_.empty(); }

  double min_damping() const {
    double g = std::numeric_limits<double>::infinity();
    for (const auto& p : lorentz_) g = std::min(g, p.damping);
    return g;
  }

  // Continuous (Lorentz) part of sigma; even in nu.
  double continuous(double nu) const {
    double s = 0.0;
    const double nu2 = nu * nu;
    for (const auto& p : lorentz_) {
      const double w12 = p.resonance * p.resonance;
      s += kEps0 * p.plasma * p.plasma * p.damping * nu2 /
           (kPi * (sqr(w12 - nu2) + p.damping * p.damping * nu2));
    }
    return s;
  }

  // eps(z) - eps_b from this density.
  cplx response(cplx z) const {
    cplx r{0.0, 0.0};
    const cplx z2 = z * z;
    for (const auto& l : lines_) r -= 2.0 * l.weight / (z2 - l.nu * l.nu);
    for (const auto& p : lorentz_)
      r += kEps0 * p.plasma * p.plasma /
           (p.resonance * p.resonance - z2 - kI * p.damping * z);
    return r;
  }

  cplx response_derivative(cplx z) const {
    cplx r{0.0, 0.0};
    const cplx z2 = z * z;
    for (const auto& l : lines_) {
      const cplx d = z2 - l.nu * l.nu;
      r += 4.0 * l.weight * z / (d * d);
    }
    for (const auto& p : lorentz_) {
      const cplx d = p.resonance * p.resonance - z2 - kI * p.damping * z;
      r += kEps0 * p.plasma * p.plasma * (2.0 * z + kI * p.damping) / (d * d);
    }
    return r;
  }

  // \int sigma dnu = d/dt chi(0+).
  double total_weight() const {
    double s = 0.0;
    for (const auto& l : lines_) s += 2.0 * l.weight;
    for (const auto& p : lorentz_) s += kEps0 * p.plasma * p.plasma;
    return s;
  }

 private:
  std::vector<Line> lines_;
  std::vector<LorentzPart> lorentz_;
  double gap_ = 0.0;
};

enum class UnitSystem { normalized, si };

struct Layer {
  double x0 = 0.0;
  double x1 = 0.0;
  OscillatorDensity density;
};

// Piecewise medium on the 1D axis. Layers are half-open intervals [x0, x1)
// and must not overlap; outside every layer the permittivity is eps_b.
class PermittivityModel {
 public:
  PermittivityModel() = default;
  explicit PermittivityModel(double background, std::vector<Layer> layers = {},
                             UnitSystem units = UnitSystem::normalized)
      : background_(background), layers_(std::move(layers)), units_(units) {
    if (!(background_ >= kEps0) || !std::isfinite(background_))
      throw DomainError("background permittivity must be real and >= eps0");
    std::sort(layers_.begin(), layers_.end(),
              [](const Layer& a, const Layer& b) { return a.x0 < b.x0; });
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (!(layers_[i].x0 < layers_[i].x1))
        throw DomainError("layer interval must satisfy x0 < x1");
      if (i > 0 && layers_[i].x0 < layers_[i - 1].x1)
        throw DomainError("layers overlap");
    }
  }

  static PermittivityModel vacuum() { return PermittivityModel(kEps0); }

  static PermittivityModel homogeneous(OscillatorDensity d, double x0, double x1) {
    return PermittivityModel(kEps0, {Layer{x0, x1, std::move(d)}});
  }

  double background() const noexcept { return background_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  UnitSystem units() const noexcept { return units_; }

  const OscillatorDensity* density_at(double x) const {
    for (const auto& l : layers_)
      if (x >= l.x0 && x < l.x1) return &l.density;
    return nullptr;
  }

  bool has_lines() const {
    return std::any_of(layers_.begin(), layers_.end(),
                       [](const Layer& l) { return l.density.has_lines(); });
  }

  // Largest d/dt chi(x, 0+) over the axis.
  double max_chi_dot() const {
    double m = 0.0;
    for (const auto& l : layers_) m = std::max(m, l.density.total_weight());
    return m;
  }

  double min_damping() const {
    double g = std::numeric_limits<double>::infinity();
    for (const auto& l : layers_) g = std::min(g, l.density.min_damping());
    return g;
  }

 private:
  double background_ = kEps0;
  std::vector<Layer> layers_;
  UnitSystem units_ = UnitSystem::normalized;
};

namespace detail {

inline void check_poles(const OscillatorDensity& d, cplx z, double floor) {
  const cplx z2 = z * z;
  for (const auto& l : d.lines())
    if (std::abs(z2 - l.nu * l.nu) < floor)
      throw PoleProximityError("z too close to an oscillator line");
  for (const auto& p : d.lorentz())
    if (std::abs(p.resonance * p.resonance - z2 - kI * p.damping * z) < floor)
      throw PoleProximityError("z too close to a Lorentz pole");
}

inline void require_upper(cplx z, const char* what) {
  if (!(z.imag() > 0.0))
    throw DomainError(std::string(what) + " requires Im z > 0");
}

}  // namespace detail

// eps(x, z) for Im z >= 0. Real z is allowed only where no undamped line
// is present.
inline cplx eval_permittivity(const PermittivityModel& model, double x, cplx z,
                              double pole_floor = kPoleFloor) {
  if (z.imag() < 0.0) throw DomainError("permittivity requires Im z >= 0");
  const OscillatorDensity* d = model.density_at(x);
  if (d == nullptr) return model.background();
  if (z.imag() == 0.0 && d->has_lines())
    throw DomainError("undamped lines cannot be evaluated on the real axis");
  detail::check_poles(*d, z, pole_floor);
  return model.background() + d->response(z);
}

struct SigmaSample {
  double continuous = 0.0;
  std::vector<Line> lines;  // mirrored lines with |nu_line - nu| <= window
};

inline SigmaSample sigma_eval(const OscillatorDensity& density, double nu,
                              double window = 0.0) {
  SigmaSample s{density.continuous(nu), {}};
  for (const auto& l : density.lines()) {
    for (double sign : {-1.0, 1.0}) {
      const double at = sign * l.nu;
      if (std::abs(at - nu) <= window) s.lines.push_back(Line{at, l.weight});
    }
  }
  std::sort(s.lines.begin(), s.lines.end(),
            [](const Line& a, const Line& b) { return a.nu < b.nu; });
  return s;
}

inline double chi_dot_at_zero(const OscillatorDensity& density) {
  return density.total_weight();
}

struct QuadratureSpec {
  double rel_tol = 1e-11;
  unsigned max_depth = 20;
};

namespace detail {

// Breakpoints on [0, inf) where the continuous integrands peak.
inline std::vector<double> breakpoints(const OscillatorDensity& d, double extra) {
  std::vector<double> b;
  for (const auto& p : d.lorentz()) {
    const double w = p.damping;
    for (double at : {p.resonance - w, p.resonance, p.resonance + w})
      if (at > 0.0) b.push_back(at);
  }
  if (extra > 0.0) b.push_back(extra);
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

// \int_0^inf f over pieces split at the given breakpoints.
template <class F>
auto integrate_half_line(F&& f, const std::vector<double>& cuts,
                         const QuadratureSpec& q) {
  using boost::math::quadrature::gauss_kronrod;
  using R = decltype(f(0.0));
  R total{};
  double err_total = 0.0;
  double a = 0.0;
  auto piece = [&](double lo, double hi) {
    double err = 0.0;
    total += gauss_kronrod<double, 15>::integrate(f, lo, hi, q.max_depth,
                                                  q.rel_tol, &err);
    err_total += std::abs(err);
  };
  for (double c : cuts) {
    if (c > a) {
      piece(a, c);
      a = c;
    }
  }
  piece(a, std::numeric_limits<double>::infinity());
  return std::pair<R, double>{total, err_total};
}

}  // namespace detail

// eps0 - \int sigma/(z^2 - nu^2) dnu by adaptive quadrature of the continuous
// part plus the exact line contributions.
inline Estimated<cplx> kk_reconstruct_permittivity(const OscillatorDensity& density,
                                                   cplx z,
                                                   const QuadratureSpec& quad = {}) {
  detail::require_upper(z, "Kramers-Kronig reconstruction");
  cplx value = kEps0;
  for (const auto& l : density.lines()) value -= 2.0 * l.weight / (z * z - l.nu * l.nu);
  if (density.lorentz().empty()) return {value, 0.0, true};
  const cplx z2 = z * z;
  auto integrand = [&](double nu) -> cplx {
    return 2.0 * density.continuous(nu) / (z2 - nu * nu);
  };
  auto [integral, err] = detail::integrate_half_line(
      integrand, detail::breakpoints(density, std::abs(z.real())), quad);
  value -= integral;
  const bool ok = std::isfinite(err) && err <= 1e3 * quad.rel_tol * std::abs(integral) + 1e-300;
  return {value, err, ok};
}

// Numerical \int_R sigma dnu: quadrature of the continuous part plus the
// exact line weights.
inline Estimated<double> sigma_integral(const OscillatorDensity& density,
                                        const QuadratureSpec& quad = {}) {
  double value = 0.0;
  for (const auto& l : density.lines()) value += 2.0 * l.weight;
  if (density.lorentz().empty()) return {value, 0.0, true};
  auto [integral, err] = detail::integrate_half_line(
      [&](double nu) { return 2.0 * density.continuous(nu); },
      detail::breakpoints(density, 0.0), quad);
  return {value + integral, err, std::isfinite(err)};
}

inline double passivity_margin(const PermittivityModel& model, double x, cplx z) {
  detail::require_upper(z, "passivity margin");
  return (z * (eval_permittivity(model, x, z) - kEps0)).imag();
}

inline cplx permittivity_derivative(const PermittivityModel& model, double x, cplx z) {
  detail::require_upper(z, "permittivity derivative");
  const OscillatorDensity* d = model.density_at(x);
  if (d == nullptr) return {0.0, 0.0};
  detail::check_poles(*d, z, kPoleFloor);
  return d->response_derivative(z);
}

// z^2 [eps - eps_b] + d/dt chi(0+) at z = omega + i eta; tends to 0 as
// omega grows.
inline cplx high_freq_deviation(const PermittivityModel& model, double x,
                                double eta, double omega) {
  if (!(eta > 0.0)) throw DomainError("high-frequency deviation requires eta > 0");
  const OscillatorDensity* d = model.density_at(x);
  if (d == nullptr) return {0.0, 0.0};
  const cplx z{omega, eta};
  return z * z * d->response(z) + d->total_weight();
}

struct FrequencyWindow {
  double half_width = 2000.0;
  std::size_t n_points = 1 << 17;
};

// chi(x, t) by inversion of eps(x, z) - eps_b along Im z = eta.
inline std::vector<Estimated<double>> susceptibility(const PermittivityModel& model,
                                                     double x,
                                                     std::span<const double> times,
                                                     double eta,
                                                     const FrequencyWindow& window) {
  if (!(eta > 0.0)) throw DomainError("susceptibility requires eta > 0");
  std::vector<Estimated<double>> out(times.size());
  const OscillatorDensity* d = model.density_at(x);
  if (d == nullptr || d->empty()) return out;
  const ContourSpec contour{eta, window.half_width, window.n_points};
  auto values = laplace_invert([d](cplx z) { return d->response(z); }, contour, times);
  for (std::size_t i = 0; i < times.size(); ++i)
    out[i] = {values[i].value.real(), values[i].error, values[i].converged};
  return out;
}

inline Estimated<double> susceptibility(const PermittivityModel& model, double x,
                                        double t, double eta,
                                        const FrequencyWindow& window) {
  const std::array<double, 1> ts{t};
  return susceptibility(model, x, ts, eta, window).front();
}

// Default contour height for inverting a damped model.
inline double default_contour_height(const PermittivityModel& model) {
  const double g = model.min_damping();
  return std::isfinite(g) ? 0.5 * g : 0.5;
}

// Real dielectric constant eps0 + \int_{|nu| >= nu0} sigma / (nu^2 - w0^2) of a
// density whose support lies above the gap nu0 > w0.
inline double build_nondispersive(const OscillatorDensity& density, double omega0) {
  if (!(omega0 > 0.0)) throw DomainError("non-dispersive construction requires w0 > 0");
  if (density.empty()) return kEps0;
  const double nu0 = density.gap();
  if (!(nu0 > omega0))
    throw DomainError("non-dispersive construction requires gap nu0 > w0");
  if (!density.lorentz().empty())
    throw GapViolationError("Lorentz parts have support below any positive gap");
  double eps = kEps0;
  for (const auto& l : density.lines()) {
    if (l.nu < nu0) throw GapViolationError("line below the gap nu0");
    eps += 2.0 * l.weight / (l.nu * l.nu - omega0 * omega0);
  }
  return eps;
}

inline double phase_velocity(double eps) { return 1.0 / std::sqrt(eps * kMu0); }

// xi = nu + (w0^2 - nu^2) / z; Im xi = Im z (nu^2 - w0^2) / |z|^2.
inline cplx xi_map(cplx z, double nu, double omega0) {
  if (z == cplx{0.0, 0.0}) throw DomainError("xi map undefined at z = 0");
  return nu + (omega0 * omega0 - nu * nu) / z;
}

}  // namespace hg

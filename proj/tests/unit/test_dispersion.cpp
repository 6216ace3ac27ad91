#include <cmath>
#include <complex>
#include <vector>

#include <gtest/gtest.h>

#include "hg/dispersion.hpp"

using namespace hg;

namespace {

OscillatorDensity lorentz(double wp = 1.0, double w1 = 2.0, double g = 0.1) {
  return OscillatorDensity({}, {LorentzPart{wp, w1, g}});
}

PermittivityModel lorentz_model() { return PermittivityModel::homogeneous(lorentz(), 0.0, 1.0); }

// Independent closed form of the Lorentz permittivity.
cplx lorentz_eps(cplx z, double wp, double w1, double g) {
  return 1.0 + wp * wp / (w1 * w1 - z * z - cplx(0, 1) * g * z);
}

}  // namespace

TEST(Permittivity, VacuumIsEps0) {
  const auto m = PermittivityModel::vacuum();
  for (cplx z : {cplx(0.3, 1.0), cplx(-4.0, 0.01), cplx(0.0, 0.0)})
    EXPECT_EQ(eval_permittivity(m, 0.5, z), cplx(kEps0, 0.0));
}

TEST(Permittivity, LorentzAtImaginaryUnit) {
  const cplx e = eval_permittivity(lorentz_model(), 0.5, {0.0, 1.0});
  EXPECT_NEAR(e.real(), 1.0 + 1.0 / 5.1, 1e-15);
  EXPECT_NEAR(e.imag(), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(e - lorentz_eps({0, 1}, 1, 2, 0.1)), 0.0, 1e-15);
}

TEST(Permittivity, LorentzAtResonanceOnRealAxis) {
  const cplx e = eval_permittivity(lorentz_model(), 0.5, {2.0, 0.0});
  EXPECT_NEAR(e.real(), 1.0, 1e-12);
  EXPECT_NEAR(e.imag(), 5.0, 1e-12);
}

TEST(Permittivity, OutsideLayersIsBackground) {
  const PermittivityModel m(2.5, {Layer{1.0, 2.0, lorentz()}});
  EXPECT_EQ(eval_permittivity(m, 0.5, {1.0, 1.0}), cplx(2.5, 0.0));
  EXPECT_EQ(eval_permittivity(m, 2.0, {1.0, 1.0}), cplx(2.5, 0.0));  // half-open
  EXPECT_NE(eval_permittivity(m, 1.0, {1.0, 1.0}), cplx(2.5, 0.0));
}

TEST(Permittivity, DomainErrors) {
  EXPECT_THROW(eval_permittivity(lorentz_model(), 0.5, {1.0, -0.1}), DomainError);
  const auto lines = PermittivityModel::homogeneous(OscillatorDensity({Line{3.0, 1.0}}, {}), 0, 1);
  EXPECT_THROW(eval_permittivity(lines, 0.5, {1.0, 0.0}), DomainError);
  EXPECT_THROW(eval_permittivity(lines, 0.5, {3.0, 1e-14}), PoleProximityError);
  EXPECT_THROW(OscillatorDensity({Line{-1.0, 1.0}}, {}), DomainError);
  EXPECT_THROW(OscillatorDensity({}, {LorentzPart{1.0, 2.0, 0.0}}), DomainError);
  EXPECT_THROW(PermittivityModel(0.5), DomainError);
  EXPECT_THROW(PermittivityModel(1.0, {Layer{0, 2, {}}, Layer{1, 3, {}}}), DomainError);
}

TEST(Permittivity, SchwarzReflection) {
  const auto m = lorentz_model();
  for (double re : {-3.0, -0.2, 0.7, 2.0, 5.0})
    for (double im : {0.01, 0.3, 2.0}) {
      const cplx z{re, im};
      const cplx a = eval_permittivity(m, 0.5, z);
      EXPECT_LE(std::abs(eval_permittivity(m, 0.5, -std::conj(z)) - std::conj(a)), 1e-14 * std::abs(a));
    }
}

TEST(Sigma, VacuumIsZero) {
  EXPECT_EQ(sigma_eval(OscillatorDensity{}, 1.3).continuous, 0.0);
  EXPECT_TRUE(sigma_eval(OscillatorDensity{}, 1.3, 10.0).lines.empty());
}

TEST(Sigma, LorentzPeakValue) {
  EXPECT_NEAR(sigma_eval(lorentz(), 2.0).continuous, 10.0 / kPi, 1e-12);
  // Oracle: Im{nu (eps - eps0)} / pi just above the real axis.
  const cplx z{2.0, 1e-9};
  const double limit = (z * (lorentz_eps(z, 1, 2, 0.1) - 1.0)).imag() / kPi;
  EXPECT_NEAR(sigma_eval(lorentz(), 2.0).continuous, limit, 1e-6);
}

TEST(Sigma, EvenAndNonnegative) {
  const OscillatorDensity d({Line{3.0, 0.5}}, {LorentzPart{1, 2, 0.1}, LorentzPart{0.5, 0.7, 1.2}});
  for (double nu = -9.0; nu <= 9.0; nu += 0.37) {
    EXPECT_GE(d.continuous(nu), 0.0);
    EXPECT_DOUBLE_EQ(d.continuous(nu), d.continuous(-nu));
  }
  const auto s = sigma_eval(d, 3.0, 0.1);
  ASSERT_EQ(s.lines.size(), 1u);
  EXPECT_EQ(s.lines[0].nu, 3.0);
  EXPECT_EQ(sigma_eval(d, 0.0, 3.0).lines.size(), 2u);  // mirrored pair
}

TEST(KramersKronig, VacuumExact) {
  const auto r = kk_reconstruct_permittivity(OscillatorDensity{}, {0.4, 0.9});
  EXPECT_EQ(r.value, cplx(kEps0, 0.0));
}

TEST(KramersKronig, LorentzMatchesClosedForm) {
  const cplx z{1.0, 0.5};
  const auto r = kk_reconstruct_permittivity(lorentz(), z);
  const cplx exact = lorentz_eps(z, 1, 2, 0.1);
  EXPECT_LE(std::abs(r.value - exact) / std::abs(exact), 1e-6);
  EXPECT_TRUE(r.converged);
}

TEST(KramersKronig, PureLineMirroredConvention) {
  // w = 1 at nu = 3 stands for delta(nu - 3) + delta(nu + 3): -2/(z^2 - 9) at z = i.
  const auto r = kk_reconstruct_permittivity(OscillatorDensity({Line{3.0, 1.0}}, {}), {0.0, 1.0});
  EXPECT_NEAR(r.value.real(), kEps0 + 0.2, 1e-15);
  EXPECT_NEAR(r.value.imag(), 0.0, 1e-15);
}

TEST(KramersKronig, NearAxisStillAccurate) {
  const auto d = lorentz(1.0, 2.0, 0.1);
  for (cplx z : {cplx(2.0, 0.01), cplx(1.95, 0.02), cplx(-4.0, 0.01)}) {
    const cplx exact = lorentz_eps(z, 1, 2, 0.1);
    EXPECT_LE(std::abs(kk_reconstruct_permittivity(d, z).value - exact) / std::abs(exact), 1e-6);
  }
}

TEST(KramersKronig, RejectsLowerHalfPlane) {
  EXPECT_THROW(kk_reconstruct_permittivity(lorentz(), {1.0, 0.0}), DomainError);
}

TEST(Passivity, VacuumZero) {
  EXPECT_EQ(passivity_margin(PermittivityModel::vacuum(), 0.0, {1.0, 1.0}), 0.0);
}

TEST(Passivity, LorentzAtI) {
  EXPECT_NEAR(passivity_margin(lorentz_model(), 0.5, {0.0, 1.0}), 1.0 / 5.1, 1e-15);
}

TEST(Passivity, QuasiRandomSweep) {
  const PermittivityModel m(1.0, {Layer{0, 1, OscillatorDensity({Line{3.0, 0.4}}, {LorentzPart{1.5, 1.0, 0.3}})}});
  double worst = 1.0;
  for (int i = 1; i <= 4000; ++i) {
    // Golden-ratio lattice on a box in the upper half-plane.
    const double u = std::fmod(i * 0.6180339887498949, 1.0), v = std::fmod(i * 0.7548776662466927, 1.0);
    const cplx z{-10.0 + 20.0 * u, 1e-3 * std::pow(1e4, v)};
    worst = std::min(worst, passivity_margin(m, 0.5, z));
  }
  EXPECT_GE(worst, -1e-12);
}

TEST(Susceptibility, MatchesDampedSinusoid) {
  const double wp = 1.0, w1 = 2.0, g = 0.1;
  const auto m = lorentz_model();
  const std::vector<double> ts{-1.0, 0.5, 1.0, 3.0, 7.0};
  const auto chi = susceptibility(m, 0.5, ts, 0.5, FrequencyWindow{2000.0, 1 << 17});
  const double wt = std::sqrt(w1 * w1 - g * g / 4.0);
  EXPECT_LE(std::abs(chi[0].value), 1e-6);
  for (std::size_t i = 1; i < ts.size(); ++i) {
    const double exact = wp * wp * std::exp(-g * ts[i] / 2.0) * std::sin(wt * ts[i]) / wt;
    EXPECT_NEAR(chi[i].value, exact, 1e-6) << "t=" << ts[i];
  }
}

TEST(Susceptibility, VacuumZero) {
  const std::vector<double> ts{-1.0, 1.0};
  for (const auto& v : susceptibility(PermittivityModel::vacuum(), 0.0, ts, 0.5, {}))
    EXPECT_EQ(v.value, 0.0);
}

TEST(SumRule, ChiDot) {
  EXPECT_EQ(chi_dot_at_zero(OscillatorDensity{}), 0.0);
  EXPECT_DOUBLE_EQ(chi_dot_at_zero(lorentz(1.0)), kEps0);
  EXPECT_DOUBLE_EQ(chi_dot_at_zero(OscillatorDensity({}, {LorentzPart{1, 2, 0.1}, LorentzPart{2, 3, 0.4}})),
                   5.0 * kEps0);
}

TEST(SumRule, QuadratureMatches) {
  const OscillatorDensity d({Line{4.0, 0.3}}, {LorentzPart{1, 2, 0.1}, LorentzPart{2, 0.5, 1.4}});
  const auto s = sigma_integral(d);
  EXPECT_NEAR(s.value, chi_dot_at_zero(d), 1e-8 * chi_dot_at_zero(d));
}

TEST(SumRule, DampedSinusoidSlope) {
  // d/dt of wp^2 exp(-g t/2) sin(wt t)/wt at 0+ is wp^2.
  const double wp = 1.3, w1 = 2.0, g = 0.1, wt = std::sqrt(w1 * w1 - g * g / 4), t = 1e-7;
  const double slope = wp * wp * std::exp(-g * t / 2) * std::sin(wt * t) / wt / t;
  EXPECT_NEAR(chi_dot_at_zero(lorentz(wp, w1, g)), slope, 1e-6);
}

TEST(Derivative, FiniteDifferenceOracle) {
  const auto m = lorentz_model();
  const cplx z{0.0, 1.0};
  const double h = 1e-5;
  const cplx fd = (eval_permittivity(m, 0.5, z + h) - eval_permittivity(m, 0.5, z - h)) / (2.0 * h);
  const cplx d = permittivity_derivative(m, 0.5, z);
  EXPECT_LE(std::abs(d - fd) / std::abs(d), 1e-7);
  EXPECT_EQ(permittivity_derivative(PermittivityModel::vacuum(), 0.5, z), cplx(0.0, 0.0));
}

TEST(Derivative, SchwarzWithChainRuleSign) {
  // f(-conj z) = conj f(z) implies f'(-conj z) = -conj f'(z).
  const auto m = lorentz_model();
  const cplx z{0.8, 0.3};
  const cplx a = permittivity_derivative(m, 0.5, z);
  EXPECT_LE(std::abs(permittivity_derivative(m, 0.5, -std::conj(z)) + std::conj(a)), 1e-14 * std::abs(a));
}

TEST(HighFrequency, VacuumAndDecay) {
  EXPECT_EQ(high_freq_deviation(PermittivityModel::vacuum(), 0.0, 1.0, 100.0), cplx(0.0, 0.0));
  const auto m = lorentz_model();
  double prev = std::abs(high_freq_deviation(m, 0.5, 1.0, 10.0));
  for (double w : {100.0, 1000.0, 10000.0}) {
    const double cur = std::abs(high_freq_deviation(m, 0.5, 1.0, w));
    EXPECT_LT(cur, prev);
    prev = cur;
  }
}

TEST(HighFrequency, PureLineInverseSquare) {
  // z^2 (-2w/(z^2 - nu^2)) + 2w = -2w nu^2 / (z^2 - nu^2) ~ 2w nu^2 / omega^2.
  const double w = 0.7, nu = 3.0;
  const auto m = PermittivityModel::homogeneous(OscillatorDensity({Line{nu, w}}, {}), 0, 1);
  for (double om : {1e2, 1e3}) {
    const cplx z{om, 1.0};
    const cplx expect = -2.0 * w * nu * nu / (z * z - nu * nu);
    EXPECT_LE(std::abs(high_freq_deviation(m, 0.5, 1.0, om) - expect), 1e-10 * std::abs(expect));
  }
}

TEST(NonDispersive, EmptyDensity) {
  EXPECT_EQ(build_nondispersive(OscillatorDensity{}, 1.0), kEps0);
  EXPECT_EQ(phase_velocity(kEps0), kLightSpeed);
}

TEST(NonDispersive, SingleLineWithBruteForceOracle) {
  const OscillatorDensity d({Line{3.0, 1.0}}, {}, 2.0);
  EXPECT_NEAR(build_nondispersive(d, 1.0), kEps0 + 0.25, 1e-15);
  // Oracle: the line as the zeta -> 0 limit of narrow Lorentzians at +-3,
  // integrated against 1/(nu^2 - w0^2) by plain midpoint sums.
  const double zeta = 1e-4;
  double s = 0.0;
  const double step = 1e-6;
  for (double nu = 2.5 + step / 2; nu < 3.5; nu += step) {
    const double lor = zeta / (kPi * ((nu - 3.0) * (nu - 3.0) + zeta * zeta));
    s += 2.0 * lor / (nu * nu - 1.0) * step;  // both +-3 peaks contribute equally
  }
  EXPECT_NEAR(build_nondispersive(d, 1.0), kEps0 + s, 1e-3);
}

TEST(NonDispersive, RealAboveEps0AndSubluminal) {
  for (double w0 : {0.1, 0.5, 1.0, 2.4}) {
    const OscillatorDensity d({Line{3.0, 0.5}, Line{5.0, 0.2}}, {}, 2.5);
    const double e = build_nondispersive(d, w0);
    EXPECT_GE(e, kEps0);
    EXPECT_LE(phase_velocity(e), kLightSpeed);
  }
}

TEST(NonDispersive, GapViolations) {
  EXPECT_THROW(build_nondispersive(OscillatorDensity({Line{1.0, 0.5}}, {}, 2.5), 1.0), GapViolationError);
  EXPECT_THROW(build_nondispersive(lorentz(), 1.0), DomainError);
  EXPECT_THROW(build_nondispersive(OscillatorDensity({Line{3.0, 0.5}}, {}, 0.5), 1.0), DomainError);
  EXPECT_THROW(build_nondispersive(OscillatorDensity{}, 0.0), DomainError);
}

TEST(XiMap, Examples) {
  EXPECT_EQ(xi_map({0.0, 1.0}, 2.0, 1.0), cplx(2.0, 3.0));
  EXPECT_EQ(xi_map({0.3, 0.7}, 1.5, 1.5), cplx(1.5, 0.0));
  const cplx x = xi_map({0.0, 1.0}, 0.0, 1.0);
  EXPECT_EQ(x, cplx(0.0, -1.0));
  EXPECT_LT(x.imag(), 0.0);
  EXPECT_THROW(xi_map({0.0, 0.0}, 1.0, 1.0), DomainError);
}

TEST(XiMap, UpperHalfPlaneAboveGap) {
  for (double nu : {1.1, 2.0, 7.0})
    for (cplx z : {cplx(0.5, 0.1), cplx(-3.0, 2.0)}) EXPECT_GT(xi_map(z, nu, 1.0).imag(), 0.0);
}

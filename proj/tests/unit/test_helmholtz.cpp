#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "hg/helmholtz.hpp"

using namespace hg;

namespace {

PermittivityModel lorentz_slab() {
  return PermittivityModel(1.0, {Layer{1.0, 2.0, OscillatorDensity({}, {LorentzPart{1.0, 2.0, 0.1}})}});
}

// Discrete sine mode n on a Dirichlet grid and its exact eigenvalue of the
// second-difference operator.
std::vector<cplx> sine_mode(const Grid1D& g, int n) {
  std::vector<cplx> v(g.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(n * kPi * g.x(i) / g.length());
  return v;
}

double laplacian_eig(const Grid1D& g, int n) {
  const double h = g.h();
  return sqr(2.0 / h * std::sin(n * kPi * h / (2.0 * g.length())));
}

std::vector<cplx> random_vector(std::size_t n, unsigned seed) {
  std::vector<cplx> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = cplx(std::sin(0.7 * i + seed), std::cos(1.3 * i * seed + 0.2));
  return v;
}

}  // namespace

TEST(Grid, Spacing) {
  const auto d = Grid1D::dirichlet(kPi, 63);
  EXPECT_DOUBLE_EQ(d.h(), kPi / 64);
  EXPECT_DOUBLE_EQ(d.x(0), kPi / 64);
  const auto b = Grid1D::bloch(2.0, 10, {0.3, 0.0});
  EXPECT_DOUBLE_EQ(b.h(), 0.2);
  EXPECT_DOUBLE_EQ(b.x(0), 0.0);
  EXPECT_THROW(Grid1D::dirichlet(1.0, 4), DomainError);
  EXPECT_THROW(Grid1D::dirichlet(-1.0, 16), DomainError);
}

TEST(Assemble, EntriesMatchStencil) {
  const auto g = Grid1D::dirichlet(3.0, 29);
  const cplx z{1.0, 0.5};
  const auto op = assemble(g, lorentz_slab(), OperatorSpec::dispersive(z));
  const double h = g.h();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.x(i);
    const cplx eps = (x >= 1.0 && x < 2.0) ? 1.0 + 1.0 / (4.0 - z * z - kI * 0.1 * z) : cplx(1.0);
    EXPECT_LE(std::abs(op.diagonal()[i] - (z * z * eps - 2.0 / (h * h))), 1e-12);
  }
  EXPECT_EQ(op.upper(), cplx(1.0 / (h * h)));
  EXPECT_EQ(op.lower(), cplx(1.0 / (h * h)));
}

TEST(Assemble, DomainChecks) {
  const auto g = Grid1D::dirichlet(3.0, 29);
  EXPECT_THROW(assemble(g, PermittivityModel::vacuum(), OperatorSpec::dispersive({1.0, 0.0})), DomainError);
  EXPECT_NO_THROW(assemble(g, lorentz_slab(), OperatorSpec::dispersive({1.0, 0.0})));
  EXPECT_THROW(assemble(g, lorentz_slab(), OperatorSpec::two_frequency({1.0, 1.0}, {1.0, -0.1})), DomainError);
  EXPECT_THROW(assemble(g, lorentz_slab(), OperatorSpec::nondispersive({1.0, 0.0}, 1.0)), DomainError);
}

TEST(Solve, VacuumSineModeCoefficient) {
  const auto g = Grid1D::dirichlet(kPi, 64);
  const cplx z{1.3, 0.4};
  const auto op = assemble(g, PermittivityModel::vacuum(), OperatorSpec::dispersive(z));
  const auto phi = sine_mode(g, 1);
  double norm2 = 0.0;
  for (const auto& v : phi) norm2 += std::norm(v);
  norm2 *= g.h();
  const cplx expect = norm2 / (z * z - laplacian_eig(g, 1));
  EXPECT_LE(std::abs(coefficient(op, phi, phi) - expect), 1e-12 * std::abs(expect));
  // The discrete frequency sits close to the continuum one.
  EXPECT_NEAR(std::sqrt(laplacian_eig(g, 1)), 1.0, 1e-3);
}

TEST(Solve, MatchesDenseSolver) {
  const auto g = Grid1D::dirichlet(3.0, 100);
  const auto op = assemble(g, lorentz_slab(), OperatorSpec::dispersive({2.0, 0.05}));
  const auto src = random_vector(g.size(), 3);
  const auto r = solve(op, src);
  EXPECT_LE(r.residual, 1e-10);
  const Eigen::Map<const CVector> b(src.data(), static_cast<Eigen::Index>(src.size()));
  const CVector ref = op.matrix().fullPivLu().solve(b);
  for (std::size_t i = 0; i < src.size(); ++i) EXPECT_LE(std::abs(r.field[i] - ref(i)), 1e-9 * ref.norm());
}

TEST(Solve, AdjointSolve) {
  const auto g = Grid1D::dirichlet(3.0, 40);
  const auto op = assemble(g, lorentz_slab(), OperatorSpec::dispersive({0.7, 0.3}));
  const auto b = random_vector(g.size(), 5);
  const auto x = op.solve_adjoint(b);
  const Eigen::Map<const CVector> bb(b.data(), static_cast<Eigen::Index>(b.size()));
  const CVector ref = op.matrix().adjoint().fullPivLu().solve(bb);
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_LE(std::abs(x[i] - ref(i)), 1e-10 * ref.norm());
}

TEST(Green, ReciprocityAndSchwarz) {
  const auto g = Grid1D::dirichlet(3.0, 60);
  const cplx z{1.7, 0.2};
  const auto m = lorentz_slab();
  const auto gz = green_matrix(assemble(g, m, OperatorSpec::dispersive(z)));
  const auto gm = green_matrix(assemble(g, m, OperatorSpec::dispersive(-std::conj(z))));
  const double scale = gz.values.cwiseAbs().maxCoeff();
  EXPECT_LE((gz.values - gz.values.transpose()).cwiseAbs().maxCoeff(), 1e-12 * scale);
  EXPECT_LE((gm.values - gz.values.conjugate()).cwiseAbs().maxCoeff(), 1e-12 * scale);
}

TEST(Green, DeltaColumns) {
  const auto g = Grid1D::dirichlet(2.0, 30);
  const auto op = assemble(g, PermittivityModel::vacuum(), OperatorSpec::dispersive({0.5, 0.5}));
  const auto gm = green_matrix(op);
  // H applied to column j times h is the unit vector e_j.
  for (std::size_t j : {0u, 7u, 29u}) {
    std::vector<cplx> col(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) col[i] = gm.values(i, j) * g.h();
    const auto back = op.apply(col);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(std::abs(back[i] - (i == j ? 1.0 : 0.0)), 0.0, 1e-10);
  }
}

TEST(Norm, BelowAnalyticBound) {
  const auto g = Grid1D::dirichlet(3.0, 64);
  const auto m = lorentz_slab();
  for (cplx z : {cplx(0.5, 0.05), cplx(2.0, 0.1), cplx(-1.0, 1.0), cplx(4.0, 0.02)}) {
    const auto op = assemble(g, m, OperatorSpec::dispersive(z));
    EXPECT_LE(inverse_norm(op), inverse_norm_bound(z)) << z;
  }
}

TEST(Norm, PowerIterationAgreesWithSvd) {
  const auto g = Grid1D::dirichlet(3.0, 80);
  const auto op = assemble(g, lorentz_slab(), OperatorSpec::dispersive({1.0, 0.3}));
  const double dense = inverse_norm(op);
  NormOptions power;
  power.dense_limit = 0;
  power.tol = 1e-13;
  EXPECT_NEAR(inverse_norm(op, power), dense, 1e-8 * dense);
}

TEST(Norm, VacuumExactSmallestSingularValue) {
  // Vacuum H is normal with eigenvalues z^2 - lambda_n.
  const auto g = Grid1D::dirichlet(kPi, 50);
  const cplx z{3.02, 0.1};
  double smin = 1e300;
  for (int n = 1; n <= 50; ++n) smin = std::min(smin, std::abs(z * z - laplacian_eig(g, n)));
  const auto op = assemble(g, PermittivityModel::vacuum(), OperatorSpec::dispersive(z));
  EXPECT_NEAR(inverse_norm(op), 1.0 / smin, 1e-9 / smin);
}

TEST(TwoFrequency, DiagonalCaseIsDispersive) {
  const auto g = Grid1D::dirichlet(3.0, 30);
  const cplx z{1.1, 0.4};
  const auto a = assemble(g, lorentz_slab(), OperatorSpec::dispersive(z));
  const auto b = assemble(g, lorentz_slab(), OperatorSpec::two_frequency(z, z));
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LE(std::abs(a.diagonal()[i] - b.diagonal()[i]), 1e-12);
}

TEST(TwoFrequency, NormBoundWithAboveGapXi) {
  const PermittivityModel m(1.0, {Layer{1.0, 2.0, OscillatorDensity({Line{3.0, 0.5}}, {}, 2.5)}});
  const auto g = Grid1D::dirichlet(3.0, 40);
  const double w0 = 1.0;
  for (cplx z : {cplx(0.5, 0.2), cplx(2.0, 0.05)})
    for (double nu : {2.6, 4.0}) {
      const cplx xi = xi_map(z, nu, w0);
      ASSERT_GT(xi.imag(), 0.0);
      const auto op = assemble(g, m, OperatorSpec::two_frequency(z, xi));
      EXPECT_LE(inverse_norm(op), inverse_norm_bound(z));
    }
}

TEST(NonDispersive, UsesConstantPermittivity) {
  const PermittivityModel m(1.0, {Layer{1.0, 2.0, OscillatorDensity({Line{3.0, 1.0}}, {}, 2.0)}});
  const auto g = Grid1D::dirichlet(3.0, 29);
  const cplx z{0.7, 0.1};
  const auto op = assemble(g, m, OperatorSpec::nondispersive(z, 1.0));
  const double h = g.h();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.x(i);
    const double eps = (x >= 1.0 && x < 2.0) ? 1.25 : 1.0;
    EXPECT_LE(std::abs(op.diagonal()[i] - (z * z * eps - 2.0 / (h * h))), 1e-12);
  }
}

TEST(Bloch, PlaneWaveEigenvalues) {
  const double L = 2.0;
  const cplx k{0.4, 0.0}, z{1.0, 0.3};
  const auto g = Grid1D::bloch(L, 32, k);
  const auto op = assemble(g, PermittivityModel::vacuum(), OperatorSpec::dispersive(z));
  EXPECT_EQ(op.kind(), OperatorKind::bloch);
  const double h = g.h();
  for (int m : {0, 1, 5}) {
    std::vector<cplx> u(g.size());
    for (std::size_t j = 0; j < u.size(); ++j) u[j] = std::exp(kI * (2.0 * kPi * m * g.x(j) / L));
    const double q = k.real() + 2.0 * kPi * m / L;
    const cplx lambda = z * z + (2.0 * std::cos(q * h) - 2.0) / (h * h);
    const auto hu = op.apply(u);
    for (std::size_t j = 0; j < u.size(); ++j) EXPECT_LE(std::abs(hu[j] - lambda * u[j]), 1e-10);
  }
}

TEST(Bloch, SolveAndDomain) {
  const auto g = Grid1D::bloch(3.0, 40, {0.5, 0.1});
  const auto m = lorentz_slab();
  const auto op = assemble(g, m, OperatorSpec::dispersive({1.0, 0.5}));
  const auto src = random_vector(g.size(), 9);
  EXPECT_LE(solve(op, src).residual, 1e-12);
  EXPECT_THROW(assemble(g, m, OperatorSpec::dispersive({1.0, 0.1})), DomainError);
  const PermittivityModel outside(1.0, {Layer{2.5, 3.5, OscillatorDensity({}, {LorentzPart{1, 2, 0.1}})}});
  EXPECT_THROW(assemble(g, outside, OperatorSpec::dispersive({1.0, 0.5})), PeriodicityError);
  const auto e = bloch_imag_eigs(0.1, {1.0, 0.5});
  EXPECT_DOUBLE_EQ(e[0], 0.5);
  EXPECT_DOUBLE_EQ(e[2], 0.4);
}

TEST(Bloch, NormBoundWithShiftedMargin) {
  const auto m = lorentz_slab();
  const cplx k{0.3, 0.2};
  const auto g = Grid1D::bloch(3.0, 48, k);
  for (cplx z : {cplx(1.0, 0.6), cplx(2.5, 0.9)}) {
    const auto op = assemble(g, m, OperatorSpec::dispersive(z));
    const double bound = 1.0 / (std::abs(z) * (z.imag() - std::abs(k.imag())));
    EXPECT_LE(inverse_norm(op), bound) << z;
  }
}

TEST(ResolventRay, VacuumZeroAndLorentzDecays) {
  const auto g = Grid1D::dirichlet(3.0, 40);
  const std::vector<double> om{10.0, 100.0, 1000.0};
  for (double v : resolvent_difference_ray(PermittivityModel::vacuum(), g, 1.0, om)) EXPECT_EQ(v, 0.0);
  const auto r = resolvent_difference_ray(lorentz_slab(), g, 1.0, om);
  EXPECT_GT(r[0], r[1]);
  EXPECT_GT(r[1], r[2]);
  EXPECT_DOUBLE_EQ(resolvent_difference_cap(1.0, 2.0), 0.25);
  EXPECT_THROW(resolvent_difference_ray(lorentz_slab(), g, 0.0, om), DomainError);
}

#pragma once

// Run-config driven certificate commands. A run config looks like
//
//   { "command": "green", "medium": "media/lorentz.json",
//     "grid": { "L": 3.14, "N": 64 },
//     "checks": [ { "kind": "reciprocity", "z": [ {"re": 0, "im": 1} ] }, ... ] }
//
// Each check expands into one or more report rows, in config order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hg/cli/config.hpp"
#include "hg/cli/report.hpp"
#include "hg/dispersion.hpp"
#include "hg/freespace.hpp"
#include "hg/helmholtz.hpp"
#include "hg/parallel.hpp"
#include "hg/spectral.hpp"
#include "hg/transforms.hpp"

namespace hg::cli {

struct RunContext {
  std::filesystem::path base_dir;
  std::uint64_t seed = 0;
  std::optional<PermittivityModel> medium;
  std::optional<Grid1D> grid;

  const PermittivityModel& model() const {
    if (!medium) throw InputError("this check needs a 'medium' file");
    return *medium;
  }
  const Grid1D& need_grid() const {
    if (!grid) throw InputError("this check needs a 'grid' block");
    return *grid;
  }
};

struct CheckMeta {
  std::string id;
  json params;
  bool expect_fail = false;
};

inline Row make_row(const CheckMeta& m, const std::string& suffix, double measured, double bound,
                    double tolerance, double error, json extra = json::object()) {
  Row r;
  r.id = suffix.empty() ? m.id : m.id + "." + suffix;
  r.params = m.params;
  for (auto it = extra.begin(); it != extra.end(); ++it) r.params[it.key()] = it.value();
  r.measured = measured;
  r.bound = bound;
  r.tolerance = tolerance;
  r.error_estimate = error;
  r.expect_fail = m.expect_fail;
  return r;
}

namespace detail {

inline double tolerance_of(Section& s, double fallback) {
  return positive(s.opt<double>("tolerance", fallback), s.where() + ".tolerance");
}

struct LabeledDensity {
  std::string label;
  OscillatorDensity density;
  double x;  // a point inside the layer
};

inline std::vector<LabeledDensity> densities(const PermittivityModel& m) {
  std::vector<LabeledDensity> out;
  for (std::size_t i = 0; i < m.layers().size(); ++i) {
    const auto& l = m.layers()[i];
    out.push_back({"layer" + std::to_string(i), l.density, 0.5 * (l.x0 + l.x1)});
  }
  if (out.empty()) out.push_back({"background", OscillatorDensity{}, 0.0});
  return out;
}

inline double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

inline std::vector<cplx> halton_vector(std::size_t n, std::uint64_t offset) {
  std::vector<cplx> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = {radical_inverse(offset + i + 1, 2) - 0.5, radical_inverse(offset + i + 1, 3) - 0.5};
  return v;
}

// Quasi-random point in a box; log spacing in Im when the box is above the axis.
inline cplx halton_point(std::uint64_t index, std::pair<double, double> re,
                         std::pair<double, double> im) {
  const double u = radical_inverse(index, 2), v = radical_inverse(index, 3);
  const double y = im.first > 0.0 ? im.first * std::pow(im.second / im.first, v)
                                  : im.first + (im.second - im.first) * v;
  return {re.first + (re.second - re.first) * u, y};
}

inline ProbeVectors probes_or_default(Section& s, const Grid1D& grid) {
  if (s.has("probe")) return probe_vectors(grid, read_probe(s.sub("probe")));
  return probe_vectors(grid, Probe::gaussian(0.5 * grid.length(), 0.125 * grid.length()));
}

// Medium for cavity-style checks: "epsilon" gives a constant cavity, else the
// run's medium file; "omega0" selects the non-dispersive construction.
inline CavityMedium cavity_medium(Section& s, const RunContext& ctx) {
  CavityMedium m;
  if (s.has("epsilon")) m.model = PermittivityModel(s.req<double>("epsilon"));
  else m.model = ctx.model();
  if (s.has("omega0")) m.omega0 = positive(s.req<double>("omega0"), "omega0");
  return m;
}

inline json complex_json(cplx z) { return format_complex(z); }

// max_{t < cutoff} |v| / max_t |v|, and the matching error ratio.
inline std::pair<double, double> leak_ratio(std::span<const double> times,
                                            const std::vector<Estimated<double>>& v,
                                            double cutoff) {
  double peak = 0.0, leak = 0.0, err = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < times.size(); ++i) {
    peak = std::max(peak, std::abs(v[i].value));
    if (times[i] < cutoff) {
      any = true;
      leak = std::max(leak, std::abs(v[i].value));
      err = std::max(err, v[i].error);
    }
  }
  if (!any) throw InputError("time list has no sample before the causal cutoff");
  if (peak == 0.0) return {0.0, 0.0};
  return {leak / peak, err / peak};
}

inline std::vector<double> read_times(Section& s) {
  auto t = s.req<std::vector<double>>("times");
  if (t.empty()) throw InputError(s.where() + ".times must not be empty");
  return t;
}

inline std::size_t nearest_node(const Grid1D& g, double x) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < g.size(); ++i)
    if (std::abs(g.x(i) - x) < std::abs(g.x(best) - x)) best = i;
  return best;
}

}  // namespace detail

using CheckHandler = std::function<void(Section&, RunContext&, const CheckMeta&, std::vector<Row>&)>;
using CheckTable = std::map<std::string, CheckHandler>;

// ---------------------------------------------------------------- kk-eps

inline CheckTable kk_eps_checks() {
  CheckTable t;
  t["kk_roundtrip"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const auto zs = read_z_grid(s.sub("z_grid"));
    const double tol = detail::tolerance_of(s, 1e-6);
    QuadratureSpec q;
    q.rel_tol = s.opt<double>("quad_rel_tol", q.rel_tol);
    s.done();
    for (const auto& d : detail::densities(ctx.model())) {
      std::vector<double> rel(zs.size()), err(zs.size());
      parallel_for(zs.size(), [&](std::size_t i) {
        const auto rec = kk_reconstruct_permittivity(d.density, zs[i], q);
        const cplx closed = kEps0 + d.density.response(zs[i]);
        rel[i] = std::abs(rec.value - closed) / std::abs(closed);
        err[i] = rec.error / std::abs(closed);
      });
      rows.push_back(make_row(m, d.label, *std::max_element(rel.begin(), rel.end()), tol, tol,
                              *std::max_element(err.begin(), err.end()),
                              {{"layer", d.label}, {"points", zs.size()}}));
    }
  };
  t["passivity"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const auto n = s.opt<std::size_t>("samples", 10000);
    const auto re = read_range(s, "re");
    const auto im = read_range(s, "im");
    const double tol = detail::tolerance_of(s, 1e-12);
    s.done();
    if (!(im.first > 0.0)) throw DomainError("passivity box must lie in Im z > 0");
    const auto& model = ctx.model();
    for (const auto& d : detail::densities(model)) {
      std::vector<double> margin(n);
      parallel_for(n, [&](std::size_t i) {
        margin[i] = passivity_margin(model, d.x, detail::halton_point(ctx.seed + i + 1, re, im));
      });
      const double worst = n ? *std::min_element(margin.begin(), margin.end()) : 0.0;
      rows.push_back(make_row(m, d.label, -worst, tol, tol, 0.0,
                              {{"layer", d.label}, {"min_margin", worst}}));
    }
  };
  t["sum_rule"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const double tol = detail::tolerance_of(s, 1e-8);
    s.done();
    for (const auto& d : detail::densities(ctx.model())) {
      const auto integral = sigma_integral(d.density);
      const double exact = chi_dot_at_zero(d.density);
      const double scale = exact > 0.0 ? exact : 1.0;
      rows.push_back(make_row(m, d.label, std::abs(integral.value - exact) / scale, tol, tol,
                              integral.error / scale,
                              {{"layer", d.label}, {"chi_dot", exact}}));
    }
  };
  t["schwarz"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const auto zs = read_z_grid(s.sub("z_grid"));
    const double tol = detail::tolerance_of(s, 1e-14);
    s.done();
    const auto& model = ctx.model();
    for (const auto& d : detail::densities(model)) {
      double worst = 0.0;
      for (const cplx z : zs) {
        const cplx a = eval_permittivity(model, d.x, z);
        const cplx b = eval_permittivity(model, d.x, -std::conj(z));
        worst = std::max(worst, std::abs(b - std::conj(a)) / std::abs(a));
      }
      rows.push_back(make_row(m, d.label, worst, tol, tol, 0.0, {{"layer", d.label}}));
    }
  };
  t["nondispersive"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const double omega0 = s.req<double>("omega0");
    s.done();
    for (const auto& d : detail::densities(ctx.model())) {
      const double eps = build_nondispersive(d.density, omega0);
      const double v = phase_velocity(eps);
      rows.push_back(make_row(m, d.label, std::max(kEps0 - eps, v - kLightSpeed), 0.0, 0.0, 0.0,
                              {{"layer", d.label}, {"epsilon", eps}, {"velocity", v}}));
    }
  };
  return t;
}

// ---------------------------------------------------------------- green

inline CheckTable green_checks() {
  CheckTable t;
  t["residual"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const auto zs = read_z_list(s, "z");
    const double tol = detail::tolerance_of(s, 1e-10);
    s.done();
    const auto& g = ctx.need_grid();
    for (std::size_t k = 0; k < zs.size(); ++k) {
      const auto op = assemble(g, ctx.model(), OperatorSpec::dispersive(zs[k]));
      const auto src = detail::halton_vector(g.size(), ctx.seed + k * g.size());
      const auto r = solve(op, src);
      rows.push_back(make_row(m, "z" + std::to_string(k), r.residual, tol, tol, 0.0,
                              {{"z", detail::complex_json(zs[k])}}));
    }
  };
  t["reciprocity"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const auto zs = read_z_list(s, "z");
    const double tol = detail::tolerance_of(s, 1e-12);
    s.done();
    for (std::size_t k = 0; k < zs.size(); ++k) {
      const auto g = green_matrix(assemble(ctx.need_grid(), ctx.model(), OperatorSpec::dispersive(zs[k])));
      const CMatrix diff = g.values - g.values.transpose();
      rows.push_back(make_row(m, "z" + std::to_string(k),
                              detail::max_abs(diff) / detail::max_abs(g.values), tol, tol, 0.0,
                              {{"z", detail::complex_json(zs[k])}}));
    }
  };
  t["schwarz"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const auto zs = read_z_list(s, "z");
    const auto& g = ctx.need_grid();
    const auto p = detail::probes_or_default(s, g);
    const double tol = detail::tolerance_of(s, 1e-12);
    s.done();
    for (std::size_t k = 0; k < zs.size(); ++k) {
      const cplx a = coefficient(assemble(g, ctx.model(), OperatorSpec::dispersive(zs[k])), p.phi, p.psi);
      const cplx b = coefficient(assemble(g, ctx.model(), OperatorSpec::dispersive(-std::conj(zs[k]))),
                                 p.phi, p.psi);
      rows.push_back(make_row(m, "z" + std::to_string(k), std::abs(b - std::conj(a)) / std::abs(a),
                              tol, tol, 0.0, {{"z", detail::complex_json(zs[k])}}));
    }
  };
  t["norm_bound"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const auto zs = read_z_grid(s.sub("z_grid"));
    const std::string op_kind = s.opt<std::string>("operator", "dispersive");
    const auto n_xi = s.opt<std::size_t>("xi_samples", 5);
    std::pair<double, double> xre{-5.0, 5.0}, xim{0.05, 5.0};
    if (s.has("xi_box")) {
      auto b = s.sub("xi_box");
      xre = read_range(b, "re");
      xim = read_range(b, "im");
      b.done();
    }
    const double tol = detail::tolerance_of(s, 1e-8);
    s.done();
    if (op_kind != "dispersive" && op_kind != "two_frequency")
      throw InputError(s.where() + ": operator must be dispersive or two_frequency");
    const bool two = op_kind == "two_frequency";
    const std::size_t per_z = two ? n_xi : 1;
    const auto& g = ctx.need_grid();
    std::vector<double> ratio(zs.size() * per_z);
    parallel_for(ratio.size(), [&](std::size_t idx) {
      const cplx z = zs[idx / per_z];
      const OperatorSpec spec =
          two ? OperatorSpec::two_frequency(z, detail::halton_point(ctx.seed + idx + 1, xre, xim))
              : OperatorSpec::dispersive(z);
      ratio[idx] = inverse_norm(assemble(g, ctx.model(), spec)) / inverse_norm_bound(z);
    });
    const auto worst = std::max_element(ratio.begin(), ratio.end());
    const std::size_t at = static_cast<std::size_t>(worst - ratio.begin());
    rows.push_back(make_row(m, "", *worst, 1.0 + tol, tol, 0.0,
                            {{"samples", ratio.size()},
                             {"worst_z", detail::complex_json(zs[at / per_z])}}));
  };
  t["bloch_bound"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const auto n = s.opt<std::size_t>("samples", 64);
    const auto re = read_range(s, "re");
    const auto margin = read_range(s, "margin");
    const auto kre = read_range(s, "k_re");
    const auto kim = read_range(s, "k_im");
    const double factor = s.opt<double>("factor", 2.0);
    s.done();
    if (!(margin.first > 0.0)) throw DomainError("Bloch margin must be > 0");
    const auto& g = ctx.need_grid();
    std::vector<double> ratio(n);
    parallel_for(n, [&](std::size_t i) {
      const std::uint64_t idx = ctx.seed + i + 1;
      const cplx k{kre.first + (kre.second - kre.first) * radical_inverse(idx, 5),
                   kim.first + (kim.second - kim.first) * radical_inverse(idx, 7)};
      const double mg = margin.first + (margin.second - margin.first) * radical_inverse(idx, 3);
      const cplx z{re.first + (re.second - re.first) * radical_inverse(idx, 2),
                   std::abs(k.imag()) + mg};
      const auto op = assemble(Grid1D::bloch(g.length(), g.size(), k), ctx.model(),
                               OperatorSpec::dispersive(z));
      ratio[i] = inverse_norm(op) * std::abs(z) * mg;
    });
    const double worst = n ? *std::max_element(ratio.begin(), ratio.end()) : 0.0;
    rows.push_back(make_row(m, "", worst, factor, factor, 0.0, {{"samples", n}}));
  };
  return t;
}

inline void export_green(Section s, const RunContext& ctx) {
  const cplx z = read_complex(s.sub("z"));
  const std::string path = s.req<std::string>("path");
  s.done();
  const auto g = green_matrix(assemble(ctx.need_grid(), ctx.model(), OperatorSpec::dispersive(z)));
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << "i,j,x_i,x_j,value\n";
  for (Eigen::Index i = 0; i < g.values.rows(); ++i)
    for (Eigen::Index j = 0; j < g.values.cols(); ++j)
      out << i << ',' << j << ',' << format_number(g.grid.x(static_cast<std::size_t>(i))) << ','
          << format_number(g.grid.x(static_cast<std::size_t>(j))) << ','
          << format_complex(g.values(i, j)) << '\n';
}

// ---------------------------------------------------------------- modes

namespace detail {

struct KkGreenRun {
  double rel_error;
  double error_estimate;
};

inline KkGreenRun run_kk_green(const CavityMedium& medium, const Grid1D& grid,
                               const ProbeVectors& p, const FrequencyGrid& nu, double zeta,
                               Reference ref, cplx z, KernelForm form) {
  const auto nodes = nu.nodes();
  const auto d = d_density(medium, grid, p, nodes, zeta, ref);
  const auto rec = kk_reconstruct_green(d, z, form);
  const cplx direct = coefficient(assemble(grid, medium.model, medium.spec(z)), p.phi, p.psi);
  return {std::abs(rec.value - direct) / std::abs(direct), rec.error / std::abs(direct)};
}

inline KernelForm read_form(Section& s) {
  const std::string f = s.opt<std::string>("form", "broadened");
  if (f == "broadened") return KernelForm::broadened;
  if (f == "limit") return KernelForm::limit;
  throw InputError(s.where() + ": form must be broadened or limit");
}

inline const Grid1D& cavity_grid(const RunContext& ctx) {
  const auto& g = ctx.need_grid();
  if (g.boundary() != Boundary::dirichlet) throw InputError("cavity checks need a Dirichlet grid");
  return g;
}

}  // namespace detail

inline CheckTable modes_checks() {
  CheckTable t;
  t["expansion_identity"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const double eps = s.opt<double>("epsilon", 1.0);
    const cplx z = read_complex(s.sub("z"));
    const double tol = detail::tolerance_of(s, 1e-10);
    s.done();
    const auto& g = detail::cavity_grid(ctx);
    const auto modes = cavity_modes(g, eps);
    const auto ex = mode_expansion_green(modes, z, modes.size());
    const auto direct = green_matrix(assemble(g, PermittivityModel(eps), OperatorSpec::dispersive(z)));
    rows.push_back(make_row(m, "", detail::max_abs(ex.green.values - direct.values) /
                                       detail::max_abs(direct.values),
                            tol, tol, 0.0, {{"N", g.size()}}));
  };
  t["tail_bound"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const double eps = s.opt<double>("epsilon", 1.0);
    const cplx z = read_complex(s.sub("z"));
    const auto trunc = s.req<std::size_t>("truncation_M");
    s.done();
    const auto& g = detail::cavity_grid(ctx);
    const auto modes = cavity_modes(g, eps);
    const auto ex = mode_expansion_green(modes, z, trunc);
    const auto direct = green_matrix(assemble(g, PermittivityModel(eps), OperatorSpec::dispersive(z)));
    const double scale = detail::max_abs(direct.values);
    // Rounding slack: the bound is exact arithmetic, the sums are not.
    const double slack = 1e-12 * scale;
    rows.push_back(make_row(m, "", detail::max_abs(ex.green.values - direct.values),
                            ex.tail_bound + slack, slack, 0.0, {{"tail_bound", ex.tail_bound}}));
  };
  t["kk_green"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const auto medium = detail::cavity_medium(s, ctx);
    const double zeta = positive(s.req<double>("zeta"), "zeta");
    const auto nu = read_nu_grid(s.sub("nu_grid"));
    const Reference ref = read_reference(s);
    const auto& g = detail::cavity_grid(ctx);
    const auto p = detail::probes_or_default(s, g);
    const cplx z = read_complex(s.sub("z"));
    const KernelForm form = detail::read_form(s);
    const double tol = detail::tolerance_of(s, 1e-3);
    s.done();
    const auto r = detail::run_kk_green(medium, g, p, nu, zeta, ref, z, form);
    rows.push_back(make_row(m, "", r.rel_error, tol, tol, r.error_estimate));
  };
  t["kk_green_trend"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const auto medium = detail::cavity_medium(s, ctx);
    const double zeta = positive(s.req<double>("zeta"), "zeta");
    const double ratio = s.opt<double>("ratio", 4.0);
    const double per_zeta = positive(s.opt<double>("points_per_zeta", 5.0), "points_per_zeta");
    const double nu_max = positive(s.req<double>("nu_max"), "nu_max");
    const double min_factor = s.opt<double>("min_factor", 3.0);
    const Reference ref = read_reference(s);
    const auto& g = detail::cavity_grid(ctx);
    const auto p = detail::probes_or_default(s, g);
    const cplx z = read_complex(s.sub("z"));
    const KernelForm form = detail::read_form(s);
    s.done();
    auto run = [&](double zt) {
      // Same number of nodes per broadening width at every zeta.
      const auto half = static_cast<std::size_t>(std::ceil(nu_max * per_zeta / zt));
      return detail::run_kk_green(medium, g, p, FrequencyGrid{nu_max, 2 * half + 1}, zt, ref, z, form);
    };
    const auto a = run(zeta), b = run(zeta / ratio);
    rows.push_back(make_row(m, "", b.rel_error / a.rel_error, 1.0 / min_factor, 1.0 / min_factor,
                            0.0, {{"error_coarse", a.rel_error}, {"error_fine", b.rel_error}}));
  };
  t["rho_weights"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const double eps = s.opt<double>("epsilon", 1.0);
    const double zeta = positive(s.req<double>("zeta"), "zeta");
    const auto nu = read_nu_grid(s.sub("nu_grid"));
    const auto which = s.req<std::vector<std::size_t>>("modes");
    const double factor = s.opt<double>("factor", 5.0);
    const auto& g = detail::cavity_grid(ctx);
    const auto p = detail::probes_or_default(s, g);
    s.done();
    const auto modes = cavity_modes(g, eps);
    const CavityMedium medium{PermittivityModel(eps), std::nullopt};
    const auto d = d_density(medium, g, p, nu.nodes(), zeta, Reference::none);
    double total = 0.0;
    for (std::size_t n = 0; n < modes.size(); ++n)
      total += 0.5 * std::norm(modes.overlap(n, p.psi));
    const double bound = factor * zeta / modes.omega[0];
    for (const std::size_t n1 : which) {
      if (n1 == 0 || n1 > modes.size()) throw InputError("rho_weights mode index out of range");
      const std::size_t n = n1 - 1;
      const double below = n == 0 ? 2.0 * modes.omega[0] : modes.omega[n] - modes.omega[n - 1];
      const double above = n + 1 < modes.size() ? modes.omega[n + 1] - modes.omega[n] : below;
      const double half = 0.5 * std::min(below, above);
      const auto w = density_weight(d, modes.omega[n] - half, modes.omega[n] + half);
      const double expected = 0.5 * std::norm(modes.overlap(n, p.psi));
      rows.push_back(make_row(m, "n" + std::to_string(n1), std::abs(w.value - expected) / total,
                              bound, bound, w.error / total,
                              {{"mode", n1}, {"weight", w.value}, {"expected", expected}}));
    }
  };
  return t;
}

// ---------------------------------------------------------------- causality

namespace detail {

inline SourceProfile read_profile(Section& s) {
  SourceProfile p;
  const std::string kind = s.opt<std::string>("profile", "smooth_pulse");
  if (kind == "smooth_pulse") {
    p.kind = SourceProfile::Kind::smooth_pulse;
    p.tau = positive(s.opt<double>("tau", 1.0), "tau");
  } else if (kind == "exp_switch") {
    p.kind = SourceProfile::Kind::exp_switch;
    p.omega_s = s.req<double>("omega_s");
  } else {
    throw InputError(s.where() + ": profile must be smooth_pulse or exp_switch");
  }
  return p;
}

struct FieldSetup {
  CavityMedium medium;
  SourceProfile profile;
  SpatialSource source;
  std::size_t observe;
  std::vector<double> times;
  ContourSpec contour;
};

inline FieldSetup read_field(Section& s, const RunContext& ctx) {
  const auto& g = ctx.need_grid();
  FieldSetup f{cavity_medium(s, ctx), {}, {}, 0, {}, {}};
  auto src = s.sub("source");
  f.profile = read_profile(src);
  f.source.center = src.req<double>("center");
  f.source.width = positive(src.req<double>("width"), "source width");
  f.source.amplitude = src.opt<double>("amplitude", 1.0);
  src.done();
  if (s.has("observe_x")) f.observe = nearest_node(g, s.req<double>("observe_x"));
  else f.observe = s.req<std::size_t>("observe");
  f.times = read_times(s);
  f.contour = read_contour(s.sub("contour"));
  return f;
}

}  // namespace detail

inline CheckTable causality_checks() {
  CheckTable t;
  t["chi"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const double x = s.req<double>("x");
    const auto times = detail::read_times(s);
    const auto c = read_contour(s.sub("contour"));
    const double tol = detail::tolerance_of(s, 1e-6);
    s.done();
    const auto v = susceptibility(ctx.model(), x, times, c.eta, FrequencyWindow{c.half_width, c.n_points});
    const auto [leak, err] = detail::leak_ratio(times, v, 0.0);
    rows.push_back(make_row(m, "", leak, tol, tol, err));
  };
  t["x_operator"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const auto medium = detail::cavity_medium(s, ctx);
    const auto& g = ctx.need_grid();
    const auto p = detail::probes_or_default(s, g);
    const Reference ref = read_reference(s);
    const auto times = detail::read_times(s);
    const auto c = read_contour(s.sub("contour"));
    const double tol = detail::tolerance_of(s, 1e-6);
    const double real_tol = positive(s.opt<double>("reality_tolerance", 1e-8), "reality_tolerance");
    s.done();
    const auto v = x_operator_coefficient(medium, g, p, times, c, ref);
    std::vector<Estimated<double>> mag(v.size());
    double peak = 0.0, imag = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      mag[i] = {std::abs(v[i].value), v[i].error, true};
      peak = std::max(peak, std::abs(v[i].value));
      if (times[i] > 0.0) imag = std::max(imag, std::abs(v[i].value.imag()));
    }
    const auto [leak, err] = detail::leak_ratio(times, mag, 0.0);
    rows.push_back(make_row(m, "causal", leak, tol, tol, err));
    rows.push_back(make_row(m, "reality", peak > 0.0 ? imag / peak : 0.0, real_tol, real_tol, 0.0));
  };
  t["field"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const auto f = detail::read_field(s, ctx);
    const double tol = detail::tolerance_of(s, 1e-6);
    s.done();
    const auto v = time_domain_field(f.medium, ctx.need_grid(), f.profile, f.source, f.observe,
                                     f.times, f.contour);
    const auto [leak, err] = detail::leak_ratio(f.times, v, 0.0);
    rows.push_back(make_row(m, "", leak, tol, tol, err, {{"observe", f.observe}}));
  };
  t["front"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const auto f = detail::read_field(s, ctx);
    const double widths = s.opt<double>("width_factor", 3.0);
    const double tol = detail::tolerance_of(s, 1e-4);
    s.done();
    const auto& g = ctx.need_grid();
    const double d = std::abs(g.x(f.observe) - f.source.center);
    const double cutoff = d / kLightSpeed - widths * f.source.width;
    const auto v = time_domain_field(f.medium, g, f.profile, f.source, f.observe, f.times, f.contour);
    const auto [leak, err] = detail::leak_ratio(f.times, v, cutoff);
    rows.push_back(make_row(m, "", leak, tol, tol, err,
                            {{"distance", d}, {"cutoff", cutoff}, {"observe", f.observe}}));
  };
  return t;
}

// ---------------------------------------------------------------- analyticity

inline CheckTable analyticity_checks() {
  CheckTable t;
  t["z_loop"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const auto loop = read_loop(s.sub("loop"));
    const auto& g = ctx.need_grid();
    const auto p = detail::probes_or_default(s, g);
    const double tol = detail::tolerance_of(s, 1e-8);
    s.done();
    const double defect = cauchy_loop(
        [&](cplx z) { return coefficient(assemble(g, ctx.model(), OperatorSpec::dispersive(z)), p.phi, p.psi); },
        loop);
    rows.push_back(make_row(m, "", defect, tol, tol, 0.0));
  };
  t["xi_loop"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const cplx z = read_complex(s.sub("z"));
    const auto loop = read_loop(s.sub("loop"));
    const auto& g = ctx.need_grid();
    const auto p = detail::probes_or_default(s, g);
    const double tol = detail::tolerance_of(s, 1e-8);
    s.done();
    const double defect = cauchy_loop(
        [&](cplx xi) {
          return coefficient(assemble(g, ctx.model(), OperatorSpec::two_frequency(z, xi)), p.phi, p.psi);
        },
        loop);
    rows.push_back(make_row(m, "", defect, tol, tol, 0.0));
  };
  t["joint_z_loop"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const cplx k = read_complex(s.sub("k"));
    const auto loop = read_loop(s.sub("loop"));
    const double min_margin = s.opt<double>("min_margin", 0.1);
    const auto& g0 = ctx.need_grid();
    const auto g = Grid1D::bloch(g0.length(), g0.size(), k);
    const auto p = detail::probes_or_default(s, g);
    const double tol = detail::tolerance_of(s, 1e-8);
    s.done();
    const double margin = loop.lo.imag() - kLightSpeed * std::abs(k.imag());
    if (margin < min_margin) throw DomainError("joint loop leaves the margin Im z - c|Im k| >= min_margin");
    const double defect = cauchy_loop(
        [&](cplx z) { return coefficient(assemble(g, ctx.model(), OperatorSpec::dispersive(z)), p.phi, p.psi); },
        loop);
    rows.push_back(make_row(m, "", defect, tol, tol, 0.0, {{"margin", margin}}));
  };
  t["joint_k_loop"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const cplx z = read_complex(s.sub("z"));
    const auto loop = read_loop(s.sub("loop"), false);
    const double min_margin = s.opt<double>("min_margin", 0.1);
    const auto& g0 = ctx.need_grid();
    const auto g = Grid1D::bloch(g0.length(), g0.size(), {});
    const auto p = detail::probes_or_default(s, g);
    const double tol = detail::tolerance_of(s, 1e-8);
    s.done();
    const double margin =
        z.imag() - kLightSpeed * std::max(std::abs(loop.lo.imag()), std::abs(loop.hi.imag()));
    if (margin < min_margin) throw DomainError("joint loop leaves the margin Im z - c|Im k| >= min_margin");
    const double defect = cauchy_loop(
        [&](cplx k) {
          return coefficient(assemble(g.with_bloch_k(k), ctx.model(), OperatorSpec::dispersive(z)),
                             p.phi, p.psi);
        },
        loop);
    rows.push_back(make_row(m, "", defect, tol, tol, 0.0, {{"margin", margin}}));
  };
  t["conj_witness"] = [](Section& s, RunContext&, const CheckMeta& m, std::vector<Row>& rows) {
    const auto loop = read_loop(s.sub("loop"));
    const double tol = detail::tolerance_of(s, 1e-2);
    s.done();
    const double defect = cauchy_loop([](cplx z) { return std::conj(z); }, loop);
    rows.push_back(make_row(m, "", defect, tol, tol, 0.0));
  };
  return t;
}

// ---------------------------------------------------------------- asymptotic

namespace detail {

inline TestField3D read_field3d(Section s) {
  TestField3D f;
  auto vec3 = [&](const std::string& key, Vec3 fallback) {
    if (!s.has(key)) return fallback;
    const auto v = s.req<std::vector<double>>(key);
    if (v.size() != 3) throw InputError(s.where() + "." + key + ": expected 3 numbers");
    return Vec3(v[0], v[1], v[2]);
  };
  f.center_k = vec3("center_k", Vec3::Zero());
  f.position = vec3("position", Vec3::Zero());
  const Vec3 pre = vec3("polarization", Vec3(1.0, 0.0, 0.0));
  const Vec3 pim = vec3("polarization_im", Vec3::Zero());
  f.polarization = pre.cast<cplx>() + kI * pim.cast<cplx>();
  f.width = positive(s.opt<double>("width", 1.0), "field width");
  s.done();
  return f;
}

inline FreeQuadrature read_free_quad(Section& s) {
  FreeQuadrature q;
  if (!s.has("quad")) return q;
  auto qs = s.sub("quad");
  q.panels = qs.opt<std::size_t>("panels", q.panels);
  q.box_sigmas = positive(qs.opt<double>("box_sigmas", q.box_sigmas), "box_sigmas");
  qs.done();
  return q;
}

}  // namespace detail

inline CheckTable asymptotic_checks() {
  CheckTable t;
  t["free_ladder"] = [](Section& s, RunContext&, const CheckMeta& m, std::vector<Row>& rows) {
    const auto phi = detail::read_field3d(s.sub("phi"));
    const auto psi = s.has("psi") ? detail::read_field3d(s.sub("psi")) : phi;
    const double theta = s.req<double>("theta");
    const auto radii = s.opt<std::vector<double>>("radii", {10.0, 100.0, 1000.0});
    const auto q = detail::read_free_quad(s);
    const double tol = detail::tolerance_of(s, 1e-3);
    s.done();
    if (radii.size() < 2) throw InputError("free_ladder needs at least two radii");
    const auto d = asymptotic_defect(phi, psi, theta, radii, q);
    const double norm = std::sqrt(std::abs(inner_product(phi, phi)) * std::abs(inner_product(psi, psi)));
    double ratio = 0.0;
    json ladder = json::array();
    for (std::size_t i = 0; i < d.size(); ++i) {
      ladder.push_back(d[i].value);
      if (i > 0) ratio = std::max(ratio, d[i].value / d[i - 1].value);
    }
    rows.push_back(make_row(m, "monotone", ratio, std::nextafter(1.0, 0.0), 0.0, 0.0,
                            {{"defects", ladder}}));
    rows.push_back(make_row(m, "final", d.back().value / norm, tol, tol, d.back().error / norm,
                            {{"norm", norm}}));
  };
  t["resolvent_ray"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const double eta = s.req<double>("eta");
    const auto omegas = s.req<std::vector<double>>("omegas");
    const double omega_min = s.opt<double>("omega_min", 100.0);
    const double factor = s.opt<double>("cap_factor", 1.5);
    s.done();
    const auto& model = ctx.model();
    const auto v = resolvent_difference_ray(model, ctx.need_grid(), eta, omegas);
    const double cap = resolvent_difference_cap(model.max_chi_dot(), eta);
    double worst = 0.0;
    json values = json::array();
    for (std::size_t i = 0; i < v.size(); ++i) {
      values.push_back(v[i]);
      if (omegas[i] >= omega_min) worst = std::max(worst, cap > 0.0 ? v[i] / cap : v[i]);
    }
    rows.push_back(make_row(m, "", worst, factor, factor, 0.0, {{"cap", cap}, {"values", values}}));
  };
  t["cap_scaling"] = [](Section& s, RunContext& ctx, const CheckMeta& m, std::vector<Row>& rows) {
    const auto etas = s.req<std::vector<double>>("etas");
    const double tol = detail::tolerance_of(s, 1e-12);
    s.done();
    if (etas.size() < 2) throw InputError("cap_scaling needs two or more eta values");
    const double chi = ctx.model().max_chi_dot();
    double worst = 0.0;
    for (std::size_t i = 1; i < etas.size(); ++i) {
      const double r = resolvent_difference_cap(chi, etas[i]) / resolvent_difference_cap(chi, etas[0]);
      worst = std::max(worst, std::abs(r - sqr(etas[0] / etas[i])));
    }
    rows.push_back(make_row(m, "", worst, tol, tol, 0.0));
  };
  return t;
}

// ---------------------------------------------------------------- driver

inline const std::map<std::string, CheckTable>& command_table() {
  static const std::map<std::string, CheckTable> table{
      {"kk-eps", kk_eps_checks()},         {"green", green_checks()},
      {"modes", modes_checks()},           {"causality", causality_checks()},
      {"analyticity", analyticity_checks()}, {"asymptotic", asymptotic_checks()}};
  return table;
}

inline Report run_command(const std::string& command, const std::filesystem::path& config_path,
                          std::uint64_t seed) {
  const auto& table = command_table();
  const auto it = table.find(command);
  if (it == table.end()) throw InputError("unknown command '" + command + "'");

  const json cfg = read_json(config_path);
  Section root(cfg, config_path.filename().string());
  RunContext ctx;
  ctx.base_dir = config_path.parent_path();
  ctx.seed = seed;
  const std::string declared = root.opt<std::string>("command", command);
  if (declared != command)
    throw InputError("config is for command '" + declared + "', not '" + command + "'");
  if (root.has("medium")) ctx.medium = load_medium(ctx.base_dir / root.req<std::string>("medium"));
  if (root.has("grid")) ctx.grid = read_grid(root.sub("grid"));
  std::optional<Section> export_block;
  if (root.has("export")) {
    if (command != "green") throw InputError("'export' is only valid for the green command");
    export_block.emplace(root.sub("export"));
  }
  auto checks = root.list("checks");
  root.done();
  if (checks.empty()) throw InputError("config has no checks");

  Report report;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    Section& s = checks[i];
    const std::string kind = s.req<std::string>("kind");
    const auto h = it->second.find(kind);
    if (h == it->second.end()) throw InputError(s.where() + ": unknown check kind '" + kind + "'");
    CheckMeta meta;
    meta.id = s.opt<std::string>("id", kind + "[" + std::to_string(i) + "]");
    const std::string expect = s.opt<std::string>("expect", "pass");
    if (expect != "pass" && expect != "fail") throw InputError(s.where() + ": expect must be pass or fail");
    meta.expect_fail = expect == "fail";
    meta.params = s.raw();
    meta.params.erase("expect");
    h->second(s, ctx, meta, report.rows);
  }
  if (export_block) export_green(*export_block, ctx);
  return report;
}

}  // namespace hg::cli

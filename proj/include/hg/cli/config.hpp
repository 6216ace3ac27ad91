#pragma once

// Strict JSON access for medium files and run configs. Every object is read
// through a Section, which remembers the keys it handed out; done() rejects
// anything left over so that a misspelled key fails loudly.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hg/core.hpp"
#include "hg/dispersion.hpp"
#include "hg/helmholtz.hpp"
#include "hg/spectral.hpp"
#include "hg/transforms.hpp"

namespace hg::cli {

using json = nlohmann::json;

class Section {
 public:
  Section(const json& j, std::string where) : j_(&j), where_(std::move(where)) {
    if (!j.is_object()) throw InputError(where_ + ": expected an object");
  }

  const std::string& where() const noexcept { return where_; }
  const json& raw() const noexcept { return *j_; }
  bool has(const std::string& key) const { return j_->contains(key); }

  template <class T>
  T req(const std::string& key) {
    used_.insert(key);
    if (!has(key)) throw InputError(where_ + ": missing key '" + key + "'");
    return as<T>(key);
  }

  template <class T>
  T opt(const std::string& key, T fallback) {
    used_.insert(key);
    return has(key) ? as<T>(key) : fallback;
  }

  Section sub(const std::string& key) {
    used_.insert(key);
    if (!has(key)) throw InputError(where_ + ": missing key '" + key + "'");
    return Section(j_->at(key), where_ + "." + key);
  }

  std::vector<Section> list(const std::string& key) {
    used_.insert(key);
    if (!has(key)) throw InputError(where_ + ": missing key '" + key + "'");
    const json& arr = j_->at(key);
    if (!arr.is_array()) throw InputError(where_ + "." + key + ": expected an array");
    std::vector<Section> out;
    for (std::size_t i = 0; i < arr.size(); ++i)
      out.emplace_back(arr[i], where_ + "." + key + "[" + std::to_string(i) + "]");
    return out;
  }

  void done() const {
    for (const auto& item : j_->items())
      if (!used_.count(item.key())) throw InputError(where_ + ": unknown key '" + item.key() + "'");
  }

 private:
  template <class T>
  T as(const std::string& key) const {
    try {
      return j_->at(key).get<T>();
    } catch (const json::exception& e) {
      throw InputError(where_ + "." + key + ": " + e.what());
    }
  }

  const json* j_;
  std::string where_;
  std::set<std::string> used_;
};

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

inline double positive(double v, const std::string& what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InputError(what + " must be > 0");
  return v;
}

inline cplx read_complex(Section s) {
  const cplx z{s.req<double>("re"), s.req<double>("im")};
  s.done();
  return z;
}

inline std::pair<double, double> read_range(Section& s, const std::string& key) {
  const auto v = s.req<std::vector<double>>(key);
  if (v.size() != 2 || !(v[0] <= v[1])) throw InputError(s.where() + "." + key + ": expected [lo, hi]");
  return {v[0], v[1]};
}

// Medium file:
//   { "unit_system": "normalized" | "si", "background_epsilon": 1.0,
//     "layers": [ { "interval": [x0, x1], "lorentz": [ {wp, w1, gamma} ],
//                   "lines": [ {nu, weight} ], "gap_nu0": 0.0 } ] }
// SI inputs: frequencies in rad/s, permittivities in F/m, line weights in
// F/m (rad/s)^2, lengths in m.
inline PermittivityModel parse_medium(const json& j, const std::string& where = "medium") {
  Section s(j, where);
  const std::string units = s.opt<std::string>("unit_system", "normalized");
  if (units != "normalized" && units != "si") throw InputError(where + ": unknown unit_system");
  const bool si = units == "si";
  const double f = si ? 1.0 / si::kLightSpeed : 1.0;
  const double e = si ? 1.0 / si::kEps0 : 1.0;
  const double w = si ? 1.0 / (si::kEps0 * si::kLightSpeed * si::kLightSpeed) : 1.0;

  const double background = s.opt<double>("background_epsilon", si ? si::kEps0 : 1.0) * e;
  std::vector<Layer> layers;
  if (s.has("layers")) {
    for (auto& ls : s.list("layers")) {
      const auto [x0, x1] = read_range(ls, "interval");
      std::vector<LorentzPart> lorentz;
      std::vector<Line> lines;
      if (ls.has("lorentz"))
        for (auto& p : ls.list("lorentz")) {
          lorentz.push_back({p.req<double>("wp") * f, p.req<double>("w1") * f,
                             p.req<double>("gamma") * f});
          p.done();
        }
      if (ls.has("lines"))
        for (auto& p : ls.list("lines")) {
          lines.push_back({p.req<double>("nu") * f, p.req<double>("weight") * w});
          p.done();
        }
      const double gap = ls.opt<double>("gap_nu0", 0.0) * f;
      ls.done();
      layers.push_back({x0, x1, OscillatorDensity(std::move(lines), std::move(lorentz), gap)});
    }
  }
  s.done();
  return PermittivityModel(background, std::move(layers),
                           si ? UnitSystem::si : UnitSystem::normalized);
}

inline PermittivityModel load_medium(const std::filesystem::path& path) {
  return parse_medium(read_json(path), path.filename().string());
}

// Grid block: { "L", "N", "boundary": "dirichlet" | "bloch", "bloch_k": {re, im} }
inline Grid1D read_grid(Section s) {
  const double length = s.req<double>("L");
  const auto n = s.req<std::size_t>("N");
  const std::string boundary = s.opt<std::string>("boundary", "dirichlet");
  Grid1D g = Grid1D::dirichlet(positive(length, "grid L"), n);
  if (boundary == "bloch") {
    g = Grid1D::bloch(length, n, s.has("bloch_k") ? read_complex(s.sub("bloch_k")) : cplx{});
  } else if (boundary != "dirichlet") {
    throw InputError(s.where() + ": boundary must be dirichlet or bloch");
  }
  s.done();
  return g;
}

// z-grid block: { "re": [lo, hi], "im": [lo, hi], "n_re", "n_im", "log_im" }
inline std::vector<cplx> read_z_grid(Section s) {
  const auto [re0, re1] = read_range(s, "re");
  const auto [im0, im1] = read_range(s, "im");
  const auto nre = s.opt<std::size_t>("n_re", 20);
  const auto nim = s.opt<std::size_t>("n_im", 20);
  const bool log_im = s.opt<bool>("log_im", true);
  s.done();
  if (nre == 0 || nim == 0) throw InputError("z-grid counts must be >= 1");
  if (log_im && !(im0 > 0.0)) throw InputError("log-spaced z-grid needs im > 0");
  std::vector<cplx> zs;
  for (std::size_t b = 0; b < nim; ++b) {
    const double u = nim == 1 ? 0.0 : static_cast<double>(b) / static_cast<double>(nim - 1);
    const double im = log_im ? im0 * std::pow(im1 / im0, u) : im0 + (im1 - im0) * u;
    for (std::size_t a = 0; a < nre; ++a) {
      const double v = nre == 1 ? 0.0 : static_cast<double>(a) / static_cast<double>(nre - 1);
      zs.emplace_back(re0 + (re1 - re0) * v, im);
    }
  }
  return zs;
}

inline std::vector<cplx> read_z_list(Section& s, const std::string& key) {
  std::vector<cplx> zs;
  for (auto& e : s.list(key)) zs.push_back(read_complex(e));
  return zs;
}

inline ContourSpec read_contour(Section s) {
  ContourSpec c;
  c.eta = s.req<double>("eta");
  c.half_width = s.req<double>("half_width");
  c.n_points = s.req<std::size_t>("n_points");
  const std::string rule = s.opt<std::string>("rule", "trapezoid");
  if (rule == "gauss_panel") c.rule = ContourRule::gauss_panel;
  else if (rule != "trapezoid") throw InputError(s.where() + ": rule must be trapezoid or gauss_panel");
  s.done();
  c.validate();
  return c;
}

inline RectangleLoop read_loop(Section s, bool upper_half = true) {
  RectangleLoop loop{read_complex(s.sub("lo")), read_complex(s.sub("hi")),
                     s.opt<std::size_t>("n_per_edge", 64), upper_half};
  s.done();
  loop.validate();
  return loop;
}

// probe: { "kind": "mode_index", "n" } | { "kind": "point_pair", "i", "j" }
//      | { "kind": "gaussian", "center", "width" }
inline Probe read_probe(Section s) {
  const std::string kind = s.req<std::string>("kind");
  Probe p;
  if (kind == "mode_index") {
    p = Probe::mode_index(s.req<std::size_t>("n"));
  } else if (kind == "point_pair") {
    p = Probe::point_pair(s.req<std::size_t>("i"), s.req<std::size_t>("j"));
  } else if (kind == "gaussian") {
    p = Probe::gaussian(s.req<double>("center"), s.req<double>("width"));
  } else {
    throw InputError(s.where() + ": unknown probe kind '" + kind + "'");
  }
  s.done();
  return p;
}

inline Reference read_reference(Section& s) {
  const std::string r = s.opt<std::string>("reference", "vacuum");
  if (r == "vacuum") return Reference::vacuum;
  if (r == "none") return Reference::none;
  throw InputError(s.where() + ": reference must be vacuum or none");
}

inline FrequencyGrid read_nu_grid(Section s) {
  FrequencyGrid g{s.req<double>("max"), s.req<std::size_t>("count")};
  s.done();
  if (!(g.max > 0.0) || g.count < 3) throw InputError("nu_grid needs max > 0 and count >= 3");
  return g;
}

// Van der Corput radical inverse; (index, base 2) x (index, base 3) gives a
// Halton sequence.
inline double radical_inverse(std::uint64_t index, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

}  // namespace hg::cli

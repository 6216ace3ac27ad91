#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"

#include "hg/core.hpp"

namespace hg::cli {

// One certificate row. A row passes when measured <= bound, inverted for
// negative controls (expect_fail), so the flag is recomputable from the CSV.
struct Row {
  std::string id;
  nlohmann::json params;
  double measured = 0.0;
  double bound = 0.0;
  double tolerance = 0.0;
  double error_estimate = 0.0;
  bool expect_fail = false;

  bool pass() const { return (measured <= bound) != expect_fail; }
};

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_complex(cplx z) {
  return format_number(z.real()) + (std::signbit(z.imag()) ? "" : "+") + format_number(z.imag()) +
         "j";
}

inline std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct Report {
  std::vector<Row> rows;

  std::size_t passed() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.pass() ? 1 : 0;
    return n;
  }
  bool all_pass() const { return passed() == rows.size(); }

  std::string csv() const {
    std::string out = "check_id,param_json,measured,bound,tolerance,pass,error_estimate\n";
    for (const auto& r : rows) {
      nlohmann::json p = r.params;
      if (r.expect_fail) p["expect"] = "fail";
      out += r.id + ',' + csv_quote(p.dump()) + ',' + format_number(r.measured) + ',' +
             format_number(r.bound) + ',' + format_number(r.tolerance) + ',' +
             (r.pass() ? "true" : "false") + ',' + format_number(r.error_estimate) + '\n';
    }
    return out;
  }
};

}  // namespace hg::cli

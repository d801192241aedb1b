#pragma once

// Model snapshot text format:
//
//   svrmodel v1 kernel=<gaussian|linear> gamma=<g> dim=<n> intercept=<b>
//   <coeff> <v1> ... <vn>          (one line per support vector)
//
// Reals are written with 17 significant digits and parsed with from_chars,
// so a snapshot round-trips bit-exactly.

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ivsvr/error.hpp"
#include "ivsvr/kernel.hpp"
#include "ivsvr/svr.hpp"

namespace ivsvr {

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_real(std::string_view s, std::size_t line) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw ParseError("bad number '" + std::string(s) + "'", line);
  return v;
}

struct ModelSnapshot {
  KernelSpec kernel{};
  std::size_t dim = 0;
  SupportVectorDictionary dictionary;
};

inline void write_model(std::ostream& os, const SupportVectorDictionary& dict, const KernelSpec& k,
                        std::size_t dim) {
  os << "svrmodel v1 kernel=" << (k.kind == KernelKind::Gaussian ? "gaussian" : "linear")
     << " gamma=" << format_real(k.gamma) << " dim=" << dim << " intercept=" << format_real(dict.intercept())
     << '\n';
  for (const auto& e : dict.entries()) {
    if (e.key.size() != dim) throw DimensionError("support vector length differs from snapshot dim");
    os << format_real(e.coeff);
    for (double v : e.key.values()) os << ' ' << format_real(v);
    os << '\n';
  }
}

inline ModelSnapshot read_model(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw VersionError("empty model snapshot");
  std::istringstream header(line);
  std::string magic, version;
  header >> magic >> version;
  if (magic != "svrmodel" || version != "v1") throw VersionError("unsupported model header '" + line + "'");

  ModelSnapshot snap;
  bool have_kernel = false, have_gamma = false, have_dim = false, have_b = false;
  double gamma = 0.0, intercept = 0.0;
  std::string field;
  while (header >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw ParseError("malformed header field '" + field + "'", 1);
    const std::string key = field.substr(0, eq);
    const std::string_view val = std::string_view(field).substr(eq + 1);
    if (key == "kernel") {
      if (val == "gaussian") snap.kernel.kind = KernelKind::Gaussian;
      else if (val == "linear") snap.kernel.kind = KernelKind::Linear;
      else throw ParseError("unknown kernel '" + std::string(val) + "'", 1);
      have_kernel = true;
    } else if (key == "gamma") {
      gamma = parse_real(val, 1);
      have_gamma = true;
    } else if (key == "dim") {
      snap.dim = static_cast<std::size_t>(parse_real(val, 1));
      have_dim = true;
    } else if (key == "intercept") {
      intercept = parse_real(val, 1);
      have_b = true;
    } else {
      throw ParseError("unknown header field '" + key + "'", 1);
    }
  }
  if (!(have_kernel && have_gamma && have_dim && have_b)) throw ParseError("incomplete model header", 1);
  snap.kernel.gamma = gamma;
  if (snap.kernel.kind == KernelKind::Gaussian && !(gamma > 0.0)) throw ParseError("gaussian gamma must be > 0", 1);
  snap.dictionary.set_intercept(intercept);

  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string tok;
    std::vector<double> vals;
    while (row >> tok) vals.push_back(parse_real(tok, lineno));
    if (vals.size() != snap.dim + 1) throw ParseError("expected coefficient and " + std::to_string(snap.dim) +
                                                      " features", lineno);
    const double coeff = vals.front();
    vals.erase(vals.begin());
    try {
      snap.dictionary.insert(FeatureVector(std::move(vals)), coeff);
    } catch (const ConsistencyError&) {
      throw ParseError("duplicate support vector", lineno);
    }
  }
  return snap;
}

}  // namespace ivsvr

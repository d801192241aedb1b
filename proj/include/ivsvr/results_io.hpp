#pragma once

// Results file:
//
//   ivsresults v1
//   M,index,start_us,end_us,side,mape,rmse,grid_mape,grid_rmse,sv_count,ticks,scored,skipped,negative
//   S,<strike>,...                 grid strikes   (only when grids are dumped)
//   T,<maturity>,...               grid maturities
//   G,index,<pred|truth>,side,<v>,...
//
// One M row per interval and side. Reals use 17 significant digits; `nan`
// marks an undefined metric.

#include <array>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "ivsvr/error.hpp"
#include "ivsvr/ivs.hpp"
#include "ivsvr/model_io.hpp"
#include "ivsvr/tick_io.hpp"

namespace ivsvr {

inline void save_results(std::ostream& os, std::span<const IntervalRecord> records) {
  os << "ivsresults v1\n";
  const GridSpec* spec = nullptr;
  for (const auto& r : records) {
    if (r.predicted) spec = &r.predicted->spec;
    else if (r.truth) spec = &r.truth->spec;
    if (spec) break;
  }
  if (spec) {
    os << 'S';
    for (double k : spec->strikes) os << ',' << format_real(k);
    os << "\nT";
    for (double t : spec->maturities) os << ',' << format_real(t);
    os << '\n';
  }
  for (const auto& r : records) {
    for (std::size_t s = 0; s < kSideCount; ++s) {
      const auto& m = r.sides[s];
      os << "M," << r.index << ',' << r.start_us << ',' << r.end_us << ',' << side_name(s) << ','
         << format_real(m.mape) << ',' << format_real(m.rmse) << ',' << format_real(m.grid_mape) << ','
         << format_real(m.grid_rmse) << ',' << m.sv_count << ',' << m.ticks << ',' << m.scored << ',' << m.skipped
         << ',' << m.negative << '\n';
    }
    auto dump = [&](const std::optional<IvsGrid>& g, const char* tag) {
      if (!g) return;
      if (!spec || !(g->spec == *spec)) throw ConfigError("all dumped grids must share one grid spec");
      for (std::size_t s = 0; s < kSideCount; ++s) {
        os << "G," << r.index << ',' << tag << ',' << side_name(s);
        for (double v : g->values[s]) os << ',' << format_real(v);
        os << '\n';
      }
    };
    dump(r.predicted, "pred");
    dump(r.truth, "truth");
  }
}

inline void save_results(const std::string& path, std::span<const IntervalRecord> records) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write '" + path + "'");
  save_results(os, records);
}

namespace detail {

inline std::size_t side_from_name(std::string_view s, std::size_t line) {
  for (std::size_t i = 0; i < kSideCount; ++i)
    if (side_name(i) == s) return i;
  throw ParseError("unknown side '" + std::string(s) + "'", line);
}

inline std::size_t parse_count(std::string_view s, std::size_t line) {
  const auto v = parse_int(s, line);
  if (v < 0) throw ParseError("negative count", line);
  return static_cast<std::size_t>(v);
}

}  // namespace detail

inline std::vector<IntervalRecord> load_results(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "ivsresults v1")
    throw VersionError("not an ivsresults v1 file");

  std::vector<IntervalRecord> records;
  std::map<std::size_t, std::size_t> by_index;
  GridSpec spec;
  std::size_t lineno = 1;
  auto record_for = [&](std::size_t index) -> IntervalRecord& {
    auto it = by_index.find(index);
    if (it != by_index.end()) return records[it->second];
    by_index.emplace(index, records.size());
    records.emplace_back().index = index;
    return records.back();
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skippable(line)) continue;
    const auto f = detail::split_csv(detail::trim(line));
    if (f[0] == "S" || f[0] == "T") {
      auto& dst = f[0] == "S" ? spec.strikes : spec.maturities;
      dst.clear();
      for (std::size_t i = 1; i < f.size(); ++i) dst.push_back(parse_real(f[i], lineno));
    } else if (f[0] == "M") {
      if (f.size() != 14) throw ParseError("metric row needs 14 fields", lineno);
      IntervalRecord& r = record_for(detail::parse_count(f[1], lineno));
      r.start_us = detail::parse_int(f[2], lineno);
      r.end_us = detail::parse_int(f[3], lineno);
      SideMetrics& m = r.sides[detail::side_from_name(f[4], lineno)];
      m.mape = parse_real(f[5], lineno);
      m.rmse = parse_real(f[6], lineno);
      m.grid_mape = parse_real(f[7], lineno);
      m.grid_rmse = parse_real(f[8], lineno);
      m.sv_count = detail::parse_count(f[9], lineno);
      m.ticks = detail::parse_count(f[10], lineno);
      m.scored = detail::parse_count(f[11], lineno);
      m.skipped = detail::parse_count(f[12], lineno);
      m.negative = detail::parse_count(f[13], lineno);
    } else if (f[0] == "G") {
      if (f.size() < 4) throw ParseError("grid row too short", lineno);
      if (f.size() - 4 != spec.size()) throw ParseError("grid row does not match grid spec", lineno);
      IntervalRecord& r = record_for(detail::parse_count(f[1], lineno));
      std::optional<IvsGrid>* target = nullptr;
      if (f[2] == "pred") target = &r.predicted;
      else if (f[2] == "truth") target = &r.truth;
      else throw ParseError("grid tag must be pred or truth", lineno);
      if (!*target) {
        target->emplace();
        (*target)->spec = spec;
      }
      auto& vals = (*target)->values[detail::side_from_name(f[3], lineno)];
      vals.clear();
      for (std::size_t i = 4; i < f.size(); ++i) vals.push_back(parse_real(f[i], lineno));
    } else {
      throw ParseError("unknown row tag '" + std::string(f[0]) + "'", lineno);
    }
  }
  return records;
}

inline std::vector<IntervalRecord> load_results(const std::string& path) {
  auto in = detail::open_in(path);
  return load_results(in);
}

}  // namespace ivsvr

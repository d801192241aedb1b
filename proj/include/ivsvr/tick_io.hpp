#pragma once

// Tick file: one record per line,
//   timestamp_us,side,quote,strike,maturity_years,price,underlying
// with side in {C,P} and quote in {B,A}. Timestamps must not decrease.
// Yield-curve file: `tenor_years,rate` per line.

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "ivsvr/error.hpp"
#include "ivsvr/ivs.hpp"
#include "ivsvr/model_io.hpp"
#include "ivsvr/pricing.hpp"

namespace ivsvr {

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool skippable(std::string_view line) {
  line = trim(line);
  return line.empty() || line.front() == '#';
}

inline std::int64_t parse_int(std::string_view s, std::size_t line) {
  std::int64_t v = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw ParseError("bad integer '" + std::string(s) + "'", line);
  return v;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return in;
}

}  // namespace detail

inline OptionTick parse_tick_line(std::string_view line, std::size_t lineno) {
  const auto f = detail::split_csv(detail::trim(line));
  if (f.size() != 7) throw ParseError("expected 7 fields, got " + std::to_string(f.size()), lineno);
  OptionTick t;
  t.timestamp_us = detail::parse_int(detail::trim(f[0]), lineno);
  const auto side = detail::trim(f[1]);
  if (side == "C") t.side = OptionSide::Call;
  else if (side == "P") t.side = OptionSide::Put;
  else throw ParseError("side must be C or P", lineno);
  const auto quote = detail::trim(f[2]);
  if (quote == "B") t.quote = Quote::Bid;
  else if (quote == "A") t.quote = Quote::Ask;
  else throw ParseError("quote must be B or A", lineno);
  t.strike = parse_real(detail::trim(f[3]), lineno);
  t.maturity = parse_real(detail::trim(f[4]), lineno);
  t.price = parse_real(detail::trim(f[5]), lineno);
  t.underlying = parse_real(detail::trim(f[6]), lineno);
  if (!(t.strike > 0.0)) throw ParseError("strike must be positive", lineno);
  if (!(t.maturity > 0.0)) throw ParseError("maturity must be positive", lineno);
  if (!(t.price > 0.0)) throw ParseError("price must be positive", lineno);
  if (!(t.underlying > 0.0)) throw ParseError("underlying must be positive", lineno);
  return t;
}

inline std::vector<OptionTick> parse_ticks(std::istream& in) {
  std::vector<OptionTick> ticks;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skippable(line)) continue;
    OptionTick t = parse_tick_line(line, lineno);
    if (!ticks.empty() && t.timestamp_us < ticks.back().timestamp_us)
      throw OrderError("timestamp " + std::to_string(t.timestamp_us) + " precedes the previous record", lineno);
    ticks.push_back(t);
  }
  return ticks;
}

inline std::vector<OptionTick> parse_ticks(const std::string& path) {
  auto in = detail::open_in(path);
  return parse_ticks(in);
}

inline void write_tick(std::ostream& os, const OptionTick& t) {
  os << t.timestamp_us << ',' << (t.side == OptionSide::Call ? 'C' : 'P') << ','
     << (t.quote == Quote::Bid ? 'B' : 'A') << ',' << format_real(t.strike) << ',' << format_real(t.maturity) << ','
     << format_real(t.price) << ',' << format_real(t.underlying) << '\n';
}

inline void write_ticks(std::ostream& os, std::span<const OptionTick> ticks) {
  for (const auto& t : ticks) write_tick(os, t);
}

inline YieldCurve parse_curve(std::istream& in) {
  std::vector<double> tenors, rates;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skippable(line)) continue;
    const auto f = detail::split_csv(detail::trim(line));
    if (f.size() != 2) throw ParseError("expected tenor_years,rate", lineno);
    tenors.push_back(parse_real(detail::trim(f[0]), lineno));
    rates.push_back(parse_real(detail::trim(f[1]), lineno));
    if (tenors.size() > 1 && !(tenors.back() > tenors[tenors.size() - 2]))
      throw ParseError("tenors must be strictly increasing", lineno);
  }
  if (tenors.empty()) throw ParseError("yield curve file has no points", lineno);
  return YieldCurve(std::move(tenors), std::move(rates));
}

inline YieldCurve parse_curve(const std::string& path) {
  auto in = detail::open_in(path);
  return parse_curve(in);
}

}  // namespace ivsvr

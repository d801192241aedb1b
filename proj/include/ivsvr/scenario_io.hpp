#pragma once

// JSON description of a synthetic scenario. Every key is optional and falls
// back to the SyntheticScenario default:
//
//   {
//     "level": 0.145, "skew": -0.5, "curvature": 1.0, "term": 0.02, "skew_term": 0.3,
//     "coeffs": [a0, a1, a2, a3, a4],              // overrides the centered form
//     "drift_per_hour": [d0, d1, d2, d3, d4],
//     "regime_shifts": [{"time_seconds": 5400, "level": 0.165, ...}],
//     "noise_sd": 0.002, "short_noise_multiplier": 3.0, "bid_ask_iv_spread": 0.004,
//     "reference_price": 1780, "strike_count": 40, "maturities": [...],
//     "tick_rate": 4.0, "duration_seconds": 25200, "seed": 20140127
//   }
//
// Regime-shift times are seconds after the scenario start.

#include <fstream>
#include <string>

#include <json.hpp>

#include "ivsvr/error.hpp"
#include "ivsvr/synth.hpp"

namespace ivsvr {

namespace detail {

inline DumasCoeffs coeffs_from_json(const nlohmann::json& j, const DumasCoeffs& fallback) {
  if (j.contains("coeffs")) {
    const auto v = j.at("coeffs").get<std::vector<double>>();
    if (v.size() != 5) throw ConfigError("coeffs needs five entries");
    DumasCoeffs c;
    for (std::size_t i = 0; i < 5; ++i) c.a[i] = v[i];
    return c;
  }
  if (!(j.contains("level") || j.contains("skew") || j.contains("curvature") || j.contains("term") ||
        j.contains("skew_term")))
    return fallback;
  return DumasCoeffs::centered(j.value("level", 0.145), j.value("skew", -0.5), j.value("curvature", 1.0),
                               j.value("term", 0.02), j.value("skew_term", 0.3));
}

}  // namespace detail

inline SyntheticScenario scenario_from_json(const nlohmann::json& j) {
  SyntheticScenario sc;
  try {
    sc.coeffs = detail::coeffs_from_json(j, sc.coeffs);
    if (j.contains("drift_per_hour")) {
      const auto v = j.at("drift_per_hour").get<std::vector<double>>();
      if (v.size() != 5) throw ConfigError("drift_per_hour needs five entries");
      for (std::size_t i = 0; i < 5; ++i) sc.drift_per_hour.a[i] = v[i];
    }
    sc.noise_sd = j.value("noise_sd", sc.noise_sd);
    sc.short_noise_multiplier = j.value("short_noise_multiplier", sc.short_noise_multiplier);
    sc.bid_ask_iv_spread = j.value("bid_ask_iv_spread", sc.bid_ask_iv_spread);
    sc.reference_price = j.value("reference_price", sc.reference_price);
    sc.tick_rate = j.value("tick_rate", sc.tick_rate);
    sc.duration_seconds = j.value("duration_seconds", sc.duration_seconds);
    sc.seed = j.value("seed", sc.seed);
    sc.start_us = j.value("start_us", sc.start_us);
    const auto strikes = j.value("strike_count", std::size_t{40});
    const auto maturities = j.value("maturities", std::vector<double>{0.08, 0.165, 0.25, 0.335, 0.42});
    sc.grid = GridSpec::uniform(sc.reference_price, strikes, maturities);
    if (j.contains("regime_shifts")) {
      for (const auto& s : j.at("regime_shifts")) {
        RegimeShift rs;
        rs.time_us = sc.start_us + static_cast<std::int64_t>(std::llround(s.at("time_seconds").get<double>() * 1e6));
        rs.coeffs = detail::coeffs_from_json(s, sc.coeffs);
        sc.regime_shifts.push_back(rs);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  sc.validate();
  return sc;
}

inline SyntheticScenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  return scenario_from_json(j);
}

}  // namespace ivsvr

#pragma once

// Synthetic option tick streams with a known implied-volatility surface.
//
// The true surface is the quadratic form
//   iv(k, tau) = a0 + a1 k + a2 k^2 + a3 tau + a4 k tau,   k = strike / F_ref,
// whose coefficients follow a linear drift and may jump at scheduled regime
// shifts. Each tick picks a grid point and a side, adds quote-side spread and
// maturity-dependent noise to the true IV, and is priced with the same model
// the pipeline inverts.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ivsvr/error.hpp"
#include "ivsvr/ivs.hpp"
#include "ivsvr/pricing.hpp"

namespace ivsvr {

struct DumasCoeffs {
  std::array<double, 5> a{};

  double eval(double k, double tau) const { return a[0] + a[1] * k + a[2] * k * k + a[3] * tau + a[4] * k * tau; }

  // Coefficients of level + skew (k-1) + curvature (k-1)^2 + term (tau-tau0) + skew_term (k-1)(tau-tau0).
  static DumasCoeffs centered(double level, double skew, double curvature, double term, double skew_term,
                              double tau0 = 0.25) {
    DumasCoeffs c;
    c.a[0] = level - skew + curvature - term * tau0 + skew_term * tau0;
    c.a[1] = skew - 2.0 * curvature - skew_term * tau0;
    c.a[2] = curvature;
    c.a[3] = term - skew_term;
    c.a[4] = skew_term;
    return c;
  }

  friend bool operator==(const DumasCoeffs&, const DumasCoeffs&) = default;
};

struct RegimeShift {
  std::int64_t time_us = 0;
  DumasCoeffs coeffs;
};

struct SyntheticScenario {
  DumasCoeffs coeffs = DumasCoeffs::centered(0.145, -0.5, 1.0, 0.02, 0.3);
  DumasCoeffs drift_per_hour{};
  std::vector<RegimeShift> regime_shifts;
  double noise_sd = 0.002;             // at the longest maturity
  double short_noise_multiplier = 3.0; // at the shortest maturity
  double bid_ask_iv_spread = 0.004;
  double reference_price = 1780.0;
  GridSpec grid = GridSpec::uniform(1780.0);
  double tick_rate = 4.0;  // ticks per second across all sides
  std::int64_t start_us = 0;
  double duration_seconds = 7.0 * 3600.0;
  std::uint64_t seed = 20140127;
  YieldCurve curve = YieldCurve({0.083, 0.25, 0.5, 1.0}, {0.0003, 0.0005, 0.0008, 0.0012});
  PricingModel pricing = PricingModel::Black76;

  void validate() const {
    if (!(noise_sd >= 0.0) || !(bid_ask_iv_spread >= 0.0) || !(short_noise_multiplier >= 0.0))
      throw ConfigError("noise and spread must be nonnegative");
    if (!(tick_rate > 0.0)) throw ConfigError("tick_rate must be positive");
    if (!(reference_price > 0.0)) throw ConfigError("reference_price must be positive");
    if (grid.strikes.empty() || grid.maturities.empty()) throw ConfigError("scenario grid is empty");
    for (std::size_t i = 1; i < regime_shifts.size(); ++i)
      if (regime_shifts[i].time_us < regime_shifts[i - 1].time_us) throw ConfigError("regime shifts out of order");
  }

  DumasCoeffs coeffs_at(std::int64_t ts) const {
    DumasCoeffs c = coeffs;
    std::int64_t anchor = start_us;
    for (const auto& s : regime_shifts) {
      if (s.time_us > ts) break;
      c = s.coeffs;
      anchor = s.time_us;
    }
    const double hours = static_cast<double>(ts - anchor) / 3.6e9;
    for (std::size_t i = 0; i < 5; ++i) c.a[i] += drift_per_hour.a[i] * hours;
    return c;
  }

  // Noiseless IV for one side; bid sits half a spread below the mid surface.
  double true_iv(std::int64_t ts, std::size_t side, double strike, double tau) const {
    const double mid = coeffs_at(ts).eval(strike / reference_price, tau);
    const double half = 0.5 * bid_ask_iv_spread;
    return quote_of(side) == Quote::Ask ? mid + half : mid - half;
  }

  GroundTruth ground_truth() const {
    return [s = *this](std::int64_t ts, std::size_t side, double strike, double tau) {
      return s.true_iv(ts, side, strike, tau);
    };
  }

  IvsGrid truth_grid(std::int64_t ts) const {
    IvsGrid g;
    g.spec = grid;
    for (std::size_t side = 0; side < kSideCount; ++side)
      for (double k : grid.strikes)
        for (double tau : grid.maturities) g.values[side].push_back(true_iv(ts, side, k, tau));
    return g;
  }

  double noise_sd_for(std::size_t maturity_index) const {
    const std::size_t n = grid.maturities.size();
    const double w = n <= 1 ? 1.0 : static_cast<double>(maturity_index) / static_cast<double>(n - 1);
    return noise_sd * (short_noise_multiplier + (1.0 - short_noise_multiplier) * w);
  }
};

struct SyntheticStream {
  std::vector<OptionTick> ticks;
  std::vector<IvsGrid> truth_grids;  // at each interval end
  std::vector<std::int64_t> truth_times;
};

inline SyntheticStream synth_generate(const SyntheticScenario& sc, double interval_seconds = 60.0) {
  sc.validate();
  SyntheticStream out;
  std::mt19937_64 rng(sc.seed);
  std::exponential_distribution<double> gap(sc.tick_rate);
  std::uniform_int_distribution<std::size_t> pick_strike(0, sc.grid.strikes.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_maturity(0, sc.grid.maturities.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_side(0, kSideCount - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const std::int64_t end_us = sc.start_us + static_cast<std::int64_t>(std::llround(sc.duration_seconds * 1e6));
  double clock = static_cast<double>(sc.start_us);
  while (true) {
    clock += gap(rng) * 1e6;
    const auto ts = static_cast<std::int64_t>(clock);
    if (ts >= end_us) break;
    const std::size_t si = pick_strike(rng);
    const std::size_t mi = pick_maturity(rng);
    const std::size_t side = pick_side(rng);
    const double strike = sc.grid.strikes[si];
    const double tau = sc.grid.maturities[mi];
    const double truth = sc.true_iv(ts, side, strike, tau);
    const double sd = sc.noise_sd_for(mi);
    const double r = sc.curve.rate(tau);
    const PriceBounds bounds =
        no_arbitrage_bounds(side_of(side), sc.reference_price, strike, tau, r, sc.pricing);
    double price = 0.0;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 1000) throw ConfigError("scenario produces non-positive implied volatilities");
      const double iv = truth + (sd > 0.0 ? sd * gauss(rng) : 0.0);
      if (!(iv > 0.0)) continue;
      price = bsm_price(side_of(side), sc.reference_price, strike, tau, r, iv, sc.pricing);
      if (price > bounds.lower && price < bounds.upper) break;
    }
    out.ticks.push_back({ts, side_of(side), quote_of(side), strike, tau, price, sc.reference_price});
  }

  const auto step = static_cast<std::int64_t>(std::llround(interval_seconds * 1e6));
  if (step > 0) {
    for (std::int64_t t = sc.start_us + step; t <= end_us; t += step) {
      out.truth_times.push_back(t);
      out.truth_grids.push_back(sc.truth_grid(t));
    }
  }
  return out;
}

}  // namespace ivsvr

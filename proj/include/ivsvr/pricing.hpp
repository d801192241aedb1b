#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "ivsvr/error.hpp"

namespace ivsvr {

enum class OptionSide { Call, Put };
enum class PricingModel { Black76, Spot };

// Continuously-compounded zero rates, linear in tenor, flat beyond the ends.
class YieldCurve {
 public:
  YieldCurve() = default;
  YieldCurve(std::vector<double> tenors, std::vector<double> rates) : tenors_(std::move(tenors)), rates_(std::move(rates)) {
    if (tenors_.size() != rates_.size()) throw ConfigError("yield curve tenor/rate count mismatch");
    for (std::size_t i = 1; i < tenors_.size(); ++i)
      if (!(tenors_[i] > tenors_[i - 1])) throw ConfigError("yield curve tenors must be strictly increasing");
  }

  static YieldCurve flat(double rate) { return YieldCurve({1.0}, {rate}); }

  bool empty() const noexcept { return tenors_.empty(); }
  const std::vector<double>& tenors() const noexcept { return tenors_; }
  const std::vector<double>& rates() const noexcept { return rates_; }

  double rate(double tau) const {
    if (tenors_.empty()) throw ConfigError("interpolating an empty yield curve");
    if (tau <= tenors_.front()) return rates_.front();
    if (tau >= tenors_.back()) return rates_.back();
    const auto it = std::upper_bound(tenors_.begin(), tenors_.end(), tau);
    const std::size_t hi = static_cast<std::size_t>(it - tenors_.begin());
    const std::size_t lo = hi - 1;
    const double w = (tau - tenors_[lo]) / (tenors_[hi] - tenors_[lo]);
    return rates_[lo] + w * (rates_[hi] - rates_[lo]);
  }

 private:
  std::vector<double> tenors_;
  std::vector<double> rates_;
};

inline double interpolate_rate(const YieldCurve& curve, double tau) { return curve.rate(tau); }

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// Black-76 on a futures price (default) or Black-Scholes on a non-dividend spot.
inline double bsm_price(OptionSide side, double underlying, double strike, double tau, double r, double sigma,
                        PricingModel model = PricingModel::Black76) {
  const double vs = sigma * std::sqrt(tau);
  const double df = std::exp(-r * tau);
  const double fwd = model == PricingModel::Black76 ? underlying : underlying / df;
  const double d1 = (std::log(fwd / strike) + 0.5 * vs * vs) / vs;
  const double d2 = d1 - vs;
  if (side == OptionSide::Call) return df * (fwd * norm_cdf(d1) - strike * norm_cdf(d2));
  return df * (strike * norm_cdf(-d2) - fwd * norm_cdf(-d1));
}

inline double bsm_vega(double underlying, double strike, double tau, double r, double sigma,
                       PricingModel model = PricingModel::Black76) {
  const double vs = sigma * std::sqrt(tau);
  const double df = std::exp(-r * tau);
  const double fwd = model == PricingModel::Black76 ? underlying : underlying / df;
  const double d1 = (std::log(fwd / strike) + 0.5 * vs * vs) / vs;
  return df * fwd * norm_pdf(d1) * std::sqrt(tau);
}

struct PriceBounds {
  double lower = 0.0;
  double upper = 0.0;
};

inline PriceBounds no_arbitrage_bounds(OptionSide side, double underlying, double strike, double tau, double r,
                                       PricingModel model = PricingModel::Black76) {
  const double df = std::exp(-r * tau);
  const double fwd = model == PricingModel::Black76 ? underlying : underlying / df;
  if (side == OptionSide::Call) return {df * std::max(fwd - strike, 0.0), df * fwd};
  return {df * std::max(strike - fwd, 0.0), df * strike};
}

struct IvSolverConfig {
  double sigma_lo = 1e-4;
  double sigma_hi = 5.0;
  double price_tolerance = 1e-9;  // relative to the underlying
  double sigma_tolerance = 1e-10;  // on the Newton step, once the price is within tolerance
  int max_iterations = 200;
};

// Safeguarded Newton on sigma: a Newton step leaving the current bracket
// falls back to bisection.
inline double implied_vol(OptionSide side, double underlying, double strike, double tau, double r, double price,
                          PricingModel model = PricingModel::Black76, const IvSolverConfig& cfg = {}) {
  if (!(underlying > 0.0 && strike > 0.0 && tau > 0.0)) throw NoSolutionError("non-positive underlying, strike or tau");
  const PriceBounds b = no_arbitrage_bounds(side, underlying, strike, tau, r, model);
  if (!(price > b.lower && price < b.upper)) throw NoSolutionError("price outside no-arbitrage bounds");

  const double tol = cfg.price_tolerance * underlying;
  double lo = cfg.sigma_lo;
  double hi = cfg.sigma_hi;
  const double f_lo = bsm_price(side, underlying, strike, tau, r, lo, model) - price;
  const double f_hi = bsm_price(side, underlying, strike, tau, r, hi, model) - price;
  if (std::abs(f_lo) < tol) return lo;
  if (std::abs(f_hi) < tol) return hi;
  if (f_lo > 0.0 || f_hi < 0.0) throw NoSolutionError("implied volatility outside the search bracket");

  // Brenner-Subrahmanyam start, clamped into the bracket.
  double sigma = std::sqrt(2.0 * std::numbers::pi / tau) * price / (std::exp(-r * tau) * underlying);
  if (!(sigma > lo && sigma < hi)) sigma = 0.5 * (lo + hi);

  // The price test alone leaves sigma loose where vega is small, so keep
  // stepping until the Newton correction is negligible too.
  double priced_sigma = -1.0;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const double f = bsm_price(side, underlying, strike, tau, r, sigma, model) - price;
    const double vega = bsm_vega(underlying, strike, tau, r, sigma, model);
    const bool priced = std::abs(f) < tol;
    if (priced) priced_sigma = sigma;
    if (priced && (f == 0.0 || std::abs(f) < cfg.sigma_tolerance * vega)) return sigma;
    if (f > 0.0) hi = sigma;
    else lo = sigma;
    if (hi - lo < 1e-15) return sigma;
    double next = vega > 0.0 ? sigma - f / vega : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    sigma = next;
  }
  if (priced_sigma > 0.0) return priced_sigma;
  throw SolverError("implied volatility did not converge");
}

}  // namespace ivsvr

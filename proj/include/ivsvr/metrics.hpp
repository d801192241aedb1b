#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>

#include <boost/math/distributions/students_t.hpp>

#include "ivsvr/error.hpp"

namespace ivsvr {

// Percent. Points with a zero actual are skipped and counted in `excluded`.
inline double mape(std::span<const double> pred, std::span<const double> actual, std::size_t* excluded = nullptr) {
  if (pred.size() != actual.size() || pred.empty()) throw DimensionError("mape needs equal, nonempty inputs");
  double acc = 0.0;
  std::size_t used = 0, skipped = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (actual[i] == 0.0) {
      ++skipped;
      continue;
    }
    acc += std::abs(pred[i] - actual[i]) / std::abs(actual[i]);
    ++used;
  }
  if (excluded) *excluded = skipped;
  return used ? 100.0 * acc / static_cast<double>(used) : std::numeric_limits<double>::quiet_NaN();
}

// Percentage points of IV.
inline double rmse(std::span<const double> pred, std::span<const double> actual) {
  if (pred.size() != actual.size() || pred.empty()) throw DimensionError("rmse needs equal, nonempty inputs");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - actual[i];
    acc += e * e;
  }
  return 100.0 * std::sqrt(acc / static_cast<double>(pred.size()));
}

struct TTestResult {
  double t_stat = 0.0;
  double p_value = 1.0;
  double dof = 0.0;
};

// Two-sided Welch test with Welch-Satterthwaite degrees of freedom.
inline TTestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw DimensionError("welch_t_test needs at least two samples per group");
  auto moments = [](std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::pair{mean, ss / (n - 1.0)};
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  const double sa = va / static_cast<double>(a.size());
  const double sb = vb / static_cast<double>(b.size());
  const double se2 = sa + sb;
  TTestResult r;
  if (se2 == 0.0) {
    if (ma == mb) return r;
    r.t_stat = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    return r;
  }
  r.t_stat = (ma - mb) / std::sqrt(se2);
  r.dof = se2 * se2 / (sa * sa / (static_cast<double>(a.size()) - 1.0) + sb * sb / (static_cast<double>(b.size()) - 1.0));
  const boost::math::students_t dist(r.dof);
  r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t_stat)));
  return r;
}

}  // namespace ivsvr

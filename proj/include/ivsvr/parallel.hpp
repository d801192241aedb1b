#pragma once

// Data-parallel CPU kernels for the three hot loops of the online learner:
// batched inference over many samples, the two-step quadratic form shared by
// local fitness and the Schur complement, and the rank-1 inverse update.
//
// Parallelism is over the outer (row) loop. With deterministic_sum every row
// is reduced left-to-right in a single accumulator, so results are identical
// for any worker count and equal to the naive serial loops in `serial::`.
// Without it each row is reduced as a sum of per-tile partials, which changes
// rounding but not cost.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "ivsvr/error.hpp"
#include "ivsvr/kernel.hpp"

namespace ivsvr {

struct BatchPlan {
  std::size_t tile_size = 256;
  std::size_t worker_count = 1;
  bool deterministic_sum = true;

  void validate() const {
    if (tile_size < 1) throw ConfigError("tile_size must be >= 1");
    if (worker_count < 1) throw ConfigError("worker_count must be >= 1");
  }
};

using MatrixRef = Eigen::Ref<RowMatrix>;
using ConstMatrixRef = Eigen::Ref<const RowMatrix>;

namespace detail {

// Runs body(begin, end) over contiguous chunks of [0, n). The calling thread
// takes the first chunk.
inline void parallel_rows(std::size_t n, std::size_t workers,
                          const std::function<void(std::size_t, std::size_t)>& body) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers <= 1) {
    if (n > 0) body(0, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
  body(0, std::min(n, chunk));
}

inline double dot_row(const double* row, const double* vec, std::size_t n, const BatchPlan& plan) {
  if (plan.deterministic_sum) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += vec[j] * row[j];
    return acc;
  }
  double total = 0.0;
  for (std::size_t t0 = 0; t0 < n; t0 += plan.tile_size) {
    const std::size_t t1 = std::min(n, t0 + plan.tile_size);
    double part = 0.0;
    for (std::size_t j = t0; j < t1; ++j) part += vec[j] * row[j];
    total += part;
  }
  return total;
}

}  // namespace detail

inline std::vector<double> batch_predict(std::span<const double> coeffs, const ConstMatrixRef& kernel_rows,
                                         double intercept, const BatchPlan& plan = {}) {
  plan.validate();
  const auto m = static_cast<std::size_t>(kernel_rows.rows());
  const auto n = static_cast<std::size_t>(kernel_rows.cols());
  if (n != coeffs.size()) throw DimensionError("batch_predict: coefficient count does not match kernel columns");
  std::vector<double> out(m);
  detail::parallel_rows(m, plan.worker_count, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const double* row = kernel_rows.data() + static_cast<std::ptrdiff_t>(i) * kernel_rows.outerStride();
      out[i] = detail::dot_row(row, coeffs.data(), n, plan) + intercept;
    }
  });
  return out;
}

struct QuadraticForm {
  Eigen::VectorXd intermediate;  // inv * kvec
  double c = 0.0;                // kvec' inv kvec
};

inline QuadraticForm quadratic_form(std::span<const double> kvec, const ConstMatrixRef& inv,
                                    const BatchPlan& plan = {}) {
  plan.validate();
  const auto n = kvec.size();
  if (static_cast<std::size_t>(inv.rows()) != n || static_cast<std::size_t>(inv.cols()) != n)
    throw DimensionError("quadratic_form: matrix does not match kernel vector");
  QuadraticForm q;
  q.intermediate.resize(static_cast<Eigen::Index>(n));
  const std::size_t workers = std::max<std::size_t>(1, std::min(plan.worker_count, n));
  std::vector<double> partial(workers, 0.0);
  const std::size_t chunk = n == 0 ? 0 : (n + workers - 1) / workers;
  detail::parallel_rows(n, workers, [&](std::size_t b, std::size_t e) {
    double part = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      const double* row = inv.data() + static_cast<std::ptrdiff_t>(i) * inv.outerStride();
      const double v = detail::dot_row(row, kvec.data(), n, plan);
      q.intermediate[static_cast<Eigen::Index>(i)] = v;
      part += v * kvec[i];
    }
    partial[b / chunk] = part;
  });
  if (plan.deterministic_sum) {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += q.intermediate[static_cast<Eigen::Index>(i)] * kvec[i];
    q.c = c;
  } else {
    double c = 0.0;
    for (double p : partial) c += p;
    q.c = c;
  }
  return q;
}

// target[i][j] -= scale * u[i] * v[j]
inline void rank1_update_inplace(MatrixRef target, std::span<const double> u, std::span<const double> v,
                                 double scale, const BatchPlan& plan = {}) {
  plan.validate();
  const auto m = static_cast<std::size_t>(target.rows());
  const auto n = static_cast<std::size_t>(target.cols());
  if (u.size() != m || v.size() != n) throw DimensionError("rank1_update: vector lengths do not match matrix");
  detail::parallel_rows(m, plan.worker_count, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      double* row = target.data() + static_cast<std::ptrdiff_t>(i) * target.outerStride();
      const double su = scale * u[i];
      for (std::size_t j = 0; j < n; ++j) row[j] -= su * v[j];
    }
  });
}

inline RowMatrix rank1_update(const ConstMatrixRef& base, std::span<const double> u, std::span<const double> v,
                              double scale, const BatchPlan& plan = {}) {
  RowMatrix out = base;
  rank1_update_inplace(out, u, v, scale, plan);
  return out;
}

inline std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

// Naive nested loops exactly as the inference and local-fitness pseudo code
// is written; the benchmark baseline.
namespace serial {

inline std::vector<double> batch_predict(std::span<const double> coeffs, const ConstMatrixRef& rows,
                                         double intercept) {
  std::vector<double> p(static_cast<std::size_t>(rows.rows()), 0.0);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) p[i] = p[i] + coeffs[j] * rows(i, j);
    p[i] += intercept;
  }
  return p;
}

inline double quadratic_form(std::span<const double> kvec, const ConstMatrixRef& inv, Eigen::VectorXd& inter) {
  const auto n = static_cast<Eigen::Index>(kvec.size());
  inter.setZero(n);
  double c = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) inter[i] = inter[i] + kvec[j] * inv(i, j);
    c = c + inter[i] * kvec[i];
  }
  return c;
}

inline void rank1_update(MatrixRef target, std::span<const double> u, std::span<const double> v, double scale) {
  for (Eigen::Index i = 0; i < target.rows(); ++i)
    for (Eigen::Index j = 0; j < target.cols(); ++j) target(i, j) = target(i, j) - scale * u[i] * v[j];
}

}  // namespace serial

struct BenchRow {
  std::size_t n = 0;
  std::string op;
  double serial_ns = 0.0;
  double parallel_ns = 0.0;
  double speedup = 0.0;
};

namespace detail {

// Best-of-reps wall time for both variants, alternating runs so that cache
// and frequency drift hit them alike.
template <class S, class P>
std::pair<double, double> time_pair_ns(S&& serial_fn, P&& parallel_fn, int reps) {
  auto once = [](auto& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double, std::nano>(std::chrono::steady_clock::now() - t0).count();
  };
  serial_fn();
  parallel_fn();
  double bs = 0.0, bp = 0.0;
  for (int r = 0; r < reps; ++r) {
    const double s = once(serial_fn);
    const double p = once(parallel_fn);
    if (r == 0 || s < bs) bs = s;
    if (r == 0 || p < bp) bp = p;
  }
  return {bs, bp};
}

}  // namespace detail

// Serial-vs-parallel timings for local fitness, support-vector addition,
// support-vector removal and prediction (M = N samples against N support
// vectors). One N x N buffer is reused across operations; rank-1 updates run
// in place.
inline std::vector<BenchRow> benchmark(std::span<const std::size_t> sizes, const BatchPlan& plan) {
  plan.validate();
  std::vector<BenchRow> report;
  for (std::size_t n : sizes) {
    if (n == 0) continue;
    const auto ni = static_cast<Eigen::Index>(n);
    RowMatrix buf(ni, ni);
    std::uint64_t state = 0x9E3779B97F4A7C15ull ^ n;
    double* d = buf.data();
    for (Eigen::Index k = 0; k < ni * ni; ++k) {
      state = state * 6364136223846793005ull + 1442695040888963407ull;
      d[k] = static_cast<double>(state >> 11) * 0x1.0p-53 * 1e-3;
    }
    Eigen::VectorXd kvec(ni), coeffs(ni);
    for (Eigen::Index k = 0; k < ni; ++k) {
      kvec[k] = 0.5 + 0.5 * std::cos(static_cast<double>(k));
      coeffs[k] = 0.01 * std::sin(static_cast<double>(k));
    }
    const auto kv = as_span(kvec);
    const auto cv = as_span(coeffs);
    const int reps = static_cast<int>(std::clamp<std::size_t>(20'000'000 / (n * n), 1, 50));
    volatile double sink = 0.0;
    Eigen::VectorXd inter;

    auto push = [&](const char* op, std::pair<double, double> sp) {
      report.push_back({n, op, sp.first, sp.second, sp.second > 0.0 ? sp.first / sp.second : 0.0});
    };

    push("local_fitness", detail::time_pair_ns([&] { sink = serial::quadratic_form(kv, buf, inter); },
                                               [&] { sink = quadratic_form(kv, buf, plan).c; }, reps));
    {
      // X = K^-1 - I Y' with Y = -z I; scale kept tiny so the buffer stays bounded.
      const double z = 1e-9;
      push("sv_addition", detail::time_pair_ns(
                              [&] {
                                sink = serial::quadratic_form(kv, buf, inter);
                                Eigen::VectorXd y = -z * inter;
                                serial::rank1_update(buf, as_span(inter), as_span(y), 1.0);
                              },
                              [&] {
                                auto q = quadratic_form(kv, buf, plan);
                                Eigen::VectorXd y = -z * q.intermediate;
                                rank1_update_inplace(buf, as_span(q.intermediate), as_span(y), 1.0, plan);
                              },
                              reps));
    }
    push("sv_removal", detail::time_pair_ns([&] { serial::rank1_update(buf, kv, kv, 1e-9); },
                                            [&] { rank1_update_inplace(buf, kv, kv, 1e-9, plan); }, reps));
    push("prediction", detail::time_pair_ns([&] { sink = serial::batch_predict(cv, buf, 0.1)[0]; },
                                            [&] { sink = batch_predict(cv, buf, 0.1, plan)[0]; }, reps));
    (void)sink;
  }
  return report;
}

}  // namespace ivsvr

#pragma once

// Replay-level analysis: per-run summaries, algorithm comparisons on one
// shared stream and single-parameter sensitivity sweeps.

#include <array>
#include <cmath>
#include <future>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ivsvr/error.hpp"
#include "ivsvr/ivs.hpp"
#include "ivsvr/metrics.hpp"
#include "ivsvr/model_io.hpp"

namespace ivsvr {

struct RunStats {
  std::string name;
  std::array<double, kSideCount> mape{};  // mean of finite per-interval values
  std::array<double, kSideCount> rmse{};
  std::array<double, kSideCount> avg_sv{};
  std::array<std::size_t, kSideCount> final_sv{};
  std::size_t intervals = 0;

  double mean_mape() const { return (mape[0] + mape[1] + mape[2] + mape[3]) / 4.0; }
  double mean_rmse() const { return (rmse[0] + rmse[1] + rmse[2] + rmse[3]) / 4.0; }
  double mean_sv() const { return (avg_sv[0] + avg_sv[1] + avg_sv[2] + avg_sv[3]) / 4.0; }
};

// Per-interval MAPE of one side, NaN-free (intervals without scored ticks dropped).
inline std::vector<double> interval_mapes(const RunSummary& run, std::size_t side) {
  std::vector<double> out;
  for (const auto& r : run.intervals)
    if (std::isfinite(r.sides[side].mape)) out.push_back(r.sides[side].mape);
  return out;
}

inline RunStats summarize(const RunSummary& run, std::string name = {}) {
  RunStats st;
  st.name = std::move(name);
  st.intervals = run.intervals.size();
  for (std::size_t s = 0; s < kSideCount; ++s) {
    double m = 0.0, r = 0.0, sv = 0.0;
    std::size_t nm = 0, nr = 0;
    for (const auto& rec : run.intervals) {
      const auto& x = rec.sides[s];
      if (std::isfinite(x.mape)) m += x.mape, ++nm;
      if (std::isfinite(x.rmse)) r += x.rmse, ++nr;
      sv += static_cast<double>(x.sv_count);
    }
    st.mape[s] = nm ? m / static_cast<double>(nm) : std::nan("");
    st.rmse[s] = nr ? r / static_cast<double>(nr) : std::nan("");
    st.avg_sv[s] = run.intervals.empty() ? 0.0 : sv / static_cast<double>(run.intervals.size());
    st.final_sv[s] = run.final_sv[s];
  }
  return st;
}

struct ReplayInput {
  std::span<const OptionTick> ticks;
  YieldCurve curve;
  GridSpec grid;
  GroundTruth truth;
};

namespace detail {

template <class Job>
auto run_jobs(std::size_t count, std::size_t workers, Job job) {
  using R = decltype(job(std::size_t{0}));
  std::vector<R> out(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = job(i);
    return out;
  }
  for (std::size_t base = 0; base < count; base += workers) {
    std::vector<std::future<R>> futs;
    for (std::size_t i = base; i < std::min(count, base + workers); ++i)
      futs.push_back(std::async(std::launch::async, job, i));
    for (std::size_t i = 0; i < futs.size(); ++i) out[base + i] = futs[i].get();
  }
  return out;
}

}  // namespace detail

// Every algorithm replays the same tick sequence with its own learner bank.
inline std::vector<RunStats> compare_run(const ReplayInput& input, const PipelineConfig& base,
                                         std::span<const AlgorithmSpec> algorithms, std::size_t workers = 1,
                                         std::vector<RunSummary>* runs = nullptr) {
  auto results = detail::run_jobs(algorithms.size(), workers, [&](std::size_t i) {
    PipelineConfig cfg = base;
    cfg.algorithm = algorithms[i];
    return run_online(input.ticks, input.curve, input.grid, cfg, input.truth);
  });
  std::vector<RunStats> out;
  for (std::size_t i = 0; i < algorithms.size(); ++i)
    out.push_back(summarize(results[i], std::string(algorithm_name(algorithms[i].kind))));
  if (runs) *runs = std::move(results);
  return out;
}

enum class SweepParam { Gamma, Rho, Omega, Lambda };

inline SweepParam parse_sweep_param(std::string_view s) {
  if (s == "gamma") return SweepParam::Gamma;
  if (s == "rho") return SweepParam::Rho;
  if (s == "omega") return SweepParam::Omega;
  if (s == "lambda") return SweepParam::Lambda;
  throw ConfigError("unknown sweep parameter '" + std::string(s) + "'");
}

inline std::string_view sweep_param_name(SweepParam p) {
  switch (p) {
    case SweepParam::Gamma: return "gamma";
    case SweepParam::Rho: return "rho";
    case SweepParam::Omega: return "omega";
    case SweepParam::Lambda: return "lambda";
  }
  return "?";
}

struct SweepRow {
  double value = 0.0;
  double avg_sv = 0.0;
  double avg_mape = 0.0;
};

inline PipelineConfig with_param(PipelineConfig cfg, SweepParam p, double v) {
  switch (p) {
    case SweepParam::Gamma: cfg.hyper.kernel = KernelSpec::gaussian(v); break;
    case SweepParam::Rho: cfg.hyper.rho = v; break;
    case SweepParam::Omega:
      if (v < 0.0 || v != std::floor(v)) throw ConfigError("omega must be a nonnegative integer");
      cfg.hyper.omega = static_cast<std::int64_t>(v);
      break;
    case SweepParam::Lambda: cfg.hyper.lambda = v; break;
  }
  return cfg;
}

// One EKPSVR replay per value.
inline std::vector<SweepRow> sensitivity_sweep(const ReplayInput& input, const PipelineConfig& base, SweepParam param,
                                               std::span<const double> values, std::size_t workers = 1) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  auto stats = detail::run_jobs(values.size(), workers, [&](std::size_t i) {
    PipelineConfig cfg = with_param(base, param, values[i]);
    cfg.algorithm.kind = Algorithm::Ekpsvr;
    return summarize(run_online(input.ticks, input.curve, input.grid, cfg, input.truth));
  });
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < values.size(); ++i) rows.push_back({values[i], stats[i].mean_sv(), stats[i].mean_mape()});
  return rows;
}

inline void write_comparison_csv(std::ostream& os, std::span<const RunStats> rows) {
  os << "algorithm";
  for (std::size_t s = 0; s < kSideCount; ++s) {
    const auto n = side_name(s);
    os << ',' << n << "_mape," << n << "_rmse," << n << "_sv";
  }
  os << '\n';
  for (const auto& r : rows) {
    os << r.name;
    for (std::size_t s = 0; s < kSideCount; ++s)
      os << ',' << format_real(r.mape[s]) << ',' << format_real(r.rmse[s]) << ',' << r.final_sv[s];
    os << '\n';
  }
}

inline void write_sweep_csv(std::ostream& os, SweepParam p, std::span<const SweepRow> rows) {
  os << "param,value,avg_sv,avg_mape\n";
  for (const auto& r : rows)
    os << sweep_param_name(p) << ',' << format_real(r.value) << ',' << format_real(r.avg_sv) << ','
       << format_real(r.avg_mape) << '\n';
}

inline void write_interval_csv(std::ostream& os, const RunSummary& run) {
  os << "interval,end_us,side,mape,rmse,grid_mape,grid_rmse,sv_count,ticks,skipped,negative\n";
  for (const auto& r : run.intervals)
    for (std::size_t s = 0; s < kSideCount; ++s) {
      const auto& m = r.sides[s];
      os << r.index << ',' << r.end_us << ',' << side_name(s) << ',' << format_real(m.mape) << ','
         << format_real(m.rmse) << ',' << format_real(m.grid_mape) << ',' << format_real(m.grid_rmse) << ','
         << m.sv_count << ',' << m.ticks << ',' << m.skipped << ',' << m.negative << '\n';
    }
}

inline void write_bench_csv(std::ostream& os, std::span<const BenchRow> rows) {
  os << "n,op,serial_ns,parallel_ns,speedup\n";
  for (const auto& r : rows)
    os << r.n << ',' << r.op << ',' << format_real(r.serial_ns) << ',' << format_real(r.parallel_ns) << ','
       << format_real(r.speedup) << '\n';
}

}  // namespace ivsvr

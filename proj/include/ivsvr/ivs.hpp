#pragma once

// Implied-volatility-surface modeling on an option tick stream.
//
// Four independent learners (Call/Put x Bid/Ask) consume the demultiplexed
// ticks. Each tick is inverted to an implied volatility, mapped to the
// quadratic-surface features (k, k^2, tau, k tau), scored against the latest
// model before it is used for an update, and then fed to the learner. Time is
// cut into fixed reopening intervals; at each boundary the full grid is
// predicted, interval metrics are emitted and every learner's step counter is
// reset to 1.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ivsvr/error.hpp"
#include "ivsvr/kernel.hpp"
#include "ivsvr/parallel.hpp"
#include "ivsvr/pricing.hpp"
#include "ivsvr/schedule.hpp"
#include "ivsvr/svr.hpp"

namespace ivsvr {

enum class Quote { Bid, Ask };

struct OptionTick {
  std::int64_t timestamp_us = 0;
  OptionSide side = OptionSide::Call;
  Quote quote = Quote::Bid;
  double strike = 0.0;
  double maturity = 0.0;  // years
  double price = 0.0;
  double underlying = 0.0;

  friend bool operator==(const OptionTick&, const OptionTick&) = default;
};

inline constexpr std::size_t kSideCount = 4;

inline std::size_t side_index(OptionSide side, Quote quote) noexcept {
  return (side == OptionSide::Put ? 2u : 0u) + (quote == Quote::Ask ? 1u : 0u);
}

inline std::string_view side_name(std::size_t i) {
  static constexpr std::array<std::string_view, kSideCount> names{"call_bid", "call_ask", "put_bid", "put_ask"};
  return names.at(i);
}

inline OptionSide side_of(std::size_t i) noexcept { return i >= 2 ? OptionSide::Put : OptionSide::Call; }
inline Quote quote_of(std::size_t i) noexcept { return (i & 1u) ? Quote::Ask : Quote::Bid; }

inline FeatureVector feature_vector(double strike, double tau, double reference_price, bool scaled = true) {
  const double k = scaled ? strike / reference_price : strike;
  return FeatureVector{k, k * k, tau, k * tau};
}

struct GridSpec {
  std::vector<double> strikes;
  std::vector<double> maturities;

  std::size_t size() const noexcept { return strikes.size() * maturities.size(); }

  // `count` strikes spaced evenly over moneyness [lo, hi] of the reference.
  static GridSpec uniform(double reference_price, std::size_t strike_count = 40,
                          std::vector<double> maturities = {0.08, 0.165, 0.25, 0.335, 0.42}, double lo = 0.95,
                          double hi = 1.05) {
    GridSpec g;
    g.maturities = std::move(maturities);
    for (std::size_t i = 0; i < strike_count; ++i) {
      const double m = strike_count == 1 ? 0.5 * (lo + hi)
                                         : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(strike_count - 1);
      g.strikes.push_back(reference_price * m);
    }
    return g;
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

// Predicted IVs per side, strike-major: values[side][s * |maturities| + m].
struct IvsGrid {
  GridSpec spec;
  std::array<std::vector<double>, kSideCount> values;

  double at(std::size_t side, std::size_t strike_i, std::size_t maturity_i) const {
    return values[side][strike_i * spec.maturities.size() + maturity_i];
  }
  std::size_t negative_count(std::size_t side) const {
    std::size_t n = 0;
    for (double v : values[side]) n += v < 0.0 ? 1u : 0u;
    return n;
  }

  friend bool operator==(const IvsGrid&, const IvsGrid&) = default;
};

struct IvsHyperParams {
  double rho = 0.3;
  double lambda = 0.75;
  std::int64_t omega = 7;
  double epsilon = 0.01;
  KernelSpec kernel = KernelSpec::gaussian(0.25);
};

enum class Algorithm { Kpsvr, Bkpsvr, Ekpsvr, Norma, Bsgd };

inline std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Kpsvr: return "kpsvr";
    case Algorithm::Bkpsvr: return "bkpsvr";
    case Algorithm::Ekpsvr: return "ekpsvr";
    case Algorithm::Norma: return "norma";
    case Algorithm::Bsgd: return "bsgd";
  }
  return "?";
}

inline Algorithm parse_algorithm(std::string_view s) {
  if (s == "kpsvr") return Algorithm::Kpsvr;
  if (s == "bkpsvr") return Algorithm::Bkpsvr;
  if (s == "ekpsvr") return Algorithm::Ekpsvr;
  if (s == "norma") return Algorithm::Norma;
  if (s == "bsgd") return Algorithm::Bsgd;
  throw ConfigError("unknown algorithm '" + std::string(s) + "'");
}

struct AlgorithmSpec {
  Algorithm kind = Algorithm::Ekpsvr;
  std::size_t budget = 50;
  double norma_p = 0.71;
  double bsgd_eta = 0.01;
  double bsgd_lambda = 10.0;
};

// NORMA and BSGD keep the enhanced structure and swap only the step/shrink rules.
inline LearnerConfig make_learner_config(const IvsHyperParams& h, const AlgorithmSpec& a,
                                         NeutralSign neutral = NeutralSign::Plus, FvsConfig fvs = {}) {
  LearnerConfig c;
  c.kernel = h.kernel;
  c.epsilon = h.epsilon;
  c.rho = h.rho;
  c.budget = a.budget;
  c.neutral = neutral;
  c.fvs = fvs;
  switch (a.kind) {
    case Algorithm::Kpsvr:
      c.structure = Structure::Kpsvr;
      c.schedule = Pegasos{h.lambda, h.omega};
      break;
    case Algorithm::Bkpsvr:
      c.structure = Structure::Bkpsvr;
      c.schedule = Pegasos{h.lambda, h.omega};
      break;
    case Algorithm::Ekpsvr:
      c.structure = Structure::Ekpsvr;
      c.schedule = Pegasos{h.lambda, h.omega};
      break;
    case Algorithm::Norma:
      c.structure = Structure::Ekpsvr;
      c.schedule = Norma{a.norma_p, h.lambda};
      break;
    case Algorithm::Bsgd:
      c.structure = Structure::Ekpsvr;
      c.schedule = Bsgd{a.bsgd_eta, a.bsgd_lambda};
      break;
  }
  return c;
}

// Fixed-length reopening windows aligned to multiples of the length.
class ReopeningClock {
 public:
  explicit ReopeningClock(std::int64_t interval_us) : interval_us_(interval_us) {
    if (interval_us_ <= 0) throw ConfigError("reopening interval must be positive");
  }
  void start(std::int64_t ts) {
    start_ = ts - ((ts % interval_us_) + interval_us_) % interval_us_;
    started_ = true;
  }
  bool started() const noexcept { return started_; }
  std::int64_t interval_start() const noexcept { return start_; }
  std::int64_t interval_end() const noexcept { return start_ + interval_us_; }
  bool reached_end(std::int64_t ts) const noexcept { return ts >= interval_end(); }
  void advance() noexcept { start_ += interval_us_; }
  std::int64_t length_us() const noexcept { return interval_us_; }

 private:
  std::int64_t interval_us_;
  std::int64_t start_ = 0;
  bool started_ = false;
};

// True IV at (time, side, strike, tau); supplied by the synthetic generator.
using GroundTruth = std::function<double(std::int64_t, std::size_t, double, double)>;

struct PipelineConfig {
  IvsHyperParams hyper{};
  AlgorithmSpec algorithm{};
  double interval_seconds = 60.0;
  double warmup_seconds = 3600.0;
  double reference_price = 0.0;  // 0: first tick's underlying
  bool feature_scaling = true;
  PricingModel pricing = PricingModel::Black76;
  IvSolverConfig solver{};
  double moneyness_lo = 0.95;
  double moneyness_hi = 1.05;
  std::size_t edge_exclusion = 0;
  NeutralSign neutral = NeutralSign::Plus;
  FvsConfig fvs{};
  BatchPlan plan{};
  bool record_grids = false;
};

struct SideMetrics {
  double mape = std::numeric_limits<double>::quiet_NaN();  // percent
  double rmse = std::numeric_limits<double>::quiet_NaN();  // IV percentage points
  double grid_mape = std::numeric_limits<double>::quiet_NaN();  // in-force grid vs truth at the interval end
  double grid_rmse = std::numeric_limits<double>::quiet_NaN();
  std::size_t sv_count = 0;
  std::size_t ticks = 0;    // used for training
  std::size_t scored = 0;   // contributed to mape/rmse
  std::size_t skipped = 0;  // IV solver failures
  std::size_t negative = 0; // negative grid predictions

  friend bool operator==(const SideMetrics& a, const SideMetrics& b) {
    auto same = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
    return same(a.mape, b.mape) && same(a.rmse, b.rmse) && same(a.grid_mape, b.grid_mape) &&
           same(a.grid_rmse, b.grid_rmse) && a.sv_count == b.sv_count && a.ticks == b.ticks &&
           a.scored == b.scored && a.skipped == b.skipped && a.negative == b.negative;
  }
};

struct IntervalRecord {
  std::size_t index = 0;
  std::int64_t start_us = 0;
  std::int64_t end_us = 0;
  std::array<SideMetrics, kSideCount> sides{};
  std::optional<IvsGrid> predicted;  // emitted at start_us, in force for the interval
  std::optional<IvsGrid> truth;      // noiseless surface at end_us

  friend bool operator==(const IntervalRecord&, const IntervalRecord&) = default;
};

struct RunSummary {
  std::vector<IntervalRecord> intervals;
  std::size_t ticks_total = 0;
  std::size_t ticks_filtered = 0;  // outside the moneyness band
  std::array<std::size_t, kSideCount> skipped{};
  std::array<std::size_t, kSideCount> final_sv{};
};

// Accumulates |pred - actual| / |actual| and squared errors.
struct ErrorAccumulator {
  double abs_pct = 0.0;
  double sq = 0.0;
  std::size_t n_pct = 0;
  std::size_t n = 0;

  void add(double pred, double actual) {
    const double e = pred - actual;
    sq += e * e;
    ++n;
    if (actual != 0.0) {
      abs_pct += std::abs(e) / std::abs(actual);
      ++n_pct;
    }
  }
  double mape() const {
    return n_pct ? 100.0 * abs_pct / static_cast<double>(n_pct) : std::numeric_limits<double>::quiet_NaN();
  }
  double rmse() const {
    return n ? 100.0 * std::sqrt(sq / static_cast<double>(n)) : std::numeric_limits<double>::quiet_NaN();
  }
};

inline IvsGrid predict_grid(const std::array<OnlineSvr, kSideCount>& learners, const GridSpec& spec,
                            double reference_price, bool scaled, const BatchPlan& plan = {}) {
  std::vector<FeatureVector> queries;
  queries.reserve(spec.size());
  for (double k : spec.strikes)
    for (double tau : spec.maturities) queries.push_back(feature_vector(k, tau, reference_price, scaled));
  IvsGrid grid;
  grid.spec = spec;
  for (std::size_t s = 0; s < kSideCount; ++s) {
    const auto& dict = learners[s].dictionary();
    const auto keys = dict.keys();
    const auto coeffs = dict.coefficients();
    const RowMatrix rows = kernel_rows(learners[s].config().kernel, keys, queries);
    grid.values[s] = batch_predict(coeffs, rows, dict.intercept(), plan);
  }
  return grid;
}

// Keeps the central |strikes| - 2 * exclusion strikes.
inline GridSpec edge_filter(const GridSpec& spec, std::size_t exclusion) {
  if (2 * exclusion >= spec.strikes.size())
    throw ConfigError("edge exclusion of " + std::to_string(exclusion) + " leaves no strikes");
  GridSpec out;
  out.maturities = spec.maturities;
  out.strikes.assign(spec.strikes.begin() + static_cast<std::ptrdiff_t>(exclusion),
                     spec.strikes.end() - static_cast<std::ptrdiff_t>(exclusion));
  return out;
}

class IvsPipeline {
 public:
  IvsPipeline(YieldCurve curve, GridSpec grid, PipelineConfig config, GroundTruth truth = {})
      : curve_(std::move(curve)),
        grid_(std::move(grid)),
        config_(std::move(config)),
        truth_(std::move(truth)),
        clock_(static_cast<std::int64_t>(std::llround(config_.interval_seconds * 1e6))),
        learners_(make_learners(config_)) {
    if (curve_.empty()) throw ConfigError("yield curve is empty");
    if (grid_.strikes.empty() || grid_.maturities.empty()) throw ConfigError("grid is empty");
    scored_grid_ = edge_filter(grid_, config_.edge_exclusion);
    ref_ = config_.reference_price;
    if (ref_ > 0.0) check_grid();
  }

  void push(const OptionTick& tick) {
    if (tick.timestamp_us < last_ts_) throw StreamError("tick timestamps decrease at " + std::to_string(tick.timestamp_us));
    last_ts_ = tick.timestamp_us;
    if (!clock_.started()) {
      if (!(ref_ > 0.0)) {
        ref_ = tick.underlying;
        check_grid();
      }
      clock_.start(tick.timestamp_us);
      session_start_ = clock_.interval_start();
      in_force_ = predict_grid(learners_, grid_, ref_, config_.feature_scaling, config_.plan);
    }
    while (clock_.reached_end(tick.timestamp_us)) close_interval();

    ++summary_.ticks_total;
    const double moneyness = tick.strike / tick.underlying;
    if (moneyness < config_.moneyness_lo - 1e-12 || moneyness > config_.moneyness_hi + 1e-12) {
      ++summary_.ticks_filtered;
      return;
    }
    const std::size_t s = side_index(tick.side, tick.quote);
    double iv = 0.0;
    try {
      const double r = curve_.rate(tick.maturity);
      iv = implied_vol(tick.side, tick.underlying, tick.strike, tick.maturity, r, tick.price, config_.pricing,
                       config_.solver);
    } catch (const NoSolutionError&) {
      ++current_[s].skipped;
      ++summary_.skipped[s];
      return;
    } catch (const SolverError&) {
      ++current_[s].skipped;
      ++summary_.skipped[s];
      return;
    }

    const FeatureVector x = feature_vector(tick.strike, tick.maturity, ref_, config_.feature_scaling);
    const UpdateOutcome out = learners_[s].update(x, iv);
    ++current_[s].ticks;
    if (scoring() && strike_scored(tick.strike)) {
      const double actual = truth_ ? truth_(tick.timestamp_us, s, tick.strike, tick.maturity) : iv;
      tick_err_[s].add(out.prediction, actual);
    }
  }

  // Closes the trailing interval (if any ticks were seen) and returns everything.
  RunSummary finish() {
    if (clock_.started() && !finished_) close_interval();
    finished_ = true;
    for (std::size_t s = 0; s < kSideCount; ++s) summary_.final_sv[s] = learners_[s].support_vector_count();
    return summary_;
  }

  const std::array<OnlineSvr, kSideCount>& learners() const noexcept { return learners_; }
  double reference_price() const noexcept { return ref_; }
  const GridSpec& grid() const noexcept { return grid_; }
  // Most recently emitted grid.
  const IvsGrid& current_grid() const noexcept { return in_force_; }

 private:
  static std::array<OnlineSvr, kSideCount> make_learners(const PipelineConfig& c) {
    const LearnerConfig lc = make_learner_config(c.hyper, c.algorithm, c.neutral, c.fvs);
    return {OnlineSvr(lc), OnlineSvr(lc), OnlineSvr(lc), OnlineSvr(lc)};
  }

  void check_grid() const {
    for (double k : grid_.strikes) {
      const double m = k / ref_;
      if (m < config_.moneyness_lo - 1e-9 || m > config_.moneyness_hi + 1e-9)
        throw ConfigError("grid strike " + std::to_string(k) + " outside the moneyness band");
    }
  }

  bool scoring() const noexcept {
    return clock_.interval_start() >= session_start_ + static_cast<std::int64_t>(config_.warmup_seconds * 1e6);
  }

  bool strike_scored(double strike) const noexcept {
    return strike >= scored_grid_.strikes.front() * (1 - 1e-12) && strike <= scored_grid_.strikes.back() * (1 + 1e-12);
  }

  // The grid emitted at a boundary stays in force for the following interval
  // and is scored against the truth at that interval's end.
  void close_interval() {
    IvsGrid next = predict_grid(learners_, grid_, ref_, config_.feature_scaling, config_.plan);
    if (scoring()) {
      IntervalRecord rec;
      rec.index = next_index_++;
      rec.start_us = clock_.interval_start();
      rec.end_us = clock_.interval_end();
      std::optional<IvsGrid> truth;
      if (truth_) {
        truth.emplace();
        truth->spec = grid_;
        for (std::size_t s = 0; s < kSideCount; ++s)
          for (double k : grid_.strikes)
            for (double tau : grid_.maturities) truth->values[s].push_back(truth_(rec.end_us, s, k, tau));
      }
      for (std::size_t s = 0; s < kSideCount; ++s) {
        SideMetrics& m = current_[s];
        m.mape = tick_err_[s].mape();
        m.rmse = tick_err_[s].rmse();
        m.scored = tick_err_[s].n;
        m.sv_count = learners_[s].support_vector_count();
        m.negative = in_force_.negative_count(s);
        if (truth) {
          const ErrorAccumulator g = grid_errors(in_force_, *truth, s, config_.edge_exclusion);
          m.grid_mape = g.mape();
          m.grid_rmse = g.rmse();
        }
        rec.sides[s] = m;
      }
      if (config_.record_grids) {
        rec.predicted = in_force_;
        rec.truth = truth;
      }
      summary_.intervals.push_back(std::move(rec));
    }
    in_force_ = std::move(next);
    current_ = {};
    tick_err_ = {};
    for (auto& l : learners_) l.reset_clock();
    clock_.advance();
  }

 public:
  // Errors over the grid points kept by the edge exclusion.
  static ErrorAccumulator grid_errors(const IvsGrid& pred, const IvsGrid& truth, std::size_t side,
                                      std::size_t exclusion) {
    ErrorAccumulator acc;
    const std::size_t ns = pred.spec.strikes.size();
    for (std::size_t i = exclusion; i + exclusion < ns; ++i)
      for (std::size_t j = 0; j < pred.spec.maturities.size(); ++j)
        acc.add(pred.at(side, i, j), truth.at(side, i, j));
    return acc;
  }

 private:
  YieldCurve curve_;
  GridSpec grid_;
  GridSpec scored_grid_;
  PipelineConfig config_;
  GroundTruth truth_;
  ReopeningClock clock_;
  std::array<OnlineSvr, kSideCount> learners_;
  std::array<SideMetrics, kSideCount> current_{};
  std::array<ErrorAccumulator, kSideCount> tick_err_{};
  RunSummary summary_;
  IvsGrid in_force_;
  double ref_ = 0.0;
  std::int64_t last_ts_ = std::numeric_limits<std::int64_t>::min();
  std::int64_t session_start_ = 0;
  std::size_t next_index_ = 0;
  bool finished_ = false;
};

inline RunSummary run_online(std::span<const OptionTick> ticks, const YieldCurve& curve, const GridSpec& grid,
                             const PipelineConfig& config, GroundTruth truth = {}) {
  IvsPipeline p(curve, grid, config, std::move(truth));
  for (const auto& t : ticks) p.push(t);
  return p.finish();
}

}  // namespace ivsvr

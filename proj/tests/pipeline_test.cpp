#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "ivsvr/ivs.hpp"
#include "ivsvr/synth.hpp"

namespace ivsvr {
namespace {

const YieldCurve kCurve = YieldCurve::flat(0.001);
constexpr double kRef = 1780.0;

OptionTick make_tick(std::int64_t ts, std::size_t side, double strike, double tau, double iv) {
  const double price = bsm_price(side_of(side), kRef, strike, tau, kCurve.rate(tau), iv);
  return {ts, side_of(side), quote_of(side), strike, tau, price, kRef};
}

PipelineConfig quiet_config(Algorithm a = Algorithm::Ekpsvr) {
  PipelineConfig c;
  c.algorithm.kind = a;
  c.warmup_seconds = 0.0;
  return c;
}

TEST(Pipeline, EmptyStreamEmitsNothing) {
  const auto run = run_online({}, kCurve, GridSpec::uniform(kRef), quiet_config());
  EXPECT_TRUE(run.intervals.empty());
  EXPECT_EQ(run.ticks_total, 0u);
  for (auto n : run.final_sv) EXPECT_EQ(n, 0u);
}

TEST(Pipeline, OneTickPerSideGivesOneSupportVector) {
  for (auto a : {Algorithm::Kpsvr, Algorithm::Bkpsvr, Algorithm::Ekpsvr, Algorithm::Norma, Algorithm::Bsgd}) {
    std::vector<OptionTick> ticks;
    for (std::size_t s = 0; s < kSideCount; ++s) ticks.push_back(make_tick(1000 + 10 * s, s, kRef, 0.25, 0.15));
    const auto run = run_online(ticks, kCurve, GridSpec::uniform(kRef), quiet_config(a));
    ASSERT_EQ(run.intervals.size(), 1u) << algorithm_name(a);
    for (std::size_t s = 0; s < kSideCount; ++s) {
      EXPECT_EQ(run.final_sv[s], 1u) << algorithm_name(a);
      EXPECT_EQ(run.intervals[0].sides[s].sv_count, 1u);
      EXPECT_EQ(run.intervals[0].sides[s].ticks, 1u);
    }
  }
}

TEST(Pipeline, DecreasingTimestampIsStreamError) {
  IvsPipeline p(kCurve, GridSpec::uniform(kRef), quiet_config());
  p.push(make_tick(2000, 0, kRef, 0.25, 0.15));
  EXPECT_THROW(p.push(make_tick(1999, 0, kRef, 0.25, 0.15)), StreamError);
}

TEST(Pipeline, GridOutsideMoneynessIsConfigError) {
  PipelineConfig c = quiet_config();
  c.reference_price = kRef;
  EXPECT_THROW(IvsPipeline(kCurve, GridSpec::uniform(1500.0), c), ConfigError);
}

TEST(Pipeline, FilteringAndSkipping) {
  IvsPipeline p(kCurve, GridSpec::uniform(kRef), quiet_config());
  p.push(make_tick(1, 0, kRef, 0.25, 0.15));
  p.push(make_tick(2, 0, kRef * 1.2, 0.25, 0.15));  // outside the band
  OptionTick bad = make_tick(3, 1, kRef, 0.25, 0.15);
  bad.price = kRef * 2.0;  // above the call upper bound
  p.push(bad);
  const auto run = p.finish();
  EXPECT_EQ(run.ticks_total, 3u);
  EXPECT_EQ(run.ticks_filtered, 1u);
  EXPECT_EQ(run.skipped[1], 1u);
  EXPECT_EQ(run.intervals.at(0).sides[1].skipped, 1u);
}

TEST(Pipeline, ClockResetsAtEveryBoundary) {
  IvsPipeline p(kCurve, GridSpec::uniform(kRef), quiet_config());
  const auto grid = GridSpec::uniform(kRef);
  std::int64_t ts = 0;
  for (int interval = 0; interval < 3; ++interval) {
    for (int i = 0; i < 5; ++i) {
      ts = interval * 60'000'000LL + i * 1000;
      p.push(make_tick(ts, 0, grid.strikes[i * 3], 0.25, 0.15));
      EXPECT_EQ(p.learners()[0].t(), i + 2);
    }
  }
  p.push(make_tick(3 * 60'000'000LL, 0, kRef, 0.25, 0.15));
  EXPECT_EQ(p.learners()[0].t(), 2);  // the boundary reset t to 1 before this tick
}

TEST(Pipeline, SidesAreIndependent) {
  std::mt19937_64 rng(17);
  const auto grid = GridSpec::uniform(kRef);
  std::uniform_int_distribution<std::size_t> ks(0, grid.strikes.size() - 1), ms(0, grid.maturities.size() - 1);
  std::uniform_real_distribution<double> iv(0.12, 0.18);
  std::array<std::vector<OptionTick>, kSideCount> per_side;
  for (std::size_t s = 0; s < kSideCount; ++s)
    for (int i = 0; i < 150; ++i) per_side[s].push_back(make_tick(0, s, grid.strikes[ks(rng)], grid.maturities[ms(rng)], iv(rng)));

  auto interleave = [&](std::uint64_t seed) {
    std::mt19937_64 r(seed);
    std::array<std::size_t, kSideCount> next{};
    std::vector<OptionTick> out;
    while (out.size() < 4 * 150) {
      const std::size_t s = std::uniform_int_distribution<std::size_t>(0, 3)(r);
      if (next[s] == 150) continue;
      OptionTick t = per_side[s][next[s]++];
      t.timestamp_us = static_cast<std::int64_t>(out.size()) * 1000;  // all inside one interval
      out.push_back(t);
    }
    return out;
  };
  const auto a = interleave(1), b = interleave(2);
  ASSERT_NE(a, b);
  IvsPipeline pa(kCurve, grid, quiet_config()), pb(kCurve, grid, quiet_config());
  for (const auto& t : a) pa.push(t);
  for (const auto& t : b) pb.push(t);
  for (std::size_t s = 0; s < kSideCount; ++s) {
    const auto& da = pa.learners()[s].dictionary();
    const auto& db = pb.learners()[s].dictionary();
    ASSERT_EQ(da.size(), db.size());
    EXPECT_EQ(da.intercept(), db.intercept());
    for (std::size_t i = 0; i < da.size(); ++i) {
      EXPECT_EQ(da[i].key, db[i].key);
      EXPECT_EQ(da[i].coeff, db[i].coeff);
    }
  }
}

TEST(PredictGrid, EmptyLearnerIsInterceptEverywhere) {
  const LearnerConfig lc;
  std::array<OnlineSvr, kSideCount> learners{OnlineSvr(lc), OnlineSvr(lc), OnlineSvr(lc), OnlineSvr(lc)};
  const auto g = predict_grid(learners, GridSpec::uniform(kRef), kRef, true);
  for (std::size_t s = 0; s < kSideCount; ++s) {
    ASSERT_EQ(g.values[s].size(), 200u);
    for (double v : g.values[s]) EXPECT_EQ(v, 0.0);
  }
}

TEST(PredictGrid, SingleSupportVectorAtGridPoint) {
  const LearnerConfig lc;
  std::array<OnlineSvr, kSideCount> learners{OnlineSvr(lc), OnlineSvr(lc), OnlineSvr(lc), OnlineSvr(lc)};
  const auto spec = GridSpec::uniform(kRef);
  SupportVectorDictionary d;
  d.insert(feature_vector(spec.strikes[7], spec.maturities[2], kRef), 0.3);
  d.set_intercept(0.05);
  learners[2].restore(d);
  const auto g = predict_grid(learners, spec, kRef, true);
  EXPECT_NEAR(g.at(2, 7, 2), 0.35, 1e-15);
}

TEST(PredictGrid, MatchesSerialPredict) {
  std::mt19937_64 rng(23);
  LearnerConfig lc;
  lc.structure = Structure::Kpsvr;  // arbitrary keys, no basis to maintain
  std::array<OnlineSvr, kSideCount> learners{OnlineSvr(lc), OnlineSvr(lc), OnlineSvr(lc), OnlineSvr(lc)};
  std::uniform_real_distribution<double> u(0.9, 1.1), tau(0.05, 0.5), c(-0.2, 0.2);
  for (auto& l : learners) {
    SupportVectorDictionary d;
    for (int i = 0; i < 100; ++i) d.insert(feature_vector(kRef * u(rng), tau(rng), kRef), c(rng));
    d.set_intercept(c(rng));
    l.restore(d);
  }
  const auto spec = GridSpec::uniform(kRef);
  BatchPlan plan;
  plan.worker_count = 3;
  const auto g = predict_grid(learners, spec, kRef, true, plan);
  for (std::size_t s = 0; s < kSideCount; ++s)
    for (std::size_t i = 0; i < spec.strikes.size(); ++i)
      for (std::size_t j = 0; j < spec.maturities.size(); ++j) {
        const double v = learners[s].predict(feature_vector(spec.strikes[i], spec.maturities[j], kRef));
        EXPECT_NEAR(g.at(s, i, j), v, 1e-10);
      }
}

TEST(EdgeFilter, Examples) {
  const auto spec = GridSpec::uniform(kRef);
  EXPECT_EQ(edge_filter(spec, 0), spec);
  const auto mid = edge_filter(spec, 10);
  ASSERT_EQ(mid.strikes.size(), 20u);
  EXPECT_EQ(mid.strikes.front(), spec.strikes[10]);
  EXPECT_EQ(mid.strikes.back(), spec.strikes[29]);
  EXPECT_EQ(mid.maturities, spec.maturities);
  GridSpec four{{1, 2, 3, 4}, {0.1}};
  EXPECT_THROW(edge_filter(four, 2), ConfigError);
}

TEST(Pipeline, WarmupIntervalsAreNotEmitted) {
  SyntheticScenario sc;
  sc.duration_seconds = 600;
  sc.tick_rate = 20;
  const auto stream = synth_generate(sc);
  PipelineConfig c = quiet_config();
  c.warmup_seconds = 300;
  const auto run = run_online(stream.ticks, sc.curve, sc.grid, c, sc.ground_truth());
  ASSERT_EQ(run.intervals.size(), 5u);
  EXPECT_EQ(run.intervals.front().start_us, 300'000'000);
  EXPECT_EQ(run.intervals.front().index, 0u);
}

// Scored on the emitted surface: the reopening reset makes tick-level error
// nearly flat from the second interval on.
TEST(Pipeline, StationaryStreamImproves) {
  SyntheticScenario sc;
  sc.duration_seconds = 120 * 60;
  sc.tick_rate = 50;
  const auto stream = synth_generate(sc);
  const auto run = run_online(stream.ticks, sc.curve, sc.grid, quiet_config(), sc.ground_truth());
  ASSERT_EQ(run.intervals.size(), 120u);
  auto mean_mape = [&](std::size_t b, std::size_t e) {
    double acc = 0.0;
    for (std::size_t i = b; i < e; ++i)
      for (const auto& m : run.intervals[i].sides) acc += m.grid_mape;
    return acc / (4.0 * static_cast<double>(e - b));
  };
  const double first = mean_mape(0, 20), last = mean_mape(100, 120);
  EXPECT_LT(last, first) << "first " << first << " last " << last;
  for (const auto& r : run.intervals)
    for (const auto& m : r.sides) {
      EXPECT_TRUE(std::isfinite(m.grid_mape));
      EXPECT_GT(m.scored, 0u);
    }
}

TEST(Pipeline, EmittedGridsHaveNoNaN) {
  SyntheticScenario sc;
  sc.duration_seconds = 300;
  sc.tick_rate = 20;
  const auto stream = synth_generate(sc);
  PipelineConfig c = quiet_config();
  c.record_grids = true;
  const auto run = run_online(stream.ticks, sc.curve, sc.grid, c, sc.ground_truth());
  for (const auto& r : run.intervals) {
    ASSERT_TRUE(r.predicted);
    for (const auto& v : r.predicted->values) {
      ASSERT_EQ(v.size(), sc.grid.size());
      for (double x : v) EXPECT_FALSE(std::isnan(x));
    }
  }
}

}  // namespace
}  // namespace ivsvr

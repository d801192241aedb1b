// ivsvr: replay, compare, sweep, benchmark and synthesize option tick streams.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ivsvr/ivsvr.hpp"

using namespace ivsvr;

namespace {

struct Options {
  std::string algo = "ekpsvr";
  std::vector<std::string> algos{"ekpsvr", "kpsvr", "bkpsvr", "norma", "bsgd"};
  std::string kernel = "gaussian";
  double gamma = 0.25;
  double rho = 0.3;
  double lambda = 0.75;
  std::int64_t omega = 7;
  double epsilon = 0.01;
  std::size_t budget = 50;
  double norma_p = 0.71;
  double bsgd_eta = 0.01;
  double bsgd_lambda = 10.0;
  double interval_seconds = 60.0;
  double warmup_seconds = 3600.0;
  double reference_price = 0.0;
  std::string ticks;
  std::string curve;
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  std::optional<double> tick_rate;
  std::string out;
  std::string results;
  std::size_t workers = 1;
  bool deterministic_sum = false;
  bool no_feature_scaling = false;
  std::size_t edge_exclusion = 0;
  bool spot = false;
  bool dump_grids = false;
  std::string param = "rho";
  std::vector<double> values;
  std::vector<std::size_t> sizes{200, 2000, 20000};
  std::string ground_truth_out;
};

void add_model_flags(CLI::App* c, Options& o) {
  c->add_option("--kernel", o.kernel, "gaussian or linear")->check(CLI::IsMember({"gaussian", "linear"}));
  c->add_option("--gamma", o.gamma, "Gaussian kernel width");
  c->add_option("--rho", o.rho, "local-fitness threshold");
  c->add_option("--lambda", o.lambda, "regularization");
  c->add_option("--omega", o.omega, "warm-start offset");
  c->add_option("--epsilon", o.epsilon, "tube half-width");
  c->add_option("--budget", o.budget, "BKPSVR budget");
  c->add_option("--norma-p", o.norma_p, "NORMA step factor");
  c->add_option("--bsgd-eta", o.bsgd_eta, "BSGD constant step");
  c->add_option("--bsgd-lambda", o.bsgd_lambda, "BSGD regularization");
  c->add_option("--interval-seconds", o.interval_seconds, "reopening interval length");
  c->add_option("--warmup-seconds", o.warmup_seconds, "unscored fitting time at session start");
  c->add_option("--reference-price", o.reference_price, "feature scaling reference (default: first tick)");
  c->add_flag("--no-feature-scaling", o.no_feature_scaling, "use raw strikes in features");
  c->add_option("--edge-exclusion", o.edge_exclusion, "strikes dropped on each side when scoring");
  c->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
  c->add_flag("--deterministic-sum", o.deterministic_sum, "fixed reduction order");
  c->add_flag("--spot", o.spot, "price with spot Black-Scholes instead of Black-76");
}

void add_input_flags(CLI::App* c, Options& o) {
  c->add_option("--ticks", o.ticks, "tick file (timestamp_us,side,quote,strike,maturity,price,underlying)");
  c->add_option("--curve", o.curve, "yield curve file (tenor_years,rate)");
  c->add_option("--scenario", o.scenario, "synthetic scenario JSON (used when --ticks is absent)");
  c->add_option("--seed", o.seed, "override the scenario seed");
  c->add_option("--duration-seconds", o.duration, "override the scenario duration");
  c->add_option("--tick-rate", o.tick_rate, "override the scenario tick rate");
}

PipelineConfig pipeline_config(const Options& o, Algorithm algo) {
  PipelineConfig c;
  c.hyper.rho = o.rho;
  c.hyper.lambda = o.lambda;
  c.hyper.omega = o.omega;
  c.hyper.epsilon = o.epsilon;
  c.hyper.kernel = o.kernel == "linear" ? KernelSpec::linear() : KernelSpec::gaussian(o.gamma);
  c.algorithm = {algo, o.budget, o.norma_p, o.bsgd_eta, o.bsgd_lambda};
  c.interval_seconds = o.interval_seconds;
  c.warmup_seconds = o.warmup_seconds;
  c.reference_price = o.reference_price;
  c.feature_scaling = !o.no_feature_scaling;
  c.edge_exclusion = o.edge_exclusion;
  c.pricing = o.spot ? PricingModel::Spot : PricingModel::Black76;
  c.plan.worker_count = o.workers;
  c.plan.deterministic_sum = o.deterministic_sum;
  c.fvs.plan = c.plan;
  c.record_grids = o.dump_grids;
  return c;
}

SyntheticScenario scenario_for(const Options& o) {
  SyntheticScenario sc = o.scenario.empty() ? SyntheticScenario{} : load_scenario(o.scenario);
  if (o.seed) sc.seed = *o.seed;
  if (o.duration) sc.duration_seconds = *o.duration;
  if (o.tick_rate) sc.tick_rate = *o.tick_rate;
  if (o.spot) sc.pricing = PricingModel::Spot;
  sc.validate();
  return sc;
}

// Loaded ticks or a generated stream, plus what scoring needs.
struct Source {
  std::vector<OptionTick> ticks;
  YieldCurve curve;
  GridSpec grid;
  GroundTruth truth;
};

Source load_source(const Options& o) {
  Source s;
  if (!o.ticks.empty()) {
    s.ticks = parse_ticks(o.ticks);
    if (o.curve.empty()) throw ConfigError("--curve is required with --ticks");
    s.curve = parse_curve(o.curve);
    double ref = o.reference_price;
    if (!(ref > 0.0)) {
      if (s.ticks.empty()) throw ConfigError("empty tick file and no --reference-price");
      ref = s.ticks.front().underlying;
    }
    s.grid = GridSpec::uniform(ref);
    return s;
  }
  const SyntheticScenario sc = scenario_for(o);
  s.ticks = synth_generate(sc, o.interval_seconds).ticks;
  s.curve = o.curve.empty() ? sc.curve : parse_curve(o.curve);
  s.grid = sc.grid;
  s.truth = sc.ground_truth();
  return s;
}

// Writes to --out, or stdout when empty.
template <class F>
void emit(const std::string& path, F&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream os(path);
  if (!os) throw Error("cannot write '" + path + "'");
  write(os);
}

int cmd_run(const Options& o) {
  const Source src = load_source(o);
  const auto run = run_online(src.ticks, src.curve, src.grid, pipeline_config(o, parse_algorithm(o.algo)), src.truth);
  if (!o.results.empty()) save_results(o.results, run.intervals);
  emit(o.out, [&](std::ostream& os) { write_interval_csv(os, run); });
  const auto st = summarize(run, o.algo);
  std::size_t skipped = 0;
  for (auto n : run.skipped) skipped += n;
  std::fprintf(stderr, "%s: %zu ticks (%zu filtered, %zu skipped), %zu intervals, MAPE %.3f%%, RMSE %.3f, SV %zu/%zu/%zu/%zu\n",
               o.algo.c_str(), run.ticks_total, run.ticks_filtered, skipped, run.intervals.size(), st.mean_mape(),
               st.mean_rmse(), run.final_sv[0], run.final_sv[1], run.final_sv[2], run.final_sv[3]);
  return 0;
}

int cmd_compare(const Options& o) {
  const Source src = load_source(o);
  std::vector<AlgorithmSpec> algs;
  for (const auto& a : o.algos) algs.push_back({parse_algorithm(a), o.budget, o.norma_p, o.bsgd_eta, o.bsgd_lambda});
  const ReplayInput in{src.ticks, src.curve, src.grid, src.truth};
  const auto rows = compare_run(in, pipeline_config(o, Algorithm::Ekpsvr), algs, o.workers);
  emit(o.out, [&](std::ostream& os) { write_comparison_csv(os, rows); });
  return 0;
}

int cmd_sweep(const Options& o) {
  const Source src = load_source(o);
  const SweepParam p = parse_sweep_param(o.param);
  const ReplayInput in{src.ticks, src.curve, src.grid, src.truth};
  const auto rows = sensitivity_sweep(in, pipeline_config(o, Algorithm::Ekpsvr), p, o.values, o.workers);
  emit(o.out, [&](std::ostream& os) { write_sweep_csv(os, p, rows); });
  return 0;
}

int cmd_bench(const Options& o) {
  BatchPlan plan;
  plan.worker_count = o.workers;
  plan.deterministic_sum = o.deterministic_sum;
  const auto rows = benchmark(o.sizes, plan);
  if (!o.out.empty()) emit(o.out, [&](std::ostream& os) { write_bench_csv(os, rows); });
  std::printf("%8s  %-13s %14s %14s %8s\n", "n", "op", "serial_ms", "parallel_ms", "speedup");
  for (const auto& r : rows)
    std::printf("%8zu  %-13s %14.3f %14.3f %8.2f\n", r.n, r.op.c_str(), r.serial_ns / 1e6, r.parallel_ns / 1e6,
                r.speedup);
  return 0;
}

int cmd_synth(const Options& o) {
  const SyntheticScenario sc = scenario_for(o);
  const auto s = synth_generate(sc, o.interval_seconds);
  emit(o.out, [&](std::ostream& os) { write_ticks(os, s.ticks); });
  if (!o.curve.empty()) {
    std::ofstream cs(o.curve);
    if (!cs) throw Error("cannot write '" + o.curve + "'");
    for (std::size_t i = 0; i < sc.curve.tenors().size(); ++i)
      cs << format_real(sc.curve.tenors()[i]) << ',' << format_real(sc.curve.rates()[i]) << '\n';
  }
  if (!o.ground_truth_out.empty()) {
    std::vector<IntervalRecord> recs;
    for (std::size_t i = 0; i < s.truth_grids.size(); ++i) {
      IntervalRecord r;
      r.index = i;
      r.end_us = s.truth_times[i];
      r.start_us = r.end_us - static_cast<std::int64_t>(o.interval_seconds * 1e6);
      r.truth = s.truth_grids[i];
      recs.push_back(std::move(r));
    }
    save_results(o.ground_truth_out, recs);
  }
  std::fprintf(stderr, "synth: %zu ticks, seed %llu\n", s.ticks.size(), static_cast<unsigned long long>(sc.seed));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online kernel SVR for implied volatility surfaces"};
  app.require_subcommand(1);
  Options o;

  auto* run = app.add_subcommand("run", "replay one algorithm and write per-interval metrics");
  run->add_option("--algo", o.algo, "kpsvr, bkpsvr, ekpsvr, norma or bsgd");
  add_model_flags(run, o);
  add_input_flags(run, o);
  run->add_option("--out", o.out, "interval CSV (default stdout)");
  run->add_option("--results", o.results, "also save an ivsresults file");
  run->add_flag("--dump-grids", o.dump_grids, "include predicted and true grids in --results");

  auto* compare = app.add_subcommand("compare", "replay several algorithms on one stream");
  compare->add_option("--algo", o.algos, "algorithms to compare")->delimiter(',');
  add_model_flags(compare, o);
  add_input_flags(compare, o);
  compare->add_option("--out", o.out, "comparison CSV (default stdout)");

  auto* sweep = app.add_subcommand("sweep", "EKPSVR sensitivity to one parameter");
  sweep->add_option("--param", o.param, "gamma, rho, omega or lambda")
      ->check(CLI::IsMember({"gamma", "rho", "omega", "lambda"}));
  sweep->add_option("--values", o.values, "comma-separated values")->delimiter(',')->required();
  add_model_flags(sweep, o);
  add_input_flags(sweep, o);
  sweep->add_option("--out", o.out, "sweep CSV (default stdout)");

  auto* bench = app.add_subcommand("bench", "serial vs parallel kernels");
  bench->add_option("--sizes", o.sizes, "support-vector counts")->delimiter(',');
  bench->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
  bench->add_flag("--deterministic-sum", o.deterministic_sum, "fixed reduction order");
  bench->add_option("--out", o.out, "bench CSV");

  auto* synth = app.add_subcommand("synth", "generate a synthetic tick file");
  synth->add_option("--scenario", o.scenario, "scenario JSON");
  synth->add_option("--seed", o.seed, "override the scenario seed");
  synth->add_option("--duration-seconds", o.duration, "override the scenario duration");
  synth->add_option("--tick-rate", o.tick_rate, "override the scenario tick rate");
  synth->add_option("--interval-seconds", o.interval_seconds, "ground-truth grid spacing");
  synth->add_flag("--spot", o.spot, "price with spot Black-Scholes instead of Black-76");
  synth->add_option("--out", o.out, "tick file (default stdout)");
  synth->add_option("--curve", o.curve, "also write the scenario yield curve here");
  synth->add_option("--truth", o.ground_truth_out, "also write the noiseless grids as an ivsresults file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) return cmd_run(o);
    if (*compare) return cmd_compare(o);
    if (*sweep) return cmd_sweep(o);
    if (*bench) return cmd_bench(o);
    if (*synth) return cmd_synth(o);
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}

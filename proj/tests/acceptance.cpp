// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//
// Criteria 5, 7, 8 and 11 share one synthetic replay (reference seed, 200
// ticks/s, 10 minute warmup, 120 scored one-minute intervals, level shift
// from 14.5% to 18.5% at 4230 s).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ivsvr/ivsvr.hpp"

using namespace ivsvr;

namespace {

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] C%-2d %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void info(const std::string& s) {
  std::printf("       %s\n", s.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const KernelSpec kGauss = KernelSpec::gaussian(0.25);

FeatureVector random_point(std::mt19937_64& rng, double lo = -4.0, double hi = 4.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  return FeatureVector{u(rng), u(rng), u(rng), u(rng)};
}

// Incremental formulas only: no automatic rebuild may hide drift.
FvsConfig no_rebuild() {
  FvsConfig c;
  c.rebuild_every = std::size_t(-1);
  c.residual_tolerance = 1e300;
  return c;
}

FeatureVector filtered_point(std::mt19937_64& rng, const FvsState& st, double rho = 0.3) {
  for (;;) {
    auto x = random_point(rng);
    if (st.local_fitness(x) < rho) return x;
  }
}

double identity_residual(const RowMatrix& k, const Eigen::MatrixXd& inv) {
  const Eigen::MatrixXd p = k * inv;
  return (p - Eigen::MatrixXd::Identity(p.rows(), p.cols())).cwiseAbs().maxCoeff();
}

void criterion_1() {
  std::mt19937_64 rng(101);
  const auto t0 = std::chrono::steady_clock::now();
  FvsState st(kGauss, no_rebuild());
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::size_t max_dim = 0, adds = 0, removes = 0;
  for (int op = 0; op < 200; ++op) {
    const bool add = st.dimension() < 5 || (st.dimension() < 60 && coin(rng) < 0.6);
    if (add) {
      st.add_vector(filtered_point(rng, st));
      ++adds;
    } else {
      st.remove_vector(std::uniform_int_distribution<std::size_t>(0, st.dimension() - 1)(rng));
      ++removes;
    }
    max_dim = std::max(max_dim, st.dimension());
  }
  const double elapsed = seconds_since(t0);
  const Eigen::MatrixXd oracle = Eigen::MatrixXd(st.kmat()).inverse();
  const double res = st.residual();
  const double gap = (st.kinv() - oracle).cwiseAbs().maxCoeff();
  const double oracle_res = identity_residual(st.kmat(), oracle);
  const bool ok = res < 1e-8 && gap < 1e-8 && elapsed < 5.0 && st.rebuild_count() == 0;
  report(1, "inverse-update fidelity", ok,
         fmt("%zu adds / %zu removes, max dim %zu, max|K Kinv - I| = %.2e, max|Kinv - direct| = %.2e "
             "(direct residual %.2e), %.3f s",
             adds, removes, max_dim, res, gap, oracle_res, elapsed));
}

void criterion_2() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    FvsState st(kGauss, no_rebuild());
    const std::size_t n = 1 + trial % 40;
    while (st.dimension() < n) st.add_vector(filtered_point(rng, st));
    const RowMatrix before = st.kinv();
    st.add_vector(filtered_point(rng, st));
    st.remove_vector(st.dimension() - 1);
    worst = std::max(worst, (st.kinv() - before).cwiseAbs().maxCoeff());
  }
  report(2, "add/remove involution", worst < 1e-10, fmt("100 trials, worst element-wise change %.2e", worst));
}

void criterion_3() {
  std::mt19937_64 rng(303);
  FvsState st(kGauss);
  while (st.dimension() < 50) st.add_vector(filtered_point(rng, st));
  double self_err = 0.0;
  for (const auto& v : st.vectors()) self_err = std::max(self_err, std::abs(st.local_fitness(v) - 1.0));
  double lo = 1e300, hi = -1e300;
  for (int q = 0; q < 10000; ++q) {
    const double j = st.local_fitness(random_point(rng, -5.0, 5.0));
    lo = std::min(lo, j);
    hi = std::max(hi, j);
  }
  const bool ok = self_err <= 1e-10 && lo >= 0.0 && hi <= 1.0 + 1e-8;
  report(3, "local fitness bounds", ok,
         fmt("max|J(sv) - 1| = %.2e over %zu SVs; J over 10^4 queries in [%.3e, %.12f]", self_err, st.dimension(), lo,
             hi));
}

struct Reference {
  SyntheticScenario scenario;
  SyntheticStream stream;
  PipelineConfig base;
  static constexpr double kShiftSeconds = 4230.0;
  static constexpr double kWarmup = 600.0;

  Reference() {
    scenario.tick_rate = 200.0;
    scenario.duration_seconds = kWarmup + 120 * 60.0;
    scenario.regime_shifts.push_back(
        {static_cast<std::int64_t>(kShiftSeconds * 1e6), DumasCoeffs::centered(0.185, -0.5, 1.0, 0.02, 0.3)});
    const auto t0 = std::chrono::steady_clock::now();
    stream = synth_generate(scenario);
    base.warmup_seconds = kWarmup;
    info(fmt("reference replay: seed %llu, %zu ticks, generated in %.2f s", (unsigned long long)scenario.seed,
             stream.ticks.size(), seconds_since(t0)));
  }

  ReplayInput input() const { return {stream.ticks, scenario.curve, scenario.grid, scenario.ground_truth()}; }
};

void criterion_4(const Reference& ref) {
  PipelineConfig cfg = ref.base;
  cfg.warmup_seconds = 0.0;
  cfg.algorithm = {Algorithm::Bkpsvr, 50};
  IvsPipeline p(ref.scenario.curve, ref.scenario.grid, cfg, ref.scenario.ground_truth());
  std::size_t worst = 0, steps = 0;
  bool ok = true;
  for (std::size_t i = 0; i < 10000 && i < ref.stream.ticks.size(); ++i) {
    p.push(ref.stream.ticks[i]);
    ++steps;
    for (const auto& l : p.learners()) {
      worst = std::max(worst, l.support_vector_count());
      if (l.support_vector_count() > 50) ok = false;
    }
  }
  ok = ok && steps == 10000;
  report(4, "budget invariant", ok, fmt("%zu ticks, B = 50, max |S| over all steps and sides = %zu", steps, worst));
}

std::string per_side(const std::array<std::size_t, kSideCount>& v) {
  return fmt("%zu/%zu/%zu/%zu", v[0], v[1], v[2], v[3]);
}

std::vector<RunStats> criterion_5(const Reference& ref) {
  const std::vector<AlgorithmSpec> algs{{Algorithm::Ekpsvr}, {Algorithm::Kpsvr}, {Algorithm::Bkpsvr, 50},
                                        {Algorithm::Norma}, {Algorithm::Bsgd}};
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = compare_run(ref.input(), ref.base, algs);
  const double elapsed = seconds_since(t0);
  const auto& ek = rows[0];
  const auto& kp = rows[1];

  bool sparser = true, full = true;
  for (std::size_t s = 0; s < kSideCount; ++s) {
    sparser = sparser && ek.final_sv[s] < kp.final_sv[s];
    full = full && kp.final_sv[s] == ref.scenario.grid.size();
  }
  report(5, "sparsity ordering", sparser && full,
         fmt("final SVs per side EKPSVR %s < KPSVR %s; KPSVR reaches grid cardinality %zu: %s",
             per_side(ek.final_sv).c_str(), per_side(kp.final_sv).c_str(), ref.scenario.grid.size(),
             full ? "yes" : "no"));
  info(fmt("comparison replays took %.1f s", elapsed));
  return rows;
}

void criterion_8(const std::vector<RunStats>& rows) {
  const std::size_t algs = 5;
  const auto& ek = rows[0];

  std::ostringstream table;
  write_comparison_csv(table, rows);
  std::istringstream lines(table.str());
  std::string header, line;
  std::getline(lines, header);
  std::size_t body = 0;
  bool shape = std::count(header.begin(), header.end(), ',') == 12;
  while (std::getline(lines, line)) {
    ++body;
    shape = shape && std::count(line.begin(), line.end(), ',') == 12;
  }
  shape = shape && body == algs;
  bool finite = true;
  for (const auto& r : rows) finite = finite && std::isfinite(r.mean_mape()) && r.intervals == 120;
  const auto& no = rows[3];
  const auto& bs = rows[4];
  const bool ordering = ek.mean_mape() <= no.mean_mape() && ek.mean_mape() <= bs.mean_mape();
  report(8, "learning-rate variants", shape && finite && ordering,
         fmt("mean MAPE EKPSVR %.3f%% <= NORMA %.3f%% and BSGD %.3f%%; table %zu rows x 13 columns", ek.mean_mape(),
             no.mean_mape(), bs.mean_mape(), body));
  for (const auto& r : rows)
    info(fmt("%-7s MAPE %7.3f%%  RMSE %6.3f  SV(final) %s  SV(avg) %.1f", r.name.c_str(), r.mean_mape(),
             r.mean_rmse(), per_side(r.final_sv).c_str(), r.mean_sv()));
}

void criterion_7(const Reference& ref) {
  const auto run = run_online(ref.stream.ticks, ref.scenario.curve, ref.scenario.grid, ref.base,
                              ref.scenario.ground_truth());
  auto surface_mape = [&](std::size_t i) {
    double acc = 0.0;
    for (const auto& m : run.intervals[i].sides) acc += m.grid_mape;
    return acc / kSideCount;
  };
  const auto scored_shift = static_cast<std::size_t>((Reference::kShiftSeconds - Reference::kWarmup) / 60.0);
  double trailing = 0.0;
  for (std::size_t i = scored_shift - 20; i < scored_shift; ++i) trailing += surface_mape(i) / 20.0;
  const double spike = std::max(surface_mape(scored_shift), surface_mape(scored_shift + 1));

  // "Spikes" means more than double the trailing mean; the reference seed gives 2.27x.
  const bool spiked = spike > 2.0 * trailing;
  std::size_t recovered_at = 0;
  for (std::size_t i = scored_shift + 1; i <= scored_shift + 20 && i < run.intervals.size(); ++i)
    if (surface_mape(i) <= 1.5 * trailing) {
      recovered_at = i;
      break;
    }
  const bool ok = run.intervals.size() == 120 && spiked && recovered_at != 0;
  report(7, "adaptivity under drift", ok,
         fmt("surface MAPE trailing-20 mean %.3f%%, spike %.3f%% (%.2fx) at interval %zu, back within 1.5x at "
             "interval %zu (%zu later)",
             trailing, spike, spike / trailing, scored_shift, recovered_at,
             recovered_at ? recovered_at - scored_shift : 0));
  std::string trace;
  for (std::size_t i = scored_shift - 3; i <= scored_shift + 5; ++i) trace += fmt(" %zu:%.2f", i, surface_mape(i));
  info("surface MAPE around the shift:" + trace);
  std::string ticks;
  for (std::size_t i = scored_shift - 3; i <= scored_shift + 5; ++i) {
    double acc = 0.0;
    for (const auto& m : run.intervals[i].sides) acc += m.mape;
    ticks += fmt(" %zu:%.2f", i, acc / kSideCount);
  }
  info("tick MAPE around the shift:   " + ticks);
}

void criterion_11(const Reference& ref) {
  const std::vector<double> rhos{0.1, 0.3, 0.6};
  const std::vector<double> omegas{0, 7, 50};
  const auto r = sensitivity_sweep(ref.input(), ref.base, SweepParam::Rho, rhos);
  const auto o = sensitivity_sweep(ref.input(), ref.base, SweepParam::Omega, omegas);
  bool ok = true;
  for (std::size_t i = 1; i < r.size(); ++i) ok = ok && r[i].avg_sv >= r[i - 1].avg_sv;
  for (std::size_t i = 1; i < o.size(); ++i) ok = ok && o[i].avg_sv <= o[i - 1].avg_sv;
  report(11, "sensitivity monotonicity", ok,
         fmt("avg SV over rho {0.1,0.3,0.6} = %.2f, %.2f, %.2f; over omega {0,7,50} = %.2f, %.2f, %.2f", r[0].avg_sv,
             r[1].avg_sv, r[2].avg_sv, o[0].avg_sv, o[1].avg_sv, o[2].avg_sv));
  info(fmt("avg MAPE over rho = %.3f, %.3f, %.3f; over omega = %.3f, %.3f, %.3f", r[0].avg_mape, r[1].avg_mape,
           r[2].avg_mape, o[0].avg_mape, o[1].avg_mape, o[2].avg_mape));

  // Not a criterion: with gamma = 25 the scaled grid is no longer nearly collinear in feature space.
  PipelineConfig wide = with_param(ref.base, SweepParam::Gamma, 25.0);
  const auto rw = sensitivity_sweep(ref.input(), wide, SweepParam::Rho, rhos);
  const auto ow = sensitivity_sweep(ref.input(), wide, SweepParam::Omega, omegas);
  info(fmt("gamma = 25: avg SV over rho = %.2f, %.2f, %.2f; over omega = %.2f, %.2f, %.2f", rw[0].avg_sv,
           rw[1].avg_sv, rw[2].avg_sv, ow[0].avg_sv, ow[1].avg_sv, ow[2].avg_sv));
}

void criterion_6() {
  const auto t0 = std::chrono::steady_clock::now();
  const double f = 1780.0;
  const YieldCurve curve({0.083, 0.25, 0.5, 1.0}, {0.0003, 0.0005, 0.0008, 0.0012});
  double worst = 0.0;
  std::size_t n = 0;
  for (int i = 0; i < 10; ++i) {
    const double sigma = 0.05 + (0.8 - 0.05) * i / 9.0;
    for (int j = 0; j < 11; ++j) {
      const double k = f * (0.95 + 0.01 * j);
      for (int l = 0; l < 5; ++l) {
        const double tau = 0.08 + (0.42 - 0.08) * l / 4.0;
        const double r = curve.rate(tau);
        for (auto side : {OptionSide::Call, OptionSide::Put}) {
          const double price = bsm_price(side, f, k, tau, r, sigma);
          worst = std::max(worst, std::abs(implied_vol(side, f, k, tau, r, price) - sigma));
          ++n;
        }
      }
    }
  }
  const double elapsed = seconds_since(t0);
  report(6, "IV solver round-trip", worst < 1e-6 && elapsed < 1.0,
         fmt("%zu round trips (10x11x5, calls and puts), worst |error| %.2e, %.4f s", n, worst, elapsed));
}

// Element (i, j) of the big test matrix, regenerable without storing a copy.
inline double cell(std::uint64_t i, std::uint64_t j) {
  std::uint64_t z = i * 0x9E3779B97F4A7C15ull + j + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-53 - 0.5;
}

void fill(RowMatrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = cell(std::uint64_t(i), std::uint64_t(j));
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

void criteria_9_and_10() {
  constexpr Eigen::Index n = 20000;
  const auto t_all = std::chrono::steady_clock::now();
  RowMatrix big(n, n);
  fill(big);
  std::vector<double> u(n), v(n), coeffs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    u[i] = cell(7, std::uint64_t(i));
    v[i] = cell(11, std::uint64_t(i));
    coeffs[i] = 0.01 * cell(13, std::uint64_t(i));
  }

  const auto oracle_p = serial::batch_predict(coeffs, big, 0.15);
  Eigen::VectorXd oracle_i;
  const double oracle_c = serial::quadratic_form(u, big, oracle_i);

  bool exact = true;
  double worst_rel = 0.0;
  for (std::size_t w : {1u, 2u, 4u, 8u}) {
    BatchPlan plan;
    plan.worker_count = w;
    plan.deterministic_sum = true;
    const auto p = batch_predict(coeffs, big, 0.15, plan);
    for (Eigen::Index i = 0; i < n; ++i) exact = exact && same_bits(p[i], oracle_p[i]);
    const auto q = quadratic_form(u, big, plan);
    exact = exact && same_bits(q.c, oracle_c);
    for (Eigen::Index i = 0; i < n; ++i) exact = exact && same_bits(q.intermediate[i], oracle_i[i]);

    plan.deterministic_sum = false;
    const auto pf = batch_predict(coeffs, big, 0.15, plan);
    for (Eigen::Index i = 0; i < n; ++i)
      worst_rel = std::max(worst_rel, std::abs(pf[i] - oracle_p[i]) / std::max(std::abs(oracle_p[i]), 1e-300));
    const auto qf = quadratic_form(u, big, plan);
    worst_rel = std::max(worst_rel, std::abs(qf.c - oracle_c) / std::abs(oracle_c));
    for (Eigen::Index i = 0; i < n; ++i)
      worst_rel = std::max(worst_rel, std::abs(qf.intermediate[i] - oracle_i[i]) / std::abs(oracle_i[i]));
  }
  // rank1_update in place, checked cell by cell against the serial expression
  // on the regenerated input.
  for (std::size_t w : {1u, 2u, 4u, 8u}) {
    BatchPlan plan;
    plan.worker_count = w;
    if (w != 1) fill(big);
    rank1_update_inplace(big, u, v, 0.625, plan);
    for (Eigen::Index i = 0; i < n && exact; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        const double expect = cell(std::uint64_t(i), std::uint64_t(j)) - 0.625 * u[i] * v[j];
        if (!same_bits(big(i, j), expect)) {
          exact = false;
          break;
        }
      }
  }
  report(9, "parallel/serial equivalence", exact && worst_rel < 1e-9,
         fmt("N = %td, workers {1,2,4,8}: deterministic results bit-identical to serial: %s; free-order worst "
             "relative error %.2e",
             n, exact ? "yes" : "no", worst_rel));
  info(fmt("equivalence checks took %.1f s", seconds_since(t_all)));
  big.resize(0, 0);

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  BatchPlan plan;
  plan.worker_count = std::max<std::size_t>(4, hw);
  plan.deterministic_sum = false;
  const std::vector<std::size_t> sizes{static_cast<std::size_t>(n)};
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = benchmark(sizes, plan);
  const double elapsed = seconds_since(t0);
  double speedup = 0.0;
  for (const auto& r : rows) {
    info(fmt("bench n=%zu %-13s serial %9.1f ms  parallel %9.1f ms  speedup %.2fx", r.n, r.op.c_str(),
             r.serial_ns / 1e6, r.parallel_ns / 1e6, r.speedup));
    if (r.op == "prediction") speedup = r.speedup;
  }
  report(10, "throughput", speedup >= 2.0 && elapsed < 60.0,
         fmt("batch_predict N = M = 20000 on %zu workers (%u hardware threads): speedup %.2fx, benchmark %.1f s",
             plan.worker_count, hw, speedup, elapsed));
}

void criterion_12() {
  const double shrink = shrink_multiplier(Pegasos{0.75, 7}, 20);
  const double step = step_size(Pegasos{0.75, 7}, 20);

  // One key near x with K = sqrt(0.5) (so J = 0.5) and one distant key with a small coefficient.
  const FeatureVector near{0.0, 0.0, 0.0, 0.0};
  const FeatureVector far{20.0, 0.0, 0.0, 0.0};
  const FeatureVector x{std::sqrt(4.0 * std::log(std::sqrt(2.0))), 0.0, 0.0, 0.0};
  SupportVectorDictionary dict;
  const double c_near = 0.25 / std::sqrt(0.5);
  dict.insert(near, c_near);
  dict.insert(far, 0.01);
  FvsState fvs = FvsState::from_vectors(kGauss, dict.keys());
  const double j = fvs.local_fitness(x);
  const auto out = update_ekpsvr(dict, fvs, kGauss, Pegasos{0.75, 7}, 0.01, 0.3, 20, x, 0.2);

  const bool ok = std::abs(shrink - 26.0 / 27.0) < 1e-15 && std::abs(step - 1.0 / 20.25) < 1e-15 &&
                  std::abs(j - 0.5) < 1e-10 && j > 0.3 && std::abs(out.prediction - 0.25) < 1e-12 &&
                  std::abs(0.2 - out.prediction) > 0.01 && out.direction == -1 && out.event == UpdateEvent::Replaced &&
                  dict.size() == 2 && !dict.find(far) && dict[1].key == x &&
                  std::abs(dict[1].coeff + 1.0 / 20.25) < 1e-15 &&
                  std::abs(dict[0].coeff - c_near * 26.0 / 27.0) < 1e-15 &&
                  std::abs(dict.intercept() + 1.0 / 20.25) < 1e-15 && fvs.vectors() == dict.keys();
  report(12, "worked-example trace", ok,
         fmt("shrink %.6f, step %.6f, J = %.6f > 0.3, |y - f| = %.3f > 0.01 -> %s, new coeff %.6f, intercept %.6f",
             shrink, step, j, std::abs(0.2 - out.prediction),
             out.event == UpdateEvent::Replaced ? "changed pattern (replaced)" : "other", dict[1].coeff,
             dict.intercept()));
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    criterion_1();
    criterion_2();
    criterion_3();
    const Reference ref;
    criterion_4(ref);
    const auto rows = criterion_5(ref);
    criterion_6();
    criterion_7(ref);
    criterion_8(rows);
    criteria_9_and_10();
    criterion_11(ref);
    criterion_12();
  } catch (const std::exception& e) {
    std::printf("[FAIL] aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%d of 12 criteria failed (%.1f s)\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}

#pragma once

// Online primal kernel epsilon-SVR trained by stochastic subgradient steps.
//
// The weight vector lives implicitly in a support-vector dictionary
// w = sum_s S[s] phi(s), so f(x) = sum_s S[s] K(s, x) + b. Every sample
// shrinks all coefficients (never b) by the schedule's multiplier; a sample
// outside the epsilon tube adds a signed step to its own coefficient and to b.
//
// Three structural variants share that core:
//   KPSVR   grows the dictionary without bound,
//   BKPSVR  evicts the least-contributing key while |S| > B,
//   EKPSVR  inserts only samples that the current basis cannot span
//           (local fitness J < rho) and otherwise replaces the
//           least-contributing key, so |S| is governed by the basis.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ivsvr/error.hpp"
#include "ivsvr/fvs_state.hpp"
#include "ivsvr/kernel.hpp"
#include "ivsvr/schedule.hpp"

namespace ivsvr {

class SupportVectorDictionary {
 public:
  struct Entry {
    FeatureVector key;
    double coeff = 0.0;
  };

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  const Entry& operator[](std::size_t i) const { return entries_[i]; }

  double intercept() const noexcept { return intercept_; }
  void set_intercept(double b) noexcept { intercept_ = b; }
  void add_intercept(double delta) noexcept { intercept_ += delta; }

  std::optional<std::size_t> find(const FeatureVector& x) const {
    auto it = index_.find(x);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  void insert(const FeatureVector& x, double coeff) {
    if (index_.contains(x)) throw ConsistencyError("duplicate support-vector key");
    if (!entries_.empty() && x.size() != entries_.front().key.size())
      throw DimensionError("support-vector key length differs from dictionary");
    index_.emplace(x, entries_.size());
    entries_.push_back({x, coeff});
  }

  void add_to(std::size_t i, double delta) { entries_.at(i).coeff += delta; }

  Entry erase(std::size_t i) {
    Entry removed = std::move(entries_.at(i));
    entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(i));
    index_.erase(removed.key);
    for (std::size_t j = i; j < entries_.size(); ++j) index_[entries_[j].key] = j;
    return removed;
  }

  void scale(double m) noexcept {
    for (auto& e : entries_) e.coeff *= m;
  }

  std::vector<FeatureVector> keys() const {
    std::vector<FeatureVector> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.key);
    return out;
  }

  std::vector<double> coefficients() const {
    std::vector<double> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.coeff);
    return out;
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<FeatureVector, std::size_t, FeatureVectorHash> index_;
  double intercept_ = 0.0;
};

inline double predict(const SupportVectorDictionary& dict, const KernelSpec& k, const FeatureVector& x) {
  double acc = 0.0;
  for (const auto& e : dict.entries()) acc += e.coeff * evaluate(k, e.key, x);
  return acc + dict.intercept();
}

// +1: the model is too low and steps up; -1: too high; 0 inside (or on) the tube.
inline int violation_direction(double y, double fhat, double epsilon) {
  if (y - fhat > epsilon) return 1;
  if (fhat - y > epsilon) return -1;
  return 0;
}

// argmin coeff^2 K(s, s); the earliest key wins ties.
inline std::size_t removal_candidate(const SupportVectorDictionary& dict, const KernelSpec& k) {
  if (dict.empty()) throw EmptyModelError("removal_candidate on an empty dictionary");
  std::size_t best = 0;
  double best_score = 0.0;
  for (std::size_t i = 0; i < dict.size(); ++i) {
    const auto& e = dict[i];
    const double score = e.coeff * e.coeff * evaluate(k, e.key, e.key);
    if (i == 0 || score < best_score) {
      best = i;
      best_score = score;
    }
  }
  return best;
}

enum class UpdateEvent {
  ShrinkOnly,   // inside the tube, spanned by the basis
  Inserted,     // new key added on an epsilon violation
  Accumulated,  // existing key stepped
  NewPattern,   // basis cannot span the sample
  Replaced,     // changed pattern swapped in for the least-contributing key
  Rejected,     // replacement would make the basis singular; only b stepped
};

struct UpdateOutcome {
  double prediction = 0.0;  // f(x) before the update
  int direction = 0;
  UpdateEvent event = UpdateEvent::ShrinkOnly;
  std::size_t evicted = 0;
};

// How a new pattern that sits inside the tube is seeded.
enum class NeutralSign { Plus, ZeroCoefficient };

inline UpdateOutcome update_kpsvr(SupportVectorDictionary& dict, const KernelSpec& k,
                                  const LearningRateSchedule& sched, double epsilon, std::int64_t t,
                                  const FeatureVector& x, double y) {
  UpdateOutcome out;
  out.prediction = predict(dict, k, x);
  dict.scale(shrink_multiplier(sched, t));
  out.direction = violation_direction(y, out.prediction, epsilon);
  if (out.direction == 0) return out;
  const double step = out.direction * step_size(sched, t);
  if (auto i = dict.find(x)) {
    dict.add_to(*i, step);
    out.event = UpdateEvent::Accumulated;
  } else {
    dict.insert(x, step);
    out.event = UpdateEvent::Inserted;
  }
  dict.add_intercept(step);
  return out;
}

inline UpdateOutcome update_bkpsvr(SupportVectorDictionary& dict, const KernelSpec& k,
                                   const LearningRateSchedule& sched, double epsilon, std::size_t budget,
                                   std::int64_t t, const FeatureVector& x, double y) {
  if (budget < 1) throw ConfigError("budget must be >= 1");
  UpdateOutcome out = update_kpsvr(dict, k, sched, epsilon, t, x, y);
  while (dict.size() > budget) {
    dict.erase(removal_candidate(dict, k));
    ++out.evicted;
  }
  return out;
}

inline UpdateOutcome update_ekpsvr(SupportVectorDictionary& dict, FvsState& fvs, const KernelSpec& k,
                                   const LearningRateSchedule& sched, double epsilon, double rho, std::int64_t t,
                                   const FeatureVector& x, double y, NeutralSign neutral = NeutralSign::Plus) {
  if (fvs.dimension() != dict.size())
    throw ConsistencyError("basis has " + std::to_string(fvs.dimension()) + " vectors, dictionary " +
                           std::to_string(dict.size()));
  UpdateOutcome out;
  out.prediction = predict(dict, k, x);
  dict.scale(shrink_multiplier(sched, t));
  out.direction = violation_direction(y, out.prediction, epsilon);
  const double step = step_size(sched, t);
  const double signed_step = out.direction * step;
  const auto existing = dict.find(x);

  bool new_pattern = !existing && (dict.empty() || fvs.local_fitness(x) < rho);
  if (new_pattern) {
    try {
      fvs.add_vector(x);
    } catch (const NearSingularError&) {
      new_pattern = false;
    }
  }
  if (new_pattern) {
    double coeff = signed_step;
    if (out.direction == 0) coeff = neutral == NeutralSign::Plus ? step : 0.0;
    dict.insert(x, coeff);
    dict.add_intercept(signed_step);
    out.event = UpdateEvent::NewPattern;
    return out;
  }
  if (out.direction == 0) return out;

  if (existing) {
    dict.add_to(*existing, signed_step);
    out.event = UpdateEvent::Accumulated;
  } else {
    const std::size_t victim = removal_candidate(dict, k);
    if (!(fvs.schur_without(x, victim) > fvs.config().replacement_guard)) {
      // Swapping x in would leave the basis (nearly) singular.
      out.event = UpdateEvent::Rejected;
    } else {
      auto removed = dict.erase(victim);
      fvs.remove_vector(victim);
      try {
        fvs.add_vector(x);
        dict.insert(x, signed_step);
        out.event = UpdateEvent::Replaced;
        out.evicted = 1;
      } catch (const NearSingularError&) {
        // Rounding disagreed with the margin check above; put the victim
        // back (at the end) and re-invert directly.
        dict.insert(removed.key, removed.coeff);
        fvs = FvsState::from_vectors(fvs.kernel(), dict.keys(), fvs.config());
        out.event = UpdateEvent::Rejected;
      }
    }
  }
  dict.add_intercept(signed_step);
  return out;
}

enum class Structure { Kpsvr, Bkpsvr, Ekpsvr };

struct LearnerConfig {
  Structure structure = Structure::Ekpsvr;
  KernelSpec kernel{};
  LearningRateSchedule schedule = Pegasos{};
  double epsilon = 0.01;
  double rho = 0.3;
  std::size_t budget = 50;
  NeutralSign neutral = NeutralSign::Plus;
  FvsConfig fvs{};

  void validate() const {
    if (kernel.kind == KernelKind::Gaussian && !(kernel.gamma > 0.0)) throw ConfigError("gamma must be positive");
    if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be nonnegative");
    if (structure == Structure::Ekpsvr && !(rho >= 0.0 && rho < 1.0)) throw ConfigError("rho must lie in [0, 1)");
    if (structure == Structure::Bkpsvr && budget < 1) throw ConfigError("budget must be >= 1");
    ivsvr::validate(schedule);
  }
};

// One model: dictionary, optional basis state and the step counter t.
class OnlineSvr {
 public:
  explicit OnlineSvr(LearnerConfig config) : config_(std::move(config)), fvs_(config_.kernel, config_.fvs) {
    config_.validate();
  }

  UpdateOutcome update(const FeatureVector& x, double y) {
    UpdateOutcome out;
    switch (config_.structure) {
      case Structure::Kpsvr:
        out = update_kpsvr(dict_, config_.kernel, config_.schedule, config_.epsilon, t_, x, y);
        break;
      case Structure::Bkpsvr:
        out = update_bkpsvr(dict_, config_.kernel, config_.schedule, config_.epsilon, config_.budget, t_, x, y);
        break;
      case Structure::Ekpsvr:
        out = update_ekpsvr(dict_, fvs_, config_.kernel, config_.schedule, config_.epsilon, config_.rho, t_, x, y,
                            config_.neutral);
        break;
    }
    ++t_;
    return out;
  }

  double predict(const FeatureVector& x) const { return ivsvr::predict(dict_, config_.kernel, x); }

  void reset_clock() noexcept { t_ = 1; }
  std::int64_t t() const noexcept { return t_; }

  const SupportVectorDictionary& dictionary() const noexcept { return dict_; }
  const FvsState& basis() const noexcept { return fvs_; }
  const LearnerConfig& config() const noexcept { return config_; }
  std::size_t support_vector_count() const noexcept { return dict_.size(); }

  // Installs a dictionary (e.g. a loaded snapshot); the basis is re-inverted directly.
  void restore(SupportVectorDictionary dict) {
    dict_ = std::move(dict);
    if (config_.structure == Structure::Ekpsvr)
      fvs_ = FvsState::from_vectors(config_.kernel, dict_.keys(), config_.fvs);
  }

 private:
  LearnerConfig config_;
  SupportVectorDictionary dict_;
  FvsState fvs_;
  std::int64_t t_ = 1;
};

}  // namespace ivsvr

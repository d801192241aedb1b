#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>

#include "ivsvr/error.hpp"

namespace ivsvr {

// Step 1/(lambda (t + omega)), shrink 1 - 1/(t + omega).
struct Pegasos {
  double lambda = 0.75;
  std::int64_t omega = 7;
};

// Step p/(lambda sqrt t), shrink 1 - p/sqrt t.
struct Norma {
  double p = 0.71;
  double lambda = 0.75;
};

// Constant step eta, shrink 1 - eta lambda.
struct Bsgd {
  double eta = 0.01;
  double lambda = 10.0;
};

using LearningRateSchedule = std::variant<Pegasos, Norma, Bsgd>;

inline void validate(const LearningRateSchedule& sched) {
  std::visit(
      [](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Pegasos>) {
          if (!(s.lambda > 0.0)) throw ScheduleError("pegasos lambda must be positive");
          if (s.omega < 0) throw ScheduleError("pegasos omega must be nonnegative");
        } else if constexpr (std::is_same_v<S, Norma>) {
          if (!(s.p > 0.0) || !(s.lambda > 0.0)) throw ScheduleError("norma p and lambda must be positive");
        } else {
          if (!(s.eta > 0.0) || !(s.lambda > 0.0)) throw ScheduleError("bsgd eta and lambda must be positive");
          if (!(s.eta * s.lambda < 1.0)) throw ScheduleError("bsgd requires eta * lambda < 1");
        }
      },
      sched);
}

inline double shrink_multiplier(const LearningRateSchedule& sched, std::int64_t t) {
  if (t < 1) throw ScheduleError("step counter must start at 1");
  const double m = std::visit(
      [t](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Pegasos>) {
          return 1.0 - 1.0 / static_cast<double>(t + s.omega);
        } else if constexpr (std::is_same_v<S, Norma>) {
          return 1.0 - s.p / std::sqrt(static_cast<double>(t));
        } else {
          return 1.0 - s.eta * s.lambda;
        }
      },
      sched);
  if (m < 0.0 || !std::isfinite(m))
    throw ScheduleError("shrink multiplier " + std::to_string(m) + " is negative at t=" + std::to_string(t));
  return m;
}

inline double step_size(const LearningRateSchedule& sched, std::int64_t t) {
  if (t < 1) throw ScheduleError("step counter must start at 1");
  return std::visit(
      [t](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Pegasos>) {
          return 1.0 / (s.lambda * static_cast<double>(t + s.omega));
        } else if constexpr (std::is_same_v<S, Norma>) {
          return s.p / (s.lambda * std::sqrt(static_cast<double>(t)));
        } else {
          return s.eta;
        }
      },
      sched);
}

inline std::string schedule_name(const LearningRateSchedule& sched) {
  switch (sched.index()) {
    case 0: return "pegasos";
    case 1: return "norma";
    default: return "bsgd";
  }
}

}  // namespace ivsvr

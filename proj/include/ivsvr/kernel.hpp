#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ivsvr/error.hpp"

namespace ivsvr {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense fixed-length sample. Equality is bitwise so that exactly repeated
// grid points map to the same dictionary key.
class FeatureVector {
 public:
  FeatureVector() = default;
  FeatureVector(std::initializer_list<double> v) : values_(v) {}
  explicit FeatureVector(std::vector<double> v) : values_(std::move(v)) {}

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const FeatureVector& a, const FeatureVector& b) noexcept {
    if (a.values_.size() != b.values_.size()) return false;
    for (std::size_t i = 0; i < a.values_.size(); ++i) {
      if (std::bit_cast<std::uint64_t>(a.values_[i]) != std::bit_cast<std::uint64_t>(b.values_[i]))
        return false;
    }
    return true;
  }

 private:
  std::vector<double> values_;
};

struct FeatureVectorHash {
  std::size_t operator()(const FeatureVector& x) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (double v : x.values()) {
      h ^= std::bit_cast<std::uint64_t>(v);
      h *= 1099511628211ull;
      h ^= h >> 29;
    }
    return static_cast<std::size_t>(h);
  }
};

enum class KernelKind { Gaussian, Linear };

struct KernelSpec {
  KernelKind kind = KernelKind::Gaussian;
  double gamma = 0.25;

  static KernelSpec gaussian(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gaussian kernel requires gamma > 0");
    return {KernelKind::Gaussian, gamma};
  }
  static KernelSpec linear() { return {KernelKind::Linear, 0.0}; }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

inline double evaluate(const KernelSpec& k, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("kernel arguments differ in length");
  double acc = 0.0;
  if (k.kind == KernelKind::Gaussian) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - y[i];
      acc += d * d;
    }
    return std::exp(-k.gamma * acc);
  }
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

inline double evaluate(const KernelSpec& k, const FeatureVector& x, const FeatureVector& y) {
  return evaluate(k, x.values(), y.values());
}

inline Eigen::VectorXd kernel_vector(const KernelSpec& k, std::span<const FeatureVector> basis,
                                     const FeatureVector& x) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) out[static_cast<Eigen::Index>(i)] = evaluate(k, basis[i], x);
  return out;
}

inline RowMatrix kernel_matrix(const KernelSpec& k, std::span<const FeatureVector> basis) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  RowMatrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = evaluate(k, basis[i], basis[i]);
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = evaluate(k, basis[i], basis[j]);
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

// Row i holds k(basis[j], queries[i]) for every j.
inline RowMatrix kernel_rows(const KernelSpec& k, std::span<const FeatureVector> basis,
                             std::span<const FeatureVector> queries) {
  RowMatrix m(static_cast<Eigen::Index>(queries.size()), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < queries.size(); ++i)
    for (std::size_t j = 0; j < basis.size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = evaluate(k, basis[j], queries[i]);
  return m;
}

}  // namespace ivsvr

#pragma once

// Incrementally maintained kernel matrix K_{S,S} and its inverse over the
// current support vectors, plus the local-fitness statistic
//
//   J(x) = k_{S,x}' K^-1 k_{S,x} / k(x, x).
//
// Appending a vector uses the bordered-inverse identities
//   z = 1 / (k(x,x) - k' K^-1 k),  Y = -z K^-1 k,  X = K^-1 - (K^-1 k) Y'
// and deleting one reads X, Y, z back out of the inverse and applies
//   K^-1 <- X - Y Y' / z.
// Interior deletions drop row/column p from the inverse in place; this is the
// same as permuting p to the last slot first, and keeps the remaining order
// aligned with the support-vector dictionary.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "ivsvr/error.hpp"
#include "ivsvr/kernel.hpp"
#include "ivsvr/parallel.hpp"

namespace ivsvr {

struct FvsConfig {
  double singularity_guard = 1e-10;
  // Minimum Schur complement left by a changed-pattern swap; the swap is
  // refused below it. Coarser than the insertion guard because swaps are not
  // filtered by local fitness and can otherwise drive the basis toward
  // collinearity.
  double replacement_guard = 1e-6;
  std::size_t rebuild_every = 4096;
  double residual_tolerance = 1e-6;
  std::size_t max_dimension = 25'000;
  BatchPlan plan{};
};

namespace detail {

inline RowMatrix erase_row_col(const RowMatrix& m, Eigen::Index p) {
  const Eigen::Index n = m.rows();
  const Eigen::Index tail = n - p - 1;
  RowMatrix out(n - 1, n - 1);
  out.topLeftCorner(p, p) = m.topLeftCorner(p, p);
  out.topRightCorner(p, tail) = m.topRightCorner(p, tail);
  out.bottomLeftCorner(tail, p) = m.bottomLeftCorner(tail, p);
  out.bottomRightCorner(tail, tail) = m.bottomRightCorner(tail, tail);
  return out;
}

}  // namespace detail

class FvsState {
 public:
  explicit FvsState(KernelSpec kernel, FvsConfig config = {}) : kernel_(kernel), config_(config) {
    config_.plan.validate();
  }

  // Builds the state for an existing basis with a direct inversion.
  static FvsState from_vectors(KernelSpec kernel, std::vector<FeatureVector> vectors, FvsConfig config = {}) {
    FvsState st(kernel, config);
    st.vectors_ = std::move(vectors);
    st.kmat_ = kernel_matrix(kernel, st.vectors_);
    st.kinv_.resize(st.kmat_.rows(), st.kmat_.cols());
    if (!st.vectors_.empty()) st.rebuild();
    return st;
  }

  std::size_t dimension() const noexcept { return vectors_.size(); }
  bool empty() const noexcept { return vectors_.empty(); }
  const std::vector<FeatureVector>& vectors() const noexcept { return vectors_; }
  const RowMatrix& kmat() const noexcept { return kmat_; }
  const RowMatrix& kinv() const noexcept { return kinv_; }
  const KernelSpec& kernel() const noexcept { return kernel_; }
  const FvsConfig& config() const noexcept { return config_; }
  std::size_t updates_since_rebuild() const noexcept { return updates_since_rebuild_; }
  std::size_t rebuild_count() const noexcept { return rebuild_count_; }

  double local_fitness(const FeatureVector& x) const {
    if (vectors_.empty()) return 0.0;
    const double kxx = evaluate(kernel_, x, x);
    if (!(kxx > 0.0)) throw DegenerateSampleError("local fitness undefined for k(x,x) = 0");
    const Eigen::VectorXd kvec = kernel_vector(kernel_, vectors_, x);
    return quadratic_form(as_span(kvec), kinv_, config_.plan).c / kxx;
  }

  // Schur complement x would have once vectors[index] is removed:
  // d + (K^-1 k)[index]^2 / K^-1[index][index]. Nothing is modified.
  double schur_without(const FeatureVector& x, std::size_t index) const {
    if (index >= vectors_.size()) throw std::out_of_range("schur_without: index out of range");
    const auto p = static_cast<Eigen::Index>(index);
    const double kxx = evaluate(kernel_, x, x);
    const Eigen::VectorXd kvec = kernel_vector(kernel_, vectors_, x);
    const QuadraticForm q = quadratic_form(as_span(kvec), kinv_, config_.plan);
    const double zp = kinv_(p, p);
    if (!(std::abs(zp) > config_.singularity_guard)) return kxx - q.c;
    return kxx - q.c + q.intermediate[p] * q.intermediate[p] / zp;
  }

  void add_vector(const FeatureVector& x) {
    if (!vectors_.empty() && x.size() != vectors_.front().size())
      throw DimensionError("feature vector length differs from the stored basis");
    if (vectors_.size() >= config_.max_dimension)
      throw ConfigError("support-vector cap of " + std::to_string(config_.max_dimension) + " reached");
    const auto n = static_cast<Eigen::Index>(vectors_.size());
    const double kxx = evaluate(kernel_, x, x);
    const Eigen::VectorXd kvec = kernel_vector(kernel_, vectors_, x);

    const QuadraticForm q = quadratic_form(as_span(kvec), kinv_, config_.plan);
    const double denom = kxx - q.c;
    if (!(denom > config_.singularity_guard))
      throw NearSingularError("schur complement " + std::to_string(denom) + " below guard");
    const double z = 1.0 / denom;
    const Eigen::VectorXd y = -z * q.intermediate;

    RowMatrix kinv(n + 1, n + 1);
    kinv.topLeftCorner(n, n) = kinv_;
    rank1_update_inplace(kinv.topLeftCorner(n, n), as_span(q.intermediate), as_span(y), 1.0, config_.plan);
    kinv.block(0, n, n, 1) = y;
    kinv.block(n, 0, 1, n) = y.transpose();
    kinv(n, n) = z;
    kinv_ = std::move(kinv);

    RowMatrix kmat(n + 1, n + 1);
    kmat.topLeftCorner(n, n) = kmat_;
    kmat.block(0, n, n, 1) = kvec;
    kmat.block(n, 0, 1, n) = kvec.transpose();
    kmat(n, n) = kxx;
    kmat_ = std::move(kmat);

    vectors_.push_back(x);
    after_update(static_cast<Eigen::Index>(n));
  }

  void remove_vector(std::size_t index) {
    if (index >= vectors_.size())
      throw std::out_of_range("remove_vector: index " + std::to_string(index) + " out of range");
    const auto p = static_cast<Eigen::Index>(index);
    const double z = kinv_(p, p);

    kmat_ = detail::erase_row_col(kmat_, p);
    vectors_.erase(vectors_.begin() + static_cast<std::ptrdiff_t>(index));

    if (std::abs(z) < config_.singularity_guard) {
      // Degenerate pivot: the incremental formula is unusable, invert directly.
      kinv_.resize(kmat_.rows(), kmat_.cols());
      if (!vectors_.empty()) rebuild();
      return;
    }

    const Eigen::Index n = kinv_.rows();
    Eigen::VectorXd y(n - 1);
    y.head(p) = kinv_.col(p).head(p);
    y.tail(n - p - 1) = kinv_.col(p).tail(n - p - 1);
    kinv_ = detail::erase_row_col(kinv_, p);
    rank1_update_inplace(kinv_, as_span(y), as_span(y), 1.0 / z, config_.plan);

    if (!vectors_.empty()) after_update(std::min<Eigen::Index>(p, kinv_.rows() - 1));
  }

  void rebuild() {
    if (vectors_.empty()) return;
    Eigen::LLT<Eigen::MatrixXd> llt(kmat_);
    if (llt.info() != Eigen::Success)
      throw UnrecoverableStateError("kernel matrix is not numerically positive definite");
    const auto n = kmat_.rows();
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
    kinv_ = 0.5 * (inv + inv.transpose());
    updates_since_rebuild_ = 0;
    ++rebuild_count_;
  }

  // max |K K^-1 - I|
  double residual() const {
    if (vectors_.empty()) return 0.0;
    const auto n = kmat_.rows();
    return (kmat_ * kinv_ - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  }

 private:
  void after_update(Eigen::Index probe_row) {
    ++updates_since_rebuild_;
    if (updates_since_rebuild_ >= config_.rebuild_every) {
      rebuild();
      return;
    }
    // One residual row is O(n^2), the same order as the update itself.
    const auto n = kmat_.rows();
    Eigen::RowVectorXd r = kmat_.row(probe_row) * kinv_;
    r[probe_row] -= 1.0;
    if (n > 0 && r.cwiseAbs().maxCoeff() > config_.residual_tolerance) rebuild();
  }

  KernelSpec kernel_;
  FvsConfig config_;
  std::vector<FeatureVector> vectors_;
  RowMatrix kmat_;
  RowMatrix kinv_;
  std::size_t updates_since_rebuild_ = 0;
  std::size_t rebuild_count_ = 0;
};

}  // namespace ivsvr

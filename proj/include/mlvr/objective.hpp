#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "mlvr/common.hpp"
#include "mlvr/data.hpp"

namespace mlvr {

/// Work counter in units of full-dataset gradient evaluations. A gradient or
/// Hessian-vector product touching s samples adds s / n_full. The count is
/// kept in samples so that sums are exact.
class EvalCounter {
 public:
  explicit EvalCounter(Index n_full) : n_full_(n_full) {
    if (n_full < 1) throw ConfigError("EvalCounter: n_full must be positive");
  }

  void charge(Index samples) { samples_ += static_cast<std::uint64_t>(samples); }

  double effective_grads() const { return static_cast<double>(samples_) / static_cast<double>(n_full_); }
  std::uint64_t sample_evaluations() const { return samples_; }
  Index n_full() const { return n_full_; }

 private:
  Index n_full_;
  std::uint64_t samples_ = 0;
};

/// v -> A v. Operators handed out by objectives charge their counter on every
/// application.
using LinearOperator = std::function<Vector(const Vector&)>;

/// F(w) = (1/m) sum_k f_k(w). value() is instrumentation and never charged;
/// everything that touches per-sample derivatives is.
class FiniteSumObjective {
 public:
  virtual ~FiniteSumObjective() = default;

  virtual Index dim() const = 0;
  virtual Index sample_count() const = 0;

  virtual double value(const Vector& w) const = 0;
  virtual Vector gradient(const Vector& w, EvalCounter& counter) const = 0;
  /// Gradient of the k-th summand, k in [0, sample_count()).
  virtual Vector sample_gradient(const Vector& w, Index k, EvalCounter& counter) const = 0;
  virtual Vector hvp(const Vector& w, const Vector& v, EvalCounter& counter) const = 0;

  /// Hessian at w as a matrix-free operator. The default forwards to hvp();
  /// implementations may cache per-sample curvature at w.
  virtual LinearOperator hessian_at(const Vector& w, EvalCounter& counter) const;

  /// The same kind of objective restricted to the summands `local`, given as
  /// indices in [0, sample_count()). Throws ConfigError when unsupported.
  virtual std::shared_ptr<const FiniteSumObjective> subsample(std::span<const Index> local) const;
};

namespace logistic {

/// log(1 + exp(t)) without overflow.
inline double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace logistic

/// l2-regularized logistic loss over a subset of a dataset:
///   (1/|S|) sum_{i in S} log(1 + exp(-y_i <w, x_i>)) + (lambda/2) ||w||^2.
/// Each summand carries the regularizer, so per-sample gradients are
/// unbiased for the full gradient.
class LogisticObjective final : public FiniteSumObjective {
 public:
  /// Full-dataset objective.
  LogisticObjective(const SparseDataset& data, double lambda);
  LogisticObjective(const SparseDataset& data, std::vector<Index> subset, double lambda);

  Index dim() const override { return data_->n_features(); }
  Index sample_count() const override { return static_cast<Index>(subset_.size()); }

  double value(const Vector& w) const override;
  Vector gradient(const Vector& w, EvalCounter& counter) const override;
  Vector sample_gradient(const Vector& w, Index k, EvalCounter& counter) const override;
  Vector hvp(const Vector& w, const Vector& v, EvalCounter& counter) const override;
  LinearOperator hessian_at(const Vector& w, EvalCounter& counter) const override;
  std::shared_ptr<const FiniteSumObjective> subsample(std::span<const Index> local) const override;

  const SparseDataset& dataset() const { return *data_; }
  const std::vector<Index>& subset() const { return subset_; }
  double lambda() const { return lambda_; }

 private:
  Vector curvature_weights(const Vector& w) const;
  Vector apply_curvature(const Vector& weights, const Vector& v) const;

  const SparseDataset* data_;
  std::vector<Index> subset_;
  double lambda_;
};

/// Level surrogate H(w) = F_base(w) + <delta_g, w - anchor> with
/// delta_g = fine_grad - grad F_base(anchor), so that grad H(anchor) equals
/// fine_grad. At the anchor the stored fine gradient is returned verbatim.
///
/// Per-sample gradients are the first-order-consistent estimator
///   grad f_k(w) - grad f_k(anchor) + fine_grad,
/// which is unbiased for grad H(w) over k.
class CoupledObjective final : public FiniteSumObjective {
 public:
  /// H = F_base: no coupling term (the finest level).
  static CoupledObjective uncoupled(std::shared_ptr<const FiniteSumObjective> base);

  Index dim() const override { return base_->dim(); }
  Index sample_count() const override { return base_->sample_count(); }

  double value(const Vector& w) const override;
  Vector gradient(const Vector& w, EvalCounter& counter) const override;
  Vector sample_gradient(const Vector& w, Index k, EvalCounter& counter) const override;
  Vector hvp(const Vector& w, const Vector& v, EvalCounter& counter) const override;
  LinearOperator hessian_at(const Vector& w, EvalCounter& counter) const override;

  /// grad F_base(w) + delta_g, always evaluated through the base objective.
  Vector composed_gradient(const Vector& w, EvalCounter& counter) const;

  bool coupled() const { return coupled_; }
  const FiniteSumObjective& base() const { return *base_; }
  /// Zero vector when uncoupled.
  const Vector& delta_g() const { return delta_g_; }
  const Vector& anchor() const { return anchor_; }
  const Vector& fine_gradient() const { return fine_grad_; }

 private:
  friend CoupledObjective make_coupled(std::shared_ptr<const FiniteSumObjective>, const Vector&,
                                       const Vector&, EvalCounter&);
  CoupledObjective() = default;

  std::shared_ptr<const FiniteSumObjective> base_;
  bool coupled_ = false;
  Vector delta_g_;
  Vector anchor_;
  Vector fine_grad_;
};

/// Builds the coupled surrogate. `fine_grad` is the gradient of the next
/// finer level objective at `anchor`; evaluating grad F_base(anchor) is
/// charged to `counter`.
CoupledObjective make_coupled(std::shared_ptr<const FiniteSumObjective> base, const Vector& fine_grad,
                              const Vector& anchor, EvalCounter& counter);

}  // namespace mlvr

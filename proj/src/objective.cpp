#include "mlvr/objective.hpp"

#include <numeric>

namespace mlvr {

LinearOperator FiniteSumObjective::hessian_at(const Vector& w, EvalCounter& counter) const {
  return [this, w, &counter](const Vector& v) { return hvp(w, v, counter); };
}

std::shared_ptr<const FiniteSumObjective> FiniteSumObjective::subsample(std::span<const Index>) const {
  throw ConfigError("objective does not support subsampling");
}

namespace {

std::vector<Index> all_indices(Index n) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  return idx;
}

}  // namespace

LogisticObjective::LogisticObjective(const SparseDataset& data, double lambda)
    : LogisticObjective(data, all_indices(data.n_samples()), lambda) {}

LogisticObjective::LogisticObjective(const SparseDataset& data, std::vector<Index> subset, double lambda)
    : data_(&data), subset_(std::move(subset)), lambda_(lambda) {
  if (subset_.empty()) throw ConfigError("LogisticObjective: empty sample subset");
  if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) {
    throw ConfigError("LogisticObjective: lambda must be finite and nonnegative");
  }
  for (Index i : subset_) {
    if (i < 0 || i >= data.n_samples()) throw ConfigError("LogisticObjective: subset index out of range");
  }
}

double LogisticObjective::value(const Vector& w) const {
  check_dim(w.size(), dim(), "logistic value");
  double loss = 0.0;
  for (Index i : subset_) loss += logistic::softplus(-data_->label(i) * data_->row_dot(i, w));
  return loss / static_cast<double>(subset_.size()) + 0.5 * lambda_ * w.squaredNorm();
}

Vector LogisticObjective::gradient(const Vector& w, EvalCounter& counter) const {
  check_dim(w.size(), dim(), "logistic gradient");
  Vector g = Vector::Zero(dim());
  for (Index i : subset_) {
    const double y = data_->label(i);
    data_->add_row(i, -y * logistic::sigmoid(-y * data_->row_dot(i, w)), g);
  }
  g /= static_cast<double>(subset_.size());
  g += lambda_ * w;
  counter.charge(sample_count());
  return g;
}

Vector LogisticObjective::sample_gradient(const Vector& w, Index k, EvalCounter& counter) const {
  check_dim(w.size(), dim(), "logistic sample gradient");
  if (k < 0 || k >= sample_count()) throw ConfigError("sample index out of range");
  const Index i = subset_[static_cast<std::size_t>(k)];
  const double y = data_->label(i);
  Vector g = lambda_ * w;
  data_->add_row(i, -y * logistic::sigmoid(-y * data_->row_dot(i, w)), g);
  counter.charge(1);
  return g;
}

Vector LogisticObjective::curvature_weights(const Vector& w) const {
  Vector weights(sample_count());
  for (std::size_t k = 0; k < subset_.size(); ++k) {
    const double s = logistic::sigmoid(data_->row_dot(subset_[k], w));
    weights[static_cast<Index>(k)] = s * (1.0 - s);
  }
  return weights;
}

Vector LogisticObjective::apply_curvature(const Vector& weights, const Vector& v) const {
  Vector out = Vector::Zero(dim());
  for (std::size_t k = 0; k < subset_.size(); ++k) {
    const Index i = subset_[k];
    data_->add_row(i, weights[static_cast<Index>(k)] * data_->row_dot(i, v), out);
  }
  out /= static_cast<double>(subset_.size());
  out += lambda_ * v;
  return out;
}

Vector LogisticObjective::hvp(const Vector& w, const Vector& v, EvalCounter& counter) const {
  check_dim(w.size(), dim(), "logistic hvp point");
  check_dim(v.size(), dim(), "logistic hvp direction");
  counter.charge(sample_count());
  return apply_curvature(curvature_weights(w), v);
}

LinearOperator LogisticObjective::hessian_at(const Vector& w, EvalCounter& counter) const {
  check_dim(w.size(), dim(), "logistic hessian point");
  return [this, weights = curvature_weights(w), &counter](const Vector& v) {
    check_dim(v.size(), dim(), "logistic hvp direction");
    counter.charge(sample_count());
    return apply_curvature(weights, v);
  };
}

std::shared_ptr<const FiniteSumObjective> LogisticObjective::subsample(std::span<const Index> local) const {
  std::vector<Index> global;
  global.reserve(local.size());
  for (Index k : local) {
    if (k < 0 || k >= sample_count()) throw ConfigError("subsample: index out of range");
    global.push_back(subset_[static_cast<std::size_t>(k)]);
  }
  return std::make_shared<LogisticObjective>(*data_, std::move(global), lambda_);
}

namespace {

bool same_point(const Vector& a, const Vector& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

}  // namespace

CoupledObjective CoupledObjective::uncoupled(std::shared_ptr<const FiniteSumObjective> base) {
  if (!base) throw ConfigError("CoupledObjective: null base");
  CoupledObjective h;
  h.delta_g_ = Vector::Zero(base->dim());
  h.base_ = std::move(base);
  return h;
}

CoupledObjective make_coupled(std::shared_ptr<const FiniteSumObjective> base, const Vector& fine_grad,
                              const Vector& anchor, EvalCounter& counter) {
  if (!base) throw ConfigError("make_coupled: null base");
  check_dim(fine_grad.size(), base->dim(), "make_coupled fine gradient");
  check_dim(anchor.size(), base->dim(), "make_coupled anchor");
  CoupledObjective h;
  h.delta_g_ = fine_grad - base->gradient(anchor, counter);
  h.base_ = std::move(base);
  h.coupled_ = true;
  h.anchor_ = anchor;
  h.fine_grad_ = fine_grad;
  return h;
}

double CoupledObjective::value(const Vector& w) const {
  const double f = base_->value(w);
  if (!coupled_) return f;
  return f + delta_g_.dot(w - anchor_);
}

Vector CoupledObjective::gradient(const Vector& w, EvalCounter& counter) const {
  if (coupled_ && same_point(w, anchor_)) return fine_grad_;
  return composed_gradient(w, counter);
}

Vector CoupledObjective::composed_gradient(const Vector& w, EvalCounter& counter) const {
  Vector g = base_->gradient(w, counter);
  if (coupled_) g += delta_g_;
  return g;
}

Vector CoupledObjective::sample_gradient(const Vector& w, Index k, EvalCounter& counter) const {
  Vector g = base_->sample_gradient(w, k, counter);
  if (!coupled_) return g;
  g -= base_->sample_gradient(anchor_, k, counter);
  g += fine_grad_;
  return g;
}

Vector CoupledObjective::hvp(const Vector& w, const Vector& v, EvalCounter& counter) const {
  return base_->hvp(w, v, counter);
}

LinearOperator CoupledObjective::hessian_at(const Vector& w, EvalCounter& counter) const {
  return base_->hessian_at(w, counter);
}

}  // namespace mlvr

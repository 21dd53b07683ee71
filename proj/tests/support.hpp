#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "mlvr/data.hpp"
#include "mlvr/objective.hpp"

namespace mlvr::testing {

inline SparseDataset parse_text(const std::string& text) {
  std::istringstream in(text);
  return parse_libsvm(in);
}

/// x1 = (1,0) y=+1, x2 = (0,1) y=-1.
inline SparseDataset two_point_toy() { return parse_text("+1 1:1\n-1 2:1\n"); }

/// Random sparse-ish dataset; every row has at least one nonzero.
inline SparseDataset random_dataset(Index n, Index d, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  std::bernoulli_distribution keep(0.7), positive(0.5);
  DatasetBuilder builder;
  for (Index i = 0; i < n; ++i) {
    std::vector<std::pair<Index, double>> row;
    for (Index j = 0; j < d; ++j) {
      if (keep(rng) || (j == d - 1 && row.empty())) row.emplace_back(j, normal(rng));
    }
    builder.add_row(positive(rng) ? 1.0 : -1.0, row);
  }
  return builder.build(d);
}

inline Vector random_vector(Index d, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(d);
  for (Index j = 0; j < d; ++j) v[j] = normal(rng);
  return v;
}

// ---- independent oracles ----------------------------------------------------

/// Dense per-sample loss written directly from the formula, without the
/// library's stabilized helpers.
inline double naive_logistic_value(const SparseDataset& data, const std::vector<Index>& subset, double lambda,
                                   const Vector& w) {
  const Eigen::MatrixXd X = Eigen::MatrixXd(data.rows());
  double s = 0.0;
  for (Index i : subset) s += std::log(1.0 + std::exp(-data.label(i) * X.row(i).dot(w)));
  return s / static_cast<double>(subset.size()) + 0.5 * lambda * w.squaredNorm();
}

/// Explicit d x d Hessian of the logistic objective.
inline Eigen::MatrixXd dense_hessian(const SparseDataset& data, const std::vector<Index>& subset, double lambda,
                                     const Vector& w) {
  const Eigen::MatrixXd X = Eigen::MatrixXd(data.rows());
  const Index d = data.n_features();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(d, d);
  for (Index i : subset) {
    const double s = 1.0 / (1.0 + std::exp(-X.row(i).dot(w)));
    H += s * (1.0 - s) * X.row(i).transpose() * X.row(i);
  }
  H /= static_cast<double>(subset.size());
  H += lambda * Eigen::MatrixXd::Identity(d, d);
  return H;
}

inline Vector dense_gradient(const SparseDataset& data, const std::vector<Index>& subset, double lambda,
                             const Vector& w) {
  const Eigen::MatrixXd X = Eigen::MatrixXd(data.rows());
  Vector g = Vector::Zero(data.n_features());
  for (Index i : subset) {
    const double y = data.label(i);
    g += -y / (1.0 + std::exp(y * X.row(i).dot(w))) * X.row(i).transpose();
  }
  return g / static_cast<double>(subset.size()) + lambda * w;
}

template <typename F>
Vector central_difference(F&& f, const Vector& w, double h) {
  Vector g(w.size());
  for (Index j = 0; j < w.size(); ++j) {
    Vector plus = w, minus = w;
    plus[j] += h;
    minus[j] -= h;
    g[j] = (f(plus) - f(minus)) / (2.0 * h);
  }
  return g;
}

inline double relative_error(const Vector& a, const Vector& b) {
  const double denom = std::max({a.norm(), b.norm(), 1e-8});
  return (a - b).norm() / denom;
}

/// Distance in units in the last place between two finite doubles.
inline std::uint64_t ulp_distance(double a, double b) {
  if (a == b) return 0;
  auto key = [](double x) {
    const auto bits = std::bit_cast<std::int64_t>(x);
    return bits < 0 ? std::numeric_limits<std::int64_t>::min() - bits : bits;
  };
  const auto ka = key(a), kb = key(b);
  return ka > kb ? static_cast<std::uint64_t>(ka - kb) : static_cast<std::uint64_t>(kb - ka);
}

inline std::uint64_t max_ulp_distance(const Vector& a, const Vector& b) {
  std::uint64_t worst = 0;
  for (Index j = 0; j < a.size(); ++j) worst = std::max(worst, ulp_distance(a[j], b[j]));
  return worst;
}

// ---- non-logistic finite sums -----------------------------------------------

/// f_j(w) = 0.5 ||w - c_j||^2; Hessian is the identity.
class SeparableQuadratic final : public FiniteSumObjective {
 public:
  explicit SeparableQuadratic(std::vector<Vector> centers) : centers_(std::move(centers)) {}

  Index dim() const override { return centers_.front().size(); }
  Index sample_count() const override { return static_cast<Index>(centers_.size()); }

  double value(const Vector& w) const override {
    double s = 0.0;
    for (const auto& c : centers_) s += 0.5 * (w - c).squaredNorm();
    return s / static_cast<double>(centers_.size());
  }
  Vector gradient(const Vector& w, EvalCounter& counter) const override {
    Vector g = Vector::Zero(dim());
    for (const auto& c : centers_) g += w - c;
    counter.charge(sample_count());
    return g / static_cast<double>(centers_.size());
  }
  Vector sample_gradient(const Vector& w, Index k, EvalCounter& counter) const override {
    counter.charge(1);
    return w - centers_[static_cast<std::size_t>(k)];
  }
  Vector hvp(const Vector&, const Vector& v, EvalCounter& counter) const override {
    counter.charge(sample_count());
    return v;
  }
  std::shared_ptr<const FiniteSumObjective> subsample(std::span<const Index> local) const override {
    std::vector<Vector> picked;
    for (Index k : local) picked.push_back(centers_[static_cast<std::size_t>(k)]);
    return std::make_shared<SeparableQuadratic>(std::move(picked));
  }

 private:
  std::vector<Vector> centers_;
};

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index j = 0;
  for (double x : values) v[j++] = x;
  return v;
}

}  // namespace mlvr::testing

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "mlvr/common.hpp"

namespace mlvr {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor, Index>;

/// Labeled sparse design matrix. Row i holds x_i with 0-based, strictly
/// ascending feature indices; labels are +1 or -1. Immutable once built.
class SparseDataset {
 public:
  SparseDataset() = default;
  /// Takes ownership of a compressed row-major matrix; validates labels.
  SparseDataset(SparseRows rows, Vector labels);

  Index n_samples() const { return rows_.rows(); }
  Index n_features() const { return rows_.cols(); }
  Index nnz() const { return rows_.nonZeros(); }

  const SparseRows& rows() const { return rows_; }
  const Vector& labels() const { return labels_; }
  double label(Index i) const { return labels_[i]; }

  /// <x_i, w>
  double row_dot(Index i, const Vector& w) const {
    double s = 0.0;
    for (SparseRows::InnerIterator it(rows_, i); it; ++it) s += it.value() * w[it.col()];
    return s;
  }

  /// out += scale * x_i
  void add_row(Index i, double scale, Vector& out) const {
    for (SparseRows::InnerIterator it(rows_, i); it; ++it) out[it.col()] += scale * it.value();
  }

  /// 64-bit FNV-1a digest over shape, labels, indices and value bit patterns.
  std::uint64_t digest() const;

  friend bool operator==(const SparseDataset& a, const SparseDataset& b);

 private:
  SparseRows rows_;
  Vector labels_;
};

/// Builds a dataset row by row; used by the parser and by generators.
class DatasetBuilder {
 public:
  /// Indices must be 0-based and strictly ascending within the row.
  void add_row(double label, std::span<const std::pair<Index, double>> entries);
  SparseDataset build(Index n_features) const;
  Index max_feature_count() const { return max_features_; }
  Index size() const { return static_cast<Index>(labels_.size()); }

 private:
  std::vector<Index> outer_{0};
  std::vector<Index> inner_;
  std::vector<double> values_;
  std::vector<double> labels_;
  Index max_features_ = 0;
};

/// Parses LIBSVM text. Labels are mapped to {-1,+1}: {-1,+1} is kept, any
/// other two-valued set maps smaller -> -1 and larger -> +1. n_features is
/// the largest index seen unless `n_features` asks for more.
SparseDataset parse_libsvm(std::istream& in, std::optional<Index> n_features = std::nullopt);

/// Writes LIBSVM text with 1-based indices and shortest round-trip values.
void write_libsvm(std::ostream& out, const SparseDataset& data);

/// Loads a file, transparently inflating gzip input.
SparseDataset load_libsvm(const std::string& path, std::optional<Index> n_features = std::nullopt);

/// Nested index subsets, coarsest first: levels.front() is D^1 and
/// levels.back() holds every sample.
struct SampleHierarchy {
  std::vector<std::vector<Index>> levels;
  std::uint64_t seed = 0;

  std::size_t depth() const { return levels.size(); }
  const std::vector<Index>& level(std::size_t l) const { return levels.at(l); }
};

/// Validates `level_sizes` (nondecreasing, >= 1, last == n) and throws
/// ConfigError otherwise.
void validate_level_sizes(std::span<const Index> level_sizes, Index n_samples);

/// Draws the hierarchy from an existing engine. Each coarser level is a
/// uniform sample without replacement from the adjacent finer level, via a
/// partial Fisher-Yates shuffle; levels are returned sorted.
SampleHierarchy draw_hierarchy(Index n_samples, std::span<const Index> level_sizes, Rng& rng);

SampleHierarchy build_hierarchy(const SparseDataset& data, std::span<const Index> level_sizes,
                                std::uint64_t seed);

/// Sizes for an L-level hierarchy from the coarsest size by repeated
/// doubling; the finest level is always n and intermediate sizes are capped
/// at n.
std::vector<Index> doubling_level_sizes(Index coarsest, std::size_t levels, Index n_samples);

}  // namespace mlvr

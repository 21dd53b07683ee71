#include "mlvr/data.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string_view>

#include <zlib.h>

namespace mlvr {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_mix(std::uint64_t& h, std::uint64_t word) {
  for (int b = 0; b < 8; ++b) {
    h ^= (word >> (8 * b)) & 0xffU;
    h *= kFnvPrime;
  }
}

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size() && std::isfinite(out);
}

bool parse_index(std::string_view tok, long long& out) {
  if (tok.empty()) return false;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

SparseDataset::SparseDataset(SparseRows rows, Vector labels)
    : rows_(std::move(rows)), labels_(std::move(labels)) {
  check_dim(labels_.size(), rows_.rows(), "SparseDataset labels");
  for (Index i = 0; i < labels_.size(); ++i) {
    if (labels_[i] != 1.0 && labels_[i] != -1.0) {
      throw ConfigError("SparseDataset: label of sample " + std::to_string(i) + " is not +1/-1");
    }
  }
  rows_.makeCompressed();
}

std::uint64_t SparseDataset::digest() const {
  std::uint64_t h = kFnvOffset;
  fnv_mix(h, static_cast<std::uint64_t>(n_samples()));
  fnv_mix(h, static_cast<std::uint64_t>(n_features()));
  for (Index i = 0; i < n_samples(); ++i) {
    fnv_mix(h, std::bit_cast<std::uint64_t>(labels_[i]));
    for (SparseRows::InnerIterator it(rows_, i); it; ++it) {
      fnv_mix(h, static_cast<std::uint64_t>(it.col()));
      fnv_mix(h, std::bit_cast<std::uint64_t>(it.value()));
    }
    fnv_mix(h, 0xffffffffffffffffULL);  // row separator
  }
  return h;
}

bool operator==(const SparseDataset& a, const SparseDataset& b) {
  if (a.n_samples() != b.n_samples() || a.n_features() != b.n_features() ||
      a.nnz() != b.nnz() || a.labels_ != b.labels_) {
    return false;
  }
  for (Index i = 0; i < a.n_samples(); ++i) {
    SparseRows::InnerIterator ia(a.rows_, i), ib(b.rows_, i);
    for (; ia && ib; ++ia, ++ib) {
      if (ia.col() != ib.col() || ia.value() != ib.value()) return false;
    }
    if (ia || ib) return false;
  }
  return true;
}

void DatasetBuilder::add_row(double label, std::span<const std::pair<Index, double>> entries) {
  Index prev = -1;
  for (const auto& [col, val] : entries) {
    if (col <= prev) throw ConfigError("DatasetBuilder: row indices must be strictly ascending");
    inner_.push_back(col);
    values_.push_back(val);
    prev = col;
  }
  max_features_ = std::max(max_features_, prev + 1);
  outer_.push_back(static_cast<Index>(inner_.size()));
  labels_.push_back(label);
}

SparseDataset DatasetBuilder::build(Index n_features) const {
  if (n_features < max_features_) {
    throw ConfigError("n_features " + std::to_string(n_features) + " is below the largest index " +
                      std::to_string(max_features_));
  }
  const Index n = size();
  // Map the CSR arrays and copy: keeps explicit zeros, unlike setFromTriplets
  // followed by pruning.
  Eigen::Map<const SparseRows> view(n, n_features, static_cast<Index>(values_.size()),
                                    outer_.data(), inner_.data(), values_.data());
  SparseRows rows = view;
  Vector labels = Eigen::Map<const Vector>(labels_.data(), n);
  return SparseDataset(std::move(rows), std::move(labels));
}

SparseDataset parse_libsvm(std::istream& in, std::optional<Index> n_features) {
  std::vector<double> raw_labels;
  std::vector<std::size_t> line_of_row;
  std::vector<std::vector<std::pair<Index, double>>> rows;
  Index max_index = 0;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);

    std::vector<std::string_view> tokens;
    std::size_t pos = 0;
    while (pos < view.size()) {
      while (pos < view.size() && std::isspace(static_cast<unsigned char>(view[pos]))) ++pos;
      std::size_t end = pos;
      while (end < view.size() && !std::isspace(static_cast<unsigned char>(view[end]))) ++end;
      if (end > pos) tokens.push_back(view.substr(pos, end - pos));
      pos = end;
    }
    if (tokens.empty()) continue;

    double label = 0.0;
    if (!parse_double(tokens[0], label)) {
      throw ParseError(line_no, "invalid label '" + std::string(tokens[0]) + "'");
    }

    std::vector<std::pair<Index, double>> entries;
    entries.reserve(tokens.size() - 1);
    long long prev = 0;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto tok = tokens[t];
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(line_no, "malformed pair '" + std::string(tok) + "'");
      }
      long long idx = 0;
      double val = 0.0;
      if (!parse_index(tok.substr(0, colon), idx) || idx < 1) {
        throw ParseError(line_no, "invalid feature index in '" + std::string(tok) + "'");
      }
      if (!parse_double(tok.substr(colon + 1), val)) {
        throw ParseError(line_no, "non-numeric value in '" + std::string(tok) + "'");
      }
      if (idx <= prev) {
        throw ParseError(line_no, "feature indices not ascending at '" + std::string(tok) + "'");
      }
      prev = idx;
      entries.emplace_back(static_cast<Index>(idx - 1), val);
    }
    max_index = std::max<Index>(max_index, static_cast<Index>(prev));
    raw_labels.push_back(label);
    line_of_row.push_back(line_no);
    rows.push_back(std::move(entries));
  }

  // Two-class label mapping.
  std::map<double, std::size_t> first_seen;
  for (std::size_t i = 0; i < raw_labels.size(); ++i) first_seen.try_emplace(raw_labels[i], i);
  const bool already_signed = std::all_of(first_seen.begin(), first_seen.end(), [](const auto& kv) {
    return kv.first == 1.0 || kv.first == -1.0;
  });
  std::map<double, double> mapping;
  if (already_signed) {
    for (const auto& kv : first_seen) mapping[kv.first] = kv.first;
  } else if (first_seen.size() == 2) {
    mapping[first_seen.begin()->first] = -1.0;
    mapping[std::prev(first_seen.end())->first] = 1.0;
  } else {
    // Report the row that made the label set unmappable.
    std::size_t bad = raw_labels.size();
    if (first_seen.size() > 2) {
      std::vector<std::size_t> firsts;
      for (const auto& kv : first_seen) firsts.push_back(kv.second);
      std::sort(firsts.begin(), firsts.end());
      bad = firsts[2];
    } else {
      bad = first_seen.begin()->second;
    }
    throw ParseError(line_of_row[bad], "label set cannot be mapped to {-1,+1} (" +
                                           std::to_string(first_seen.size()) + " distinct labels)");
  }

  DatasetBuilder builder;
  for (std::size_t i = 0; i < rows.size(); ++i) builder.add_row(mapping.at(raw_labels[i]), rows[i]);
  Index d = max_index;
  if (n_features) {
    if (*n_features < max_index) {
      throw ConfigError("n_features override " + std::to_string(*n_features) +
                        " is below the largest index " + std::to_string(max_index));
    }
    d = *n_features;
  }
  return builder.build(d);
}

void write_libsvm(std::ostream& out, const SparseDataset& data) {
  for (Index i = 0; i < data.n_samples(); ++i) {
    out << (data.label(i) > 0 ? "+1" : "-1");
    for (SparseRows::InnerIterator it(data.rows(), i); it; ++it) {
      out << ' ' << (it.col() + 1) << ':' << format_double(it.value());
    }
    out << '\n';
  }
}

SparseDataset load_libsvm(const std::string& path, std::optional<Index> n_features) {
  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) throw Error("cannot open dataset '" + path + "'");
  std::string contents;
  char buf[1 << 16];
  int got = 0;
  while ((got = gzread(file, buf, sizeof(buf))) > 0) contents.append(buf, static_cast<std::size_t>(got));
  const bool failed = got < 0;
  gzclose(file);
  if (failed) throw Error("error reading dataset '" + path + "'");
  std::istringstream in(std::move(contents));
  return parse_libsvm(in, n_features);
}

void validate_level_sizes(std::span<const Index> level_sizes, Index n_samples) {
  if (level_sizes.empty()) throw ConfigError("level sizes: empty list");
  Index prev = 0;
  for (Index s : level_sizes) {
    if (s < 1) throw ConfigError("level sizes: every level needs at least one sample");
    if (s < prev) throw ConfigError("level sizes: must be nondecreasing from coarse to fine");
    if (s > n_samples) {
      throw ConfigError("level sizes: " + std::to_string(s) + " exceeds dataset size " +
                        std::to_string(n_samples));
    }
    prev = s;
  }
  if (level_sizes.back() != n_samples) {
    throw ConfigError("level sizes: finest level must equal the dataset size " + std::to_string(n_samples));
  }
}

SampleHierarchy draw_hierarchy(Index n_samples, std::span<const Index> level_sizes, Rng& rng) {
  validate_level_sizes(level_sizes, n_samples);
  const std::size_t depth = level_sizes.size();
  SampleHierarchy h;
  h.levels.resize(depth);
  auto& finest = h.levels[depth - 1];
  finest.resize(static_cast<std::size_t>(n_samples));
  for (Index i = 0; i < n_samples; ++i) finest[static_cast<std::size_t>(i)] = i;

  for (std::size_t l = depth - 1; l-- > 0;) {
    const auto& parent = h.levels[l + 1];
    const auto take = static_cast<std::size_t>(level_sizes[l]);
    if (take == parent.size()) {
      // Nothing to choose; do not consume the engine.
      h.levels[l] = parent;
      continue;
    }
    std::vector<Index> pool = parent;
    for (std::size_t i = 0; i < take; ++i) {
      const auto j = i + static_cast<std::size_t>(uniform_index(rng, static_cast<Index>(pool.size() - i)));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(take);
    std::sort(pool.begin(), pool.end());
    h.levels[l] = std::move(pool);
  }
  return h;
}

SampleHierarchy build_hierarchy(const SparseDataset& data, std::span<const Index> level_sizes,
                                std::uint64_t seed) {
  Rng rng(seed);
  SampleHierarchy h = draw_hierarchy(data.n_samples(), level_sizes, rng);
  h.seed = seed;
  return h;
}

std::vector<Index> doubling_level_sizes(Index coarsest, std::size_t levels, Index n_samples) {
  if (levels == 0) throw ConfigError("level count must be at least 1");
  if (coarsest < 1 || coarsest > n_samples) {
    throw ConfigError("coarsest level size must lie in [1, n]");
  }
  std::vector<Index> sizes;
  if (levels == 1) return {n_samples};
  sizes.push_back(coarsest);
  for (std::size_t l = 1; l + 1 < levels; ++l) sizes.push_back(std::min(2 * sizes.back(), n_samples));
  sizes.push_back(n_samples);
  return sizes;
}

}  // namespace mlvr

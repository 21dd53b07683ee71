#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mlvr/baselines.hpp"
#include "mlvr/data.hpp"
#include "mlvr/mlvr.hpp"
#include "mlvr/objective.hpp"
#include "mlvr/trace.hpp"

namespace mlvr {

// ---- reference minimizer --------------------------------------------------

struct Reference {
  Vector w_star;
  double f_star = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  /// False when the gradient-norm target was not reached.
  bool converged = false;
};

struct ReferenceOptions {
  double grad_tol = 1e-12;
  int max_iters = 200;
};

/// Newton-CG with line search on the full objective until ||grad F|| <=
/// grad_tol or max_iters. Requires lambda > 0.
Reference compute_reference(const LogisticObjective& objective, const ReferenceOptions& options = {});

/// Text sidecar holding (digest, lambda, f_star, grad norm, w*).
void save_reference(const std::string& path, std::uint64_t digest, double lambda, const Reference& ref);
/// Returns nullopt if the file is missing or keyed to another (digest, lambda).
std::optional<Reference> load_reference(const std::string& path, std::uint64_t digest, double lambda);

/// Loads from `cache_path` when it matches, otherwise computes and stores.
Reference cached_reference(const LogisticObjective& objective, const std::string& cache_path,
                           const ReferenceOptions& options = {});

// ---- configuration helpers ------------------------------------------------

/// Parses counts such as "400", "full", "n", "5n", "0.5n", "n/2".
Index parse_count(const std::string& text, Index n);

/// "400,800,full" -> {400, 800, n}. A single entry together with levels > 1
/// is treated as the coarsest size and expanded by doubling.
std::vector<Index> parse_level_sizes(const std::string& text, std::size_t levels, Index n);

/// Dense synthetic logistic-regression data. Feature j is scaled by
/// scale_span^(-j/(d-1)), so column scales span `scale_span`; labels follow a
/// logistic model around a random weight vector.
SparseDataset synthetic_logistic(Index n, Index d, double scale_span, std::uint64_t seed);

// ---- experiments ----------------------------------------------------------

struct ExperimentConfig {
  std::string dataset_path;
  std::string dataset_name;  // defaults to the file stem
  Method method = Method::MLVR;

  std::optional<double> step_size;
  std::string inner_iters = "n";
  std::string hessian_samples;
  int cg_iters = 10;

  std::size_t levels = 2;
  std::string level_sizes;

  std::optional<double> lambda;  // default 1/n
  double tol = 1e-9;
  double budget = 1000.0;
  std::uint64_t seed = 0;
  std::optional<Index> n_features;

  std::string out;               // CSV path; empty = no file
  std::string reference_cache;   // empty = <dataset>.ref
  bool cache_reference = true;

  /// Canonical digest of everything except seed and output paths.
  std::string digest() const;
};

struct ExperimentResult {
  Trace trace;
  Reference reference;
  int exit_status = 0;  // 0 converged, 3 budget, 4 diverged
};

/// Runs `method` on an already loaded dataset with a known reference.
Trace run_method(const SparseDataset& data, const ExperimentConfig& cfg, double lambda, double f_star);

/// Loads the dataset, obtains F*, runs the solver and writes the CSV (and a
/// `.json` metadata sidecar) when cfg.out is set.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

int exit_status(RunStatus status);

/// Command-line entry point (run, sweep, reference, inspect, generate).
int cli_main(int argc, char** argv);

}  // namespace mlvr

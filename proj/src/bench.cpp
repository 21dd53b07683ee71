#include "mlvr/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace mlvr {

namespace {

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_real(const std::string& text, const char* what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(std::string(what) + ": cannot parse '" + text + "'");
  }
  return v;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

// ---- reference ------------------------------------------------------------

Reference compute_reference(const LogisticObjective& objective, const ReferenceOptions& options) {
  if (!(objective.lambda() > 0.0)) throw ConfigError("reference minimizer requires lambda > 0");
  EvalCounter scratch(objective.sample_count());
  const Index d = objective.dim();
  Reference ref;
  Vector w = Vector::Zero(d);
  Vector g = objective.gradient(w, scratch);
  LineSearchConfig ls;

  int it = 0;
  for (; it < options.max_iters && g.norm() > options.grad_tol; ++it) {
    const double g_norm = g.norm();
    // Inexact Newton with a superlinear forcing sequence.
    CgConfig cg;
    cg.max_iters = static_cast<int>(std::min<Index>(std::max<Index>(20, 2 * d), 2000));
    cg.rel_tol = std::min(0.1, g_norm);
    const Vector p = newton_direction(objective, w, g, cg, scratch);
    Vector next;
    try {
      next = w + backtracking_line_search<double>([&](const Vector& x) { return objective.value(x); }, w, p, g, ls) * p;
    } catch (const LineSearchError&) {
      // Loss differences are below rounding; judge the unit step by the gradient.
      next = w + p;
    }
    Vector g_next = objective.gradient(next, scratch);
    if (!(g_next.norm() < g_norm) && objective.value(next) > objective.value(w)) break;
    w = std::move(next);
    g = std::move(g_next);
  }
  ref.grad_norm = g.norm();
  ref.converged = ref.grad_norm <= options.grad_tol;
  ref.iterations = it;
  ref.f_star = objective.value(w);
  ref.w_star = std::move(w);
  return ref;
}

void save_reference(const std::string& path, std::uint64_t digest, double lambda, const Reference& ref) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write reference cache '" + path + "'");
  out << "mlvr-reference 1\n"
      << "digest " << hex64(digest) << '\n'
      << "lambda " << shortest(lambda) << '\n'
      << "f_star " << shortest(ref.f_star) << '\n'
      << "grad_norm " << shortest(ref.grad_norm) << '\n'
      << "iterations " << ref.iterations << '\n'
      << "converged " << (ref.converged ? 1 : 0) << '\n'
      << "dim " << ref.w_star.size() << '\n';
  for (Index j = 0; j < ref.w_star.size(); ++j) out << shortest(ref.w_star[j]) << '\n';
  if (!out) throw Error("error writing reference cache '" + path + "'");
}

std::optional<Reference> load_reference(const std::string& path, std::uint64_t digest, double lambda) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::string key, value, magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "mlvr-reference" || version != 1) return std::nullopt;

  auto field = [&](const char* name) {
    if (!(in >> key >> value) || key != name) throw ParseError(0, "reference cache '" + path + "': expected " + name);
    return value;
  };
  if (field("digest") != hex64(digest)) return std::nullopt;
  if (parse_real(field("lambda"), "reference lambda") != lambda) return std::nullopt;
  Reference ref;
  ref.f_star = parse_real(field("f_star"), "reference f_star");
  ref.grad_norm = parse_real(field("grad_norm"), "reference grad_norm");
  ref.iterations = std::stoi(field("iterations"));
  ref.converged = field("converged") == "1";
  const Index d = std::stoll(field("dim"));
  ref.w_star.resize(d);
  for (Index j = 0; j < d; ++j) {
    if (!(in >> value)) throw ParseError(0, "reference cache '" + path + "': truncated");
    ref.w_star[j] = parse_real(value, "reference w*");
  }
  return ref;
}

Reference cached_reference(const LogisticObjective& objective, const std::string& cache_path,
                           const ReferenceOptions& options) {
  const std::uint64_t digest = objective.dataset().digest();
  if (!cache_path.empty()) {
    if (auto hit = load_reference(cache_path, digest, objective.lambda())) return *hit;
  }
  Reference ref = compute_reference(objective, options);
  if (!cache_path.empty()) save_reference(cache_path, digest, objective.lambda(), ref);
  return ref;
}

// ---- configuration helpers ------------------------------------------------

Index parse_count(const std::string& raw, Index n) {
  const std::string text = trim(raw);
  if (text.empty()) throw ConfigError("empty count");
  double value = 0.0;
  if (text == "full" || text == "n") {
    value = static_cast<double>(n);
  } else if (text.size() > 2 && text.rfind("n/", 0) == 0) {
    value = static_cast<double>(n) / parse_real(text.substr(2), "count divisor");
  } else if (text.back() == 'n') {
    value = parse_real(text.substr(0, text.size() - 1), "count multiplier") * static_cast<double>(n);
  } else {
    value = parse_real(text, "count");
  }
  const auto count = static_cast<Index>(std::llround(value));
  if (!(value > 0.0) || count < 1) throw ConfigError("count '" + text + "' must be at least 1");
  return count;
}

std::vector<Index> parse_level_sizes(const std::string& text, std::size_t levels, Index n) {
  std::vector<Index> sizes;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) sizes.push_back(parse_count(item, n));
  if (sizes.empty()) throw ConfigError("level sizes: empty list");
  if (sizes.size() == 1 && levels > 1 && sizes.front() < n) return doubling_level_sizes(sizes.front(), levels, n);
  if (levels != 0 && sizes.size() != levels) {
    throw ConfigError("level sizes: " + std::to_string(sizes.size()) + " sizes given for " + std::to_string(levels) +
                      " levels");
  }
  validate_level_sizes(sizes, n);
  return sizes;
}

SparseDataset synthetic_logistic(Index n, Index d, double scale_span, std::uint64_t seed) {
  if (n < 1 || d < 1 || !(scale_span >= 1.0)) throw ConfigError("synthetic_logistic: invalid shape or span");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  Vector scale(d);
  for (Index j = 0; j < d; ++j) {
    const double t = d > 1 ? static_cast<double>(j) / static_cast<double>(d - 1) : 0.0;
    scale[j] = std::pow(scale_span, -t);
  }
  Vector w_true(d);
  for (Index j = 0; j < d; ++j) w_true[j] = normal(rng);
  // Margin standard deviation of 2.
  w_true *= 2.0 / w_true.cwiseProduct(scale).norm();

  DatasetBuilder builder;
  std::vector<std::pair<Index, double>> row(static_cast<std::size_t>(d));
  for (Index i = 0; i < n; ++i) {
    double margin = 0.0;
    for (Index j = 0; j < d; ++j) {
      const double x = normal(rng) * scale[j];
      row[static_cast<std::size_t>(j)] = {j, x};
      margin += x * w_true[j];
    }
    const double label = uniform(rng) < logistic::sigmoid(margin) ? 1.0 : -1.0;
    builder.add_row(label, row);
  }
  return builder.build(d);
}

// ---- experiments ----------------------------------------------------------

std::string ExperimentConfig::digest() const {
  std::ostringstream os;
  os << "dataset=" << dataset_name << ";method=" << to_string(method)
     << ";step=" << (step_size ? shortest(*step_size) : "ls") << ";inner=" << inner_iters
     << ";hessian=" << hessian_samples << ";cg=" << cg_iters << ";levels=" << levels << ";sizes=" << level_sizes
     << ";lambda=" << (lambda ? shortest(*lambda) : "1/n") << ";tol=" << shortest(tol)
     << ";budget=" << shortest(budget) << ";features=" << (n_features ? std::to_string(*n_features) : "auto");
  return hex64(fnv1a(os.str()));
}

int exit_status(RunStatus status) {
  switch (status) {
    case RunStatus::Converged:
      return 0;
    case RunStatus::Budget:
      return 3;
    case RunStatus::Diverged:
      return 4;
  }
  return 1;
}

Trace run_method(const SparseDataset& data, const ExperimentConfig& cfg, double lambda, double f_star) {
  const Index n = data.n_samples();
  const LogisticObjective objective(data, lambda);
  EvalCounter counter(n);
  RunControl control;
  control.f_star = f_star;
  control.tol = cfg.tol;
  control.budget = cfg.budget;

  Trace trace;
  try {
    if (cfg.method == Method::MLVR) {
      MlvrConfig mc;
      mc.levels = LevelConfig::standard();
      mc.levels.cg.max_iters = cfg.cg_iters;
      if (cfg.level_sizes.empty()) throw ConfigError("mlvr requires --level-sizes");
      mc.level_sizes = parse_level_sizes(cfg.level_sizes, cfg.levels, n);
      mc.seed = cfg.seed;
      mc.control = control;
      trace = train_mlvr(objective, mc, counter);
    } else {
      BaselineConfig bc;
      bc.method = cfg.method;
      bc.step_size = cfg.step_size;
      bc.inner_iters = parse_count(cfg.inner_iters, n);
      if (cfg.method == Method::SSN) {
        if (cfg.hessian_samples.empty()) throw ConfigError("ssn requires --hessian-samples");
        bc.hessian_subset_size = parse_count(cfg.hessian_samples, n);
      }
      bc.cg.max_iters = cfg.cg_iters;
      bc.seed = cfg.seed;
      bc.control = control;
      trace = run_baseline(objective, bc, counter);
    }
  } catch (const DivergenceError& e) {
    trace = e.trace();
  }
  trace.metadata.method = to_string(cfg.method);
  trace.metadata.dataset = cfg.dataset_name;
  trace.metadata.seed = cfg.seed;
  trace.metadata.config_digest = cfg.digest();
  return trace;
}

ExperimentResult run_experiment(const ExperimentConfig& input) {
  ExperimentConfig cfg = input;
  if (cfg.dataset_name.empty()) cfg.dataset_name = std::filesystem::path(cfg.dataset_path).stem().string();
  const SparseDataset data = load_libsvm(cfg.dataset_path, cfg.n_features);
  const double lambda = cfg.lambda.value_or(1.0 / static_cast<double>(data.n_samples()));
  const LogisticObjective objective(data, lambda);

  ExperimentResult result;
  const std::string cache =
      cfg.cache_reference ? (cfg.reference_cache.empty() ? cfg.dataset_path + ".ref" : cfg.reference_cache) : "";
  result.reference = cached_reference(objective, cache);
  result.trace = run_method(data, cfg, lambda, result.reference.f_star);
  result.exit_status = exit_status(result.trace.status);

  if (!cfg.out.empty()) {
    write_csv(cfg.out, result.trace);
    nlohmann::json meta = {
        {"method", result.trace.metadata.method},
        {"dataset", result.trace.metadata.dataset},
        {"seed", result.trace.metadata.seed},
        {"config_digest", result.trace.metadata.config_digest},
        {"status", to_string(result.trace.status)},
        {"lambda", lambda},
        {"f_star", result.reference.f_star},
        {"reference_grad_norm", result.reference.grad_norm},
    };
    std::ofstream out(cfg.out + ".json");
    out << meta.dump(2) << '\n';
    if (!out) throw Error("error writing '" + cfg.out + ".json'");
  }
  return result;
}

}  // namespace mlvr

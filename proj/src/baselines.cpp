#include "mlvr/baselines.hpp"

#include <algorithm>
#include <array>

#include "mlvr/data.hpp"

namespace mlvr {

namespace {

constexpr std::array<std::pair<Method, const char*>, 7> kMethodNames{{
    {Method::GD, "gd"},
    {Method::NewtonCG, "newton"},
    {Method::SGD, "sgd"},
    {Method::SVRG, "svrg"},
    {Method::SARAH, "sarah"},
    {Method::SSN, "ssn"},
    {Method::MLVR, "mlvr"},
}};

Index inner_length(const BaselineConfig& cfg, const FiniteSumObjective& objective) {
  return cfg.inner_iters > 0 ? cfg.inner_iters : objective.sample_count();
}

double fixed_step(const BaselineConfig& cfg, const char* method) {
  if (!cfg.step_size) throw ConfigError(std::string(method) + " requires a fixed step size");
  return *cfg.step_size;
}

Trace finish(Trace trace, const BaselineConfig& cfg) {
  trace.metadata.method = to_string(cfg.method);
  trace.metadata.seed = cfg.seed;
  return trace;
}

}  // namespace

const char* to_string(Method method) {
  for (const auto& [m, name] : kMethodNames) {
    if (m == method) return name;
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  for (const auto& [m, n] : kMethodNames) {
    if (name == n) return m;
  }
  throw ConfigError("unknown method '" + name + "'");
}

void BaselineConfig::validate(Index n_samples) const {
  if (step_size && !(*step_size > 0.0)) throw ConfigError("step size must be positive");
  if (inner_iters < 0) throw ConfigError("inner iterations must be >= 1");
  if (method == Method::SSN && (hessian_subset_size < 1 || hessian_subset_size > n_samples)) {
    throw ConfigError("SSN Hessian subset size must lie in [1, n]");
  }
  if ((method == Method::SGD || method == Method::SVRG || method == Method::SARAH) && !step_size) {
    throw ConfigError(std::string(to_string(method)) + " requires a fixed step size");
  }
  cg.validate();
  line_search.validate();
}

Vector svrg_direction(const FiniteSumObjective& objective, const Vector& w, const Vector& snapshot,
                      const Vector& full_grad, Index t, EvalCounter& counter) {
  Vector dir = objective.sample_gradient(w, t, counter);
  dir -= objective.sample_gradient(snapshot, t, counter);
  dir += full_grad;
  return dir;
}

double armijo_step_or_fallback(const FiniteSumObjective& objective, const Vector& w, const Vector& p,
                               const Vector& g, const LineSearchConfig& cfg) {
  try {
    return backtracking_line_search<double>([&](const Vector& x) { return objective.value(x); }, w, p, g, cfg);
  } catch (const LineSearchError& e) {
    return e.last_step();
  }
}

Vector newton_direction(const FiniteSumObjective& objective, const Vector& w, const Vector& g,
                        const CgConfig& cg, EvalCounter& counter) {
  const LinearOperator hessian = objective.hessian_at(w, counter);
  return cg_solve<double>(hessian, Vector(-g), cg);
}

Trace run_gd(const FiniteSumObjective& objective, const BaselineConfig& cfg, EvalCounter& counter) {
  cfg.validate(objective.sample_count());
  auto step = [&](Vector& w) {
    const Vector g = objective.gradient(w, counter);
    if (g.isZero(0.0)) return;
    const Vector p = -g;
    const double alpha = cfg.step_size ? *cfg.step_size
                                       : armijo_step_or_fallback(objective, w, p, g, cfg.line_search);
    w += alpha * p;
  };
  return finish(run_loop(objective, Vector::Zero(objective.dim()), counter, cfg.control, step), cfg);
}

Trace run_newton_cg(const FiniteSumObjective& objective, const BaselineConfig& cfg, EvalCounter& counter) {
  cfg.validate(objective.sample_count());
  auto step = [&](Vector& w) {
    const Vector g = objective.gradient(w, counter);
    if (g.isZero(0.0)) return;
    const Vector p = newton_direction(objective, w, g, cfg.cg, counter);
    const double alpha = cfg.step_size ? *cfg.step_size
                                       : armijo_step_or_fallback(objective, w, p, g, cfg.line_search);
    w += alpha * p;
  };
  return finish(run_loop(objective, Vector::Zero(objective.dim()), counter, cfg.control, step), cfg);
}

Trace run_sgd(const FiniteSumObjective& objective, const BaselineConfig& cfg, EvalCounter& counter) {
  cfg.validate(objective.sample_count());
  const double alpha = fixed_step(cfg, "SGD");
  const Index steps = inner_length(cfg, objective);
  Rng rng = step_rng(cfg.seed);
  auto step = [&](Vector& w) {
    for (Index i = 0; i < steps; ++i) {
      const Index t = uniform_index(rng, objective.sample_count());
      w -= alpha * objective.sample_gradient(w, t, counter);
    }
  };
  return finish(run_loop(objective, Vector::Zero(objective.dim()), counter, cfg.control, step), cfg);
}

Trace run_svrg(const FiniteSumObjective& objective, const BaselineConfig& cfg, EvalCounter& counter) {
  cfg.validate(objective.sample_count());
  const double alpha = fixed_step(cfg, "SVRG");
  const Index m = inner_length(cfg, objective);
  Rng rng = step_rng(cfg.seed);
  auto step = [&](Vector& w) {
    const Vector snapshot = w;
    const Vector full_grad = objective.gradient(snapshot, counter);
    for (Index i = 0; i < m; ++i) {
      const Index t = uniform_index(rng, objective.sample_count());
      w -= alpha * svrg_direction(objective, w, snapshot, full_grad, t, counter);
    }
  };
  return finish(run_loop(objective, Vector::Zero(objective.dim()), counter, cfg.control, step), cfg);
}

Trace run_sarah(const FiniteSumObjective& objective, const BaselineConfig& cfg, EvalCounter& counter) {
  cfg.validate(objective.sample_count());
  const double alpha = fixed_step(cfg, "SARAH");
  const Index m = inner_length(cfg, objective);
  Rng rng = step_rng(cfg.seed);
  auto step = [&](Vector& w) {
    Vector v = objective.gradient(w, counter);
    Vector prev = w;
    w -= alpha * v;
    for (Index i = 1; i < m; ++i) {
      const Index t = uniform_index(rng, objective.sample_count());
      v += objective.sample_gradient(w, t, counter) - objective.sample_gradient(prev, t, counter);
      prev = w;
      w -= alpha * v;
    }
  };
  return finish(run_loop(objective, Vector::Zero(objective.dim()), counter, cfg.control, step), cfg);
}

Trace run_ssn(const FiniteSumObjective& objective, const BaselineConfig& cfg, EvalCounter& counter) {
  BaselineConfig checked = cfg;
  checked.method = Method::SSN;
  checked.validate(objective.sample_count());
  const Index n = objective.sample_count();
  const std::array<Index, 2> sizes{cfg.hessian_subset_size, n};
  Rng rng = sampling_rng(cfg.seed);
  std::shared_ptr<const FiniteSumObjective> hessian_source;
  auto draw = [&] { hessian_source = objective.subsample(draw_hierarchy(n, sizes, rng).levels.front()); };
  if (!cfg.resample_hessian_subset) draw();

  auto step = [&](Vector& w) {
    if (cfg.resample_hessian_subset) draw();
    const Vector g = objective.gradient(w, counter);
    if (g.isZero(0.0)) return;
    const Vector p = newton_direction(*hessian_source, w, g, cfg.cg, counter);
    const double alpha = cfg.step_size ? *cfg.step_size
                                       : armijo_step_or_fallback(objective, w, p, g, cfg.line_search);
    w += alpha * p;
  };
  return finish(run_loop(objective, Vector::Zero(objective.dim()), counter, cfg.control, step), checked);
}

Trace run_baseline(const FiniteSumObjective& objective, const BaselineConfig& cfg, EvalCounter& counter) {
  switch (cfg.method) {
    case Method::GD:
      return run_gd(objective, cfg, counter);
    case Method::NewtonCG:
      return run_newton_cg(objective, cfg, counter);
    case Method::SGD:
      return run_sgd(objective, cfg, counter);
    case Method::SVRG:
      return run_svrg(objective, cfg, counter);
    case Method::SARAH:
      return run_sarah(objective, cfg, counter);
    case Method::SSN:
      return run_ssn(objective, cfg, counter);
    case Method::MLVR:
      break;
  }
  throw ConfigError("run_baseline: MLVR is not a baseline");
}

}  // namespace mlvr

#include "mlvr/mlvr.hpp"

#include "mlvr/baselines.hpp"

namespace mlvr {

void LevelConfig::validate() const {
  if (pre_steps < 0 || post_steps < 0) throw ConfigError("smoothing step counts must be >= 0");
  if (coarsest_steps < 1) throw ConfigError("coarsest level needs at least one step");
  for (const LevelStep* s : {&fine, &coarsest}) {
    if (s->step_size && !(*s->step_size > 0.0)) throw ConfigError("level step size must be positive");
    if (s->kind == StepKind::Stochastic && !s->step_size) {
      throw ConfigError("stochastic level steps require a fixed step size");
    }
  }
  cg.validate();
  line_search.validate();
}

LevelConfig LevelConfig::standard() { return LevelConfig{}; }

LevelConfig LevelConfig::subsampled_newton() {
  LevelConfig cfg;
  cfg.pre_steps = 0;
  cfg.post_steps = 0;
  cfg.coarsest_steps = 1;
  cfg.coarsest = {StepKind::Newton, 1.0};
  cfg.safeguard_correction = true;
  return cfg;
}

LevelConfig LevelConfig::svrg(Index inner_iters, double step_size) {
  LevelConfig cfg;
  cfg.pre_steps = 0;
  cfg.post_steps = 0;
  cfg.coarsest_steps = static_cast<int>(inner_iters);
  cfg.coarsest = {StepKind::Stochastic, step_size};
  cfg.safeguard_correction = false;
  cfg.resample = Resample::Frozen;
  return cfg;
}

Vector level_optimizer(const FiniteSumObjective& objective, Vector w, int max_it, const LevelStep& step,
                       const CgConfig& cg, const LineSearchConfig& line_search, EvalCounter& counter, Rng& rng,
                       Vector* moved) {
  auto apply = [&](const Vector& delta) {
    w += delta;
    if (moved != nullptr) *moved += delta;
  };
  for (int i = 0; i < max_it; ++i) {
    if (step.kind == StepKind::Stochastic) {
      if (!step.step_size) throw ConfigError("stochastic level steps require a fixed step size");
      const Index t = uniform_index(rng, objective.sample_count());
      apply(-*step.step_size * objective.sample_gradient(w, t, counter));
      continue;
    }
    const Vector g = objective.gradient(w, counter);
    if (g.isZero(0.0)) break;
    const Vector p = step.kind == StepKind::Newton ? newton_direction(objective, w, g, cg, counter) : Vector(-g);
    const double alpha = step.step_size ? *step.step_size : armijo_step_or_fallback(objective, w, p, g, line_search);
    apply(alpha * p);
  }
  return w;
}

VCycle::VCycle(const FiniteSumObjective& objective, LevelConfig config, EvalCounter& counter, Rng& step_rng,
               MlvrObserver observer)
    : objective_(objective),
      config_(std::move(config)),
      counter_(counter),
      step_rng_(step_rng),
      observer_(std::move(observer)) {
  config_.validate();
}

void VCycle::set_hierarchy(SampleHierarchy hierarchy) {
  if (hierarchy.levels.empty() ||
      static_cast<Index>(hierarchy.levels.back().size()) != objective_.sample_count()) {
    throw ConfigError("VCycle: finest level must hold every sample");
  }
  hierarchy_ = std::move(hierarchy);
  bases_.clear();
  for (std::size_t l = 0; l + 1 < hierarchy_.depth(); ++l) bases_.push_back(objective_.subsample(hierarchy_.levels[l]));
  // Non-owning handle to the finest objective.
  bases_.emplace_back(std::shared_ptr<const FiniteSumObjective>{}, &objective_);
}

std::shared_ptr<const FiniteSumObjective> VCycle::level_base(int level) const {
  return bases_.at(static_cast<std::size_t>(level - 1));
}

Vector VCycle::run(int level, const Vector& w_in, const Vector* fine_gradient) {
  if (bases_.empty()) throw ConfigError("VCycle: no hierarchy set");
  const int finest = static_cast<int>(depth());
  if (level < 1 || level > finest) throw ConfigError("VCycle: level out of range");
  if ((level == finest) != (fine_gradient == nullptr)) {
    throw ConfigError("VCycle: a fine gradient is required exactly on coarse levels");
  }

  auto build = [&](int l, const Vector& anchor, const Vector* fine) {
    if (fine == nullptr) return CoupledObjective::uncoupled(level_base(l));
    CoupledObjective h = make_coupled(level_base(l), *fine, anchor, counter_);
    if (observer_.on_coupled) observer_.on_coupled(l, h, *fine, anchor);
    return h;
  };

  // Recursive body on an already assembled level objective. `moved`
  // accumulates the displacement from w0 step by step, so the coarse
  // correction is the sum of the coarse steps rather than w_coarse - w0.
  std::function<Vector(int, const CoupledObjective&, const Vector&, Vector&)> cycle =
      [&](int l, const CoupledObjective& h, const Vector& w0, Vector& moved) -> Vector {
    moved = Vector::Zero(w0.size());
    if (l == 1) {
      return level_optimizer(h, w0, config_.coarsest_steps, config_.coarsest, config_.cg, config_.line_search,
                             counter_, step_rng_, &moved);
    }
    Vector w = level_optimizer(h, w0, config_.pre_steps, config_.fine, config_.cg, config_.line_search, counter_,
                               step_rng_, &moved);
    const Vector g = h.gradient(w, counter_);
    const CoupledObjective coarse = build(l - 1, w, &g);
    Vector p;
    const Vector w_coarse = cycle(l - 1, coarse, w, p);

    bool accepted = true;
    Vector next;
    if (config_.safeguard_correction) {
      if (g.dot(p) < 0.0) {
        const Vector step = armijo_step_or_fallback(h, w, p, g, config_.line_search) * p;
        next = w + step;
        moved += step;
      } else {
        next = w;
        accepted = false;
      }
    } else {
      next = w_coarse;
      moved += p;
    }
    if (observer_.on_correction) {
      observer_.on_correction(l, w, g, coarse.gradient(w, counter_), p, accepted);
    }
    return level_optimizer(h, std::move(next), config_.post_steps, config_.fine, config_.cg, config_.line_search,
                           counter_, step_rng_, &moved);
  };

  const CoupledObjective h = build(level, w_in, fine_gradient);
  if (finest == 1) {
    return level_optimizer(h, w_in, config_.coarsest_steps, config_.coarsest, config_.cg, config_.line_search,
                           counter_, step_rng_);
  }
  Vector moved;
  return cycle(level, h, w_in, moved);
}

Trace train_mlvr(const FiniteSumObjective& objective, const MlvrConfig& config, EvalCounter& counter,
                 MlvrObserver observer) {
  config.levels.validate();
  const Index n = objective.sample_count();
  validate_level_sizes(config.level_sizes, n);

  Rng sampler = sampling_rng(config.seed);
  Rng stepper = step_rng(config.seed);
  VCycle vcycle(objective, config.levels, counter, stepper, std::move(observer));
  auto redraw = [&] {
    SampleHierarchy h = draw_hierarchy(n, config.level_sizes, sampler);
    h.seed = config.seed;
    vcycle.set_hierarchy(std::move(h));
  };
  if (config.levels.resample == Resample::Frozen) redraw();

  auto step = [&](Vector& w) {
    if (config.levels.resample == Resample::PerCycle) redraw();
    w = vcycle(w);
  };
  Trace trace = run_loop(objective, Vector::Zero(objective.dim()), counter, config.control, step);
  trace.metadata.method = "mlvr";
  trace.metadata.seed = config.seed;
  return trace;
}

}  // namespace mlvr

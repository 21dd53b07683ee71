#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mlvr/data.hpp"
#include "mlvr/objective.hpp"
#include "mlvr/solvers.hpp"
#include "mlvr/trace.hpp"

namespace mlvr {

enum class StepKind { GradientDescent, Newton, Stochastic };

/// One optimizer update as used on a level. Without a fixed step size, GD and
/// Newton steps use backtracking line search on the level objective.
struct LevelStep {
  StepKind kind = StepKind::GradientDescent;
  std::optional<double> step_size;
};

enum class Resample { PerCycle, Frozen };

struct LevelConfig {
  int pre_steps = 1;       // mu_1 on every level l > 1
  int post_steps = 0;      // mu_2 on every level l > 1
  int coarsest_steps = 1;  // mu^1
  LevelStep fine{StepKind::GradientDescent, std::nullopt};
  LevelStep coarsest{StepKind::Newton, std::nullopt};
  /// Accept the coarse correction p = w_coarse - w0 on each finer level with
  /// a backtracking line search along p. When false the coarse iterate is
  /// taken verbatim.
  bool safeguard_correction = true;
  Resample resample = Resample::PerCycle;
  CgConfig cg;
  LineSearchConfig line_search;

  void validate() const;

  /// One GD-with-line-search pre-smoothing step on every finer level, no
  /// post-smoothing, one Newton step (10 CG iterations) on the coarsest level.
  static LevelConfig standard();
  /// Two-level setting whose V-cycle is a sub-sampled Newton step on the
  /// full gradient with a line search on the fine objective.
  static LevelConfig subsampled_newton();
  /// Two-level setting with D^1 = D whose coarse SGD steps are SVRG updates.
  static LevelConfig svrg(Index inner_iters, double step_size);
};

struct MlvrConfig {
  LevelConfig levels;
  std::vector<Index> level_sizes;  // coarsest first, last == n
  std::uint64_t seed = 0;
  RunControl control;
};

/// Hooks for inspecting a running V-cycle (tests, diagnostics).
struct MlvrObserver {
  /// After H^l is assembled on level `level` (1-based, l < L).
  std::function<void(int level, const CoupledObjective& objective, const Vector& fine_gradient,
                     const Vector& anchor)>
      on_coupled;
  /// On level `level` (> 1) once the coarse result returns: `anchor` is the
  /// fine iterate handed down, `fine_gradient` = grad H^l(anchor),
  /// `coarse_gradient` = grad H^{l-1}(anchor), p = w_coarse - anchor (summed
  /// from the coarse steps).
  std::function<void(int level, const Vector& anchor, const Vector& fine_gradient,
                     const Vector& coarse_gradient, const Vector& correction, bool accepted)>
      on_correction;
};

/// Applies `max_it` updates of `step` to w on `objective` (LevelOptimizer).
/// Each update is also added to `*moved` when given.
Vector level_optimizer(const FiniteSumObjective& objective, Vector w, int max_it, const LevelStep& step,
                       const CgConfig& cg, const LineSearchConfig& line_search, EvalCounter& counter, Rng& rng,
                       Vector* moved = nullptr);

/// V-cycle driver over a hierarchy of subsamples of one finite-sum objective.
class VCycle {
 public:
  VCycle(const FiniteSumObjective& objective, LevelConfig config, EvalCounter& counter, Rng& step_rng,
         MlvrObserver observer = {});

  /// Hierarchy used by subsequent cycles.
  void set_hierarchy(SampleHierarchy hierarchy);
  const SampleHierarchy& hierarchy() const { return hierarchy_; }
  std::size_t depth() const { return hierarchy_.depth(); }

  /// One V-cycle from the finest level.
  Vector operator()(const Vector& w) { return run(static_cast<int>(depth()), w, nullptr); }

  /// Cycle entered on `level` (1-based). For level < L `fine_gradient` must
  /// be grad H^{level+1}(w_in); on the finest level it must be null.
  Vector run(int level, const Vector& w_in, const Vector* fine_gradient);

 private:
  std::shared_ptr<const FiniteSumObjective> level_base(int level) const;

  const FiniteSumObjective& objective_;
  LevelConfig config_;
  EvalCounter& counter_;
  Rng& step_rng_;
  MlvrObserver observer_;
  SampleHierarchy hierarchy_;
  std::vector<std::shared_ptr<const FiniteSumObjective>> bases_;
};

/// Repeats V-cycles from w = 0 until F(w) - F* < tol or the budget is spent,
/// recording one trace entry per cycle. The hierarchy is redrawn before each
/// cycle (Resample::PerCycle) or once up front (Resample::Frozen).
Trace train_mlvr(const FiniteSumObjective& objective, const MlvrConfig& config, EvalCounter& counter,
                 MlvrObserver observer = {});

}  // namespace mlvr

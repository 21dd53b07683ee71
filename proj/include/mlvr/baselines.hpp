#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mlvr/objective.hpp"
#include "mlvr/solvers.hpp"
#include "mlvr/trace.hpp"

namespace mlvr {

enum class Method { GD, NewtonCG, SGD, SVRG, SARAH, SSN, MLVR };

const char* to_string(Method method);
Method method_from_string(const std::string& name);

struct BaselineConfig {
  Method method = Method::GD;
  /// Fixed step; nullopt selects backtracking line search (GD, Newton, SSN).
  std::optional<double> step_size;
  /// Inner loop length m for SVRG/SARAH, steps per record for SGD. 0 means
  /// one pass (m = n).
  Index inner_iters = 0;
  /// |S| for the sub-sampled Hessian of SSN.
  Index hessian_subset_size = 0;
  /// SSN redraws S every iteration; false keeps the first draw.
  bool resample_hessian_subset = true;
  std::uint64_t seed = 0;
  CgConfig cg;
  LineSearchConfig line_search;
  RunControl control;

  void validate(Index n_samples) const;
};

Trace run_gd(const FiniteSumObjective& objective, const BaselineConfig& cfg, EvalCounter& counter);
Trace run_newton_cg(const FiniteSumObjective& objective, const BaselineConfig& cfg, EvalCounter& counter);
Trace run_sgd(const FiniteSumObjective& objective, const BaselineConfig& cfg, EvalCounter& counter);
Trace run_svrg(const FiniteSumObjective& objective, const BaselineConfig& cfg, EvalCounter& counter);
Trace run_sarah(const FiniteSumObjective& objective, const BaselineConfig& cfg, EvalCounter& counter);
Trace run_ssn(const FiniteSumObjective& objective, const BaselineConfig& cfg, EvalCounter& counter);

/// Dispatches on cfg.method (anything but MLVR).
Trace run_baseline(const FiniteSumObjective& objective, const BaselineConfig& cfg, EvalCounter& counter);

/// grad f_t(w) - grad f_t(snapshot) + full_grad.
Vector svrg_direction(const FiniteSumObjective& objective, const Vector& w, const Vector& snapshot,
                      const Vector& full_grad, Index t, EvalCounter& counter);

/// Armijo step along p; falls back to the smallest trial step when the
/// search exhausts its backtracks.
double armijo_step_or_fallback(const FiniteSumObjective& objective, const Vector& w, const Vector& p,
                               const Vector& g, const LineSearchConfig& cfg);

/// Newton direction -H(w)^{-1} g by matrix-free CG on `objective`'s Hessian.
Vector newton_direction(const FiniteSumObjective& objective, const Vector& w, const Vector& g,
                        const CgConfig& cg, EvalCounter& counter);

}  // namespace mlvr

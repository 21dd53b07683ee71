#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "mlvr/common.hpp"

namespace mlvr {

struct CgConfig {
  int max_iters = 10;
  /// Stop once ||r|| <= rel_tol * ||b||.
  double rel_tol = 1e-10;

  void validate() const {
    if (max_iters < 1) throw ConfigError("CgConfig: max_iters must be >= 1");
    if (!(rel_tol >= 0.0)) throw ConfigError("CgConfig: rel_tol must be >= 0");
  }
};

struct CgReport {
  int iterations = 0;
  int operator_applications = 0;
  double relative_residual = 0.0;
};

/// Conjugate gradient on A x = b from x0 = 0, with A available only as an
/// operator. A must be symmetric positive definite.
template <typename Scalar, typename Operator>
VectorX<Scalar> cg_solve(Operator&& apply_A, const VectorX<Scalar>& b, const CgConfig& cfg,
                         CgReport* report = nullptr) {
  cfg.validate();
  const Index n = b.size();
  VectorX<Scalar> x = VectorX<Scalar>::Zero(n);
  if (!b.allFinite()) throw NumericalError("cg_solve: right-hand side is not finite");

  const Scalar b_norm = b.norm();
  CgReport local;
  if (b_norm == Scalar(0)) {
    if (report) *report = local;
    return x;
  }

  VectorX<Scalar> r = b;
  VectorX<Scalar> p = r;
  Scalar rr = r.squaredNorm();
  const Scalar stop = static_cast<Scalar>(cfg.rel_tol) * b_norm;

  for (int k = 0; k < cfg.max_iters; ++k) {
    const VectorX<Scalar> Ap = apply_A(p);
    ++local.operator_applications;
    const Scalar pAp = p.dot(Ap);
    if (!std::isfinite(pAp)) throw NumericalError("cg_solve: non-finite curvature <p, Ap>");
    if (pAp <= Scalar(0)) {
      throw BreakdownError("cg_solve: <p, Ap> = " + std::to_string(static_cast<double>(pAp)) +
                           " <= 0, operator is not positive definite");
    }
    const Scalar alpha = rr / pAp;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * Ap;
    const Scalar rr_next = r.squaredNorm();
    local.iterations = k + 1;
    if (!std::isfinite(rr_next) || !x.allFinite()) throw NumericalError("cg_solve: iterate is not finite");
    if (rr_next == Scalar(0) || std::sqrt(rr_next) <= stop) {
      rr = rr_next;
      break;
    }
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  local.relative_residual = static_cast<double>(std::sqrt(rr) / b_norm);
  if (report) *report = local;
  return x;
}

struct LineSearchConfig {
  double init_step = 1.0;
  double armijo_c = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 50;

  void validate() const {
    if (!(init_step > 0.0)) throw ConfigError("LineSearchConfig: init_step must be positive");
    if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw ConfigError("LineSearchConfig: armijo_c must lie in (0,1)");
    if (!(shrink > 0.0 && shrink < 1.0)) throw ConfigError("LineSearchConfig: shrink must lie in (0,1)");
    if (max_backtracks < 0) throw ConfigError("LineSearchConfig: max_backtracks must be >= 0");
  }
};

/// Largest alpha = init_step * shrink^k, k = 0..max_backtracks, with
///   f(w + alpha p) <= f(w) + armijo_c * alpha * <g, p>.
/// `f` is any callable VectorX<Scalar> -> Scalar. Throws NotDescentError when
/// <g, p> >= 0 and LineSearchError when no trial step is accepted.
template <typename Scalar, typename Function>
Scalar backtracking_line_search(Function&& f, const VectorX<Scalar>& w, const VectorX<Scalar>& p,
                                const VectorX<Scalar>& g, const LineSearchConfig& cfg) {
  cfg.validate();
  const Scalar slope = g.dot(p);
  if (!(slope < Scalar(0))) {
    throw NotDescentError("line search: <g, p> = " + std::to_string(static_cast<double>(slope)) +
                          " is not negative");
  }
  const Scalar f0 = f(w);
  Scalar alpha = static_cast<Scalar>(cfg.init_step);
  const auto c = static_cast<Scalar>(cfg.armijo_c);
  for (int k = 0; k <= cfg.max_backtracks; ++k) {
    const Scalar trial = f(VectorX<Scalar>(w + alpha * p));
    if (trial <= f0 + c * alpha * slope) return alpha;
    if (k < cfg.max_backtracks) alpha *= static_cast<Scalar>(cfg.shrink);
  }
  throw LineSearchError("line search: Armijo condition not met after " +
                            std::to_string(cfg.max_backtracks) + " backtracks",
                        static_cast<double>(alpha));
}

}  // namespace mlvr

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "mlvr/common.hpp"
#include "mlvr/objective.hpp"

namespace mlvr {

struct TraceRecord {
  double effective_grads = 0.0;
  double loss_gap = 0.0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

enum class RunStatus { Converged, Budget, Diverged };

const char* to_string(RunStatus status);

struct TraceMetadata {
  std::string method;
  std::string dataset;
  std::uint64_t seed = 0;
  std::string config_digest;
};

/// Convergence history: one (cost, F(w) - F*) record per outer iteration,
/// starting with the initial guess.
struct Trace {
  std::vector<TraceRecord> records;
  /// Iterate after each record; filled only when RunControl::keep_iterates.
  std::vector<Vector> iterates;
  Vector final_iterate;
  TraceMetadata metadata;
  RunStatus status = RunStatus::Budget;
  std::string message;
};

/// Thrown when a run produces a non-finite iterate or loss, or an inner
/// solver breaks down. Carries the trace recorded so far.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, Trace trace) : Error(what), trace_(std::move(trace)) {}
  const Trace& trace() const { return trace_; }

 private:
  Trace trace_;
};

struct RunControl {
  double f_star = 0.0;
  double tol = 1e-9;
  /// Maximum effective gradient evaluations. Iterations that would exceed
  /// it are rolled back and not recorded.
  double budget = 1000.0;
  bool keep_iterates = false;
  std::size_t max_iterations = 10'000'000;
};

/// Shared outer loop. `step` advances the iterate in place by one outer
/// iteration; `monitor` supplies the uncharged loss used for the gap.
Trace run_loop(const FiniteSumObjective& monitor, Vector w0, const EvalCounter& counter,
               const RunControl& control, const std::function<void(Vector&)>& step);

/// CSV with header `grad_calls,loss_diff`; values in shortest round-trip
/// decimal form.
void write_csv(std::ostream& out, const Trace& trace);
void write_csv(const std::string& path, const Trace& trace);
std::vector<TraceRecord> read_csv(std::istream& in);
std::vector<TraceRecord> read_csv(const std::string& path);

}  // namespace mlvr

#include "mlvr/trace.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace mlvr {

const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Converged:
      return "converged";
    case RunStatus::Budget:
      return "budget";
    case RunStatus::Diverged:
      return "diverged";
  }
  return "unknown";
}

Trace run_loop(const FiniteSumObjective& monitor, Vector w0, const EvalCounter& counter,
               const RunControl& control, const std::function<void(Vector&)>& step) {
  Trace trace;
  Vector w = std::move(w0);
  auto record = [&](const Vector& point) {
    trace.records.push_back({counter.effective_grads(), monitor.value(point) - control.f_star});
    if (control.keep_iterates) trace.iterates.push_back(point);
  };
  auto diverged = [&](const std::string& why) {
    trace.status = RunStatus::Diverged;
    trace.message = why;
    trace.final_iterate = w;
    return DivergenceError(why, trace);
  };

  record(w);
  if (!std::isfinite(trace.records.back().loss_gap)) throw diverged("initial loss is not finite");

  std::size_t iteration = 0;
  while (true) {
    if (trace.records.back().loss_gap < control.tol) {
      trace.status = RunStatus::Converged;
      break;
    }
    if (counter.effective_grads() >= control.budget || iteration >= control.max_iterations) {
      trace.status = RunStatus::Budget;
      break;
    }
    ++iteration;

    Vector saved = w;
    const double cost_before = counter.effective_grads();
    try {
      step(w);
    } catch (const NumericalError& e) {
      w = saved;
      throw diverged(e.what());
    }
    if (counter.effective_grads() > control.budget) {
      w = std::move(saved);
      trace.status = RunStatus::Budget;
      break;
    }
    if (!w.allFinite()) throw diverged("iterate is not finite");
    if (counter.effective_grads() == cost_before) continue;
    record(w);
    if (!std::isfinite(trace.records.back().loss_gap)) throw diverged("loss is not finite");
  }
  trace.final_iterate = std::move(w);
  return trace;
}

namespace {

// Plain decimal digits, shortest form that round-trips.
std::string decimal(double v) {
  if (!std::isfinite(v)) return v != v ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[400];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_csv(std::ostream& out, const Trace& trace) {
  out << "grad_calls,loss_diff\n";
  for (const auto& r : trace.records) out << decimal(r.effective_grads) << ',' << decimal(r.loss_gap) << '\n';
}

void write_csv(const std::string& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_csv(out, trace);
  if (!out) throw Error("error writing '" + path + "'");
}

std::vector<TraceRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "grad_calls,loss_diff") {
    throw ParseError(1, "expected header 'grad_calls,loss_diff'");
  }
  std::vector<TraceRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError(line_no, "expected two columns");
    TraceRecord r;
    const char* begin = line.data();
    const char* end = line.data() + line.size();
    auto a = std::from_chars(begin, begin + comma, r.effective_grads);
    auto b = std::from_chars(begin + comma + 1, end, r.loss_gap);
    if (a.ec != std::errc() || a.ptr != begin + comma || b.ec != std::errc() || b.ptr != end) {
      throw ParseError(line_no, "non-numeric field");
    }
    records.push_back(r);
  }
  return records;
}

std::vector<TraceRecord> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_csv(in);
}

}  // namespace mlvr

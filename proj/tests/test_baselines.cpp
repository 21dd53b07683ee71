#include <doctest.h>

#include <Eigen/Dense>

#include "mlvr/baselines.hpp"
#include "support.hpp"

using namespace mlvr;
namespace t = mlvr::testing;

namespace {

/// f1 = 0.5 (w - 1)^2, f2 = 0.5 (w + 3)^2.
t::SeparableQuadratic quadratic_toy() { return t::SeparableQuadratic({t::vec({1}), t::vec({-3})}); }

BaselineConfig config(Method m) {
  BaselineConfig cfg;
  cfg.method = m;
  cfg.control.f_star = 0.0;
  cfg.control.budget = 200.0;
  return cfg;
}

void check_trace_shape(const Trace& trace, const RunControl& control) {
  REQUIRE(!trace.records.empty());
  CHECK(trace.records.front().effective_grads == 0.0);
  for (std::size_t i = 1; i < trace.records.size(); ++i) {
    CHECK(trace.records[i].effective_grads > trace.records[i - 1].effective_grads);
  }
  CHECK(trace.records.back().effective_grads <= control.budget);
  if (trace.status == RunStatus::Converged) CHECK(trace.records.back().loss_gap < control.tol);
}

}  // namespace

TEST_CASE("svrg_direction at the snapshot is the full gradient") {
  std::mt19937_64 rng(1);
  const SparseDataset data = t::random_dataset(10, 3, rng);
  const LogisticObjective f(data, 0.1);
  EvalCounter c(10);
  const Vector w = t::random_vector(3, rng);
  const Vector full = f.gradient(w, c);
  for (Index k = 0; k < 10; ++k) CHECK(svrg_direction(f, w, w, full, k, c) == full);
}

TEST_CASE("svrg_direction on the quadratic toy") {
  const auto f = quadratic_toy();
  EvalCounter c(2);
  const Vector zero = Vector::Zero(1);
  const Vector full = f.gradient(zero, c);
  CHECK(full[0] == 1.0);
  const Vector dir = svrg_direction(f, zero, zero, full, 0, c);
  CHECK(dir[0] == 1.0);
  CHECK((zero - 0.1 * dir)[0] == doctest::Approx(-0.1));
}

TEST_CASE("SVRG estimator is unbiased: average over all t equals the full gradient") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 1 + static_cast<Index>(rng() % 20);
    const Index d = 1 + static_cast<Index>(rng() % 5);
    const SparseDataset data = t::random_dataset(n, d, rng);
    const LogisticObjective f(data, 1.0 / double(n));
    EvalCounter c(n);
    const Vector w = t::random_vector(d, rng);
    const Vector snap = t::random_vector(d, rng);
    const Vector mu = f.gradient(snap, c);
    Vector mean = Vector::Zero(d);
    for (Index k = 0; k < n; ++k) mean += svrg_direction(f, w, snap, mu, k, c);
    mean /= double(n);
    CHECK((mean - f.gradient(w, c)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("SVRG cost accounting: one full gradient plus 2/n per inner step") {
  const auto f = quadratic_toy();
  BaselineConfig cfg = config(Method::SVRG);
  cfg.step_size = 0.1;
  cfg.inner_iters = 3;
  cfg.control.budget = 2.0 + 6.0 / 2.0;
  EvalCounter c(2);
  const Trace trace = run_svrg(f, cfg, c);
  REQUIRE(trace.records.size() >= 2);
  CHECK(trace.records[1].effective_grads == 4.0);
}

TEST_CASE("SARAH recursion on the quadratic toy") {
  const auto f = quadratic_toy();
  BaselineConfig cfg = config(Method::SARAH);
  cfg.step_size = 0.1;
  cfg.inner_iters = 2;
  cfg.control.keep_iterates = true;
  cfg.control.f_star = f.value(t::vec({-1}));
  cfg.control.budget = 2.0;
  EvalCounter c(2);
  const Trace trace = run_sarah(f, cfg, c);
  REQUIRE(trace.iterates.size() == 2);
  // w1 = -0.1; v = w1 - w0 + 1 = 0.9; w2 = w1 - 0.09 whichever sample is drawn.
  CHECK(trace.iterates[1][0] == doctest::Approx(-0.19).epsilon(1e-15));
}

TEST_CASE("SARAH first step is a full gradient step") {
  std::mt19937_64 rng(3);
  const SparseDataset data = t::random_dataset(15, 4, rng);
  const LogisticObjective f(data, 1.0 / 15);
  BaselineConfig cfg = config(Method::SARAH);
  cfg.step_size = 0.3;
  cfg.inner_iters = 1;
  cfg.control.keep_iterates = true;
  cfg.control.budget = 1.0;
  EvalCounter c(15);
  const Trace trace = run_sarah(f, cfg, c);
  REQUIRE(trace.iterates.size() == 2);
  EvalCounter scratch(15);
  CHECK(trace.iterates[1] == Vector(-0.3 * f.gradient(Vector::Zero(4), scratch)));
}

TEST_CASE("GD with line search solves a one-dimensional quadratic in one step") {
  const t::SeparableQuadratic f({t::vec({1}), t::vec({1})});
  BaselineConfig cfg = config(Method::GD);
  cfg.control.keep_iterates = true;
  EvalCounter c(2);
  const Trace trace = run_gd(f, cfg, c);
  CHECK(trace.status == RunStatus::Converged);
  REQUIRE(trace.iterates.size() == 2);
  CHECK(trace.iterates[1][0] == 1.0);
}

TEST_CASE("SGD on a single sample is gradient descent") {
  std::mt19937_64 rng(4);
  const SparseDataset data = t::random_dataset(1, 3, rng);
  const LogisticObjective f(data, 0.5);
  BaselineConfig cfg = config(Method::SGD);
  cfg.step_size = 0.2;
  cfg.control.keep_iterates = true;
  cfg.control.budget = 25.0;
  cfg.control.tol = 0.0;
  EvalCounter c1(1), c2(1);
  const Trace sgd = run_sgd(f, cfg, c1);
  cfg.method = Method::GD;
  const Trace gd = run_gd(f, cfg, c2);
  REQUIRE(sgd.iterates.size() == gd.iterates.size());
  for (std::size_t i = 0; i < sgd.iterates.size(); ++i) CHECK(sgd.iterates[i] == gd.iterates[i]);
}

TEST_CASE("Newton-CG step on the two-point toy matches a dense Newton oracle") {
  const SparseDataset data = t::two_point_toy();
  const LogisticObjective f(data, 0.5);
  BaselineConfig cfg = config(Method::NewtonCG);
  cfg.control.keep_iterates = true;
  cfg.control.budget = 3.0;  // one Newton step: 1 gradient + 2 Hvps
  cfg.control.tol = 0.0;
  EvalCounter c(2);
  const Trace trace = run_newton_cg(f, cfg, c);
  REQUIRE(trace.iterates.size() == 2);

  const Vector w0 = Vector::Zero(2);
  const Vector g0 = t::dense_gradient(data, {0, 1}, 0.5, w0);
  const Vector newton = w0 - t::dense_hessian(data, {0, 1}, 0.5, w0).ldlt().solve(g0);
  CHECK(t::relative_error(trace.iterates[1], newton) < 1e-12);
  const Vector g1 = t::dense_gradient(data, {0, 1}, 0.5, trace.iterates[1]);
  CHECK(g1.norm() <= 0.1 * g0.norm());
}

TEST_CASE("SSN with |S| = n is Newton-CG") {
  std::mt19937_64 rng(5);
  const SparseDataset data = t::random_dataset(30, 5, rng);
  const LogisticObjective f(data, 1.0 / 30);
  BaselineConfig cfg = config(Method::SSN);
  cfg.hessian_subset_size = 30;
  cfg.control.keep_iterates = true;
  cfg.control.tol = 0.0;
  cfg.control.budget = 40.0;
  EvalCounter c1(30), c2(30);
  const Trace ssn = run_ssn(f, cfg, c1);
  cfg.method = Method::NewtonCG;
  const Trace newton = run_newton_cg(f, cfg, c2);
  REQUIRE(ssn.iterates.size() == newton.iterates.size());
  for (std::size_t i = 0; i < ssn.iterates.size(); ++i) CHECK(ssn.iterates[i] == newton.iterates[i]);
}

TEST_CASE("SSN on a quadratic converges in one step for any Hessian sample") {
  const t::SeparableQuadratic f({t::vec({2, -1}), t::vec({2, -1}), t::vec({2, -1}), t::vec({2, -1})});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    BaselineConfig cfg = config(Method::SSN);
    cfg.hessian_subset_size = 1 + static_cast<Index>(seed % 4);
    cfg.seed = seed;
    cfg.control.keep_iterates = true;
    EvalCounter c(4);
    const Trace trace = run_ssn(f, cfg, c);
    CHECK(trace.status == RunStatus::Converged);
    REQUIRE(trace.iterates.size() == 2);
    CHECK(trace.iterates[1] == t::vec({2, -1}));
    // 1 full gradient + one CG iteration over |S| samples.
    CHECK(trace.records[1].effective_grads == doctest::Approx(1.0 + cfg.hessian_subset_size / 4.0));
  }
}

TEST_CASE("baseline traces are monotone in cost, end at tol or budget, and are bit-reproducible") {
  std::mt19937_64 rng(6);
  const SparseDataset data = t::random_dataset(60, 6, rng);
  const LogisticObjective f(data, 1.0 / 60);
  for (Method m : {Method::GD, Method::NewtonCG, Method::SGD, Method::SVRG, Method::SARAH, Method::SSN}) {
    CAPTURE(to_string(m));
    BaselineConfig cfg = config(m);
    if (m == Method::SGD || m == Method::SVRG || m == Method::SARAH) cfg.step_size = 0.05;
    cfg.hessian_subset_size = 20;
    cfg.seed = 17;
    cfg.control.f_star = 0.0;
    cfg.control.tol = -1.0;  // never converges: exercise the budget path
    cfg.control.budget = 12.5;
    cfg.control.keep_iterates = true;
    EvalCounter c1(60), c2(60);
    const Trace a = run_baseline(f, cfg, c1);
    const Trace b = run_baseline(f, cfg, c2);
    check_trace_shape(a, cfg.control);
    CHECK(a.status == RunStatus::Budget);
    CHECK(a.records == b.records);
    CHECK(a.iterates == b.iterates);
    CHECK(a.final_iterate == a.iterates.back());
  }
}

TEST_CASE("budget of zero yields only the initial record") {
  const auto f = quadratic_toy();
  BaselineConfig cfg = config(Method::GD);
  cfg.control.budget = 0.0;
  EvalCounter c(2);
  const Trace trace = run_gd(f, cfg, c);
  CHECK(trace.records.size() == 1);
  CHECK(trace.status == RunStatus::Budget);
}

TEST_CASE("divergence carries the partial trace") {
  const auto f = quadratic_toy();
  BaselineConfig cfg = config(Method::GD);
  cfg.step_size = 3.0;
  cfg.control.budget = 1e6;
  cfg.control.f_star = f.value(t::vec({-1}));
  EvalCounter c(2);
  try {
    run_gd(f, cfg, c);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(e.trace().status == RunStatus::Diverged);
    CHECK(e.trace().records.size() > 10);
  }
}

TEST_CASE("invalid baseline configurations") {
  const auto f = quadratic_toy();
  EvalCounter c(2);
  BaselineConfig cfg = config(Method::SVRG);
  CHECK_THROWS_AS(run_svrg(f, cfg, c), ConfigError);  // no step size
  cfg = config(Method::SSN);
  CHECK_THROWS_AS(run_ssn(f, cfg, c), ConfigError);   // no subset size
  cfg.hessian_subset_size = 3;
  CHECK_THROWS_AS(run_ssn(f, cfg, c), ConfigError);   // |S| > n
  cfg = config(Method::GD);
  cfg.step_size = -1.0;
  CHECK_THROWS_AS(run_gd(f, cfg, c), ConfigError);
  CHECK(method_from_string("svrg") == Method::SVRG);
  CHECK_THROWS_AS(method_from_string("adam"), ConfigError);
}

#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "ocitune/error.hpp"
#include "ocitune/optimizer.hpp"

using namespace ocitune;
using namespace ocitune::testing;

namespace {

class LinearProblem : public LeastSquaresProblem {
 public:
  LinearProblem(Eigen::MatrixXd a, Eigen::VectorXd b) : a_(std::move(a)), b_(std::move(b)) {}
  std::size_t num_params() const override { return static_cast<std::size_t>(a_.cols()); }
  Residuals evaluate(const Eigen::VectorXd& x, bool with_jacobian) const override {
    Residuals r{a_ * x - b_, {}};
    if (with_jacobian) r.jacobian = a_;
    return r;
  }

 private:
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
};

// Rosenbrock as least squares; throws in the half plane x0 < -1.5 to
// exercise rejected steps.
class Rosenbrock : public LeastSquaresProblem {
 public:
  bool corrupt = false;
  std::size_t num_params() const override { return 2; }
  Residuals evaluate(const Eigen::VectorXd& x, bool with_jacobian) const override {
    if (x(0) < -1.5) fail(ErrorCode::RootOnUnitCircle, "outside the domain");
    Residuals r;
    r.r = Eigen::Vector2d(10.0 * (x(1) - x(0) * x(0)), 1.0 - x(0));
    if (with_jacobian) {
      r.jacobian.resize(2, 2);
      r.jacobian << -20.0 * x(0), 10.0, -1.0, 0.0;
      if (corrupt) r.jacobian(0, 1) *= 1.1;
    }
    return r;
  }
};

class Empty : public LeastSquaresProblem {
 public:
  std::size_t num_params() const override { return 0; }
  Residuals evaluate(const Eigen::VectorXd&, bool with_jacobian) const override {
    Residuals r{Eigen::VectorXd::Ones(3), {}};
    if (with_jacobian) r.jacobian.resize(3, 0);
    return r;
  }
};

}  // namespace

TEST_CASE("options validation") {
  OptimOptions o;
  CHECK_NOTHROW(o.validate());
  o.lm_up = 1.0;
  CHECK_THROWS_AS(o.validate(), Error);
  o = {};
  o.lm_down = 1.5;
  CHECK_THROWS_AS(o.validate(), Error);
  o = {};
  o.grad_tol = 0.0;
  CHECK_THROWS_AS(o.validate(), Error);
  o = {};
  o.multistart = 0;
  CHECK_THROWS_AS(o.validate(), Error);
}

TEST_CASE("linear least squares is solved exactly") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd a(20, 4);
  Eigen::VectorXd b(20);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = nd(rng);
  for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = nd(rng);
  const LinearProblem p(a, b);
  OptimOptions o;
  o.sd_iters = 0;
  o.lm_lambda0 = 1e-14;
  const OptimReport rep = minimize(p, Eigen::VectorXd::Zero(4), o);
  const Eigen::VectorXd exact = a.colPivHouseholderQr().solve(b);
  CHECK(rep.lm_iterations <= 2);
  CHECK(rep.termination == Termination::Gradient);
  CHECK((rep.theta - exact).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(rep.gradient_norm < 1e-10);
}

TEST_CASE("Rosenbrock converges with monotone accepted costs") {
  Rosenbrock p;
  const OptimReport rep = minimize(p, Eigen::Vector2d(-1.2, 1.0));
  CHECK(std::abs(rep.theta(0) - 1.0) < 1e-8);
  CHECK(std::abs(rep.theta(1) - 1.0) < 1e-8);
  CHECK(rep.cost < 1e-16);
  for (std::size_t k = 1; k < rep.cost_trace.size(); ++k) CHECK(rep.cost_trace[k] <= rep.cost_trace[k - 1]);
  CHECK(rep.sd_iterations > 0);

  const OptimReport again = minimize(p, Eigen::Vector2d(-1.2, 1.0));
  CHECK(again.theta == rep.theta);
  CHECK(again.cost_trace == rep.cost_trace);
}

TEST_CASE("evaluation failures") {
  Rosenbrock p;
  CHECK_THROWS_AS(minimize(p, Eigen::Vector2d(-2.0, 0.0)), Error);
  try {
    minimize(p, Eigen::Vector2d(-2.0, 0.0));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteCost);
  }
  OptimOptions o;
  o.multistart = 3;
  o.multistart_std = 1e-3;
  try {
    minimize_multistart(p, Eigen::Vector2d(-3.0, 0.0), o);
    FAIL("expected AllStartsFailed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AllStartsFailed);
  }
  // Starting next to the forbidden region: trial points inside it are rejected.
  const OptimReport rep = minimize(p, Eigen::Vector2d(-1.45, 2.0));
  CHECK(rep.cost < 1e-12);
}

TEST_CASE("multistart keeps the best start and is reproducible") {
  Rosenbrock p;
  OptimOptions o;
  o.multistart = 4;
  o.multistart_std = 0.3;
  o.seed = 9;
  const OptimReport a = minimize_multistart(p, Eigen::Vector2d(-1.2, 1.0), o);
  const OptimReport b = minimize_multistart(p, Eigen::Vector2d(-1.2, 1.0), o);
  CHECK(a.cost < 1e-16);
  CHECK(a.theta == b.theta);
  CHECK(a.start_index == b.start_index);
}

TEST_CASE("gradient audit") {
  Rosenbrock p;
  CHECK(audit_gradient(p, Eigen::Vector2d(0.3, -0.7)) < 1e-7);
  p.corrupt = true;
  CHECK(audit_gradient(p, Eigen::Vector2d(0.3, -0.7)) > 1e-2);
  CHECK(audit_gradient(Empty{}, Eigen::VectorXd(0)) == 0.0);
  const OptimReport rep = minimize(Empty{}, Eigen::VectorXd(0));
  CHECK(rep.termination == Termination::Gradient);
  CHECK(rep.cost == 3.0);
}

TEST_CASE("default initialization") {
  const OciModel model{ControllerStructure::pid(2), diagonal_spec()};
  const Theta t = default_init(model);
  ParamP want(12);
  want << 0.1, -0.05, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.1, -0.05, 0.0;
  CHECK(t.P == want);
  CHECK(t.eta == ParamEta::Zero(2));
  const TransferMatrix td = build_refmodel(model.reference, t.eta);
  CHECK(td(0, 0).gain() == doctest::Approx(0.08));
  CHECK(td(0, 0).zeros().empty());
  CHECK(td(1, 1).gain() == doctest::Approx(0.12));
  const Theta pi = default_init({ControllerStructure::pi(2), block_spec()});
  CHECK(pi.P(0) == 0.1);
  CHECK(pi.P(1) == -0.05);
  CHECK(pi.P(6) == 0.1);
  CHECK(pi.eta.size() == 3);
}

TEST_CASE("OCI least-squares adapter scales residuals") {
  const OciModel model{ControllerStructure::pid(2), block_spec()};
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  Signal u(2, 80), y(2, 80);
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    u.data()[k] = nd(rng);
    y.data()[k] = nd(rng);
  }
  const OciLeastSquares p(model, u, y, 5);
  const Eigen::VectorXd x = default_init(model).stacked();
  const Residuals r = p.evaluate(x, true);
  CHECK(r.r.size() == 150);
  CHECK(r.r.squaredNorm() == doctest::Approx(cost_VNF(p.split(x), model, u, y, 5)));
  CHECK(r.jacobian.rows() == 150);
  CHECK(audit_gradient(p, x) < 1e-5);
  CHECK_THROWS_AS(OciLeastSquares(model, u, y, 80), Error);
}

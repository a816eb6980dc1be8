#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "ocitune/error.hpp"
#include "ocitune/predictor.hpp"

using namespace ocitune;
using namespace ocitune::testing;

namespace {

Signal gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Signal s(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index t = 0; t < cols; ++t) s(i, t) = nd(rng);
  return s;
}

// PID(2) parameters with every controller entry populated and det B stable.
ParamP pid_params() {
  ParamP p(12);
  p << 0.6, -1.0, 0.44, 0.05, -0.02, 0.01, -0.03, 0.02, 0.0, 0.5, -0.7, 0.25;
  return p;
}

// PI(2) parameters with det B = (q - 1.3)(0.5 q - 0.2) plus a small coupling.
ParamP pi_unstable_params(double coupling) {
  ParamP p(8);
  p << 1.0, -1.3, coupling, 0.0, 0.0, coupling, 0.5, -0.2;
  return p;
}

double max_gap(const Signal& a, const Signal& b) { return (a - b).cwiseAbs().maxCoeff(); }

void check_jacobian(const OciModel& model, const Theta& theta, const Signal& u, const Signal& y,
                    std::size_t skip) {
  const auto res = filtered_error(theta, model, u, y, true, skip);
  REQUIRE(res.jacobian);
  const Eigen::MatrixXd& jac = *res.jacobian;
  const Eigen::VectorXd th = theta.stacked();
  const auto n = u.rows();
  REQUIRE(jac.rows() == u.cols() * n);
  REQUIRE(jac.cols() == th.size());
  auto stacked = [&](const Eigen::VectorXd& x) {
    const Signal e = filtered_error(Theta::split(x, model.controller.num_params()), model, u, y)
                         .eps_f;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(e.size());
    for (Eigen::Index t = static_cast<Eigen::Index>(skip); t < e.cols(); ++t)
      for (Eigen::Index i = 0; i < n; ++i) out(t * n + i) = e(i, t);
    return out;
  };
  for (Eigen::Index k = 0; k < th.size(); ++k) {
    const double h = 1e-6 * (1.0 + std::abs(th(k)));
    Eigen::VectorXd tp = th, tm = th;
    tp(k) += h;
    tm(k) -= h;
    const Eigen::VectorXd fd = (stacked(tp) - stacked(tm)) / (2 * h);
    const double gap = (fd - jac.col(k)).cwiseAbs().maxCoeff();
    const double mag = std::max(fd.cwiseAbs().maxCoeff(), 1e-3);
    INFO("column " << k << " gap " << gap << " magnitude " << mag);
    CHECK(gap <= 1e-5 * mag);
  }
}

}  // namespace

TEST_CASE("theta stacking round trip") {
  Theta t{ParamP::LinSpaced(4, 1.0, 4.0), eta_of({-0.5, 2.0})};
  const Eigen::VectorXd s = t.stacked();
  CHECK(s.size() == 6);
  CHECK(s(4) == -0.5);
  const Theta back = Theta::split(s, 4);
  CHECK(back.P == t.P);
  CHECK(back.eta == t.eta);
  CHECK_THROWS_AS(Theta::split(s, 7), Error);
}

TEST_CASE("predictor reproduces L_d C^{-1} on data it generated") {
  const OciModel model{ControllerStructure::pid(2), block_spec()};
  const Theta theta{pid_params(), eta_of({-0.4, 1.0, -0.8})};
  const TransferMatrix g =
      build_Ld(build_refmodel(model.reference, theta.eta)) *
      tm_inverse(build_controller(model.controller, theta.P));
  const Signal u = gaussian(2, 400, 3);
  const Signal y = simulate(g, u);

  const Signal y_hat = predict(theta, model, u);
  CHECK(max_gap(y_hat, y) < 1e-9 * (1.0 + y.cwiseAbs().maxCoeff()));
  CHECK(prediction_error(theta, model, u, y).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + y.cwiseAbs().maxCoeff()));

  // Stable D: the prefilter is the identity.
  const auto res = filtered_error(theta, model, u, y);
  CHECK(res.unstable_roots == 0);
  const Signal y2 = gaussian(2, 400, 4);
  CHECK(max_gap(filtered_error(theta, model, u, y2).eps_f, prediction_error(theta, model, u, y2)) < 1e-10);
  CHECK(res.cost < 1e-18);
}

TEST_CASE("filtered error matches a rational-arithmetic oracle when D is unstable") {
  const OciModel model{ControllerStructure::pi(2), diagonal_spec()};
  const Theta theta{pi_unstable_params(0.0), eta_of({-0.3, -0.5})};
  const Signal u = gaussian(2, 300, 5);
  const Signal y = gaussian(2, 300, 6);
  const auto res = filtered_error(theta, model, u, y);
  CHECK(res.unstable_roots == 1);

  const TransferMatrix ld = build_Ld(build_refmodel(model.reference, theta.eta));
  const RationalFunction f(Polynomial{1.0, -1.3}, Polynomial{-1.3, 1.0});
  TransferMatrix fg(2), fm(2);
  fg(0, 0) = ld(0, 0) * RationalFunction(Polynomial{1.0, -1.0}, Polynomial{1.0, -1.3}) * f;
  fg(1, 1) = ld(1, 1) * RationalFunction(Polynomial{1.0, -1.0}, Polynomial{0.5, -0.2}) * f;
  fm(0, 0) = f;
  fm(1, 1) = f;
  for (const auto& e : fg.grid())
    for (const Complex& pole : e.poles()) CHECK(std::abs(pole) < 1.0);
  const Signal want = simulate(fm, y) - simulate(fg, u);
  CHECK(max_gap(res.eps_f, want) < 1e-9 * (1.0 + want.cwiseAbs().maxCoeff()));
  CHECK(std::abs(res.cost - want.squaredNorm() / 300.0) < 1e-9 * res.cost);
}

TEST_CASE("all-pass prefilter has unit magnitude") {
  const auto fac = factor_unit_circle(Polynomial::from_real_roots(v({1.3, -2.0, 0.4}), 0.7));
  CHECK(fac.n_u == 2);
  for (double m : allpass_magnitude(fac.d_u, fac.d_u_star, 257)) CHECK(m == doctest::Approx(1.0).epsilon(1e-12));
  for (const Complex& r : poly_roots(fac.d_u_star)) CHECK(std::abs(r) < 1.0);
}

TEST_CASE("filtered error is causal") {
  const OciModel model{ControllerStructure::pi(2), diagonal_spec()};
  const Theta theta{pi_unstable_params(0.05), eta_of({-0.3, -0.5})};
  const Signal u = gaussian(2, 200, 7);
  const Signal y = gaussian(2, 200, 8);
  const Signal base = filtered_error(theta, model, u, y).eps_f;
  Signal u2 = u, y2 = y;
  u2(1, 100) += 3.0;
  y2(0, 120) -= 2.0;
  const Signal pu = filtered_error(theta, model, u2, y).eps_f;
  const Signal py = filtered_error(theta, model, u, y2).eps_f;
  // u enters through a strictly proper path.
  CHECK(max_gap(pu.leftCols(101), base.leftCols(101)) == 0.0);
  CHECK(max_gap(pu.col(101), base.col(101)) > 0.0);
  CHECK(max_gap(py.leftCols(120), base.leftCols(120)) == 0.0);
  CHECK(max_gap(py.col(120), base.col(120)) > 0.0);
}

TEST_CASE("analytic Jacobian agrees with finite differences") {
  const Signal u = gaussian(2, 250, 9);
  const Signal y = gaussian(2, 250, 10);
  SUBCASE("PID, block-triangular, stable D") {
    check_jacobian({ControllerStructure::pid(2), block_spec()},
                   {pid_params(), eta_of({-0.4, 1.0, -0.8})}, u, y, 0);
  }
  SUBCASE("PI, diagonal, one unstable root") {
    const OciModel model{ControllerStructure::pi(2), diagonal_spec()};
    const Theta theta{pi_unstable_params(0.05), eta_of({-0.3, -0.5})};
    REQUIRE(filtered_error(theta, model, u, y).unstable_roots == 1);
    check_jacobian(model, theta, u, y, 0);
  }
  SUBCASE("PID, mismatched model, two unstable roots, transient skip") {
    ParamP p = pid_params();
    p(2) = 0.9;   // C11 numerator 0.6 q^2 - q + 0.9: complex pair outside the circle
    const OciModel model{ControllerStructure::pid(2), mismatched_spec()};
    const Theta theta{p, eta_of({-0.2, 0.3})};
    REQUIRE(filtered_error(theta, model, u, y).unstable_roots == 2);
    check_jacobian(model, theta, u, y, 25);
  }
}

TEST_CASE("transient skip excludes leading samples") {
  const OciModel model{ControllerStructure::pid(2), block_spec()};
  const Theta theta{pid_params(), eta_of({-0.4, 1.0, -0.8})};
  const Signal u = gaussian(2, 100, 11);
  const Signal y = gaussian(2, 100, 12);
  const auto full = filtered_error(theta, model, u, y, true, 0);
  const auto cut = filtered_error(theta, model, u, y, true, 10);
  CHECK(cut.cost == doctest::Approx(full.eps_f.rightCols(90).squaredNorm() / 90.0));
  CHECK(cut.jacobian->topRows(20).cwiseAbs().maxCoeff() == 0.0);
  CHECK(max_gap(cut.jacobian->bottomRows(180), full.jacobian->bottomRows(180)) == 0.0);
  CHECK(cost_VNF(theta, model, u, y, 10) == cut.cost);
  CHECK_THROWS_AS(filtered_error(theta, model, u, y, false, 100), Error);
}

TEST_CASE("predictor rejects degenerate inputs") {
  const OciModel model{ControllerStructure::pi(2), diagonal_spec()};
  const Signal u = gaussian(2, 50, 13);
  ParamP drop(8);
  drop << 1.0, 0.3, 1.0, -0.2, 1.0, 0.1, 1.0, 0.4;  // leading coefficient of det B cancels
  try {
    filtered_error({drop, eta_of({0.0, 0.0})}, model, u, u);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularController);
  }
  CHECK_THROWS_AS(filtered_error({ParamP::Zero(7), eta_of({0.0, 0.0})}, model, u, u), Error);
  CHECK_THROWS_AS(filtered_error({pi_unstable_params(0.0), eta_of({0.0, 0.0})}, model, u,
                                 gaussian(2, 49, 1)),
                  Error);
}

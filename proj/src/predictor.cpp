#include "ocitune/predictor.hpp"

#include <cmath>

#include "ocitune/error.hpp"
#include "ocitune/filter.hpp"

namespace ocitune {

namespace {

constexpr double kLeadingTolerance = 1e-10;

/// (1/den) * num(q) * x for a polynomial matrix num.
Signal matrix_filter(const Grid<Polynomial>& num, const Polynomial& den, const Signal& x) {
  Signal out = Signal::Zero(static_cast<Eigen::Index>(num.rows()), x.cols());
  for (std::size_t i = 0; i < num.rows(); ++i) {
    auto row = channel(out, static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < num.cols(); ++j)
      fir_accumulate(num(i, j), den.degree(), channel(x, static_cast<Eigen::Index>(j)), row);
    all_pole_inplace(den, row);
  }
  return out;
}

/// (b/a) applied to every channel.
Signal scalar_filter(const Polynomial& b, const Polynomial& a, const Signal& x) {
  Signal out = Signal::Zero(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    auto row = channel(out, i);
    fir_accumulate(b, a.degree(), channel(x, i), row);
    all_pole_inplace(a, row);
  }
  return out;
}

Grid<Polynomial> values(const Grid<PolyGrad>& g) {
  Grid<Polynomial> out(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) out(i, j) = g(i, j).value;
  return out;
}

Grid<Polynomial> gradient(const Grid<PolyGrad>& g, std::size_t k) {
  Grid<Polynomial> out(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) out(i, j) = g(i, j).grad[k];
  return out;
}

void require_proper(const Grid<Polynomial>& num, const Polynomial& den, const char* what) {
  for (const auto& p : num)
    if (!p.is_zero() && p.degree() > den.degree())
      fail(ErrorCode::ImproperPredictor, std::string(what) + " has numerator degree " +
                                             std::to_string(p.degree()) + " above denominator degree " +
                                             std::to_string(den.degree()));
}

void check_shapes(const Theta& theta, const OciModel& model, const Signal& u, const Signal* y) {
  const auto n = static_cast<Eigen::Index>(model.controller.dim());
  if (model.reference.dim() != model.controller.dim())
    fail(ErrorCode::DimensionMismatch, "controller and reference model dimensions differ");
  if (theta.P.size() != static_cast<Eigen::Index>(model.controller.num_params()) ||
      theta.eta.size() != static_cast<Eigen::Index>(model.reference.num_params()))
    fail(ErrorCode::DimensionMismatch, "parameter vector length does not match the model");
  if (u.rows() != n || (y && (y->rows() != n || y->cols() != u.cols())))
    fail(ErrorCode::DimensionMismatch, "signal shape does not match the model");
}

/// Controller side shared by every evaluation: N_bar = c_reduced adj(B) and
/// D = det B with a degree check against the nominal degree.
struct ControllerSide {
  Grid<PolyGrad> n_bar;
  Polynomial D;
  std::vector<double> delta;
};

ControllerSide controller_side(const ControllerStructure& s, const ParamP& p) {
  const std::size_t np = s.num_params();
  const Grid<PolyGrad> b = numerator_matrix_dual(s, p);
  const PolyGrad one(Polynomial{1.0}, np);
  ControllerSide out;
  const Grid<PolyGrad> adj = adjugate(b, one);
  out.n_bar = Grid<PolyGrad>(adj.rows(), adj.cols());
  for (std::size_t i = 0; i < adj.rows(); ++i)
    for (std::size_t j = 0; j < adj.cols(); ++j)
      out.n_bar(i, j) = s.reduced_denominator() * adj(i, j);
  out.delta = delta_of_P(s, p);
  double scale = 0.0;
  for (double v : out.delta) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) fail(ErrorCode::SingularController, "det B(q,P) vanishes identically");
  if (std::abs(out.delta.front()) <= kLeadingTolerance * scale)
    fail(ErrorCode::SingularController, "leading coefficient of det B(q,P) vanished");
  out.D = Polynomial(out.delta);
  return out;
}

}  // namespace

Eigen::VectorXd Theta::stacked() const {
  Eigen::VectorXd out(P.size() + eta.size());
  out << P, eta;
  return out;
}

Theta Theta::split(const Eigen::VectorXd& theta, std::size_t num_p) {
  const auto np = static_cast<Eigen::Index>(num_p);
  if (np > theta.size()) fail(ErrorCode::DimensionMismatch, "parameter vector too short");
  return {theta.head(np), theta.tail(theta.size() - np)};
}

Signal predict(const Theta& theta, const OciModel& model, const Signal& u) {
  check_shapes(theta, model, u, nullptr);
  const ControllerSide cs = controller_side(model.controller, theta.P);
  const LdPolynomialForm ld = ld_polynomial_form(model.reference, theta.eta);
  const Grid<Polynomial> n_bar = values(cs.n_bar);
  const Grid<Polynomial> q_bar = values(ld.Q);
  require_proper(n_bar, cs.D, "N/D");
  require_proper(q_bar, ld.e.value, "(q-1) L_d");
  return matrix_filter(q_bar, ld.e.value, matrix_filter(n_bar, cs.D, u));
}

Signal prediction_error(const Theta& theta, const OciModel& model, const Signal& u, const Signal& y) {
  check_shapes(theta, model, u, &y);
  return y - predict(theta, model, u);
}

PredictionResult filtered_error(const Theta& theta, const OciModel& model, const Signal& u,
                                const Signal& y, bool with_jacobian, std::size_t transient_skip) {
  check_shapes(theta, model, u, &y);
  const auto n = static_cast<Eigen::Index>(model.controller.dim());
  const Eigen::Index len = u.cols();
  if (static_cast<Eigen::Index>(transient_skip) >= len)
    fail(ErrorCode::InvalidArgument, "transient skip covers the whole record");

  const ControllerSide cs = controller_side(model.controller, theta.P);
  const FactoredDenominator fac = factor_unit_circle(cs.D);
  const Polynomial a = fac.d_s * fac.d_u_star;
  const LdPolynomialForm ld = ld_polynomial_form(model.reference, theta.eta);
  const Grid<Polynomial> n_bar = values(cs.n_bar);
  const Grid<Polynomial> q_bar = values(ld.Q);
  const Polynomial& e = ld.e.value;
  require_proper(n_bar, a, "N/(D_S D_U*)");
  require_proper(q_bar, e, "(q-1) L_d");

  const Signal s = matrix_filter(n_bar, a, u);
  const Signal y_hat = matrix_filter(q_bar, e, s);
  const Signal fy = scalar_filter(fac.d_u, fac.d_u_star, y);

  PredictionResult out;
  out.eps_f = fy - y_hat;
  out.unstable_roots = fac.n_u;
  const auto skip = static_cast<Eigen::Index>(transient_skip);
  const auto scored = out.eps_f.rightCols(len - skip);
  out.cost = scored.squaredNorm() / static_cast<double>(len - skip);
  if (!std::isfinite(out.cost)) fail(ErrorCode::NonFiniteCost, "filtered prediction error is not finite");
  if (!with_jacobian) return out;

  const std::size_t np = model.controller.num_params();
  const std::size_t ne = model.reference.num_params();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(len * n, static_cast<Eigen::Index>(np + ne));
  auto put = [&](std::size_t col, const Signal& d) {
    for (Eigen::Index t = skip; t < len; ++t)
      for (Eigen::Index i = 0; i < n; ++i) jac(t * n + i, static_cast<Eigen::Index>(col)) = d(i, t);
  };

  // Sensitivities to the split coefficients delta_bar = [D_S coeffs; u_1..u_nU].
  const int ns = fac.d_s.degree(), nu = fac.n_u;
  std::vector<Signal> by_split;
  by_split.reserve(static_cast<std::size_t>(ns + 1 + nu));
  for (int i = 0; i <= ns; ++i)
    by_split.push_back(scalar_filter(Polynomial::monomial(ns - i), fac.d_s, y_hat));
  for (int i = 1; i <= nu; ++i)
    by_split.push_back(scalar_filter(Polynomial::monomial(nu - i), fac.d_u_star, y) -
                       scalar_filter(Polynomial::monomial(i), fac.d_u_star, out.eps_f));

  const std::vector<double> ds_coeffs = fac.d_s.coeffs();
  const std::vector<double> du_tail(fac.d_u.coeffs().begin() + 1, fac.d_u.coeffs().end());
  const Eigen::MatrixXd jh = sylvester_jacobian(ds_coeffs, du_tail);
  const Eigen::MatrixXd jd = delta_jacobian(model.controller, theta.P);
  if (jh.rows() != jd.rows() || jh.rows() != jh.cols())
    fail(ErrorCode::SylvesterSingular, "split coefficient map is not square");
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(jh);
  if (std::abs(lu.determinant()) < 1e-300)
    fail(ErrorCode::SylvesterSingular, "D_S and D_U share a root");
  const Eigen::MatrixXd dsplit = lu.solve(jd);

  for (std::size_t k = 0; k < np; ++k) {
    Signal d = -matrix_filter(q_bar, e, matrix_filter(gradient(cs.n_bar, k), a, u));
    for (std::size_t m = 0; m < by_split.size(); ++m) {
      const double w = dsplit(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
      if (w != 0.0) d += w * by_split[m];
    }
    put(k, d);
  }
  for (std::size_t m = 0; m < ne; ++m) {
    const Signal dq = matrix_filter(gradient(ld.Q, m), e, s);
    const Signal de = scalar_filter(ld.e.grad[m], e, y_hat);
    put(np + m, de - dq);
  }
  out.jacobian = std::move(jac);
  return out;
}

double cost_VNF(const Theta& theta, const OciModel& model, const Signal& u, const Signal& y,
                std::size_t transient_skip) {
  return filtered_error(theta, model, u, y, false, transient_skip).cost;
}

Eigen::MatrixXd jacobian_eps_F(const Theta& theta, const OciModel& model, const Signal& u,
                               const Signal& y, std::size_t transient_skip) {
  return *filtered_error(theta, model, u, y, true, transient_skip).jacobian;
}

std::vector<double> allpass_magnitude(const Polynomial& d_u, const Polynomial& d_u_star,
                                      std::size_t points) {
  std::vector<double> out;
  out.reserve(points);
  const double pi = std::acos(-1.0);
  for (std::size_t k = 0; k < points; ++k) {
    const double w = points > 1 ? pi * static_cast<double>(k) / static_cast<double>(points - 1) : 0.0;
    const Complex z = std::polar(1.0, w);
    out.push_back(std::abs(d_u(z) / d_u_star(z)));
  }
  return out;
}

}  // namespace ocitune

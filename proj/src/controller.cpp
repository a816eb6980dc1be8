#include "ocitune/controller.hpp"

#include <random>
#include <sstream>

#include "ocitune/error.hpp"

namespace ocitune {

namespace {

void check_length(const ControllerStructure& s, const ParamP& p) {
  if (static_cast<std::size_t>(p.size()) != s.num_params())
    fail(ErrorCode::DimensionMismatch, "controller parameter vector has length " +
                                           std::to_string(p.size()) + ", expected " +
                                           std::to_string(s.num_params()));
}

Grid<Polynomial> numerator_from_slots(std::size_t n, const std::vector<ControllerStructure::Slot>& slots,
                                      const ParamP& p) {
  Grid<Polynomial> b(n, n, Polynomial());
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const auto& sl = slots[k];
    b(sl.row, sl.col) += Polynomial::monomial(sl.power, p(static_cast<Eigen::Index>(k)));
  }
  return b;
}

}  // namespace

ControllerStructure::ControllerStructure(Polynomial denominator, Grid<int> numerator_degree)
    : c_(std::move(denominator)), degree_(std::move(numerator_degree)) {
  if (degree_.rows() == 0 || degree_.rows() != degree_.cols())
    fail(ErrorCode::DimensionMismatch, "controller degree table must be square and nonempty");
  if (c_.is_zero() || c_.degree() < 1)
    fail(ErrorCode::InvalidArgument, "controller denominator must have degree >= 1");
  if (multiplicity_at_one(c_) < 1)
    fail(ErrorCode::InvalidArgument,
         "controller denominator " + c_.str() + " lacks the integrator factor (q - 1)");
  const Deflation d = deflate_at_one(c_, 1);
  c_reduced_ = d.quotient;

  for (std::size_t i = 0; i < degree_.rows(); ++i) {
    for (std::size_t j = 0; j < degree_.cols(); ++j) {
      const int deg = degree_(i, j);
      if (deg < -1) fail(ErrorCode::InvalidArgument, "numerator degree must be >= -1");
      if (deg > c_.degree())
        fail(ErrorCode::InvalidArgument, "controller entry would be improper");
      for (int pw = deg; pw >= 0; --pw) slots_.push_back({i, j, pw});
    }
  }

  // Generic degree of det B: the maximum over a few random parameter draws.
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  for (int trial = 0; trial < 3; ++trial) {
    ParamP p(static_cast<Eigen::Index>(slots_.size()));
    for (Eigen::Index k = 0; k < p.size(); ++k) p(k) = u(rng) * ((k % 2) ? -1.0 : 1.0);
    const Polynomial det =
        determinant(numerator_from_slots(dim(), slots_, p), Polynomial{1.0});
    if (!det.is_zero()) nominal_degree_ = std::max(nominal_degree_, det.degree());
  }
}

ControllerStructure ControllerStructure::pid(std::size_t n) {
  return ControllerStructure(Polynomial{1.0, -1.0, 0.0}, Grid<int>(n, n, 2));
}

ControllerStructure ControllerStructure::pi(std::size_t n) {
  return ControllerStructure(Polynomial{1.0, -1.0}, Grid<int>(n, n, 1));
}

std::string ControllerStructure::slot_name(std::size_t k) const {
  const Slot& s = slots_.at(k);
  std::ostringstream os;
  os << "C" << s.row + 1 << s.col + 1 << "[q^" << s.power << "]";
  return os.str();
}

Grid<Polynomial> numerator_matrix(const ControllerStructure& s, const ParamP& p) {
  check_length(s, p);
  return numerator_from_slots(s.dim(), s.slots(), p);
}

TransferMatrix build_controller(const ControllerStructure& s, const ParamP& p) {
  const Grid<Polynomial> b = numerator_matrix(s, p);
  TransferMatrix c(s.dim());
  for (std::size_t i = 0; i < s.dim(); ++i)
    for (std::size_t j = 0; j < s.dim(); ++j)
      if (!b(i, j).is_zero()) c(i, j) = RationalFunction(b(i, j), s.denominator());
  return c;
}

InverseDecomposition inverse_decomposition(const ControllerStructure& s, const ParamP& p) {
  const Grid<Polynomial> b = numerator_matrix(s, p);
  InverseDecomposition out;
  out.c = s.denominator();
  out.D = determinant(b, Polynomial{1.0});
  if (out.D.is_zero()) fail(ErrorCode::SingularController, "det B(q,P) is identically zero");
  out.N = adjugate(b, Polynomial{1.0});
  for (auto& e : out.N) e = out.c * e;
  out.delta = delta_of_P(s, p);
  return out;
}

std::vector<double> delta_of_P(const ControllerStructure& s, const ParamP& p) {
  const Polynomial det = determinant(numerator_matrix(s, p), Polynomial{1.0});
  const int nd = s.nominal_det_degree();
  std::vector<double> delta(static_cast<std::size_t>(nd) + 1, 0.0);
  for (int pw = 0; pw <= nd; ++pw)
    delta[static_cast<std::size_t>(nd - pw)] = det.coeff_of_power(pw);
  return delta;
}

Eigen::MatrixXd delta_jacobian(const ControllerStructure& s, const ParamP& p) {
  const Grid<Polynomial> adj = adjugate(numerator_matrix(s, p), Polynomial{1.0});
  const int nd = s.nominal_det_degree();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(nd + 1, static_cast<Eigen::Index>(s.num_params()));
  for (std::size_t k = 0; k < s.num_params(); ++k) {
    const auto& sl = s.slots()[k];
    // dB/dP_k is q^power at (row, col): trace(adj(B) dB) = adj(col, row) q^power.
    const Polynomial d = Polynomial::monomial(sl.power) * adj(sl.col, sl.row);
    for (int pw = 0; pw <= nd; ++pw)
      jac(nd - pw, static_cast<Eigen::Index>(k)) = d.coeff_of_power(pw);
  }
  return jac;
}

Grid<PolyGrad> numerator_matrix_dual(const ControllerStructure& s, const ParamP& p) {
  const Grid<Polynomial> b = numerator_matrix(s, p);
  const std::size_t np = s.num_params();
  Grid<PolyGrad> out(s.dim(), s.dim(), PolyGrad(Polynomial(), np));
  for (std::size_t i = 0; i < s.dim(); ++i)
    for (std::size_t j = 0; j < s.dim(); ++j) out(i, j) = PolyGrad(b(i, j), np);
  for (std::size_t k = 0; k < np; ++k) {
    const auto& sl = s.slots()[k];
    out(sl.row, sl.col).grad[k] = Polynomial::monomial(sl.power);
  }
  return out;
}

std::vector<Grid<Polynomial>> N_jacobian(const ControllerStructure& s, const ParamP& p) {
  const std::size_t np = s.num_params();
  const Grid<PolyGrad> adj =
      adjugate(numerator_matrix_dual(s, p), PolyGrad(Polynomial{1.0}, np));
  std::vector<Grid<Polynomial>> out(np, Grid<Polynomial>(s.dim(), s.dim(), Polynomial()));
  for (std::size_t k = 0; k < np; ++k)
    for (std::size_t i = 0; i < s.dim(); ++i)
      for (std::size_t j = 0; j < s.dim(); ++j)
        out[k](i, j) = s.denominator() * adj(i, j).grad[k];
  return out;
}

}  // namespace ocitune

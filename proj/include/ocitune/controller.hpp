#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ocitune/grid.hpp"
#include "ocitune/poly_grad.hpp"
#include "ocitune/polynomial.hpp"
#include "ocitune/rational.hpp"

namespace ocitune {

/// Controller parameter vector, ordered row-major over the controller entries
/// and, within an entry, by descending power of q.
using ParamP = Eigen::VectorXd;

/// Fixed-structure controller C(q,P) = B(q,P) / c(q) with one denominator
/// shared by every entry. Entry (i,j) has a free numerator of degree
/// numerator_degree(i,j); a degree of -1 masks the entry to zero.
class ControllerStructure {
 public:
  struct Slot {
    std::size_t row;
    std::size_t col;
    int power;
  };

  ControllerStructure() = default;
  ControllerStructure(Polynomial denominator, Grid<int> numerator_degree);

  /// (a q^2 + b q + c) / (q (q - 1)) in every entry.
  static ControllerStructure pid(std::size_t n);
  /// (a q + b) / (q - 1) in every entry.
  static ControllerStructure pi(std::size_t n);

  std::size_t dim() const { return degree_.rows(); }
  const Polynomial& denominator() const { return c_; }
  /// c(q) / (q - 1).
  const Polynomial& reduced_denominator() const { return c_reduced_; }
  const Grid<int>& numerator_degree() const { return degree_; }
  std::size_t num_params() const { return slots_.size(); }
  const std::vector<Slot>& slots() const { return slots_; }
  std::string slot_name(std::size_t k) const;
  /// Degree of det B(q,P) for generic P.
  int nominal_det_degree() const { return nominal_degree_; }

 private:
  Polynomial c_;
  Polynomial c_reduced_;
  Grid<int> degree_;
  std::vector<Slot> slots_;
  int nominal_degree_ = 0;
};

/// Numerator matrix B(q,P).
Grid<Polynomial> numerator_matrix(const ControllerStructure& s, const ParamP& p);

TransferMatrix build_controller(const ControllerStructure& s, const ParamP& p);

/// C^{-1} = N / D with D = det B (unreduced) and N = c adj(B).
struct InverseDecomposition {
  Grid<Polynomial> N;
  Polynomial D;
  std::vector<double> delta;  ///< coefficients of D padded to the nominal degree
  Polynomial c;
};

InverseDecomposition inverse_decomposition(const ControllerStructure& s, const ParamP& p);

/// Coefficients of det B(q,P), length nominal_det_degree() + 1.
std::vector<double> delta_of_P(const ControllerStructure& s, const ParamP& p);

/// d delta / dP by Jacobi's formula d det B = trace(adj(B) dB).
Eigen::MatrixXd delta_jacobian(const ControllerStructure& s, const ParamP& p);

/// B(q,P) lifted to carry derivatives with respect to every parameter slot.
Grid<PolyGrad> numerator_matrix_dual(const ControllerStructure& s, const ParamP& p);

/// dN/dP_k for every parameter, N = c adj(B).
std::vector<Grid<Polynomial>> N_jacobian(const ControllerStructure& s, const ParamP& p);

}  // namespace ocitune

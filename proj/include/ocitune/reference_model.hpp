#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ocitune/grid.hpp"
#include "ocitune/poly_grad.hpp"
#include "ocitune/polynomial.hpp"
#include "ocitune/rational.hpp"

namespace ocitune {

/// Free reference-model parameters, ordered row-major over entries and, within
/// an entry, by descending power of q.
using ParamEta = Eigen::VectorXd;

/// One coefficient of a free numerator: either pinned to `value` or free.
struct CoefficientSlot {
  bool free = true;
  double value = 0.0;

  static CoefficientSlot pinned(double v) { return {false, v}; }
  static CoefficientSlot open() { return {true, 0.0}; }
};

/// Template for one entry of T_d(q,eta).
struct RefEntry {
  enum class Kind { Zero, Fixed, Free, GainConstrained };

  Kind kind = Kind::Zero;
  Polynomial num;                     ///< Fixed entries
  Polynomial den{1.0};                ///< full denominator of the entry
  Polynomial factor{1.0};             ///< Free entries: numerator = factor * sum(coeffs)
  std::vector<CoefficientSlot> coeffs;  ///< Free entries, descending powers

  static RefEntry zero();
  static RefEntry fixed(Polynomial num, Polynomial den);
  static RefEntry free(Polynomial den, Polynomial factor, std::vector<CoefficientSlot> coeffs);
  /// (eta q + d(1) - eta) / (d(q) q^{relative_degree - 1}) with d = prod (q - p):
  /// unit static gain for every eta.
  static RefEntry gain_constrained(std::span<const double> poles, int relative_degree = 1);

  std::size_t num_params() const;
};

enum class RefStructure { Diagonal, BlockTriangular };

class RefModelSpec {
 public:
  /// For BlockTriangular, `distinguished_row` is the only row allowed to carry
  /// off-diagonal couplings.
  RefModelSpec() = default;
  RefModelSpec(RefStructure structure, Grid<RefEntry> entries, std::size_t distinguished_row = 0);

  std::size_t dim() const { return entries_.rows(); }
  RefStructure structure() const { return structure_; }
  std::size_t distinguished_row() const { return row_k_; }
  const Grid<RefEntry>& entries() const { return entries_; }
  std::size_t num_params() const { return num_params_; }
  std::string slot_name(std::size_t k) const;
  /// Least common multiple of the entry denominators.
  const Polynomial& common_denominator() const { return a_; }
  /// Generic multiplicity of q = 1 in det(a I - M(q,eta)).
  int unit_root_multiplicity() const { return unit_mult_; }

 private:
  RefStructure structure_ = RefStructure::Diagonal;
  Grid<RefEntry> entries_;
  std::size_t row_k_ = 0;
  std::size_t num_params_ = 0;
  std::vector<std::string> slot_names_;
  Polynomial a_;
  int unit_mult_ = 0;
};

TransferMatrix build_refmodel(const RefModelSpec& spec, const ParamEta& eta);

/// T_d = M(q,eta) / a(q) with every numerator carrying its eta-gradient.
Grid<PolyGrad> refmodel_numerators(const RefModelSpec& spec, const ParamEta& eta);

/// L_d = T_d (I - T_d)^{-1}, rational; the pole at q = 1 stays explicit.
TransferMatrix build_Ld(const TransferMatrix& td);

/// (q - 1) L_d(q,eta) = Q(q,eta) / e(q,eta) with the unit-root factor divided
/// out of both, each polynomial carrying its eta-gradient.
struct LdPolynomialForm {
  Grid<PolyGrad> Q;
  PolyGrad e;
};

/// Throws SingularIminusTd when det(I - T_d) vanishes identically or the unit
/// root does not deflate cleanly, UnstableReferenceFilter when e has a root
/// on or outside the unit circle.
LdPolynomialForm ld_polynomial_form(const RefModelSpec& spec, const ParamEta& eta);

/// dL_d/deta_k = (I - T_d)^{-1} (dT_d/deta_k) (I - T_d)^{-1}.
std::vector<TransferMatrix> eta_jacobian(const RefModelSpec& spec, const ParamEta& eta);

/// Roots of the free numerator parts with |r| > 1, deduplicated and sorted by
/// decreasing magnitude.
std::vector<Complex> extract_nmp_zero(const RefModelSpec& spec, const ParamEta& eta);

/// || y^H T_d(z) ||.
double verify_zero_constraint(const TransferMatrix& td, Complex z, const Eigen::VectorXcd& y_dir);

/// Zero z_kj of the coupling T_kj = K_j (q - z_kj) (q - 1) / (prod(q - p_kk) prod(q - p_jj))
/// that places the zero z with output direction y in row k, given a unit-gain
/// all-pole diagonal entry T_jj with poles p_jj.
double coupling_zero_from_direction(Complex z, const Eigen::VectorXcd& y_dir, std::size_t k,
                                    std::size_t j, double gain_j,
                                    std::span<const double> jj_poles,
                                    std::span<const double> kk_poles);

}  // namespace ocitune

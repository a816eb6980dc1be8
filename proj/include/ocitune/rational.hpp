#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ocitune/grid.hpp"
#include "ocitune/polynomial.hpp"

namespace ocitune {

/// Multichannel time series: one row per channel, one column per sample.
/// Sample t = 1..N of the text maps to column t-1.
using Signal = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::span<const double> channel(const Signal& s, Eigen::Index i) {
  return {s.row(i).data(), static_cast<std::size_t>(s.cols())};
}
inline std::span<double> channel(Signal& s, Eigen::Index i) {
  return {s.row(i).data(), static_cast<std::size_t>(s.cols())};
}

/// Absolute distance under which a zero and a pole (after clustering) are
/// treated as the same root and cancelled.
inline constexpr double kCancelTolerance = 1e-7;

/// Scalar rational function num(q)/den(q) in the forward-shift variable.
///
/// Stored as gain / zeros / poles so that products never re-root expanded
/// polynomials; every construction and arithmetic result is reduced by
/// cancelling zero-pole pairs closer than kCancelTolerance. num() and den()
/// expand on demand; den() is monic.
class RationalFunction {
 public:
  RationalFunction() = default;
  RationalFunction(double constant);  // NOLINT(google-explicit-constructor)
  RationalFunction(const Polynomial& num, const Polynomial& den);

  static RationalFunction from_zpk(double gain, std::vector<Complex> zeros,
                                   std::vector<Complex> poles);

  Polynomial num() const;
  Polynomial den() const;
  double gain() const { return gain_; }
  const std::vector<Complex>& zeros() const { return zeros_; }
  const std::vector<Complex>& poles() const { return poles_; }

  bool is_zero() const { return gain_ == 0.0; }
  int relative_degree() const {
    return static_cast<int>(poles_.size()) - static_cast<int>(zeros_.size());
  }
  bool is_proper() const { return is_zero() || relative_degree() >= 0; }
  bool is_stable(double radius = 1.0) const;

  /// Throws PoleHit when z coincides with a pole.
  Complex operator()(Complex z) const;

  RationalFunction operator-() const;
  RationalFunction inverse() const;

 private:
  void reduce();

  double gain_ = 0.0;
  std::vector<Complex> zeros_;
  std::vector<Complex> poles_;
};

RationalFunction operator+(const RationalFunction& a, const RationalFunction& b);
RationalFunction operator-(const RationalFunction& a, const RationalFunction& b);
RationalFunction operator*(const RationalFunction& a, const RationalFunction& b);
RationalFunction operator/(const RationalFunction& a, const RationalFunction& b);

/// Largest coefficient difference between two rational functions once both
/// have monic denominators. When the reduced denominators differ in degree
/// the cross-multiplied residual a.num*b.den - b.num*a.den is used instead.
double max_coefficient_deviation(const RationalFunction& a, const RationalFunction& b);

/// Square matrix of rational functions.
class TransferMatrix {
 public:
  TransferMatrix() = default;
  explicit TransferMatrix(std::size_t n) : g_(n, n, RationalFunction()) {}
  explicit TransferMatrix(Grid<RationalFunction> g);

  static TransferMatrix identity(std::size_t n);
  static TransferMatrix diagonal(std::span<const RationalFunction> entries);

  std::size_t dim() const { return g_.rows(); }
  RationalFunction& operator()(std::size_t i, std::size_t j) { return g_(i, j); }
  const RationalFunction& operator()(std::size_t i, std::size_t j) const { return g_(i, j); }
  const Grid<RationalFunction>& grid() const { return g_; }

  bool all_proper() const;

 private:
  Grid<RationalFunction> g_;
};

TransferMatrix operator+(const TransferMatrix& a, const TransferMatrix& b);
TransferMatrix operator-(const TransferMatrix& a, const TransferMatrix& b);
TransferMatrix operator*(const TransferMatrix& a, const TransferMatrix& b);
TransferMatrix operator*(double s, const TransferMatrix& a);

Eigen::MatrixXcd tm_eval(const TransferMatrix& t, Complex z);
RationalFunction tm_det(const TransferMatrix& t);
TransferMatrix tm_inverse(const TransferMatrix& t);
/// G0^{-1} Td (I - Td)^{-1}.
TransferMatrix ideal_controller(const TransferMatrix& g0, const TransferMatrix& td);
/// (I + G C)^{-1} G C.
TransferMatrix closed_loop(const TransferMatrix& g, const TransferMatrix& c);

struct ZeroDirection {
  Complex z;
  Eigen::VectorXcd y_dir;  ///< unit left null vector of G(z), largest entry real positive
};
std::vector<ZeroDirection> transmission_zeros(const TransferMatrix& g);

/// Zero-state response; every entry must be proper.
Signal simulate(const TransferMatrix& t, const Signal& u);
/// Unit step on reference `channel` from the first sample, zeros elsewhere.
Signal step_response(const TransferMatrix& t, std::size_t channel, std::size_t samples);

struct StabilityReport {
  bool stable = true;
  std::vector<Complex> poles;  ///< distinct poles over all entries
};
StabilityReport is_stable(const TransferMatrix& t);

/// Groups roots closer than rtol*(1+|r|) (single linkage); returns cluster
/// means and multiplicities.
struct RootCluster {
  Complex mean;
  std::vector<Complex> members;
};
std::vector<RootCluster> cluster_roots(std::span<const Complex> roots, double rtol);

/// Monic least common multiple of nonzero polynomials, formed from clustered
/// roots (multiplicity = largest multiplicity among the inputs).
Polynomial poly_lcm(std::span<const Polynomial> polys);

}  // namespace ocitune

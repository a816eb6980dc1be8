#pragma once

#include <complex>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ocitune {

using Complex = std::complex<double>;

/// Real polynomial in the forward-shift variable q.
///
/// Coefficients are stored in DESCENDING powers of q everywhere in this
/// library: coeffs()[0] multiplies q^degree(). Leading exact zeros are
/// stripped on construction; the zero polynomial is the single coefficient 0.
class Polynomial {
 public:
  Polynomial() : c_{0.0} {}
  explicit Polynomial(std::vector<double> coeffs);
  Polynomial(std::initializer_list<double> coeffs)
      : Polynomial(std::vector<double>(coeffs)) {}

  static Polynomial constant(double value) { return Polynomial({value}); }
  static Polynomial monomial(int degree, double coeff = 1.0);
  /// lead * prod (q - r). Complex roots must come in conjugate pairs; the
  /// imaginary residue of the expansion is discarded.
  static Polynomial from_roots(std::span<const Complex> roots, double lead = 1.0);
  static Polynomial from_real_roots(std::span<const double> roots, double lead = 1.0);

  int degree() const { return static_cast<int>(c_.size()) - 1; }
  bool is_zero() const { return c_.size() == 1 && c_[0] == 0.0; }
  double leading() const { return c_.front(); }
  double constant_term() const { return c_.back(); }
  const std::vector<double>& coeffs() const { return c_; }
  std::size_t size() const { return c_.size(); }
  double operator[](std::size_t i) const { return c_[i]; }

  /// Coefficient of q^power (0 when out of range).
  double coeff_of_power(int power) const;

  double operator()(double x) const;
  Complex operator()(Complex z) const;

  double max_abs() const;
  Polynomial monic() const;
  /// Plain coefficient reversal: q^deg * p(1/q).
  Polynomial reversed() const;

  Polynomial& operator+=(const Polynomial& rhs);
  Polynomial& operator-=(const Polynomial& rhs);
  Polynomial& operator*=(double s);

  std::string str() const;

 private:
  std::vector<double> c_;
};

Polynomial operator+(Polynomial a, const Polynomial& b);
Polynomial operator-(Polynomial a, const Polynomial& b);
Polynomial operator-(Polynomial a);
Polynomial operator*(const Polynomial& a, const Polynomial& b);
Polynomial operator*(Polynomial a, double s);
Polynomial operator*(double s, Polynomial a);

Polynomial poly_mul(const Polynomial& a, const Polynomial& b);

struct DivResult {
  Polynomial quotient;
  Polynomial remainder;
};
/// Long division a = quotient * b + remainder, deg remainder < deg b.
DivResult poly_divmod(const Polynomial& a, const Polynomial& b);

/// Divides out (q - 1) `times` times; returns the quotient and the largest
/// absolute remainder seen, relative to max_abs(p).
struct Deflation {
  Polynomial quotient;
  double max_rel_remainder = 0.0;
};
Deflation deflate_at_one(const Polynomial& p, int times);
/// Multiplicity of the root q = 1, counted by repeated synthetic division
/// while the remainder stays below rtol * max_abs(p).
int multiplicity_at_one(const Polynomial& p, double rtol = 1e-9);

/// Roots via eigenvalues of the (balanced) companion matrix.
std::vector<Complex> poly_roots(const Polynomial& p);

/// Relative coefficient comparison scaled by the larger max-magnitude
/// coefficient of the two.
bool approx_equal(const Polynomial& a, const Polynomial& b, double rtol = 1e-9);

/// Drops leading coefficients whose magnitude is below tol * scale.
Polynomial trim_leading(const Polynomial& p, double scale, double tol);

/// Split of a polynomial about the unit circle: d = d_s * d_u with d_u monic
/// and unstable, d_s stable and carrying the leading coefficient.
struct FactoredDenominator {
  Polynomial d_s;
  Polynomial d_u;
  Polynomial d_u_star;
  int n_s = 0;
  int n_u = 0;
};

FactoredDenominator factor_unit_circle(const Polynomial& d, double margin = 1e-9);

/// u_{n}q^{n} + ... + u_1 q + 1 for monic d_u = q^n + u_1 q^{n-1} + ... + u_n.
Polynomial reverse_unstable(const Polynomial& d_u);

/// Coefficients of D_S * D_U where delta_u lists u_1..u_nU (implicit leading 1).
std::vector<double> convolve_split(std::span<const double> delta_s,
                                   std::span<const double> delta_u);

/// Jacobian of convolve_split with respect to [delta_s; delta_u]. The block
/// acting on the non-leading coefficients is the Sylvester matrix of D_U, D_S.
Eigen::MatrixXd sylvester_jacobian(std::span<const double> delta_s,
                                   std::span<const double> delta_u);

}  // namespace ocitune

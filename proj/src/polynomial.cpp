#include "ocitune/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <unsupported/Eigen/Polynomials>

#include "ocitune/error.hpp"

namespace ocitune {

namespace {

std::vector<double> strip_leading_zeros(std::vector<double> c) {
  auto first = std::find_if(c.begin(), c.end(), [](double v) { return v != 0.0; });
  if (first == c.end()) return {0.0};
  c.erase(c.begin(), first);
  return c;
}

}  // namespace

Polynomial::Polynomial(std::vector<double> coeffs) {
  if (coeffs.empty()) coeffs.push_back(0.0);
  c_ = strip_leading_zeros(std::move(coeffs));
}

Polynomial Polynomial::monomial(int degree, double coeff) {
  if (degree < 0) fail(ErrorCode::InvalidArgument, "negative monomial degree");
  std::vector<double> c(static_cast<std::size_t>(degree) + 1, 0.0);
  c[0] = coeff;
  return Polynomial(std::move(c));
}

Polynomial Polynomial::from_roots(std::span<const Complex> roots, double lead) {
  std::vector<Complex> acc{Complex(1.0)};
  for (const Complex& r : roots) {
    std::vector<Complex> next(acc.size() + 1, Complex(0.0));
    for (std::size_t i = 0; i < acc.size(); ++i) {
      next[i] += acc[i];
      next[i + 1] -= acc[i] * r;
    }
    acc = std::move(next);
  }
  std::vector<double> c(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) c[i] = lead * acc[i].real();
  return Polynomial(std::move(c));
}

Polynomial Polynomial::from_real_roots(std::span<const double> roots, double lead) {
  std::vector<Complex> z(roots.begin(), roots.end());
  return from_roots(z, lead);
}

double Polynomial::coeff_of_power(int power) const {
  const int idx = degree() - power;
  if (power < 0 || idx < 0) return 0.0;
  return c_[static_cast<std::size_t>(idx)];
}

double Polynomial::operator()(double x) const {
  double acc = 0.0;
  for (double v : c_) acc = acc * x + v;
  return acc;
}

Complex Polynomial::operator()(Complex z) const {
  Complex acc = 0.0;
  for (double v : c_) acc = acc * z + v;
  return acc;
}

double Polynomial::max_abs() const {
  double m = 0.0;
  for (double v : c_) m = std::max(m, std::abs(v));
  return m;
}

Polynomial Polynomial::monic() const {
  if (is_zero()) fail(ErrorCode::ZeroPolynomial, "cannot normalize the zero polynomial");
  return *this * (1.0 / leading());
}

Polynomial Polynomial::reversed() const {
  std::vector<double> c(c_.rbegin(), c_.rend());
  return Polynomial(std::move(c));
}

Polynomial& Polynomial::operator+=(const Polynomial& rhs) {
  if (rhs.c_.size() > c_.size()) c_.insert(c_.begin(), rhs.c_.size() - c_.size(), 0.0);
  const std::size_t off = c_.size() - rhs.c_.size();
  for (std::size_t i = 0; i < rhs.c_.size(); ++i) c_[off + i] += rhs.c_[i];
  c_ = strip_leading_zeros(std::move(c_));
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& rhs) {
  return *this += (-rhs);
}

Polynomial& Polynomial::operator*=(double s) {
  if (s == 0.0) {
    c_ = {0.0};
    return *this;
  }
  for (double& v : c_) v *= s;
  return *this;
}

std::string Polynomial::str() const {
  std::ostringstream os;
  os.precision(6);
  const int n = degree();
  bool first = true;
  for (int i = 0; i <= n; ++i) {
    const double v = c_[static_cast<std::size_t>(i)];
    if (v == 0.0 && !(n == 0)) continue;
    const int pw = n - i;
    if (!first) os << (v < 0 ? " - " : " + ");
    else if (v < 0) os << "-";
    const double a = std::abs(v);
    if (pw == 0 || a != 1.0) os << a;
    if (pw >= 1) os << "q";
    if (pw >= 2) os << "^" << pw;
    first = false;
  }
  return os.str();
}

Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
Polynomial operator-(Polynomial a) { return a *= -1.0; }
Polynomial operator*(Polynomial a, double s) { return a *= s; }
Polynomial operator*(double s, Polynomial a) { return a *= s; }

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.is_zero() || b.is_zero()) return Polynomial();
  const auto& x = a.coeffs();
  const auto& y = b.coeffs();
  std::vector<double> c(x.size() + y.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) c[i + j] += x[i] * y[j];
  return Polynomial(std::move(c));
}

Polynomial poly_mul(const Polynomial& a, const Polynomial& b) { return a * b; }

DivResult poly_divmod(const Polynomial& a, const Polynomial& b) {
  if (b.is_zero()) fail(ErrorCode::ZeroPolynomial, "division by the zero polynomial");
  if (a.degree() < b.degree()) return {Polynomial(), a};
  std::vector<double> r = a.coeffs();
  const auto& d = b.coeffs();
  const std::size_t nq = r.size() - d.size() + 1;
  std::vector<double> q(nq, 0.0);
  for (std::size_t i = 0; i < nq; ++i) {
    const double f = r[i] / d[0];
    q[i] = f;
    for (std::size_t j = 0; j < d.size(); ++j) r[i + j] -= f * d[j];
  }
  std::vector<double> rem(r.begin() + static_cast<std::ptrdiff_t>(nq), r.end());
  return {Polynomial(std::move(q)), Polynomial(std::move(rem))};
}

Deflation deflate_at_one(const Polynomial& p, int times) {
  Deflation out{p, 0.0};
  const double scale = std::max(p.max_abs(), 1e-300);
  for (int k = 0; k < times; ++k) {
    const auto& c = out.quotient.coeffs();
    if (c.size() < 2) {
      out.max_rel_remainder = std::max(out.max_rel_remainder, std::abs(c[0]) / scale);
      out.quotient = Polynomial();
      continue;
    }
    std::vector<double> q(c.size() - 1);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
      acc = acc + c[i];
      q[i] = acc;
    }
    const double rem = acc + c.back();
    out.max_rel_remainder = std::max(out.max_rel_remainder, std::abs(rem) / scale);
    out.quotient = Polynomial(std::move(q));
  }
  return out;
}

int multiplicity_at_one(const Polynomial& p, double rtol) {
  if (p.is_zero()) return 0;
  int m = 0;
  Polynomial cur = p;
  const double scale = p.max_abs();
  while (cur.degree() >= 1) {
    // The remainder of division by (q - 1) is the coefficient sum.
    double sum = 0.0;
    for (double v : cur.coeffs()) sum += v;
    if (std::abs(sum) > rtol * scale) break;
    cur = deflate_at_one(cur, 1).quotient;
    ++m;
  }
  return m;
}

std::vector<Complex> poly_roots(const Polynomial& p) {
  if (p.is_zero()) fail(ErrorCode::ZeroPolynomial, "roots of the zero polynomial");
  std::vector<double> c = p.coeffs();
  std::vector<Complex> roots;
  // Exact zero roots are peeled off before the eigenvalue problem.
  while (c.size() > 1 && c.back() == 0.0) {
    c.pop_back();
    roots.emplace_back(0.0, 0.0);
  }
  const std::size_t deg = c.size() - 1;
  if (deg == 0) return roots;
  if (deg == 1) {
    roots.emplace_back(-c[1] / c[0], 0.0);
    return roots;
  }
  Eigen::VectorXd asc(static_cast<Eigen::Index>(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i)
    asc(static_cast<Eigen::Index>(i)) = c[c.size() - 1 - i] / c[0];
  Eigen::PolynomialSolver<double, Eigen::Dynamic> solver(asc);
  const auto& r = solver.roots();
  for (Eigen::Index i = 0; i < r.size(); ++i) roots.push_back(r(i));
  return roots;
}

bool approx_equal(const Polynomial& a, const Polynomial& b, double rtol) {
  const double scale = std::max(a.max_abs(), b.max_abs());
  if (scale == 0.0) return true;
  const int n = std::max(a.degree(), b.degree());
  for (int pw = 0; pw <= n; ++pw)
    if (std::abs(a.coeff_of_power(pw) - b.coeff_of_power(pw)) > rtol * scale) return false;
  return true;
}

Polynomial trim_leading(const Polynomial& p, double scale, double tol) {
  const auto& c = p.coeffs();
  std::size_t first = 0;
  while (first < c.size() && std::abs(c[first]) <= tol * scale) ++first;
  if (first == c.size()) return Polynomial();
  return Polynomial(std::vector<double>(c.begin() + static_cast<std::ptrdiff_t>(first), c.end()));
}

FactoredDenominator factor_unit_circle(const Polynomial& d, double margin) {
  if (d.is_zero()) fail(ErrorCode::ZeroPolynomial, "factorization of the zero polynomial");
  std::vector<Complex> stable;
  std::vector<Complex> unstable;
  for (const Complex& r : poly_roots(d)) {
    const double mag = std::abs(r);
    if (std::abs(mag - 1.0) <= margin) {
      std::ostringstream os;
      os << "root " << r << " lies within " << margin << " of the unit circle";
      fail(ErrorCode::RootOnUnitCircle, os.str());
    }
    (mag < 1.0 ? stable : unstable).push_back(r);
  }
  FactoredDenominator out;
  out.d_u = Polynomial::from_roots(unstable);
  if (unstable.empty()) {
    out.d_s = d;
  } else {
    out.d_s = Polynomial::from_roots(stable, d.leading());
  }
  out.d_u_star = reverse_unstable(out.d_u);
  out.n_s = static_cast<int>(stable.size());
  out.n_u = static_cast<int>(unstable.size());
  return out;
}

Polynomial reverse_unstable(const Polynomial& d_u) {
  if (d_u.is_zero()) fail(ErrorCode::ZeroPolynomial, "reversal of the zero polynomial");
  return d_u.reversed();
}

std::vector<double> convolve_split(std::span<const double> delta_s,
                                   std::span<const double> delta_u) {
  std::vector<double> u(delta_u.size() + 1);
  u[0] = 1.0;
  std::copy(delta_u.begin(), delta_u.end(), u.begin() + 1);
  std::vector<double> out(delta_s.size() + delta_u.size(), 0.0);
  for (std::size_t i = 0; i < delta_s.size(); ++i)
    for (std::size_t j = 0; j < u.size(); ++j) out[i + j] += delta_s[i] * u[j];
  return out;
}

Eigen::MatrixXd sylvester_jacobian(std::span<const double> delta_s,
                                   std::span<const double> delta_u) {
  const auto ns1 = static_cast<Eigen::Index>(delta_s.size());
  const auto nu = static_cast<Eigen::Index>(delta_u.size());
  const Eigen::Index n = ns1 + nu;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  // d h / d s_i: the monic coefficient vector [1, u_1..u_nU] shifted down i rows.
  for (Eigen::Index i = 0; i < ns1; ++i) {
    jac(i, i) = 1.0;
    for (Eigen::Index k = 0; k < nu; ++k) jac(i + 1 + k, i) = delta_u[static_cast<std::size_t>(k)];
  }
  // d h / d u_j: [s_0..s_nS] shifted down j rows.
  for (Eigen::Index j = 1; j <= nu; ++j)
    for (Eigen::Index k = 0; k < ns1; ++k)
      jac(j + k, ns1 + j - 1) = delta_s[static_cast<std::size_t>(k)];
  return jac;
}

}  // namespace ocitune

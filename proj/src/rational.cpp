#include "ocitune/rational.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ocitune/error.hpp"
#include "ocitune/filter.hpp"

namespace ocitune {

namespace {

// Numerically split multiple roots spread roughly like eps^(1/m); grouping at
// this radius lets their (well conditioned) mean stand in for the group.
constexpr double kClusterRtol = 1e-4;
// Leading numerator coefficients below this fraction of the operand scale are
// round-off from cancellation in a sum.
constexpr double kSumTrimRtol = 1e-11;

struct MultisetMatch {
  std::vector<Complex> common;
  std::vector<Complex> only_a;
  std::vector<Complex> only_b;
};

// Matches two root multisets: first cluster-to-cluster on cluster means, then
// leftover roots pairwise. Partially matched clusters are replaced by copies
// of their mean.
MultisetMatch match_multisets(std::span<const Complex> a, std::span<const Complex> b) {
  MultisetMatch out;
  auto ca = cluster_roots(a, kClusterRtol);
  auto cb = cluster_roots(b, kClusterRtol);
  std::vector<bool> used_b(cb.size(), false);
  std::vector<Complex> rest_a;
  std::vector<Complex> rest_b;
  for (auto& ka : ca) {
    bool matched = false;
    for (std::size_t j = 0; j < cb.size(); ++j) {
      if (used_b[j]) continue;
      if (std::abs(ka.mean - cb[j].mean) >= kCancelTolerance) continue;
      const std::size_t na = ka.members.size();
      const std::size_t nb = cb[j].members.size();
      const std::size_t c = std::min(na, nb);
      out.common.insert(out.common.end(), c, ka.mean);
      out.only_a.insert(out.only_a.end(), na - c, ka.mean);
      out.only_b.insert(out.only_b.end(), nb - c, cb[j].mean);
      used_b[j] = true;
      matched = true;
      break;
    }
    if (!matched) rest_a.insert(rest_a.end(), ka.members.begin(), ka.members.end());
  }
  for (std::size_t j = 0; j < cb.size(); ++j)
    if (!used_b[j]) rest_b.insert(rest_b.end(), cb[j].members.begin(), cb[j].members.end());

  std::vector<bool> taken(rest_b.size(), false);
  for (const Complex& za : rest_a) {
    std::size_t best = rest_b.size();
    double best_d = kCancelTolerance;
    for (std::size_t j = 0; j < rest_b.size(); ++j) {
      if (taken[j]) continue;
      const double d = std::abs(za - rest_b[j]);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    if (best < rest_b.size()) {
      taken[best] = true;
      out.common.push_back(za);
    } else {
      out.only_a.push_back(za);
    }
  }
  for (std::size_t j = 0; j < rest_b.size(); ++j)
    if (!taken[j]) out.only_b.push_back(rest_b[j]);
  return out;
}

std::vector<Complex> poly_roots_or_empty(const Polynomial& p) {
  if (p.degree() < 1) return {};
  return poly_roots(p);
}

std::vector<Complex> concat(std::vector<Complex> a, std::span<const Complex> b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

std::vector<RootCluster> cluster_roots(std::span<const Complex> roots, double rtol) {
  std::vector<RootCluster> clusters;
  std::vector<int> label(roots.size(), -1);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (label[i] >= 0) continue;
    const int id = static_cast<int>(clusters.size());
    clusters.push_back({});
    std::vector<std::size_t> stack{i};
    label[i] = id;
    while (!stack.empty()) {
      const std::size_t k = stack.back();
      stack.pop_back();
      clusters[static_cast<std::size_t>(id)].members.push_back(roots[k]);
      for (std::size_t j = 0; j < roots.size(); ++j) {
        if (label[j] >= 0) continue;
        const double tol = rtol * (1.0 + std::abs(roots[k]));
        if (std::abs(roots[j] - roots[k]) < tol) {
          label[j] = id;
          stack.push_back(j);
        }
      }
    }
  }
  for (auto& c : clusters) {
    Complex s = 0.0;
    for (const Complex& m : c.members) s += m;
    c.mean = s / static_cast<double>(c.members.size());
  }
  return clusters;
}

Polynomial poly_lcm(std::span<const Polynomial> polys) {
  struct Factor {
    Complex root;
    std::size_t mult;
  };
  std::vector<Factor> acc;
  for (const Polynomial& p : polys) {
    if (p.is_zero()) fail(ErrorCode::ZeroPolynomial, "lcm of a zero polynomial");
    for (const auto& c : cluster_roots(poly_roots_or_empty(p), kClusterRtol)) {
      auto it = std::find_if(acc.begin(), acc.end(), [&](const Factor& f) {
        return std::abs(f.root - c.mean) < 1e-6 * (1.0 + std::abs(c.mean));
      });
      if (it == acc.end()) acc.push_back({c.mean, c.members.size()});
      else it->mult = std::max(it->mult, c.members.size());
    }
  }
  std::vector<Complex> roots;
  for (const Factor& f : acc) {
    Complex r = f.root;
    if (std::abs(r.imag()) < 1e-9) r = Complex(r.real(), 0.0);
    roots.insert(roots.end(), f.mult, r);
  }
  return Polynomial::from_roots(roots);
}

RationalFunction::RationalFunction(double constant) : gain_(constant) {}

RationalFunction::RationalFunction(const Polynomial& num, const Polynomial& den) {
  if (den.is_zero()) fail(ErrorCode::ZeroPolynomial, "rational function with zero denominator");
  if (num.is_zero()) return;
  gain_ = num.leading() / den.leading();
  zeros_ = poly_roots(num);
  poles_ = poly_roots(den);
  reduce();
}

RationalFunction RationalFunction::from_zpk(double gain, std::vector<Complex> zeros,
                                            std::vector<Complex> poles) {
  RationalFunction r;
  r.gain_ = gain;
  r.zeros_ = std::move(zeros);
  r.poles_ = std::move(poles);
  r.reduce();
  return r;
}

void RationalFunction::reduce() {
  if (gain_ == 0.0 || !std::isfinite(gain_)) {
    if (gain_ == 0.0) {
      zeros_.clear();
      poles_.clear();
    }
    return;
  }
  auto m = match_multisets(zeros_, poles_);
  zeros_ = std::move(m.only_a);
  poles_ = std::move(m.only_b);
}

Polynomial RationalFunction::num() const {
  if (is_zero()) return Polynomial();
  return Polynomial::from_roots(zeros_, gain_);
}

Polynomial RationalFunction::den() const { return Polynomial::from_roots(poles_); }

bool RationalFunction::is_stable(double radius) const {
  return std::all_of(poles_.begin(), poles_.end(),
                     [radius](const Complex& p) { return std::abs(p) < radius; });
}

Complex RationalFunction::operator()(Complex z) const {
  if (is_zero()) return 0.0;
  Complex acc = gain_;
  for (const Complex& p : poles_) {
    const Complex d = z - p;
    if (std::abs(d) <= 1e-13 * (1.0 + std::abs(p)))
      fail(ErrorCode::PoleHit, "evaluation point coincides with a pole");
    acc /= d;
  }
  for (const Complex& r : zeros_) acc *= (z - r);
  return acc;
}

RationalFunction RationalFunction::operator-() const {
  RationalFunction r = *this;
  r.gain_ = -r.gain_;
  return r;
}

RationalFunction RationalFunction::inverse() const {
  if (is_zero()) fail(ErrorCode::SingularTransferMatrix, "inverse of the zero rational function");
  RationalFunction r;
  r.gain_ = 1.0 / gain_;
  r.zeros_ = poles_;
  r.poles_ = zeros_;
  return r;
}

RationalFunction operator+(const RationalFunction& a, const RationalFunction& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  auto m = match_multisets(a.poles(), b.poles());
  // a + b over the least common denominator common * only_a * only_b.
  Polynomial t1 = Polynomial::from_roots(concat(a.zeros(), m.only_b), a.gain());
  Polynomial t2 = Polynomial::from_roots(concat(b.zeros(), m.only_a), b.gain());
  const double scale = std::max(t1.max_abs(), t2.max_abs());
  Polynomial sum = trim_leading(t1 + t2, scale, kSumTrimRtol);
  if (sum.is_zero()) return RationalFunction();
  std::vector<Complex> poles = m.common;
  poles.insert(poles.end(), m.only_a.begin(), m.only_a.end());
  poles.insert(poles.end(), m.only_b.begin(), m.only_b.end());
  return RationalFunction::from_zpk(sum.leading(), poly_roots(sum), std::move(poles));
}

RationalFunction operator-(const RationalFunction& a, const RationalFunction& b) {
  return a + (-b);
}

RationalFunction operator*(const RationalFunction& a, const RationalFunction& b) {
  if (a.is_zero() || b.is_zero()) return RationalFunction();
  return RationalFunction::from_zpk(a.gain() * b.gain(), concat(a.zeros(), b.zeros()),
                                    concat(a.poles(), b.poles()));
}

RationalFunction operator/(const RationalFunction& a, const RationalFunction& b) {
  return a * b.inverse();
}

double max_coefficient_deviation(const RationalFunction& a, const RationalFunction& b) {
  const Polynomial an = a.num(), ad = a.den(), bn = b.num(), bd = b.den();
  double dev = 0.0;
  if (ad.degree() == bd.degree()) {
    const int nn = std::max(an.degree(), bn.degree());
    for (int p = 0; p <= nn; ++p)
      dev = std::max(dev, std::abs(an.coeff_of_power(p) - bn.coeff_of_power(p)));
    for (int p = 0; p <= ad.degree(); ++p)
      dev = std::max(dev, std::abs(ad.coeff_of_power(p) - bd.coeff_of_power(p)));
    return dev;
  }
  const Polynomial cross = an * bd - bn * ad;
  return cross.max_abs();
}

TransferMatrix::TransferMatrix(Grid<RationalFunction> g) : g_(std::move(g)) {
  if (g_.rows() != g_.cols()) fail(ErrorCode::DimensionMismatch, "transfer matrix must be square");
}

TransferMatrix TransferMatrix::identity(std::size_t n) {
  TransferMatrix t(n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = RationalFunction(1.0);
  return t;
}

TransferMatrix TransferMatrix::diagonal(std::span<const RationalFunction> entries) {
  TransferMatrix t(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) t(i, i) = entries[i];
  return t;
}

bool TransferMatrix::all_proper() const {
  return std::all_of(g_.begin(), g_.end(), [](const RationalFunction& r) { return r.is_proper(); });
}

TransferMatrix operator+(const TransferMatrix& a, const TransferMatrix& b) {
  if (a.dim() != b.dim()) fail(ErrorCode::DimensionMismatch, "transfer matrix sum");
  TransferMatrix out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j) out(i, j) = a(i, j) + b(i, j);
  return out;
}

TransferMatrix operator-(const TransferMatrix& a, const TransferMatrix& b) {
  if (a.dim() != b.dim()) fail(ErrorCode::DimensionMismatch, "transfer matrix difference");
  TransferMatrix out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j) out(i, j) = a(i, j) - b(i, j);
  return out;
}

TransferMatrix operator*(const TransferMatrix& a, const TransferMatrix& b) {
  return TransferMatrix(matmul(a.grid(), b.grid(), RationalFunction()));
}

TransferMatrix operator*(double s, const TransferMatrix& a) {
  TransferMatrix out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j) out(i, j) = RationalFunction(s) * a(i, j);
  return out;
}

Eigen::MatrixXcd tm_eval(const TransferMatrix& t, Complex z) {
  const auto n = static_cast<Eigen::Index>(t.dim());
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      m(i, j) = t(static_cast<std::size_t>(i), static_cast<std::size_t>(j))(z);
  return m;
}

RationalFunction tm_det(const TransferMatrix& t) {
  return determinant(t.grid(), RationalFunction(1.0));
}

TransferMatrix tm_inverse(const TransferMatrix& t) {
  const RationalFunction det = tm_det(t);
  if (det.is_zero()) fail(ErrorCode::SingularTransferMatrix, "determinant is identically zero");
  const RationalFunction inv_det = det.inverse();
  Grid<RationalFunction> adj = adjugate(t.grid(), RationalFunction(1.0));
  for (auto& e : adj) e = e * inv_det;
  return TransferMatrix(std::move(adj));
}

TransferMatrix ideal_controller(const TransferMatrix& g0, const TransferMatrix& td) {
  const std::size_t n = g0.dim();
  if (td.dim() != n) fail(ErrorCode::DimensionMismatch, "plant and reference model sizes differ");
  const TransferMatrix ld = td * tm_inverse(TransferMatrix::identity(n) - td);
  return tm_inverse(g0) * ld;
}

TransferMatrix closed_loop(const TransferMatrix& g, const TransferMatrix& c) {
  const std::size_t n = g.dim();
  if (c.dim() != n) fail(ErrorCode::DimensionMismatch, "plant and controller sizes differ");
  const TransferMatrix loop = TransferMatrix::identity(n) + g * c;
  const RationalFunction det = tm_det(loop);
  if (det.is_zero()) fail(ErrorCode::SingularTransferMatrix, "I + GC is identically singular");
  if (det.relative_degree() > 0) fail(ErrorCode::AlgebraicLoop, "I + GC is singular at q = infinity");
  const RationalFunction inv_det = det.inverse();
  Grid<RationalFunction> sens = adjugate(loop.grid(), RationalFunction(1.0));
  for (auto& e : sens) e = e * inv_det;
  return TransferMatrix::identity(n) - TransferMatrix(std::move(sens));
}

std::vector<ZeroDirection> transmission_zeros(const TransferMatrix& g) {
  const RationalFunction det = tm_det(g);
  if (det.is_zero()) fail(ErrorCode::SingularTransferMatrix, "determinant is identically zero");
  std::vector<ZeroDirection> out;
  for (const auto& c : cluster_roots(det.zeros(), 1e-6)) {
    Complex z = c.mean;
    if (std::abs(z.imag()) < 1e-12 * (1.0 + std::abs(z))) z = Complex(z.real(), 0.0);
    const Eigen::MatrixXcd gz = tm_eval(g, z);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(gz, Eigen::ComputeFullU);
    Eigen::VectorXcd y = svd.matrixU().col(gz.cols() - 1);
    Eigen::Index k = 0;
    y.cwiseAbs().maxCoeff(&k);
    y *= std::conj(y(k)) / std::abs(y(k));
    y /= y.norm();
    out.push_back({z, y});
  }
  return out;
}

Signal simulate(const TransferMatrix& t, const Signal& u) {
  const std::size_t n = t.dim();
  if (static_cast<std::size_t>(u.rows()) != n)
    fail(ErrorCode::DimensionMismatch, "input channel count differs from transfer matrix size");
  Signal y = Signal::Zero(u.rows(), u.cols());
  std::vector<double> buf(static_cast<std::size_t>(u.cols()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const RationalFunction& e = t(i, j);
      if (e.is_zero()) continue;
      if (!e.is_proper()) fail(ErrorCode::ImproperEntry, "cannot simulate an improper entry");
      const Polynomial den = e.den();
      std::fill(buf.begin(), buf.end(), 0.0);
      fir_accumulate(e.num(), den.degree(), channel(u, static_cast<Eigen::Index>(j)), buf);
      all_pole_inplace(den, buf);
      auto yi = channel(y, static_cast<Eigen::Index>(i));
      for (std::size_t k = 0; k < buf.size(); ++k) yi[k] += buf[k];
    }
  }
  return y;
}

Signal step_response(const TransferMatrix& t, std::size_t ch, std::size_t samples) {
  if (ch >= t.dim()) fail(ErrorCode::InvalidArgument, "step channel out of range");
  Signal r = Signal::Zero(static_cast<Eigen::Index>(t.dim()), static_cast<Eigen::Index>(samples));
  r.row(static_cast<Eigen::Index>(ch)).setOnes();
  return simulate(t, r);
}

StabilityReport is_stable(const TransferMatrix& t) {
  std::vector<Complex> all;
  for (const auto& e : t.grid()) all.insert(all.end(), e.poles().begin(), e.poles().end());
  StabilityReport rep;
  for (const auto& c : cluster_roots(all, 1e-9)) {
    rep.poles.push_back(c.mean);
    if (std::abs(c.mean) >= 1.0) rep.stable = false;
  }
  return rep;
}

}  // namespace ocitune

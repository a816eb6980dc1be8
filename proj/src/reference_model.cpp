#include "ocitune/reference_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ocitune/error.hpp"

namespace ocitune {

namespace {

constexpr double kDeflationTol = 1e-9;

Polynomial from_poles(std::span<const double> poles) { return Polynomial::from_real_roots(poles); }

void check_eta(const RefModelSpec& spec, const ParamEta& eta) {
  if (static_cast<std::size_t>(eta.size()) != spec.num_params())
    fail(ErrorCode::DimensionMismatch, "reference-model parameter vector has length " +
                                           std::to_string(eta.size()) + ", expected " +
                                           std::to_string(spec.num_params()));
}

// Numerator of one entry with its gradient; `offset` is the entry's first
// slot in eta.
PolyGrad entry_numerator(const RefEntry& e, const ParamEta& eta, std::size_t offset) {
  const std::size_t np = static_cast<std::size_t>(eta.size());
  switch (e.kind) {
    case RefEntry::Kind::Zero:
      return PolyGrad(Polynomial(), np);
    case RefEntry::Kind::Fixed:
      return PolyGrad(e.num, np);
    case RefEntry::Kind::GainConstrained: {
      const double g = eta(static_cast<Eigen::Index>(offset));
      const double d1 = e.den(1.0);
      PolyGrad r(Polynomial{g, d1 - g}, np);
      r.grad[offset] = Polynomial{1.0, -1.0};
      return r;
    }
    case RefEntry::Kind::Free: {
      const int m = static_cast<int>(e.coeffs.size()) - 1;
      std::vector<double> c(e.coeffs.size());
      std::size_t slot = offset;
      PolyGrad r(Polynomial(), np);
      for (std::size_t i = 0; i < e.coeffs.size(); ++i) {
        if (e.coeffs[i].free) {
          c[i] = eta(static_cast<Eigen::Index>(slot));
          r.grad[slot] = e.factor * Polynomial::monomial(m - static_cast<int>(i));
          ++slot;
        } else {
          c[i] = e.coeffs[i].value;
        }
      }
      r.value = e.factor * Polynomial(c);
      return r;
    }
  }
  return PolyGrad(Polynomial(), np);
}

Polynomial exact_quotient(const Polynomial& a, const Polynomial& b) {
  const DivResult d = poly_divmod(a, b);
  if (d.remainder.max_abs() > 1e-8 * std::max(1.0, a.max_abs()))
    fail(ErrorCode::InvalidArgument, "entry denominator does not divide the common denominator");
  return d.quotient;
}

PolyGrad deflate(const PolyGrad& p, int times, const char* what) {
  PolyGrad out(Polynomial(), p.nparams());
  if (times <= 0) {
    out = p;
    return out;
  }
  const Deflation d = deflate_at_one(p.value, times);
  if (!p.value.is_zero() && d.max_rel_remainder > kDeflationTol)
    fail(ErrorCode::SingularIminusTd,
         std::string("unit-root factor of ") + what + " does not deflate cleanly");
  out.value = p.value.is_zero() ? Polynomial() : d.quotient;
  for (std::size_t k = 0; k < p.grad.size(); ++k)
    if (!p.grad[k].is_zero()) out.grad[k] = deflate_at_one(p.grad[k], times).quotient;
  return out;
}

// W = a I - M, det W, adj W with eta-gradients.
struct WForm {
  PolyGrad det;
  Grid<PolyGrad> adj;
  Grid<PolyGrad> M;
};

WForm w_form(const RefModelSpec& spec, const ParamEta& eta) {
  const std::size_t n = spec.dim();
  const std::size_t np = spec.num_params();
  WForm f;
  f.M = refmodel_numerators(spec, eta);
  Grid<PolyGrad> w(n, n, PolyGrad(Polynomial(), np));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      w(i, j) = PolyGrad(Polynomial(), np) - f.M(i, j);
      if (i == j) w(i, j).value += spec.common_denominator();
    }
  const PolyGrad one(Polynomial{1.0}, np);
  f.det = determinant(w, one);
  f.adj = adjugate(w, one);
  return f;
}

}  // namespace

RefEntry RefEntry::zero() { return RefEntry{}; }

RefEntry RefEntry::fixed(Polynomial num, Polynomial den) {
  if (den.is_zero()) fail(ErrorCode::ZeroPolynomial, "reference entry with zero denominator");
  RefEntry e;
  e.kind = num.is_zero() ? Kind::Zero : Kind::Fixed;
  e.num = std::move(num);
  e.den = std::move(den);
  return e;
}

RefEntry RefEntry::free(Polynomial den, Polynomial factor, std::vector<CoefficientSlot> coeffs) {
  if (den.is_zero() || factor.is_zero())
    fail(ErrorCode::ZeroPolynomial, "reference entry with zero denominator or factor");
  if (coeffs.empty()) fail(ErrorCode::InvalidArgument, "free reference entry without coefficients");
  RefEntry e;
  e.kind = Kind::Free;
  e.den = std::move(den);
  e.factor = std::move(factor);
  e.coeffs = std::move(coeffs);
  return e;
}

RefEntry RefEntry::gain_constrained(std::span<const double> poles, int relative_degree) {
  if (relative_degree < 1) fail(ErrorCode::InvalidArgument, "relative degree must be >= 1");
  RefEntry e;
  e.kind = Kind::GainConstrained;
  e.den = from_poles(poles) * Polynomial::monomial(relative_degree - 1);
  if (std::abs(e.den(1.0)) < 1e-12)
    fail(ErrorCode::InvalidArgument, "gain-constrained entry has a pole at q = 1");
  return e;
}

std::size_t RefEntry::num_params() const {
  switch (kind) {
    case Kind::GainConstrained:
      return 1;
    case Kind::Free:
      return static_cast<std::size_t>(
          std::count_if(coeffs.begin(), coeffs.end(), [](const CoefficientSlot& c) { return c.free; }));
    default:
      return 0;
  }
}

RefModelSpec::RefModelSpec(RefStructure structure, Grid<RefEntry> entries,
                           std::size_t distinguished_row)
    : structure_(structure), entries_(std::move(entries)), row_k_(distinguished_row) {
  const std::size_t n = entries_.rows();
  if (n == 0 || entries_.cols() != n)
    fail(ErrorCode::DimensionMismatch, "reference model must be square and nonempty");
  if (structure_ == RefStructure::BlockTriangular && row_k_ >= n)
    fail(ErrorCode::InvalidArgument, "distinguished row out of range");

  std::vector<Polynomial> dens;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const RefEntry& e = entries_(i, j);
      const bool coupling_allowed =
          structure_ == RefStructure::BlockTriangular && i == row_k_;
      if (i != j && !coupling_allowed && e.kind != RefEntry::Kind::Zero) {
        std::ostringstream os;
        os << "entry (" << i + 1 << "," << j + 1 << ") must be zero for this structure";
        fail(ErrorCode::InvalidArgument, os.str());
      }
      if (e.kind == RefEntry::Kind::Zero) continue;
      dens.push_back(e.den);
      // Relative degree check on the numerator template.
      int num_deg = 0;
      if (e.kind == RefEntry::Kind::Fixed) num_deg = e.num.degree();
      if (e.kind == RefEntry::Kind::GainConstrained) num_deg = 1;
      if (e.kind == RefEntry::Kind::Free)
        num_deg = e.factor.degree() + static_cast<int>(e.coeffs.size()) - 1;
      if (num_deg >= e.den.degree()) {
        std::ostringstream os;
        os << "entry (" << i + 1 << "," << j + 1 << ") must be strictly proper";
        fail(ErrorCode::ImproperEntry, os.str());
      }
      const std::size_t np = e.num_params();
      const int top = (e.kind == RefEntry::Kind::Free) ? static_cast<int>(e.coeffs.size()) - 1 : 0;
      for (std::size_t s = 0, seen = 0; seen < np; ++s) {
        std::ostringstream os;
        os << "T" << i + 1 << j + 1;
        if (e.kind == RefEntry::Kind::GainConstrained) {
          os << "[gain]";
        } else {
          if (!e.coeffs[s].free) continue;
          os << "[q^" << top - static_cast<int>(s) << "]";
        }
        slot_names_.push_back(os.str());
        ++seen;
      }
      num_params_ += np;
    }
  }
  a_ = dens.empty() ? Polynomial{1.0} : poly_lcm(dens);

  // Generic unit-root multiplicity from a deterministic probe point.
  ParamEta probe(static_cast<Eigen::Index>(num_params_));
  for (Eigen::Index k = 0; k < probe.size(); ++k)
    probe(k) = 0.137 * static_cast<double>(k + 1) * ((k % 2) ? -1.0 : 1.0);
  const WForm f = w_form(*this, probe);
  if (f.det.value.is_zero()) fail(ErrorCode::SingularIminusTd, "I - T_d is identically singular");
  unit_mult_ = multiplicity_at_one(f.det.value);
}

std::string RefModelSpec::slot_name(std::size_t k) const { return slot_names_.at(k); }

Grid<PolyGrad> refmodel_numerators(const RefModelSpec& spec, const ParamEta& eta) {
  check_eta(spec, eta);
  const std::size_t n = spec.dim();
  const std::size_t np = spec.num_params();
  Grid<PolyGrad> m(n, n, PolyGrad(Polynomial(), np));
  std::size_t offset = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const RefEntry& e = spec.entries()(i, j);
      if (e.kind == RefEntry::Kind::Zero) continue;
      const Polynomial cof = exact_quotient(spec.common_denominator(), e.den.monic());
      const double scale = 1.0 / e.den.leading();
      m(i, j) = (cof * scale) * entry_numerator(e, eta, offset);
      offset += e.num_params();
    }
  }
  return m;
}

TransferMatrix build_refmodel(const RefModelSpec& spec, const ParamEta& eta) {
  check_eta(spec, eta);
  const std::size_t n = spec.dim();
  TransferMatrix t(n);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const RefEntry& e = spec.entries()(i, j);
      if (e.kind == RefEntry::Kind::Zero) continue;
      const PolyGrad num = entry_numerator(e, eta, offset);
      offset += e.num_params();
      if (!num.value.is_zero()) t(i, j) = RationalFunction(num.value, e.den);
    }
  }
  return t;
}

TransferMatrix build_Ld(const TransferMatrix& td) {
  const TransferMatrix w = TransferMatrix::identity(td.dim()) - td;
  if (tm_det(w).is_zero()) fail(ErrorCode::SingularIminusTd, "I - T_d is singular");
  return td * tm_inverse(w);
}

LdPolynomialForm ld_polynomial_form(const RefModelSpec& spec, const ParamEta& eta) {
  const std::size_t n = spec.dim();
  const std::size_t np = spec.num_params();
  const WForm f = w_form(spec, eta);
  if (f.det.value.is_zero()) fail(ErrorCode::SingularIminusTd, "I - T_d is singular");
  Grid<PolyGrad> q = matmul(f.M, f.adj, PolyGrad(Polynomial(), np));

  const int k = spec.unit_root_multiplicity();
  LdPolynomialForm out;
  out.e = deflate(f.det, k, "det(I - T_d)");
  out.Q = Grid<PolyGrad>(n, n, PolyGrad(Polynomial(), np));
  const Polynomial q_minus_1{1.0, -1.0};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out.Q(i, j) = (k == 0) ? q_minus_1 * q(i, j) : deflate(q(i, j), k - 1, "T_d adj(I - T_d)");

  for (const Complex& r : poly_roots(out.e.value)) {
    if (std::abs(r) >= 1.0 - 1e-9) {
      std::ostringstream os;
      os << "reference filter pole " << r << " is not strictly stable";
      fail(ErrorCode::UnstableReferenceFilter, os.str());
    }
  }
  return out;
}

std::vector<TransferMatrix> eta_jacobian(const RefModelSpec& spec, const ParamEta& eta) {
  check_eta(spec, eta);
  const std::size_t n = spec.dim();
  const TransferMatrix td = build_refmodel(spec, eta);
  const TransferMatrix s = tm_inverse(TransferMatrix::identity(n) - td);
  std::vector<TransferMatrix> out;
  std::size_t offset = 0;
  std::vector<TransferMatrix> dtd(spec.num_params(), TransferMatrix(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const RefEntry& e = spec.entries()(i, j);
      if (e.kind == RefEntry::Kind::Zero) continue;
      const PolyGrad num = entry_numerator(e, eta, offset);
      for (std::size_t k = offset; k < offset + e.num_params(); ++k)
        dtd[k](i, j) = RationalFunction(num.grad[k], e.den);
      offset += e.num_params();
    }
  }
  for (const TransferMatrix& d : dtd) out.push_back(s * d * s);
  return out;
}

std::vector<Complex> extract_nmp_zero(const RefModelSpec& spec, const ParamEta& eta) {
  check_eta(spec, eta);
  std::vector<Complex> found;
  std::size_t offset = 0;
  for (const RefEntry& e : spec.entries()) {
    if (e.kind == RefEntry::Kind::GainConstrained || e.kind == RefEntry::Kind::Free) {
      Polynomial free_part;
      if (e.kind == RefEntry::Kind::GainConstrained) {
        const double g = eta(static_cast<Eigen::Index>(offset));
        free_part = Polynomial{g, e.den(1.0) - g};
      } else {
        std::vector<double> c(e.coeffs.size());
        std::size_t slot = offset;
        for (std::size_t i = 0; i < c.size(); ++i)
          c[i] = e.coeffs[i].free ? eta(static_cast<Eigen::Index>(slot++)) : e.coeffs[i].value;
        free_part = Polynomial(c);
      }
      if (!free_part.is_zero() && free_part.degree() >= 1)
        for (const Complex& r : poly_roots(free_part))
          if (std::abs(r) > 1.0) found.push_back(r);
    }
    offset += e.num_params();
  }
  std::vector<Complex> out;
  for (const auto& c : cluster_roots(found, 1e-6)) out.push_back(c.mean);
  std::sort(out.begin(), out.end(),
            [](const Complex& a, const Complex& b) { return std::abs(a) > std::abs(b); });
  return out;
}

double verify_zero_constraint(const TransferMatrix& td, Complex z, const Eigen::VectorXcd& y_dir) {
  const Eigen::MatrixXcd t = tm_eval(td, z);
  if (y_dir.size() != t.rows()) fail(ErrorCode::DimensionMismatch, "direction length");
  return (y_dir.adjoint() * t).norm();
}

double coupling_zero_from_direction(Complex z, const Eigen::VectorXcd& y_dir, std::size_t k,
                                    std::size_t j, double gain_j,
                                    std::span<const double> jj_poles,
                                    std::span<const double> kk_poles) {
  const auto n = static_cast<std::size_t>(y_dir.size());
  if (k >= n || j >= n || k == j) fail(ErrorCode::InvalidArgument, "coupling indices");
  if (std::abs(y_dir(static_cast<Eigen::Index>(k))) < 1e-12)
    fail(ErrorCode::ZeroOutputComponent, "output direction has no component on the coupling row");
  if (gain_j == 0.0) fail(ErrorCode::InvalidArgument, "coupling gain must be nonzero");
  const Polynomial djj = from_poles(jj_poles);
  const Polynomial dkk = from_poles(kk_poles);
  const Complex tjj = djj(1.0) / djj(z);
  const Complex tbar = (z - 1.0) / (djj(z) * dkk(z));
  // Column j of y^H T_d(z) must vanish.
  const Complex yk = std::conj(y_dir(static_cast<Eigen::Index>(k)));
  const Complex yj = std::conj(y_dir(static_cast<Eigen::Index>(j)));
  const Complex zkj = z + yj * tjj / (yk * gain_j * tbar);
  return zkj.real();
}

}  // namespace ocitune

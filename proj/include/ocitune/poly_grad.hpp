#pragma once

#include <cstddef>
#include <vector>

#include "ocitune/polynomial.hpp"

namespace ocitune {

/// Polynomial carrying exact first derivatives with respect to a parameter
/// vector (forward-mode dual number over the polynomial ring). Plugs into the
/// Grid determinant/adjugate templates to differentiate det and adj exactly.
struct PolyGrad {
  Polynomial value;
  std::vector<Polynomial> grad;

  PolyGrad() = default;
  PolyGrad(Polynomial v, std::size_t nparams)
      : value(std::move(v)), grad(nparams, Polynomial()) {}

  std::size_t nparams() const { return grad.size(); }
};

inline PolyGrad operator+(const PolyGrad& a, const PolyGrad& b) {
  PolyGrad r(a.value + b.value, a.nparams());
  for (std::size_t k = 0; k < r.grad.size(); ++k) r.grad[k] = a.grad[k] + b.grad[k];
  return r;
}

inline PolyGrad operator-(const PolyGrad& a, const PolyGrad& b) {
  PolyGrad r(a.value - b.value, a.nparams());
  for (std::size_t k = 0; k < r.grad.size(); ++k) r.grad[k] = a.grad[k] - b.grad[k];
  return r;
}

inline PolyGrad operator*(const PolyGrad& a, const PolyGrad& b) {
  PolyGrad r(a.value * b.value, a.nparams());
  for (std::size_t k = 0; k < r.grad.size(); ++k) {
    const bool za = a.grad[k].is_zero(), zb = b.grad[k].is_zero();
    if (za && zb) continue;
    if (za) r.grad[k] = a.value * b.grad[k];
    else if (zb) r.grad[k] = a.grad[k] * b.value;
    else r.grad[k] = a.grad[k] * b.value + a.value * b.grad[k];
  }
  return r;
}

inline PolyGrad operator*(const Polynomial& p, const PolyGrad& a) {
  PolyGrad r(p * a.value, a.nparams());
  for (std::size_t k = 0; k < r.grad.size(); ++k)
    if (!a.grad[k].is_zero()) r.grad[k] = p * a.grad[k];
  return r;
}

}  // namespace ocitune

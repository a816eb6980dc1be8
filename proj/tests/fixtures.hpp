#pragma once

#include <cmath>
#include <initializer_list>
#include <vector>

#include "ocitune/reference_model.hpp"

namespace ocitune::testing {

inline std::vector<double> v(std::initializer_list<double> x) { return x; }

inline RefModelSpec diagonal_spec() {
  Grid<RefEntry> e(2, 2);
  e(0, 0) = RefEntry::gain_constrained(v({0.6, 0.8}));
  e(1, 1) = RefEntry::gain_constrained(v({0.6, 0.7}));
  return RefModelSpec(RefStructure::Diagonal, e);
}

inline RefModelSpec block_spec() {
  Grid<RefEntry> e(2, 2);
  e(0, 0) = RefEntry::gain_constrained(v({0.8, 0.6}));
  e(0, 1) = RefEntry::free(Polynomial::from_real_roots(v({0.8, 0.6, 0.75})), Polynomial{1.0, -1.0},
                           {CoefficientSlot::open(), CoefficientSlot::open()});
  e(1, 1) = RefEntry::fixed(Polynomial{0.25}, Polynomial{1.0, -0.75});
  return RefModelSpec(RefStructure::BlockTriangular, e, 0);
}

inline RefModelSpec mismatched_spec() {
  Grid<RefEntry> e(2, 2);
  e(0, 0) = RefEntry::gain_constrained(v({0.6, 0.6}));
  e(0, 1) = RefEntry::free(Polynomial::from_real_roots(v({0.6, 0.6, 0.6})), Polynomial{1.0, -1.0},
                           {CoefficientSlot::pinned(1.0), CoefficientSlot::open()});
  e(1, 1) = RefEntry::fixed(Polynomial{0.4}, Polynomial{1.0, -0.6});
  return RefModelSpec(RefStructure::BlockTriangular, e, 0);
}

inline ParamEta eta_of(std::initializer_list<double> x) {
  ParamEta e(static_cast<Eigen::Index>(x.size()));
  Eigen::Index i = 0;
  for (double d : x) e(i++) = d;
  return e;
}

// Coefficient agreement with an absolute floor for gradients that vanish.
inline bool grad_close(const Polynomial& fd, const Polynomial& an) {
  double gap = 0.0;
  for (int pw = 0; pw <= std::max(fd.degree(), an.degree()); ++pw)
    gap = std::max(gap, std::abs(fd.coeff_of_power(pw) - an.coeff_of_power(pw)));
  return gap <= 1e-6 * std::max({fd.max_abs(), an.max_abs(), 1e-3});
}

inline double max_dev(const TransferMatrix& a, const TransferMatrix& b) {
  double d = 0.0;
  for (int k = 0; k < 32; ++k) {
    const Complex z = std::polar(1.05, 2.0 * M_PI * (k + 0.3) / 32.0);
    d = std::max(d, (tm_eval(a, z) - tm_eval(b, z)).cwiseAbs().maxCoeff());
  }
  return d;
}

}  // namespace ocitune::testing

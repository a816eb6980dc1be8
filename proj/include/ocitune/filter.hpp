#pragma once

#include <span>
#include <vector>

#include "ocitune/polynomial.hpp"

namespace ocitune {

/// Zero-state response of b(q)/a(q) to x. Both polynomials are in descending
/// powers of q; deg b <= deg a is required (throws ImproperEntry otherwise).
/// The recursion is the direct-form difference equation obtained by
/// multiplying numerator and denominator by q^{-deg a}.
std::vector<double> filter(const Polynomial& b, const Polynomial& a,
                           std::span<const double> x);

/// out[t] += sum_k b_k x[t-k] with b right-aligned to `order`+1 taps.
void fir_accumulate(const Polynomial& b, int order, std::span<const double> x,
                    std::span<double> out);

/// In place all-pole recursion a(q) y = q^{deg a} v.
void all_pole_inplace(const Polynomial& a, std::span<double> v);

}  // namespace ocitune

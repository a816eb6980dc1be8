#include "ocitune/filter.hpp"

#include "ocitune/error.hpp"

namespace ocitune {

void fir_accumulate(const Polynomial& b, int order, std::span<const double> x,
                    std::span<double> out) {
  if (b.is_zero()) return;
  if (b.degree() > order) fail(ErrorCode::ImproperEntry, "numerator degree exceeds filter order");
  const auto& c = b.coeffs();
  // Coefficient c[i] multiplies q^{deg b - i}, i.e. delay (order - deg b + i).
  const std::size_t lag0 = static_cast<std::size_t>(order - b.degree());
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double g = c[i];
    if (g == 0.0) continue;
    const std::size_t lag = lag0 + i;
    for (std::size_t t = lag; t < n; ++t) out[t] += g * x[t - lag];
  }
}

void all_pole_inplace(const Polynomial& a, std::span<double> v) {
  if (a.is_zero()) fail(ErrorCode::ZeroPolynomial, "filter denominator is zero");
  const auto& c = a.coeffs();
  const double inv0 = 1.0 / c[0];
  const std::size_t m = c.size();
  const std::size_t n = v.size();
  for (std::size_t t = 0; t < n; ++t) {
    double acc = v[t];
    const std::size_t kmax = std::min(m - 1, t);
    for (std::size_t k = 1; k <= kmax; ++k) acc -= c[k] * v[t - k];
    v[t] = acc * inv0;
  }
}

std::vector<double> filter(const Polynomial& b, const Polynomial& a,
                           std::span<const double> x) {
  if (b.degree() > a.degree() && !b.is_zero())
    fail(ErrorCode::ImproperEntry, "improper filter " + b.str() + " / " + a.str());
  std::vector<double> y(x.size(), 0.0);
  fir_accumulate(b, a.degree(), x, y);
  all_pole_inplace(a, y);
  return y;
}

}  // namespace ocitune

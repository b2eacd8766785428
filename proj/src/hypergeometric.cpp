#include "onebit/hypergeometric.hpp"

#include <cmath>

namespace onebit {

double hyp_pfq(std::span<const double> a, std::span<const double> b, double x, const SeriesOptions& opts) {
  for (double bj : b) {
    if (bj <= 0.0 && bj == std::floor(bj)) throw std::invalid_argument("hyp_pfq: nonpositive integer lower parameter");
  }
  if (x == 0.0) return 1.0;

  CompensatedSum sum;
  long double term = 1.0L;
  sum.add(term);
  for (std::size_t n = 0; n < opts.max_terms; ++n) {
    long double ratio = static_cast<long double>(x) / static_cast<long double>(n + 1);
    for (double ai : a) ratio *= static_cast<long double>(ai) + n;
    for (double bj : b) ratio /= static_cast<long double>(bj) + n;
    term *= ratio;
    if (term == 0.0L) return static_cast<double>(sum.value());
    sum.add(term);
    const bool decreasing = std::fabs(static_cast<double>(ratio)) < 1.0;
    if (decreasing && std::fabs(term) < opts.rel_tol * std::fabs(sum.value())) {
      return static_cast<double>(sum.value());
    }
  }
  throw SeriesNotConverged("hyp_pfq: iteration cap reached", sum.value(), term, opts.max_terms);
}

}  // namespace onebit

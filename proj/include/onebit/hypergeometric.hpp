#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

namespace onebit {

/// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void add(long double v) noexcept {
    const long double t = sum_ + v;
    if (fabsl(sum_) >= fabsl(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  [[nodiscard]] long double value() const noexcept { return sum_ + comp_; }

 private:
  static long double fabsl(long double v) noexcept { return v < 0 ? -v : v; }
  long double sum_ = 0.0L;
  long double comp_ = 0.0L;
};

struct SeriesOptions {
  double rel_tol = 1e-15;
  std::size_t max_terms = 100000;
};

class SeriesNotConverged : public std::runtime_error {
 public:
  SeriesNotConverged(const std::string& what, long double partial, long double last_term, std::size_t terms)
      : std::runtime_error(what + " (partial sum " + std::to_string(static_cast<double>(partial)) +
                           ", last term " + std::to_string(static_cast<double>(last_term)) + ", " +
                           std::to_string(terms) + " terms)"),
        partial_sum(partial),
        last_term(last_term),
        terms(terms) {}
  long double partial_sum;
  long double last_term;
  std::size_t terms;
};

/// Generalized hypergeometric series pFq(a; b; x) summed directly.
/// Stops once the terms are decreasing and |term| < rel_tol * |sum|.
/// Throws std::invalid_argument if some b is a nonpositive integer,
/// SeriesNotConverged if the term cap is reached.
double hyp_pfq(std::span<const double> a, std::span<const double> b, double x, const SeriesOptions& opts = {});

}  // namespace onebit

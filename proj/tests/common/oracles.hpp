#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "onebit/gamp.hpp"
#include "onebit/pipeline.hpp"

namespace onebit::oracles {

using boost::math::quadrature::gauss_kronrod;

inline double Phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Posterior moments of z ~ N(p, tau) given sign(z + w) = y, by adaptive quadrature.
inline ScalarPosterior output_oracle(double p, double tau, int y, double nv) {
  const double sd = std::sqrt(tau);
  auto lik = [&](double z) { return Phi(y * z / std::sqrt(nv)); };
  auto g = [&](double t) { return std::exp(-t * t / 2) * lik(p + sd * t); };
  const double a = -14, b = 14;
  const double z0 = gauss_kronrod<double, 61>::integrate(g, a, b, 20, 1e-14);
  const double z1 = gauss_kronrod<double, 61>::integrate([&](double t) { return t * g(t); }, a, b, 20, 1e-14);
  const double z2 = gauss_kronrod<double, 61>::integrate([&](double t) { return t * t * g(t); }, a, b, 20, 1e-14);
  const double m = z1 / z0;
  return {p + sd * m, tau * (z2 / z0 - m * m)};
}

/// Posterior of x under (1 - rho) delta + rho CN(mu, s2) from r = x + CN(0, tau); the slab
/// integrals are done by nested quadrature around the slab posterior mean.
inline InputPosterior input_oracle(cplx r, double tau, const BGPrior& pr) {
  const double s2 = pr.var;
  const cplx c = (s2 * r + tau * pr.mean) / (s2 + tau);
  const double h = std::sqrt(s2 * tau / (s2 + tau) / 2);  // per-part posterior sd
  // log of the unnormalized slab integrand at the centre
  const double lc = -std::norm(c - pr.mean) / s2 - std::norm(r - c) / tau;
  auto f = [&](double u, double v, int moment) {
    const cplx x = c + h * cplx(u, v);
    const double e = std::exp(-std::norm(x - pr.mean) / s2 - std::norm(r - x) / tau - lc);
    switch (moment) {
      case 0: return e;
      case 1: return e * x.real();
      case 2: return e * x.imag();
      default: return e * std::norm(x);
    }
  };
  double mom[4];
  for (int m = 0; m < 4; ++m) {
    auto inner = [&](double u) {
      return gauss_kronrod<double, 61>::integrate([&](double v) { return f(u, v, m); }, -12, 12, 15, 1e-14);
    };
    mom[m] = gauss_kronrod<double, 61>::integrate(inner, -12, 12, 15, 1e-14);
  }
  // log Z_slab = lc + log(h^2 I0) - log(pi^2 s2 tau)
  const double log_slab = lc + std::log(h * h * mom[0]) - std::log(std::numbers::pi * std::numbers::pi * s2 * tau);
  const double log_spike = -std::norm(r) / tau - std::log(std::numbers::pi * tau);
  InputPosterior out;
  if (pr.rho >= 1.0) {
    out.activity = 1.0;
  } else if (pr.rho <= 0.0) {
    out.activity = 0.0;
  } else {
    const double llr = std::log(pr.rho) - std::log1p(-pr.rho) + log_slab - log_spike;
    out.activity = 1.0 / (1.0 + std::exp(-llr));
  }
  const cplx sm(mom[1] / mom[0], mom[2] / mom[0]);
  const double s_sq = mom[3] / mom[0];
  out.mean = out.activity * sm;
  out.var = out.activity * s_sq - std::norm(out.mean);
  return out;
}

/// Dense steering column of a grid cell, entries exp(+j 2 pi (k m_d / M_d + l m_sp / M_sp + n m_r / M_r)).
inline std::vector<cplx> steering_column(const GridIndex& c, const GridSpec& g) {
  const Shape3 B = g.base, M = g.dims();
  std::vector<cplx> col(B.size());
  for (std::size_t k = 0; k < B.d0; ++k)
    for (std::size_t l = 0; l < B.d1; ++l)
      for (std::size_t n = 0; n < B.d2; ++n) {
        const double ph = static_cast<double>(k * c.d) / M.d0 + static_cast<double>(l * c.sp) / M.d1 +
                          static_cast<double>(n * c.r) / M.d2;
        col[B.index(k, l, n)] = std::polar(1.0, 2 * std::numbers::pi * ph);
      }
  return col;
}

}  // namespace onebit::oracles

#include "onebit/window.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "onebit/fft.hpp"

namespace onebit {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> chebyshev(std::size_t M, double atten_db) {
  const double order = static_cast<double>(M - 1);
  const double beta = std::cosh(std::acosh(std::pow(10.0, std::abs(atten_db) / 20.0)) / order);
  std::vector<cplx> p(M);
  for (std::size_t k = 0; k < M; ++k) {
    const double x = beta * std::cos(kPi * static_cast<double>(k) / static_cast<double>(M));
    double v;
    if (x > 1.0) {
      v = std::cosh(order * std::acosh(x));
    } else if (x < -1.0) {
      v = (M % 2 == 1 ? 1.0 : -1.0) * std::cosh(order * std::acosh(-x));
    } else {
      v = std::cos(order * std::acos(x));
    }
    p[k] = v;
    if (M % 2 == 0) p[k] *= std::polar(1.0, kPi / static_cast<double>(M) * static_cast<double>(k));
  }
  fft::transform(p, fft::Direction::Forward);
  std::vector<double> w;
  w.reserve(M);
  if (M % 2 == 1) {
    const std::size_t n = (M + 1) / 2;
    for (std::size_t i = n - 1; i >= 1; --i) w.push_back(p[i].real());
    for (std::size_t i = 0; i < n; ++i) w.push_back(p[i].real());
  } else {
    const std::size_t n = M / 2 + 1;
    for (std::size_t i = n - 1; i >= 1; --i) w.push_back(p[i].real());
    for (std::size_t i = 1; i < n; ++i) w.push_back(p[i].real());
  }
  return w;
}

std::vector<double> taylor(std::size_t M, double sll_db, int nbar) {
  if (nbar < 1) throw std::invalid_argument("Taylor window needs nbar >= 1");
  const double B = std::pow(10.0, std::abs(sll_db) / 20.0);
  const double A = std::acosh(B) / kPi;
  const double s2 = nbar * nbar / (A * A + (nbar - 0.5) * (nbar - 0.5));
  std::vector<double> Fm(static_cast<std::size_t>(nbar - 1));
  for (int mi = 1; mi < nbar; ++mi) {
    const double m2 = static_cast<double>(mi) * mi;
    double numer = (mi % 2 == 1) ? 1.0 : -1.0;
    double denom = 2.0;
    for (int j = 1; j < nbar; ++j) {
      numer *= 1.0 - m2 / s2 / (A * A + (j - 0.5) * (j - 0.5));
      if (j != mi) denom *= 1.0 - m2 / (static_cast<double>(j) * j);
    }
    Fm[static_cast<std::size_t>(mi - 1)] = numer / denom;
  }
  std::vector<double> w(M);
  for (std::size_t n = 0; n < M; ++n) {
    double v = 1.0;
    for (int mi = 1; mi < nbar; ++mi) {
      v += 2.0 * Fm[static_cast<std::size_t>(mi - 1)] *
           std::cos(2.0 * kPi * mi * (static_cast<double>(n) - M / 2.0 + 0.5) / static_cast<double>(M));
    }
    w[n] = v;
  }
  return w;
}

}  // namespace

std::vector<double> make_window(const WindowSpec& spec, std::size_t length) {
  if (length < 2) throw std::invalid_argument("window length must be >= 2");
  std::vector<double> w;
  switch (spec.kind) {
    case WindowKind::Rectangular: return std::vector<double>(length, 1.0);
    case WindowKind::Chebyshev: w = chebyshev(length, spec.sidelobe_db); break;
    case WindowKind::Taylor: w = taylor(length, spec.sidelobe_db, spec.nbar); break;
    default: throw std::invalid_argument("unsupported window kind");
  }
  const double peak = *std::max_element(w.begin(), w.end());
  for (double& v : w) v /= peak;
  return w;
}

double processing_loss_db(const std::vector<double>& w) {
  const double s1 = std::accumulate(w.begin(), w.end(), 0.0);
  double s2 = 0.0;
  for (double v : w) s2 += v * v;
  return 10.0 * std::log10(static_cast<double>(w.size()) * s2 / (s1 * s1));
}

double coherent_gain_loss_db(const std::vector<double>& w) {
  const double s1 = std::accumulate(w.begin(), w.end(), 0.0);
  return -20.0 * std::log10(s1 / static_cast<double>(w.size()));
}

double peak_sidelobe_db(const std::vector<double>& w, std::size_t pad_factor) {
  const std::size_t n = w.size() * pad_factor;
  std::vector<cplx> x(n, cplx{});
  for (std::size_t i = 0; i < w.size(); ++i) x[i] = w[i];
  fft::transform(x, fft::Direction::Forward);
  std::vector<double> mag(n);
  for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(x[i]);
  const double peak = mag[0];
  // walk down the main lobe to its first local minimum on the positive-frequency side
  std::size_t edge = 1;
  while (edge + 1 < n / 2 && mag[edge + 1] < mag[edge]) ++edge;
  double side = 0.0;
  for (std::size_t i = edge; i <= n / 2; ++i) side = std::max(side, mag[i]);
  return 20.0 * std::log10(side / peak);
}

}  // namespace onebit

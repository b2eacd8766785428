#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"
#include "onebit/harmonics.hpp"

using namespace onebit;
using namespace onebit::harmonics;

namespace {

double amp_from_snr(double snr_db) { return std::sqrt(2.0 * std::pow(10.0, snr_db / 10.0)); }

/// Line amplitude from the Bessel-integral representation of E[sign(.)]:
/// 2 C_k = (4/pi) j^{k-1} int_0^inf J_{k1}(A1 v) J_{k2}(A2 v) exp(-v^2 / 2) dv / v  (sigma = 1),
/// present on the complex csign output when k1 + k2 = 1 (mod 4).
cplx quadrature_line(int k1, int k2, double A1, double A2) {
  auto f = [&](double v) {
    if (v == 0.0) return 0.0;
    return boost::math::cyl_bessel_j(k1, A1 * v) * boost::math::cyl_bessel_j(k2, A2 * v) * std::exp(-v * v / 2) / v;
  };
  const double I = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 14.0, 15, 1e-14);
  const int k = k1 + k2;
  cplx jp = 1.0;
  for (int i = 0; i < ((k - 1) % 4 + 4) % 4; ++i) jp *= cplx(0, 1);
  return 4.0 / std::numbers::pi * jp * I;
}

std::set<std::vector<int>> weights(const std::vector<HarmonicLine>& lines, int order) {
  std::set<std::vector<int>> out;
  for (const auto& l : lines)
    if (l.order == order) out.insert(l.k);
  return out;
}

}  // namespace

TEST_CASE("alpha_m exact values") {
  CHECK(alpha_m(1) == Rational{1, 1});
  CHECK(alpha_m(3) == Rational{1, 24});
  CHECK(alpha_m(5) == Rational{1, 640});
  CHECK(alpha_m(7) == Rational{1, 7 * 6 * 512});
  CHECK_THROWS_AS(alpha_m(2), std::invalid_argument);
  CHECK_THROWS_AS(alpha_m(0), std::invalid_argument);
}

TEST_CASE("double factorial") {
  CHECK(double_factorial(-1) == 1.0);
  CHECK(double_factorial(1) == 1.0);
  CHECK(double_factorial(5) == 15.0);
}

TEST_CASE("zero amplitude and even orders give zero") {
  for (int m = 1; m <= 7; ++m) CHECK(self_coeff_p1(m, 0.0, 1.0) == cplx{});
  for (int m : {2, 4, 6}) {
    CHECK(self_coeff_p1(m, 0.8, 1.0) == cplx{});
    CHECK(self_coeff_p2(m, 0.8, 0.5, 1.0) == cplx{});
    CHECK(self_coeff_equal(m, 0.8, 1.0) == cplx{});
  }
  CHECK(cross_coeff(1, 1, 0.8, 0.6, 1.0) == cplx{});
  CHECK(cross_coeff(2, 2, 0.8, 0.6, 1.0) == cplx{});
  CHECK(cross_coeff_equal(1, 3, 0.8, 1.0) == cplx{});
}

TEST_CASE("low-SNR limits") {
  const double A = amp_from_snr(-20);
  CHECK(std::abs(self_coeff_p1(1, A, 1.0)) == doctest::Approx(std::sqrt(2 / std::numbers::pi) * A).epsilon(0.01));
  for (int m : {1, 3, 5}) {
    CHECK(std::abs(self_coeff_equal(m, A, 1.0)) == doctest::Approx(std::abs(self_coeff_low_snr(m, A, 1.0))).epsilon(0.01));
    CHECK(std::abs(self_coeff_p2(m, A, A, 1.0)) == doctest::Approx(std::abs(self_coeff_low_snr(m, A, 1.0))).epsilon(0.01));
  }
  CHECK(std::abs(cross_coeff(1, 2, A, A, 1.0)) == doctest::Approx(std::abs(cross_coeff_low_snr(1, 2, A, 1.0))).epsilon(0.01));
  CHECK(std::abs(cross_coeff(2, 3, A, A, 1.0)) == doctest::Approx(std::abs(cross_coeff_low_snr(2, 3, A, 1.0))).epsilon(0.01));
}

TEST_CASE("cross line exceeds self line by 20 log 3 at low SNR") {
  const double A = 1e-3;
  const double gap = 20 * std::log10((std::abs(cross_coeff_low_snr(1, 2, A, 1.0)) / 2) / std::abs(self_coeff_low_snr(3, A, 1.0)));
  CHECK(std::abs(gap - 20 * std::log10(3.0)) < 1e-6);
  const double exact = 20 * std::log10((std::abs(cross_coeff(1, 2, A, A, 1.0)) / 2) / std::abs(self_coeff_p2(3, A, A, 1.0)));
  CHECK(std::abs(exact - 9.54) < 0.01);
}

TEST_CASE("single-tone reduction of the two-tone series") {
  for (int m : {1, 3, 5, 7}) {
    for (double snr : {-13.0, -5.0, 0.0, 8.0}) {
      const double A = amp_from_snr(snr);
      const cplx a = self_coeff_p2(m, A, 0.0, 1.0);
      const cplx b = self_coeff_p1(m, A, 1.0);
      CHECK(std::abs(a - b) <= 1e-10 * std::max(1e-300, std::abs(b)));
    }
  }
}

TEST_CASE("equal-amplitude 3F3 forms agree with the general double series") {
  for (double snr : {-13.0, -7.0, -5.0, 0.0, 4.0, 8.0}) {
    const double A = amp_from_snr(snr);
    for (int m : {1, 3, 5}) {
      const cplx a = self_coeff_equal(m, A, 1.0);
      const cplx b = self_coeff_p2(m, A, A, 1.0);
      CHECK(std::abs(a - b) <= 1e-9 * std::abs(b));
    }
    for (auto [m1, m2] : {std::pair{1, 2}, std::pair{2, 1}, std::pair{1, 4}, std::pair{2, 3}}) {
      const cplx a = cross_coeff_equal(m1, m2, A, 1.0);
      const cplx b = cross_coeff(m1, m2, A, A, 1.0);
      CHECK(std::abs(a - b) <= 1e-9 * std::abs(b));
    }
  }
}

TEST_CASE("line amplitudes match Bessel quadrature") {
  const std::vector<std::pair<double, double>> snrs{{-13, -13}, {-5, -5}, {0, -3}, {8, 8}, {2, -10}};
  for (auto [s1, s2] : snrs) {
    const double A1 = amp_from_snr(s1), A2 = amp_from_snr(s2);
    for (const auto& line : harmonic_frequencies({0.1, 0.23}, 5)) {
      const cplx got = line_amplitude(line.k, {A1, A2}, {0.0, 0.0}, 1.0);
      const cplx want = quadrature_line(line.k[0], line.k[1], A1, A2);
      CHECK(std::abs(got - want) <= 1e-9 * std::abs(want) + 1e-15);
    }
  }
}

TEST_CASE("closed-form attenuations") {
  const auto a = attenuation_closed_form(-5.0);
  MESSAGE("self " << a.self_db << " dB, cross " << a.cross_db << " dB at -5 dB");
  CHECK(a.self_db == doctest::Approx(-34.77).epsilon(1e-3));
  CHECK(a.cross_db == doctest::Approx(-23.42).epsilon(1e-3));
  for (double snr : {-25.0, -20.0}) {
    const auto e = attenuation_closed_form(snr);
    const auto l = attenuation_low_snr(snr);
    CHECK(std::abs(e.self_db - l.self_db) < 0.2);
    CHECK(std::abs(e.cross_db - l.cross_db) < 0.2);
  }
}

TEST_CASE("attenuation decreases with order at low SNR") {
  const double A = amp_from_snr(-15);
  double prev = std::abs(self_coeff_p1(1, A, 1.0));
  for (int m = 3; m <= 9; m += 2) {
    const double cur = std::abs(self_coeff_p1(m, A, 1.0));
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("harmonic frequency enumeration") {
  const double w = 0.01;
  auto one = harmonic_frequencies({w}, 3);
  CHECK(weights(one, 1) == std::set<std::vector<int>>{{1}});
  CHECK(weights(one, 3) == std::set<std::vector<int>>{{-3}});
  for (const auto& l : one)
    if (l.order == 3) CHECK(l.frequency == doctest::Approx(-3 * w));

  const auto two = harmonic_frequencies({0.01, 0.03}, 3);
  const std::set<std::vector<int>> want{{-3, 0}, {0, -3}, {2, -1}, {-1, 2}, {-2, -1}, {-1, -2}};
  CHECK(weights(two, 3) == want);
  CHECK(weights(two, 1) == std::set<std::vector<int>>{{1, 0}, {0, 1}});
  CHECK(weights(harmonic_frequencies({w}, 5), 5) == std::set<std::vector<int>>{{5}});
  CHECK(harmonic_frequencies({}, 3).empty());

  const auto folded = harmonic_frequencies({0.4, 0.05}, 3, 1.0);
  for (const auto& l : folded) {
    CHECK(l.frequency >= -0.5);
    CHECK(l.frequency < 0.5);
  }
}

TEST_CASE("Monte Carlo spectrum: single tone 3-order ratio at -5 dB") {
  const auto tones = ToneSpec::from_snr({-5.0}, {0.1234});
  const auto est = mc_spectrum_estimate(tones, 1000000, 400, 17, 3);
  const LineEstimate* f1 = nullptr;
  const LineEstimate* h3 = nullptr;
  for (const auto& l : est.lines) {
    if (l.line.k == std::vector<int>{1}) f1 = &l;
    if (l.line.k == std::vector<int>{-3}) h3 = &l;
  }
  REQUIRE(f1 != nullptr);
  REQUIRE(h3 != nullptr);
  REQUIRE(f1->estimate.has_value());
  REQUIRE(h3->estimate.has_value());
  const double mc = 20 * std::log10(std::abs(*h3->estimate) / std::abs(*f1->estimate));
  const double A = tones.amplitudes[0];
  const double theory = 20 * std::log10(std::abs(self_coeff_p1(3, A, 1.0)) / std::abs(self_coeff_p1(1, A, 1.0)));
  CHECK(std::abs(mc - theory) < 0.5);
  // phase law: the -3 line of a zero-phase tone is a negative real amplitude
  CHECK(h3->estimate->real() < 0);
  CHECK(std::abs(std::arg(-*h3->estimate)) < 0.1);
}

TEST_CASE("Monte Carlo spectrum: two tones and phases") {
  ToneSpec t = ToneSpec::from_snr({-5.0, -5.0}, {26214.0 / 65536, 3277.0 / 65536});
  t.phases = {0.7, -1.2};
  const auto est = mc_spectrum_estimate(t, 1 << 16, 2000, 3, 3);
  for (const auto& l : est.lines) {
    if (l.collided) continue;
    REQUIRE(l.estimate.has_value());
    CHECK(std::abs(*l.estimate) > 5 * est.noise_floor);
    CHECK(std::abs(*l.estimate - l.predicted) < 5 * est.noise_floor);
  }
}

TEST_CASE("Monte Carlo spectrum: zero signal and even orders stay at the noise floor") {
  ToneSpec t;
  t.amplitudes = {0.0};
  t.freqs = {0.1};
  t.phases = {0.0};
  const std::size_t N = 1 << 16;
  const auto est = mc_spectrum_estimate(t, N, 1, 8, 5);
  for (const auto& l : est.lines) CHECK(std::abs(*l.estimate) < 5.0 / std::sqrt(double(N)));

  // an even-order bin (2 w) of a strong tone carries no line
  const auto strong = ToneSpec::from_snr({0.0}, {0.125});
  const std::size_t n = 4096, trials = 200;
  cplx acc{};
  for (std::size_t s = 0; s < trials; ++s) {
    auto x = one_bit_tones(strong, n, 100 + s);
    cplx b{};
    for (std::size_t i = 0; i < n; ++i) b += x[i] * std::polar(1.0, -2 * std::numbers::pi * 0.25 * double(i));
    acc += b / double(n);
  }
  acc /= double(trials);
  CHECK(std::abs(acc) < 4 * std::sqrt(2.0 / double(n * trials)));
}

#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "onebit/window.hpp"

using namespace onebit;

namespace {

/// Dolph-Chebyshev window of odd length from the cosine-sum formula.
std::vector<double> chebyshev_cosine_sum(std::size_t M, double atten_db) {
  const double r = std::pow(10.0, atten_db / 20.0);
  const double order = static_cast<double>(M - 1);
  const double x0 = std::cosh(std::acosh(r) / order);
  auto T = [&](double x) {
    return std::abs(x) <= 1.0 ? std::cos(order * std::acos(x)) : std::cosh(order * std::acosh(std::abs(x)));
  };
  const std::size_t half = (M - 1) / 2;
  std::vector<double> w(M);
  for (std::size_t n = 0; n < M; ++n) {
    const double t = static_cast<double>(n) - static_cast<double>(half);
    double v = r;
    for (std::size_t i = 1; i <= half; ++i) {
      const double th = std::numbers::pi * static_cast<double>(i) / static_cast<double>(M);
      v += 2.0 * T(x0 * std::cos(th)) * std::cos(2.0 * th * t);
    }
    w[n] = v;
  }
  const double peak = *std::max_element(w.begin(), w.end());
  for (double& v : w) v /= peak;
  return w;
}

}  // namespace

TEST_CASE("Chebyshev window matches the cosine-sum form") {
  for (std::size_t M : {7u, 33u, 101u}) {
    const auto got = make_window({WindowKind::Chebyshev, 50.0, 4}, M);
    const auto want = chebyshev_cosine_sum(M, 50.0);
    for (std::size_t i = 0; i < M; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-9));
  }
  // scipy.signal.windows.chebwin(7, 40)
  const std::vector<double> ref{0.15941069, 0.47936432, 0.83973877, 1.0, 0.83973877, 0.47936432, 0.15941069};
  const auto w = make_window({WindowKind::Chebyshev, 40.0, 4}, 7);
  for (std::size_t i = 0; i < 7; ++i) CHECK(w[i] == doctest::Approx(ref[i]).epsilon(1e-7));
}

TEST_CASE("Chebyshev sidelobes sit at the design level") {
  for (std::size_t M : {64u, 65u, 100u}) {
    const auto w = make_window({WindowKind::Chebyshev, 60.0, 4}, M);
    const double sl = peak_sidelobe_db(w);
    CHECK(sl <= -60.0 + 0.01);
    CHECK(sl >= -60.5);
    for (std::size_t i = 0; i < M; ++i) CHECK(w[i] == doctest::Approx(w[M - 1 - i]).epsilon(1e-12));
  }
}

TEST_CASE("Taylor window reference values and sidelobes") {
  // scipy.signal.windows.taylor(8, 4, 30) rescaled to unit peak
  const std::vector<double> ref{0.2793463, 0.5149599, 0.79730153, 0.97561072};
  const auto w = make_window({WindowKind::Taylor, 30.0, 4}, 8);
  for (std::size_t i = 0; i < 4; ++i) CHECK(w[i] == doctest::Approx(ref[i] / ref[3]).epsilon(1e-6));
  const auto t = make_window({WindowKind::Taylor, 35.0, 5}, 256);
  CHECK(peak_sidelobe_db(t) <= -34.0);
  CHECK(peak_sidelobe_db(t) >= -36.0);
}

TEST_CASE("combined SNR loss of the simulation windows") {
  const auto wd = make_window({WindowKind::Chebyshev, 50.0, 4}, 100);
  const auto wsp = make_window({WindowKind::Taylor, 30.0, 4}, 10);
  const auto wr = make_window({WindowKind::Chebyshev, 50.0, 4}, 100);
  const double loss = processing_loss_db(wd) + processing_loss_db(wsp) + processing_loss_db(wr);
  MESSAGE("combined loss " << loss << " dB");
  CHECK(std::abs(loss - 3.6) <= 0.1);
}

TEST_CASE("rectangular window has no loss") {
  const auto w = make_window({WindowKind::Rectangular, 0.0, 4}, 16);
  CHECK(processing_loss_db(w) == doctest::Approx(0.0));
  CHECK(coherent_gain_loss_db(w) == doctest::Approx(0.0));
  CHECK(peak_sidelobe_db(w) < -12.9);
  CHECK(peak_sidelobe_db(w) > -13.4);
}

TEST_CASE("window length below two is rejected") {
  CHECK_THROWS_AS(make_window({WindowKind::Chebyshev, 60.0, 4}, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_window({WindowKind::Taylor, 30.0, 0}, 8), std::invalid_argument);
}

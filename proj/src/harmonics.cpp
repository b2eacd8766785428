#include "onebit/harmonics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "onebit/fft.hpp"
#include "onebit/parallel.hpp"
#include "onebit/rng.hpp"

namespace onebit::harmonics {

namespace {

constexpr double kPi = std::numbers::pi;

void require_order(int m) {
  if (m < 1) throw std::invalid_argument("harmonic order must be >= 1");
}

/// j^n for integer n (any sign).
cplx j_pow(int n) {
  switch (((n % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

/// S = sum_{i,k} (-1)^{i+k} Gamma(m/2+i+k) a^i b^k / (i! (m1+i)! k! (m2+k)!), grouped by n = i + k.
/// The inner sum over k at fixed n is the terminating Gauss-type polynomial; it is the Cauchy
/// product of u_i = a^i/(i!(m1+i)!) and v_k = b^k/(k!(m2+k)!), all terms positive.
long double bessel_pair_series(int m1, int m2, long double a, long double b, const SeriesOptions& opts) {
  const int m = m1 + m2;
  std::vector<long double> u{1.0L / std::tgamma(static_cast<long double>(m1 + 1))};
  std::vector<long double> v{1.0L / std::tgamma(static_cast<long double>(m2 + 1))};
  CompensatedSum sum;
  long double gamma_n = std::tgamma(static_cast<long double>(m) / 2.0L);
  long double prev = 0.0L;
  for (std::size_t n = 0; n < opts.max_terms; ++n) {
    if (n > 0) {
      u.push_back(u.back() * a / (static_cast<long double>(n) * (m1 + static_cast<long double>(n))));
      v.push_back(v.back() * b / (static_cast<long double>(n) * (m2 + static_cast<long double>(n))));
      gamma_n *= static_cast<long double>(m) / 2.0L + static_cast<long double>(n - 1);
    }
    long double inner = 0.0L;
    for (std::size_t k = 0; k <= n; ++k) inner += u[n - k] * v[k];
    const long double term = (n % 2 == 0 ? 1.0L : -1.0L) * gamma_n * inner;
    sum.add(term);
    const long double mag = term < 0 ? -term : term;
    const long double s = sum.value() < 0 ? -sum.value() : sum.value();
    if (mag == 0.0L && n > 0) return sum.value();
    if (n > 0 && mag <= prev && mag < static_cast<long double>(opts.rel_tol) * s) return sum.value();
    prev = mag;
    if (!std::isfinite(static_cast<double>(gamma_n))) break;
  }
  throw SeriesNotConverged("two-tone coefficient series did not converge", sum.value(), prev, opts.max_terms);
}

/// Integral (0, inf) J_{m1}(A1 v) J_{m2}(A2 v) exp(-sigma^2 v^2 / 2) dv / v.
long double bessel_pair_integral(int m1, int m2, double A1, double A2, double sigma, const SeriesOptions& opts) {
  const int m = m1 + m2;
  const long double r1 = static_cast<long double>(A1) / sigma;
  const long double r2 = static_cast<long double>(A2) / sigma;
  if ((m1 > 0 && r1 == 0.0L) || (m2 > 0 && r2 == 0.0L)) return 0.0L;
  const long double a = r1 * r1 / 2.0L;
  const long double b = r2 * r2 / 2.0L;
  const long double pre = 0.5L * std::pow(2.0L, -static_cast<long double>(m) / 2.0L) *
                          std::pow(r1, static_cast<long double>(m1)) * std::pow(r2, static_cast<long double>(m2));
  return pre * bessel_pair_series(m1, m2, a, b, opts);
}

long double factorial(int n) { return std::tgamma(static_cast<long double>(n) + 1.0L); }

}  // namespace

Rational alpha_m(int m) {
  if (m < 1 || m % 2 == 0) throw std::invalid_argument("alpha_m defined for odd m >= 1");
  const int h = (m - 1) / 2;
  long long den = m;
  for (int i = 2; i <= h; ++i) den *= i;
  // 2^{-3h}
  den <<= 3 * h;
  return {1, den};
}

double double_factorial(int n) {
  if (n < -1) throw std::invalid_argument("double factorial of n < -1");
  double r = 1.0;
  for (int i = n; i > 1; i -= 2) r *= i;
  return r;
}

cplx self_coeff_p1(int m, double A, double sigma_w, const SeriesOptions& opts) {
  require_order(m);
  if (!(sigma_w > 0.0) || A < 0.0) throw std::invalid_argument("self_coeff_p1: need A >= 0, sigma_w > 0");
  if (m % 2 == 0 || A == 0.0) return {0.0, 0.0};
  const double r = A / sigma_w;
  const double a[] = {m / 2.0};
  const double b[] = {m + 1.0};
  const double f = hyp_pfq(a, b, -r * r / 2.0, opts);
  return -j_pow(m + 1) * std::sqrt(2.0 / kPi) * alpha_m(m).value() * std::pow(r, m) * f;
}

cplx self_coeff_p2(int m, double A1, double A2, double sigma_w, const SeriesOptions& opts) {
  require_order(m);
  if (!(sigma_w > 0.0) || A1 < 0.0 || A2 < 0.0) throw std::invalid_argument("self_coeff_p2: invalid amplitudes");
  if (m % 2 == 0) return {0.0, 0.0};
  const long double I = bessel_pair_integral(m, 0, A1, A2, sigma_w, opts);
  return j_pow(m - 1) * static_cast<double>(4.0L / std::numbers::pi_v<long double> * I);
}

cplx cross_coeff(int m1, int m2, double A1, double A2, double sigma_w, const SeriesOptions& opts) {
  if (m1 < 1 || m2 < 1) throw std::invalid_argument("cross_coeff needs m1, m2 >= 1");
  if (!(sigma_w > 0.0) || A1 < 0.0 || A2 < 0.0) throw std::invalid_argument("cross_coeff: invalid amplitudes");
  const int m = m1 + m2;
  if (m % 2 == 0) return {0.0, 0.0};
  const long double I = bessel_pair_integral(m1, m2, A1, A2, sigma_w, opts);
  return j_pow(m - 1) * static_cast<double>(8.0L / std::numbers::pi_v<long double> * I);
}

cplx self_coeff_equal(int m, double A, double sigma_w, const SeriesOptions& opts) {
  require_order(m);
  if (!(sigma_w > 0.0) || A < 0.0) throw std::invalid_argument("self_coeff_equal: invalid amplitude");
  if (m % 2 == 0 || A == 0.0) return {0.0, 0.0};
  const double r = A / sigma_w;
  const double a[] = {(m + 1) / 2.0, m / 2.0 + 1.0, m / 2.0};
  const double b[] = {1.0, m + 1.0, m + 1.0};
  const double f = hyp_pfq(a, b, -2.0 * r * r, opts);
  return -j_pow(m + 1) * std::sqrt(2.0 / kPi) * alpha_m(m).value() * std::pow(r, m) * f;
}

cplx cross_coeff_equal(int m1, int m2, double A, double sigma_w, const SeriesOptions& opts) {
  if (m1 < 1 || m2 < 1) throw std::invalid_argument("cross_coeff_equal needs m1, m2 >= 1");
  if (!(sigma_w > 0.0) || A < 0.0) throw std::invalid_argument("cross_coeff_equal: invalid amplitude");
  const int m = m1 + m2;
  if (m % 2 == 0 || A == 0.0) return {0.0, 0.0};
  const double r = A / sigma_w;
  const double a[] = {(m + 1) / 2.0, m / 2.0 + 1.0, m / 2.0};
  const double b[] = {m2 + 1.0, m1 + 1.0, m + 1.0};
  const double f = hyp_pfq(a, b, -2.0 * r * r, opts);
  const double alpha = std::pow(2.0, -m + 2) * double_factorial(m - 2) /
                       static_cast<double>(factorial(m1) * factorial(m2));
  return -j_pow(m + 1) * std::sqrt(2.0 / kPi) * alpha * std::pow(r, m) * f;
}

cplx self_coeff_low_snr(int m, double A, double sigma_w) {
  require_order(m);
  if (m % 2 == 0) return {0.0, 0.0};
  return -j_pow(m + 1) * std::sqrt(2.0 / kPi) * alpha_m(m).value() * std::pow(A / sigma_w, m);
}

cplx cross_coeff_low_snr(int m1, int m2, double A, double sigma_w) {
  if (m1 < 1 || m2 < 1) throw std::invalid_argument("cross_coeff_low_snr needs m1, m2 >= 1");
  const int m = m1 + m2;
  if (m % 2 == 0) return {0.0, 0.0};
  const double alpha = std::pow(2.0, -m + 2) * double_factorial(m - 2) /
                       static_cast<double>(factorial(m1) * factorial(m2));
  return -j_pow(m + 1) * std::sqrt(2.0 / kPi) * alpha * std::pow(A / sigma_w, m);
}

cplx line_amplitude(const std::vector<int>& k, const std::vector<double>& amplitudes,
                    const std::vector<double>& phases, double sigma_w, const SeriesOptions& opts) {
  if (k.size() != amplitudes.size() || k.size() != phases.size())
    throw std::invalid_argument("line_amplitude: size mismatch");
  if (k.empty() || k.size() > 2) throw std::invalid_argument("line_amplitude supports one or two tones");
  const int total = std::accumulate(k.begin(), k.end(), 0);
  int order = 0;
  for (int ki : k) order += std::abs(ki);
  if (order % 2 == 0 || ((total % 4) + 4) % 4 != 1) return {0.0, 0.0};

  const int m1 = std::abs(k[0]);
  const int m2 = k.size() > 1 ? std::abs(k[1]) : 0;
  const double A1 = amplitudes[0];
  const double A2 = k.size() > 1 ? amplitudes[1] : 0.0;
  const long double I = bessel_pair_integral(m1, m2, A1, A2, sigma_w, opts);
  // J_{-n} = (-1)^n J_n
  int parity = 0;
  for (int ki : k)
    if (ki < 0) parity += -ki;
  double phase = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) phase += k[i] * phases[i];
  const double mag = static_cast<double>(4.0L / std::numbers::pi_v<long double> * I) * (parity % 2 ? -1.0 : 1.0);
  // total = 1 (mod 4) makes j^{total-1} = 1
  return std::polar(1.0, phase) * mag;
}

Attenuation attenuation_closed_form(double snr_db) {
  const double A = std::sqrt(2.0 * std::pow(10.0, snr_db / 10.0));
  const double fund = std::abs(self_coeff_equal(1, A, 1.0));
  const double self3 = std::abs(self_coeff_equal(3, A, 1.0));
  const double cross = std::abs(cross_coeff_equal(1, 2, A, 1.0)) / 2.0;
  return {20.0 * std::log10(self3 / fund), 20.0 * std::log10(cross / fund)};
}

Attenuation attenuation_low_snr(double snr_db) {
  const double A = std::sqrt(2.0 * std::pow(10.0, snr_db / 10.0));
  const double fund = std::abs(self_coeff_low_snr(1, A, 1.0));
  const double self3 = std::abs(self_coeff_low_snr(3, A, 1.0));
  const double cross = std::abs(cross_coeff_low_snr(1, 2, A, 1.0)) / 2.0;
  return {20.0 * std::log10(self3 / fund), 20.0 * std::log10(cross / fund)};
}

std::vector<HarmonicLine> harmonic_frequencies(const std::vector<double>& tones, int max_order,
                                               std::optional<double> sample_rate, int min_order) {
  if (max_order < 1 || max_order % 2 == 0) throw std::invalid_argument("max_order must be odd and >= 1");
  std::vector<HarmonicLine> out;
  const std::size_t P = tones.size();
  if (P == 0) return out;
  std::vector<int> k(P, -max_order);
  // odometer over [-max_order, max_order]^P
  while (true) {
    int order = 0, total = 0;
    for (int ki : k) {
      order += std::abs(ki);
      total += ki;
    }
    if (order % 2 == 1 && order >= min_order && order <= max_order && ((total % 4) + 4) % 4 == 1) {
      HarmonicLine line;
      line.k = k;
      line.order = order;
      for (std::size_t i = 0; i < P; ++i) line.frequency += k[i] * tones[i];
      if (sample_rate) {
        const double fs = *sample_rate;
        line.frequency -= fs * std::floor(line.frequency / fs + 0.5);
      }
      out.push_back(std::move(line));
    }
    std::size_t pos = 0;
    while (pos < P && k[pos] == max_order) k[pos++] = -max_order;
    if (pos == P) break;
    ++k[pos];
  }
  std::stable_sort(out.begin(), out.end(), [](const HarmonicLine& a, const HarmonicLine& b) {
    return a.order < b.order;
  });
  return out;
}

ToneSpec ToneSpec::from_snr(const std::vector<double>& snr_db, const std::vector<double>& freqs, double sigma_w) {
  if (snr_db.size() != freqs.size()) throw std::invalid_argument("ToneSpec::from_snr: size mismatch");
  ToneSpec t;
  t.sigma_w = sigma_w;
  t.freqs = freqs;
  t.phases.assign(freqs.size(), 0.0);
  for (double s : snr_db) t.amplitudes.push_back(std::sqrt(2.0 * sigma_w * sigma_w * std::pow(10.0, s / 10.0)));
  return t;
}

namespace {

void validate_tones(const ToneSpec& t) {
  if (t.amplitudes.size() != t.freqs.size() || t.phases.size() != t.freqs.size())
    throw std::invalid_argument("ToneSpec: amplitudes, freqs and phases differ in length");
  if (!(t.sigma_w > 0.0)) throw std::invalid_argument("ToneSpec: sigma_w must be > 0");
}

cplx tone_sum(const ToneSpec& t, std::size_t n) {
  cplx s{};
  for (std::size_t p = 0; p < t.freqs.size(); ++p) {
    const double cyc = t.freqs[p] * static_cast<double>(n);
    s += std::polar(t.amplitudes[p], 2.0 * kPi * (cyc - std::floor(cyc)) + t.phases[p]);
  }
  return s;
}

constexpr std::size_t kBlock = 1 << 16;

std::size_t bin_of(double freq, std::size_t n) {
  const double x = freq * static_cast<double>(n);
  const auto b = static_cast<long long>(std::floor(x + 0.5));
  const auto N = static_cast<long long>(n);
  return static_cast<std::size_t>(((b % N) + N) % N);
}

}  // namespace

std::vector<cplx> analog_tones(const ToneSpec& tones, std::size_t n, std::uint64_t seed) {
  validate_tones(tones);
  std::vector<cplx> out(n);
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  parallel_for(blocks, [&](std::size_t b) {
    auto eng = make_engine(seed, b);
    std::normal_distribution<double> g(0.0, tones.sigma_w);
    for (std::size_t i = b * kBlock; i < std::min(n, (b + 1) * kBlock); ++i) {
      const double re = g(eng);
      const double im = g(eng);
      out[i] = tone_sum(tones, i) + cplx(re, im);
    }
  });
  return out;
}

std::vector<cplx> one_bit_tones(const ToneSpec& tones, std::size_t n, std::uint64_t seed) {
  auto x = analog_tones(tones, n, seed);
  for (auto& v : x) v = {v.real() >= 0.0 ? 1.0 : -1.0, v.imag() >= 0.0 ? 1.0 : -1.0};
  return x;
}

SpectrumEstimate mc_spectrum_estimate(const ToneSpec& tones, std::size_t num_samples, std::size_t trials,
                                      std::uint64_t seed, int max_order) {
  validate_tones(tones);
  if (num_samples < 2 || trials < 1) throw std::invalid_argument("mc_spectrum_estimate: need N >= 2, trials >= 1");
  const std::size_t N = num_samples;

  // Averaged csign sequence; the count of +1 among T draws of sign(x + w) is Binomial(T, Phi(x / sigma)).
  std::vector<cplx> avg(N);
  const std::size_t blocks = (N + kBlock - 1) / kBlock;
  const double T = static_cast<double>(trials);
  parallel_for(blocks, [&](std::size_t b) {
    auto eng = make_engine(seed, b);
    for (std::size_t i = b * kBlock; i < std::min(N, (b + 1) * kBlock); ++i) {
      const cplx s = tone_sum(tones, i);
      const double p_re = 0.5 * std::erfc(-s.real() / (tones.sigma_w * std::numbers::sqrt2));
      const double p_im = 0.5 * std::erfc(-s.imag() / (tones.sigma_w * std::numbers::sqrt2));
      std::binomial_distribution<long long> bre(static_cast<long long>(trials), p_re);
      std::binomial_distribution<long long> bim(static_cast<long long>(trials), p_im);
      const double cre = static_cast<double>(bre(eng));
      const double cim = static_cast<double>(bim(eng));
      avg[i] = {(2.0 * cre - T) / T, (2.0 * cim - T) / T};
    }
  });
  fft::transform(avg, fft::Direction::Forward);
  for (auto& v : avg) v /= static_cast<double>(N);

  SpectrumEstimate est;
  est.num_samples = N;
  est.trials = trials;

  // collisions are checked against a wider set of orders than reported
  const auto wide = harmonic_frequencies(tones.freqs, max_order + 4);
  std::map<std::size_t, int> occupancy;
  for (const auto& l : wide) ++occupancy[bin_of(l.frequency, N)];

  std::vector<std::size_t> line_bins;
  for (const auto& l : harmonic_frequencies(tones.freqs, max_order, 1.0)) {
    LineEstimate e;
    e.line = l;
    e.bin = bin_of(l.frequency, N);
    e.collided = occupancy[e.bin] > 1;
    if (tones.freqs.size() <= 2) {
      e.predicted = line_amplitude(l.k, tones.amplitudes, tones.phases, tones.sigma_w);
      e.line.avg_amplitude = e.predicted;
    }
    if (!e.collided) e.estimate = avg[e.bin];
    est.lines.push_back(std::move(e));
  }

  // noise floor from the median bin power (median of an exponential is mean * ln 2)
  std::vector<double> power;
  power.reserve(N);
  for (std::size_t i = 0; i < N; ++i) {
    if (occupancy.count(i) == 0) power.push_back(std::norm(avg[i]));
  }
  if (!power.empty()) {
    auto mid = power.begin() + static_cast<std::ptrdiff_t>(power.size() / 2);
    std::nth_element(power.begin(), mid, power.end());
    est.noise_floor = std::sqrt(*mid / std::numbers::ln2);
  }
  return est;
}

}  // namespace onebit::harmonics

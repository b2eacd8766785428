#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "onebit/array3.hpp"
#include "onebit/hypergeometric.hpp"

namespace onebit::harmonics {

struct Rational {
  long long num = 0;
  long long den = 1;
  [[nodiscard]] double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

/// alpha_m = 2^{-3(m-1)/2} / (((m-1)/2)! m) for odd m >= 1, in lowest terms.
Rational alpha_m(int m);

/// n!! over odd n, with (-1)!! = 1.
double double_factorial(int n);

// Coefficients of the average spectrum of csign applied to a sum of tones in Gaussian
// noise. Amplitudes and sigma_w are in volts; sigma_w is the per-part noise std.
// Every function returns exactly zero when the total order is even.

/// Single tone, m-order coefficient (confluent 1F1 form).
cplx self_coeff_p1(int m, double A, double sigma_w, const SeriesOptions& opts = {});

/// Two tones, m-order self-generated coefficient of tone 1 (double series, any A1, A2).
cplx self_coeff_p2(int m, double A1, double A2, double sigma_w, const SeriesOptions& opts = {});

/// Two tones, (m1, m2) cross-generated coefficient (double series, any A1, A2).
cplx cross_coeff(int m1, int m2, double A1, double A2, double sigma_w, const SeriesOptions& opts = {});

/// Equal-amplitude closed forms through 3F3.
cplx self_coeff_equal(int m, double A, double sigma_w, const SeriesOptions& opts = {});
cplx cross_coeff_equal(int m1, int m2, double A, double sigma_w, const SeriesOptions& opts = {});

/// Low-SNR limits: -j^{m+1} sqrt(2/pi) alpha_m (A/sigma)^m and its cross counterpart.
cplx self_coeff_low_snr(int m, double A, double sigma_w);
cplx cross_coeff_low_snr(int m1, int m2, double A, double sigma_w);

/// Complex amplitude of the csign output line at sum_i k_i w_i for up to two tones.
/// Nonzero only when sum |k_i| is odd and sum k_i = 1 (mod 4).
cplx line_amplitude(const std::vector<int>& k, const std::vector<double>& amplitudes,
                    const std::vector<double>& phases, double sigma_w, const SeriesOptions& opts = {});

/// Attenuation (dB, negative) of the 3-order self / (1,2) cross lines relative to the
/// fundamental for two equal tones at the given per-tone SNR.
struct Attenuation {
  double self_db;
  double cross_db;
};
Attenuation attenuation_closed_form(double snr_db);
Attenuation attenuation_low_snr(double snr_db);

struct HarmonicLine {
  std::vector<int> k;  // integer weight per tone
  int order = 0;       // sum |k_i|
  double frequency = 0.0;
  cplx avg_amplitude{};
};

/// All lines of odd order in [min_order, max_order]; frequencies folded into
/// [-fs/2, fs/2) when `sample_rate` is given.
std::vector<HarmonicLine> harmonic_frequencies(const std::vector<double>& tones, int max_order,
                                               std::optional<double> sample_rate = std::nullopt,
                                               int min_order = 1);

struct ToneSpec {
  std::vector<double> amplitudes;
  std::vector<double> freqs;  // cycles per sample
  std::vector<double> phases;
  double sigma_w = 1.0;

  static ToneSpec from_snr(const std::vector<double>& snr_db, const std::vector<double>& freqs, double sigma_w = 1.0);
};

struct LineEstimate {
  HarmonicLine line;
  std::size_t bin = 0;
  bool collided = false;
  cplx predicted{};
  std::optional<cplx> estimate;
};

struct SpectrumEstimate {
  std::vector<LineEstimate> lines;
  std::size_t num_samples = 0;
  std::size_t trials = 0;
  double noise_floor = 0.0;  // rms amplitude of a noise-only bin of the averaged spectrum
};

/// Averages the csign spectrum over `trials` independent noise draws with fixed phases and
/// reads the complex bin of every predicted line up to `max_order`. The per-sample sum of
/// signs over the trials is drawn from its exact binomial law. Lines sharing a bin with any
/// other line up to order max_order + 4 are flagged and get no estimate.
SpectrumEstimate mc_spectrum_estimate(const ToneSpec& tones, std::size_t num_samples, std::size_t trials,
                                      std::uint64_t seed, int max_order = 5);

/// One noisy realization of csign(sum of tones + noise), length n.
std::vector<cplx> one_bit_tones(const ToneSpec& tones, std::size_t n, std::uint64_t seed);
/// The same realization without quantization.
std::vector<cplx> analog_tones(const ToneSpec& tones, std::size_t n, std::uint64_t seed);

}  // namespace onebit::harmonics

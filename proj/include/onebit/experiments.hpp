#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "onebit/gamp.hpp"
#include "onebit/harmonics.hpp"
#include "onebit/pipeline.hpp"
#include "onebit/reduced_operator.hpp"
#include "onebit/scene.hpp"

namespace onebit::experiments {

/// Binomial proportion with a Wilson score interval.
struct Proportion {
  std::size_t successes = 0;
  std::size_t trials = 0;
  double p = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};
Proportion wilson(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

// Fast-time two-tone experiments. Frequencies are normalized to f_s; noise is unit variance per part.

struct TwoToneConfig {
  double f1 = 0.4;
  double f2 = 0.05;
  std::size_t num_samples = 1000000;
  std::uint64_t seed = 1;
};

struct AttenuationConfig {
  // 0.4 = 8 x 0.05 would put many intermodulation lines in the same bin
  TwoToneConfig tones{0.400037, 0.050023, 1000000, 1};
  std::vector<double> snr_db{-13, -10, -7, -5, -2, 0, 4, 8};
  std::size_t trials = 20000;  // averaged realizations per SNR point
};

struct AttenuationRow {
  double snr_db = 0.0;
  harmonics::Attenuation closed{};
  harmonics::Attenuation approx{};
  double mc_self_db = 0.0;
  double mc_cross_db = 0.0;
};

std::vector<AttenuationRow> run_attenuation_sweep(const AttenuationConfig& cfg);

struct SnrLossConfig {
  TwoToneConfig tones{0.4, 0.05, 1 << 20, 1};
  double snr1_db = -30.0;
  std::vector<double> snr2_db;  // empty: -30 to 20 dB in 2 dB steps
  std::size_t repeats = 8;
};

struct SnrLossRow {
  double snr2_db = 0.0;
  double snr_c1_db = 0.0, snr_ob1_db = 0.0;
  double snr_c2_db = 0.0, snr_ob2_db = 0.0;
  double loss1_db = 0.0, loss2_db = 0.0;
};

/// Output SNR of each tone is |A|^2 / noise power per bin, with the noise power taken from the
/// median bin power (median of an exponential = mean ln 2), so harmonic lines do not count as noise.
std::vector<SnrLossRow> run_snr_loss(const SnrLossConfig& cfg);

struct GaussianityConfig {
  TwoToneConfig tones;
  double snr_db = -5.0;
  int excise_order = 3;  // remove every line up to this order
  std::size_t max_lag = 100;
  double significance = 0.01;
};

struct GaussianityReport {
  double snr_db = 0.0;
  int excise_order = 0;
  std::size_t bins_used = 0;
  std::size_t bins_excised = 0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double jarque_bera = 0.0;
  double p_value = 0.0;
  bool normal = false;
  std::vector<double> autocorr;  // lags 1..max_lag
  double max_abs_autocorr = 0.0;
};

/// Normality (Jarque-Bera) and autocorrelation of the real part of the one-bit spectrum after
/// the line bins are removed.
GaussianityReport run_gaussianity_check(const GaussianityConfig& cfg);

// Radar-cube experiments.

/// Grid cells of the order-m intermodulation products of the targets' frequency triples.
struct HarmonicCell {
  std::vector<int> k;
  GridIndex cell;
};
std::vector<HarmonicCell> harmonic_cells(const std::vector<Target>& targets, const RadarParams& params,
                                         const GridSpec& grid, int order);

/// Map + pre-detection of a cube (conventional system: no second stage).
PreDetectionSet conventional_baseline(const DataCube& cube, const GridSpec& grid, const AxisWindows& windows,
                                      const PredetectConfig& cfg);
PreDetectionSet one_bit_predetect(const OneBitCube& cube, const GridSpec& grid, const AxisWindows& windows,
                                  const PredetectConfig& cfg);

/// Shrinks R (and eta in proportion) on axes whose grid line is too short for the reference window.
PredetectConfig fit_to_grid(PredetectConfig cfg, const GridSpec& grid);

PredetectConfig uniform_predetect(double alpha_db, std::size_t R = 24, std::size_t G = 2, std::size_t eta = 18);

struct SuppressionConfig {
  RadarParams params = RadarParams::table1();
  bool off_grid = false;
  std::vector<std::size_t> r_a{2};
  double snr_db = -7.0;
  PredetectConfig predetect = uniform_predetect(10.6);
  double th_db = 13.6;
  std::size_t trials = 20;
  std::uint64_t seed = 1;
  GampControls gamp{};
};

struct SuppressionTrial {
  std::size_t r_a = 1;
  std::size_t trial = 0;
  std::size_t num_pts = 0;
  std::size_t target_pts = 0;         // targets whose cell (or neighbour, off-grid) was predetected
  std::size_t harmonic_cells = 0;     // predicted 3-order cells
  std::size_t harmonic_found = 0;     // of those, predetected
  std::size_t harmonic_suppressed = 0;  // of those found, |x_hat| < gamma2 after GAMP
  double target_db = 0.0;             // largest |x_hat| at the targets, dB
  double target_true_db = 0.0;        // |A| of the targets, dB
  double harmonic_residual_db = 0.0;  // largest |x_hat| at harmonic cells relative to target_db
  double noise_residual_db = 0.0;     // largest |x_hat| elsewhere relative to target_db
  std::size_t final_detections = 0;
  bool converged = false;
  std::size_t iterations = 0;
};

/// Two-target scenes of the reference setup: on-grid (f_sp = 0; f_r = -40, -3 MHz; f_d = 2, 7 kHz)
/// or off-grid (f_d = 2.1, 7.35 kHz; f_sp = 0.0125, 0.0354; f_r = -40.015, -3.06 MHz).
std::vector<Target> suppression_targets(bool off_grid, double snr_db, const RadarParams& params, double phase1 = 0.0,
                                        double phase2 = 0.0);

std::vector<SuppressionTrial> run_suppression(const SuppressionConfig& cfg);

struct FastTimeConfig {
  std::size_t num_samples = 1000;
  std::size_t r_a = 2;
  std::vector<double> beat_hz{-40.1e6, -15.4e6};
  double snr_db = -5.0;
  WindowSpec window{WindowKind::Chebyshev, 60.0, 4};
  OsCfarConfig cfar{24, 2, 18, 8.9};
  bool local_peak = true;
  bool full_dictionary = false;  // also run GAMP over every grid cell
  std::uint64_t seed = 1;
  GampControls gamp{};
};

struct FastTimeResult {
  std::size_t num_pts = 0;
  double nmse_db = 0.0;
  std::vector<double> target_error_db;  // 20 log10(|x_hat| / |A|) per target
  double spurious_margin_db = 0.0;      // weakest target minus strongest non-target, dB
  bool converged = false;
  std::size_t iterations = 0;
  std::optional<double> full_spurious_margin_db;
  std::optional<double> full_nmse_db;
};

/// Single-pulse, single-channel recovery of two on-grid beat tones.
FastTimeResult run_fast_time_recovery(const FastTimeConfig& cfg);

struct ComparisonConfig {
  int scenario = 1;  // 2 adds one strong target excluded from Pd
  RadarParams params = RadarParams::table1();  // reshaped to the comparison setup by default_comparison()
  std::size_t r_a = 4;
  PredetectConfig one_bit{};
  PredetectConfig conventional{};
  double th_db = 13.6;
  std::vector<double> snr_db{-38, -37, -36, -35, -34, -33, -32, -31, -30, -29, -28};
  std::size_t num_targets = 10;
  double strong_snr_db = 0.0;
  std::size_t trials = 100;
  std::size_t calibration_trials = 50;
  std::optional<double> conventional_alpha_db;  // skips calibration when set
  std::size_t min_separation = 2;  // base resolution cells
  std::size_t hit_tolerance = 1;   // grid cells per axis
  std::uint64_t seed = 1;
  GampControls gamp{};
};

/// K=100, L=10, N=100, Chebyshev -50 dB slow/fast time, Taylor -30 dB spatial, r_a = 4,
/// eta = 75/18/75 (slow/spatial/fast) with R = 100/24/100, one-bit alpha 8 dB.
ComparisonConfig default_comparison(int scenario);

struct CurvePoint {
  double snr_db = 0.0;
  Proportion pd;
  std::size_t false_alarms = 0;
  double fa_rate = 0.0;
  double mean_pts = 0.0;       // one-bit only
  std::size_t non_converged = 0;
};

struct DetectionCurve {
  std::string system;
  double alpha_db = 0.0;
  std::vector<CurvePoint> points;
  double max_fa_rate = 0.0;
};

struct ComparisonResult {
  DetectionCurve one_bit;
  DetectionCurve conventional;
  double calibration_target_rate = 0.0;
  std::optional<double> snr50_one_bit;
  std::optional<double> snr50_conventional;
  std::optional<double> advantage_db;  // conventional minus one-bit SNR at Pd = 0.5
};

/// Random scene for one trial: `count` targets at `snr_db`, uniformly placed with a minimum
/// separation, plus the strong target in scenario 2 (placed first).
std::vector<Target> random_targets(const ComparisonConfig& cfg, double snr_db, std::uint64_t seed);

ComparisonResult run_detection_comparison(const ComparisonConfig& cfg);

/// SNR where a Pd curve first crosses `level`, by linear interpolation.
std::optional<double> crossing_snr(const DetectionCurve& curve, double level = 0.5);

/// Pre-detection false-alarm rate of a system on noise-only cubes.
Proportion predetection_fa_rate(const RadarParams& params, const GridSpec& grid, const PredetectConfig& cfg,
                                bool one_bit, std::size_t trials, std::uint64_t seed);

}  // namespace onebit::experiments

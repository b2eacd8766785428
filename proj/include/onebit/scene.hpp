#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "onebit/array3.hpp"

namespace onebit {

enum class WindowKind { Rectangular, Chebyshev, Taylor };

struct WindowSpec {
  WindowKind kind = WindowKind::Rectangular;
  double sidelobe_db = 60.0;  // peak sidelobe level, positive number of dB below the main lobe
  int nbar = 4;               // Taylor only

  friend bool operator==(const WindowSpec&, const WindowSpec&) = default;
};

struct RadarParams {
  double carrier_freq_hz = 24e9;
  double fm_slope_hz_per_s = 1e13;
  double pulse_interval_s = 2e-5;
  double bandwidth_hz = 100e6;
  double sample_rate_hz = 100e6;
  std::size_t num_pulses = 1;       // K
  std::size_t num_elements = 1;     // L
  double element_spacing_m = 0.00625;
  std::size_t num_fast_samples = 1; // N
  double complex_noise_var = 1.0;   // 2 sigma_w^2
  WindowSpec window_doppler{};
  WindowSpec window_spatial{};
  WindowSpec window_range{};

  [[nodiscard]] Shape3 shape() const noexcept { return {num_pulses, num_elements, num_fast_samples}; }
  [[nodiscard]] double prf() const noexcept { return 1.0 / pulse_interval_s; }
  /// Per real/imaginary part noise variance sigma_w^2.
  [[nodiscard]] double noise_var_per_part() const noexcept { return complex_noise_var / 2.0; }

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  /// Parameters of the reference simulation setup (24 GHz, K=200, L=24, N=1000).
  static RadarParams table1();
};

struct Target {
  cplx amplitude{};
  double doppler_hz = 0.0;
  double spatial_freq = 0.0;  // cycles per element
  double beat_freq_hz = 0.0;

  /// Builds a target whose pre-quantization SNR |A|^2 / (2 sigma_w^2) equals `snr_db`.
  static Target from_snr(double snr_db, double phase_rad, double doppler_hz, double spatial_freq,
                         double beat_freq_hz, const RadarParams& params);
};

struct TargetScene {
  std::vector<Target> targets;
  std::uint64_t rng_seed = 0;

  void validate(const RadarParams& params) const;
};

using DataCube = Array3<cplx>;

/// Sign-quantized cube. Each entry is (+-1) + j(+-1); stored as interleaved int8 parts.
class OneBitCube {
 public:
  OneBitCube() = default;
  explicit OneBitCube(Shape3 shape) : shape_(shape), parts_(2 * shape.size(), 1) {}

  [[nodiscard]] const Shape3& shape() const noexcept { return shape_; }
  [[nodiscard]] std::size_t size() const noexcept { return shape_.size(); }
  [[nodiscard]] cplx at(std::size_t flat) const {
    return {static_cast<double>(parts_[2 * flat]), static_cast<double>(parts_[2 * flat + 1])};
  }
  [[nodiscard]] std::int8_t re(std::size_t flat) const { return parts_[2 * flat]; }
  [[nodiscard]] std::int8_t im(std::size_t flat) const { return parts_[2 * flat + 1]; }
  void set(std::size_t flat, std::int8_t re, std::int8_t im) {
    parts_[2 * flat] = re;
    parts_[2 * flat + 1] = im;
  }
  [[nodiscard]] DataCube to_complex() const;

  friend bool operator==(const OneBitCube&, const OneBitCube&) = default;

 private:
  Shape3 shape_{};
  std::vector<std::int8_t> parts_;
};

/// Noiseless target sum of the beat model at every (k, l, n).
DataCube synthesize_signal(const TargetScene& scene, const RadarParams& params);

/// Target sum plus circular complex Gaussian noise of total variance 2 sigma_w^2.
/// Each (k, l) slice draws from its own stream so the result does not depend on scheduling.
DataCube synthesize_cube(const TargetScene& scene, const RadarParams& params);

/// One-bit quantization without materializing the analog cube.
OneBitCube synthesize_one_bit(const TargetScene& scene, const RadarParams& params);

/// csign with sign(0) = +1.
constexpr std::int8_t sign_bit(double v) noexcept { return v >= 0.0 ? std::int8_t{1} : std::int8_t{-1}; }
inline cplx csign(cplx z) noexcept { return {double(sign_bit(z.real())), double(sign_bit(z.imag()))}; }

OneBitCube quantize_one_bit(const DataCube& cube);

inline constexpr double kNegInfDb = -std::numeric_limits<double>::infinity();

/// 10 log10(|A|^2 / (2 sigma_w^2)); zero amplitude gives -inf.
double snr_of_target(const Target& target, const RadarParams& params);

// Binary cube files: "OBRC", u32 version, u32 kind, u64 K, u64 L, u64 N, payload.
// kind 0: interleaved re/im float64. kind 1: 2 bits per sample, 4 samples per byte,
// sample i at bits 2*(i%4) (bit 0 = Re >= 0, bit 1 = Im >= 0).
void write_cube(std::ostream& os, const DataCube& cube);
void write_cube(std::ostream& os, const OneBitCube& cube);
DataCube read_data_cube(std::istream& is);
OneBitCube read_one_bit_cube(std::istream& is);

std::string to_string(WindowKind kind);
WindowKind window_kind_from_string(const std::string& s);

}  // namespace onebit

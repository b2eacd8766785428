#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "onebit/array3.hpp"
#include "onebit/scene.hpp"

namespace onebit {

/// Frequency grid of the 3-D map: M = r_a * (K, L, N) bins per axis.
struct GridSpec {
  std::size_t r_a = 1;
  Shape3 base{};  // K, L, N

  static GridSpec make(const RadarParams& params, std::size_t r_a);
  void validate() const;
  [[nodiscard]] Shape3 dims() const noexcept { return {base.d0 * r_a, base.d1 * r_a, base.d2 * r_a}; }
  [[nodiscard]] std::size_t cells() const noexcept { return dims().size(); }
};

/// Cell indices of the grid point nearest to a frequency triple (ties toward -inf).
struct GridIndex {
  std::size_t d = 0, sp = 0, r = 0;
  friend bool operator==(const GridIndex&, const GridIndex&) = default;
  friend auto operator<=>(const GridIndex&, const GridIndex&) = default;
};
GridIndex nearest_cell(const Target& t, const RadarParams& params, const GridSpec& grid);
std::size_t nearest_bin(double normalized_freq, std::size_t bins);

/// Normalized frequencies (cycles per pulse / element / sample) of a cell.
std::array<double, 3> cell_frequencies(const GridIndex& c, const GridSpec& grid);

struct AxisWindows {
  std::vector<double> d, sp, r;
  static AxisWindows from(const RadarParams& params);
  static AxisWindows rectangular(const Shape3& base);
};

using FreqMap3D = Array3<cplx>;

/// Windowed, zero-padded 3-D DFT with exp(-j) kernel: y(c) = a(c)^H (w .* r).
FreqMap3D fft3d(const DataCube& cube, const GridSpec& grid, const AxisWindows& windows);
FreqMap3D fft3d(const OneBitCube& cube, const GridSpec& grid, const AxisWindows& windows);

/// |y| of the same map, built slice by slice in single precision so that large grids fit in memory.
Array3<float> fft3d_magnitude(const DataCube& cube, const GridSpec& grid, const AxisWindows& windows);
Array3<float> fft3d_magnitude(const OneBitCube& cube, const GridSpec& grid, const AxisWindows& windows);

Array3<float> magnitude(const FreqMap3D& map);

/// Single map value evaluated directly.
cplx probe_cell(const DataCube& cube, const GridSpec& grid, const AxisWindows& windows, const GridIndex& c);

struct OsCfarConfig {
  std::size_t R = 24;    // reference cells, split around the cell under test
  std::size_t G = 2;     // guard cells per side
  std::size_t eta = 0;   // order index; 0 means floor(0.75 R)
  double alpha_db = 8.0; // amplitude scale factor in dB

  [[nodiscard]] std::size_t order() const noexcept { return eta == 0 ? (3 * R) / 4 : eta; }
  [[nodiscard]] double alpha() const;
  void validate(std::size_t line_length) const;
};

/// eta-th smallest reference magnitude of cell i (circular line).
template <class T>
double os_reference(std::span<const T> line, std::size_t i, const OsCfarConfig& cfg);

/// Detection flags of a 1-D OS-CFAR pass: |y_i| > alpha * x_eta(i).
std::vector<bool> os_cfar_1d(std::span<const double> line, const OsCfarConfig& cfg);

enum class Combine { And, Or };

struct PredetectConfig {
  OsCfarConfig d, sp, r;
  Combine combine = Combine::And;
  bool local_peak = true;  // require a local maximum along every axis
};

struct PreDetection {
  GridIndex cell;
  cplx y{};
  double ratio_db = 0.0;  // smallest (And) or largest (Or) |y| / x_eta over axes, in dB
};

struct PreDetectionSet {
  GridSpec grid;
  std::vector<PreDetection> entries;
  [[nodiscard]] std::size_t size() const noexcept { return entries.size(); }
};

/// Axes whose base length is 1 are skipped.
PreDetectionSet predetect(const FreqMap3D& map, const GridSpec& grid, const PredetectConfig& cfg);
PreDetectionSet predetect(const Array3<float>& mag, const GridSpec& grid, const PredetectConfig& cfg);

/// Fills PreDetection::y of a set found on a magnitude-only map.
void fill_amplitudes(PreDetectionSet& set, const DataCube& cube, const AxisWindows& windows);
void fill_amplitudes(PreDetectionSet& set, const OneBitCube& cube, const AxisWindows& windows);

/// Detection statistic of every cell that satisfies the peak condition and whose statistic
/// exceeds `floor_db`; used to calibrate alpha by Monte Carlo.
std::vector<float> predetect_statistics(const Array3<float>& mag, const GridSpec& grid, const PredetectConfig& cfg,
                                       double floor_db);

/// Scale factor (dB) at which `count(stat > alpha) / cells` equals `target_rate`.
double calibrate_alpha_db(std::vector<float> stats, double cells, double target_rate);

/// Probability that one OS-CFAR pass fires on exponential (square-law) noise with R
/// references, order eta and amplitude scale alpha.
double os_cfar_pfa_exponential(std::size_t R, std::size_t eta, double alpha_db);

}  // namespace onebit

#include "onebit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "onebit/fft.hpp"
#include "onebit/parallel.hpp"
#include "onebit/window.hpp"

namespace onebit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline cplx cube_value(const DataCube& c, std::size_t i) { return c[i]; }
inline cplx cube_value(const OneBitCube& c, std::size_t i) { return c.at(i); }

/// exp(-j 2 pi i m / M) for i in [0, count).
std::vector<cplx> analysis_phasors(std::size_t m, std::size_t M, std::size_t count) {
  std::vector<cplx> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t p = (i * m) % M;
    out[i] = std::polar(1.0, -kTwoPi * static_cast<double>(p) / static_cast<double>(M));
  }
  return out;
}

void check_windows(const AxisWindows& w, const Shape3& base) {
  if (w.d.size() != base.d0 || w.sp.size() != base.d1 || w.r.size() != base.d2)
    throw std::invalid_argument("window lengths do not match the cube");
}

void check_cube(const Shape3& cube, const GridSpec& grid) {
  grid.validate();
  if (!(cube == grid.base)) throw std::invalid_argument("cube shape does not match the grid");
}

template <class Cube>
FreqMap3D fft3d_impl(const Cube& cube, const GridSpec& grid, const AxisWindows& w) {
  check_cube(cube.shape(), grid);
  check_windows(w, grid.base);
  const Shape3 B = grid.base;
  const Shape3 M = grid.dims();
  FreqMap3D out(M, cplx{});
  for (std::size_t k = 0; k < B.d0; ++k)
    for (std::size_t l = 0; l < B.d1; ++l) {
      const double wkl = w.d[k] * w.sp[l];
      const std::size_t src = B.index(k, l, 0);
      const std::size_t dst = M.index(k, l, 0);
      for (std::size_t n = 0; n < B.d2; ++n) out[dst + n] = wkl * w.r[n] * cube_value(cube, src + n);
    }
  cplx* data = out.storage().data();
  for (std::size_t k = 0; k < B.d0; ++k)
    fft::transform_many(data + M.index(k, 0, 0), M.d2, B.d1, 1, M.d2, fft::Direction::Forward);
  for (std::size_t k = 0; k < B.d0; ++k)
    fft::transform_many(data + M.index(k, 0, 0), M.d1, M.d2, M.d2, 1, fft::Direction::Forward);
  fft::transform_many(data, M.d0, M.d1 * M.d2, M.d1 * M.d2, 1, fft::Direction::Forward);
  return out;
}

template <class Cube>
Array3<float> fft3d_magnitude_impl(const Cube& cube, const GridSpec& grid, const AxisWindows& w) {
  check_cube(cube.shape(), grid);
  check_windows(w, grid.base);
  const Shape3 B = grid.base;
  const Shape3 M = grid.dims();

  // range transform: K x L x M_r
  std::vector<cplx> stage1(B.d0 * B.d1 * M.d2, cplx{});
  for (std::size_t k = 0; k < B.d0; ++k)
    for (std::size_t l = 0; l < B.d1; ++l) {
      const double wkl = w.d[k] * w.sp[l];
      const std::size_t src = B.index(k, l, 0);
      const std::size_t dst = (k * B.d1 + l) * M.d2;
      for (std::size_t n = 0; n < B.d2; ++n) stage1[dst + n] = wkl * w.r[n] * cube_value(cube, src + n);
    }
  fft::transform_many(stage1.data(), M.d2, B.d0 * B.d1, 1, M.d2, fft::Direction::Forward);

  // spatial transform per pulse, kept in single precision: K x M_sp x M_r
  std::vector<std::complex<float>> stage2(B.d0 * M.d1 * M.d2);
  {
    std::vector<cplx> plane(M.d1 * M.d2);
    for (std::size_t k = 0; k < B.d0; ++k) {
      std::fill(plane.begin(), plane.end(), cplx{});
      std::copy_n(stage1.begin() + static_cast<std::ptrdiff_t>(k * B.d1 * M.d2), B.d1 * M.d2, plane.begin());
      fft::transform_many(plane.data(), M.d1, M.d2, M.d2, 1, fft::Direction::Forward);
      auto* dst = stage2.data() + k * M.d1 * M.d2;
      for (std::size_t i = 0; i < plane.size(); ++i) dst[i] = std::complex<float>(plane[i]);
    }
  }
  std::vector<cplx>().swap(stage1);

  // Doppler transform per spatial bin
  Array3<float> out(M, 0.0f);
  std::vector<cplx> slice(M.d0 * M.d2);
  for (std::size_t s = 0; s < M.d1; ++s) {
    std::fill(slice.begin(), slice.end(), cplx{});
    for (std::size_t k = 0; k < B.d0; ++k) {
      const auto* src = stage2.data() + (k * M.d1 + s) * M.d2;
      for (std::size_t r = 0; r < M.d2; ++r) slice[k * M.d2 + r] = cplx(src[r]);
    }
    fft::transform_many(slice.data(), M.d0, M.d2, M.d2, 1, fft::Direction::Forward);
    for (std::size_t d = 0; d < M.d0; ++d)
      for (std::size_t r = 0; r < M.d2; ++r) out(d, s, r) = static_cast<float>(std::abs(slice[d * M.d2 + r]));
  }
  return out;
}

template <class Cube>
cplx probe_impl(const Cube& cube, const GridSpec& grid, const AxisWindows& w, const GridIndex& c) {
  const Shape3 B = grid.base;
  const Shape3 M = grid.dims();
  const auto pd = analysis_phasors(c.d, M.d0, B.d0);
  const auto ps = analysis_phasors(c.sp, M.d1, B.d1);
  const auto pr = analysis_phasors(c.r, M.d2, B.d2);
  std::vector<cplx> kr(B.d2);
  for (std::size_t n = 0; n < B.d2; ++n) kr[n] = w.r[n] * pr[n];
  cplx acc{};
  for (std::size_t k = 0; k < B.d0; ++k) {
    cplx acc_l{};
    for (std::size_t l = 0; l < B.d1; ++l) {
      const std::size_t base = B.index(k, l, 0);
      cplx acc_n{};
      for (std::size_t n = 0; n < B.d2; ++n) acc_n += kr[n] * cube_value(cube, base + n);
      acc_l += w.sp[l] * ps[l] * acc_n;
    }
    acc += w.d[k] * pd[k] * acc_l;
  }
  return acc;
}

template <class Cube>
void fill_impl(PreDetectionSet& set, const Cube& cube, const AxisWindows& w) {
  check_cube(cube.shape(), set.grid);
  check_windows(w, set.grid.base);
  parallel_for(set.entries.size(), [&](std::size_t i) {
    set.entries[i].y = probe_impl(cube, set.grid, w, set.entries[i].cell);
  });
}

/// Offsets of the reference cells relative to the cell under test.
struct RefPattern {
  std::vector<std::ptrdiff_t> offsets;
  explicit RefPattern(const OsCfarConfig& cfg) {
    const std::size_t left = cfg.R / 2;
    const std::size_t right = cfg.R - left;
    for (std::size_t i = 1; i <= left; ++i) offsets.push_back(-static_cast<std::ptrdiff_t>(cfg.G + i));
    for (std::size_t i = 1; i <= right; ++i) offsets.push_back(static_cast<std::ptrdiff_t>(cfg.G + i));
  }
};

inline std::size_t wrap(std::ptrdiff_t i, std::size_t n) {
  const auto N = static_cast<std::ptrdiff_t>(n);
  return static_cast<std::size_t>(((i % N) + N) % N);
}

/// One axis of the map seen as a set of circular lines.
struct AxisView {
  const float* data;
  std::size_t len;
  std::size_t stride;
  float at(std::size_t line_start, std::ptrdiff_t pos) const { return data[line_start + wrap(pos, len) * stride]; }
};

/// True iff at least eta references fall strictly below thr.
bool passes(const AxisView& ax, std::size_t start, std::size_t pos, const RefPattern& pat, std::size_t eta,
            float thr) {
  const std::size_t R = pat.offsets.size();
  std::size_t below = 0, above = 0;
  for (auto off : pat.offsets) {
    if (ax.at(start, static_cast<std::ptrdiff_t>(pos) + off) < thr) {
      if (++below >= eta) return true;
    } else if (++above > R - eta) {
      return false;
    }
  }
  return below >= eta;
}

double reference_value(const AxisView& ax, std::size_t start, std::size_t pos, const RefPattern& pat,
                       std::size_t eta, std::vector<float>& buf) {
  buf.clear();
  for (auto off : pat.offsets) buf.push_back(ax.at(start, static_cast<std::ptrdiff_t>(pos) + off));
  std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(eta - 1), buf.end());
  return buf[eta - 1];
}

bool is_peak(const AxisView& ax, std::size_t start, std::size_t pos, float v) {
  const auto p = static_cast<std::ptrdiff_t>(pos);
  return v > ax.at(start, p - 1) && v >= ax.at(start, p + 1);
}

struct MapScan {
  const Array3<float>& mag;
  const PredetectConfig& cfg;
  Shape3 M;
  RefPattern pd, ps, pr;
  std::array<std::size_t, 3> eta;
  std::array<float, 3> alpha;
  std::array<bool, 3> on;  // axes with a single sample carry no CFAR pass

  MapScan(const Array3<float>& m, const GridSpec& g, const PredetectConfig& c)
      : mag(m), cfg(c), M(m.shape()), pd(c.d), ps(c.sp), pr(c.r),
        eta{c.d.order(), c.sp.order(), c.r.order()},
        alpha{static_cast<float>(c.d.alpha()), static_cast<float>(c.sp.alpha()), static_cast<float>(c.r.alpha())},
        on{g.base.d0 > 1, g.base.d1 > 1, g.base.d2 > 1} {
    if (!(M == g.dims())) throw std::invalid_argument("map shape does not match the grid");
    if (!on[0] && !on[1] && !on[2]) throw std::invalid_argument("pre-detection needs at least one axis longer than 1");
    if (on[0]) c.d.validate(M.d0);
    if (on[1]) c.sp.validate(M.d1);
    if (on[2]) c.r.validate(M.d2);
  }

  /// Cells to scan: a skipped axis holds r_a identical copies, only the first is used.
  Shape3 span() const { return {on[0] ? M.d0 : 1, on[1] ? M.d1 : 1, on[2] ? M.d2 : 1}; }

  // line views through cell (d, s, r)
  AxisView ax_d() const { return {mag.storage().data(), M.d0, M.d1 * M.d2}; }
  AxisView ax_s() const { return {mag.storage().data(), M.d1, M.d2}; }
  AxisView ax_r() const { return {mag.storage().data(), M.d2, 1}; }

  bool peak(std::size_t d, std::size_t s, std::size_t r, float v) const {
    return (!on[2] || is_peak(ax_r(), M.index(d, s, 0), r, v)) && (!on[1] || is_peak(ax_s(), M.index(d, 0, r), s, v)) &&
           (!on[0] || is_peak(ax_d(), M.index(0, s, r), d, v));
  }

  /// Combined statistic: smallest (And) or largest (Or) of |y| / x_eta over the active axes.
  double statistic(std::size_t d, std::size_t s, std::size_t r, float v, std::vector<float>& buf) const {
    const bool use_min = cfg.combine == Combine::And;
    double out = use_min ? std::numeric_limits<double>::infinity() : 0.0;
    auto take = [&](double q) { out = use_min ? std::min(out, q) : std::max(out, q); };
    if (on[0]) take(v / reference_value(ax_d(), M.index(0, s, r), d, pd, eta[0], buf));
    if (on[1]) take(v / reference_value(ax_s(), M.index(d, 0, r), s, ps, eta[1], buf));
    if (on[2]) take(v / reference_value(ax_r(), M.index(d, s, 0), r, pr, eta[2], buf));
    return out;
  }

  bool or_test(std::size_t d, std::size_t s, std::size_t r, float v, std::vector<float>& buf) const {
    return (on[0] && v > alpha[0] * reference_value(ax_d(), M.index(0, s, r), d, pd, eta[0], buf)) ||
           (on[1] && v > alpha[1] * reference_value(ax_s(), M.index(d, 0, r), s, ps, eta[1], buf)) ||
           (on[2] && v > alpha[2] * reference_value(ax_r(), M.index(d, s, 0), r, pr, eta[2], buf));
  }

  bool and_test(std::size_t d, std::size_t s, std::size_t r, float v, const std::array<float, 3>& a) const {
    return (!on[2] || passes(ax_r(), M.index(d, s, 0), r, pr, eta[2], v / a[2])) &&
           (!on[1] || passes(ax_s(), M.index(d, 0, r), s, ps, eta[1], v / a[1])) &&
           (!on[0] || passes(ax_d(), M.index(0, s, r), d, pd, eta[0], v / a[0]));
  }
};

}  // namespace

GridSpec GridSpec::make(const RadarParams& params, std::size_t r_a) {
  GridSpec g{r_a, params.shape()};
  g.validate();
  return g;
}

void GridSpec::validate() const {
  if (r_a < 1) throw std::invalid_argument("overgriding factor r_a must be >= 1");
  if (base.d0 < 1 || base.d1 < 1 || base.d2 < 1) throw std::invalid_argument("grid base dimensions must be >= 1");
}

std::size_t nearest_bin(double normalized_freq, std::size_t bins) {
  const double x = normalized_freq * static_cast<double>(bins);
  const auto b = static_cast<long long>(std::ceil(x - 0.5));
  const auto n = static_cast<long long>(bins);
  return static_cast<std::size_t>(((b % n) + n) % n);
}

GridIndex nearest_cell(const Target& t, const RadarParams& params, const GridSpec& grid) {
  const Shape3 M = grid.dims();
  return {nearest_bin(t.doppler_hz * params.pulse_interval_s, M.d0), nearest_bin(t.spatial_freq, M.d1),
          nearest_bin(t.beat_freq_hz / params.sample_rate_hz, M.d2)};
}

std::array<double, 3> cell_frequencies(const GridIndex& c, const GridSpec& grid) {
  const Shape3 M = grid.dims();
  return {static_cast<double>(c.d) / static_cast<double>(M.d0), static_cast<double>(c.sp) / static_cast<double>(M.d1),
          static_cast<double>(c.r) / static_cast<double>(M.d2)};
}

AxisWindows AxisWindows::from(const RadarParams& p) {
  auto mk = [](const WindowSpec& s, std::size_t n) {
    return n < 2 ? std::vector<double>(n, 1.0) : make_window(s, n);
  };
  return {mk(p.window_doppler, p.num_pulses), mk(p.window_spatial, p.num_elements),
          mk(p.window_range, p.num_fast_samples)};
}

AxisWindows AxisWindows::rectangular(const Shape3& base) {
  return {std::vector<double>(base.d0, 1.0), std::vector<double>(base.d1, 1.0), std::vector<double>(base.d2, 1.0)};
}

FreqMap3D fft3d(const DataCube& cube, const GridSpec& grid, const AxisWindows& w) { return fft3d_impl(cube, grid, w); }
FreqMap3D fft3d(const OneBitCube& cube, const GridSpec& grid, const AxisWindows& w) { return fft3d_impl(cube, grid, w); }

Array3<float> fft3d_magnitude(const DataCube& cube, const GridSpec& grid, const AxisWindows& w) {
  return fft3d_magnitude_impl(cube, grid, w);
}
Array3<float> fft3d_magnitude(const OneBitCube& cube, const GridSpec& grid, const AxisWindows& w) {
  return fft3d_magnitude_impl(cube, grid, w);
}

Array3<float> magnitude(const FreqMap3D& map) {
  Array3<float> out(map.shape());
  for (std::size_t i = 0; i < map.size(); ++i) out[i] = static_cast<float>(std::abs(map[i]));
  return out;
}

cplx probe_cell(const DataCube& cube, const GridSpec& grid, const AxisWindows& w, const GridIndex& c) {
  check_cube(cube.shape(), grid);
  check_windows(w, grid.base);
  return probe_impl(cube, grid, w, c);
}

double OsCfarConfig::alpha() const { return std::pow(10.0, alpha_db / 20.0); }

void OsCfarConfig::validate(std::size_t line_length) const {
  if (R < 1) throw std::invalid_argument("OS-CFAR needs R >= 1");
  const std::size_t k = order();
  if (k < 1 || k > R) throw std::invalid_argument("OS-CFAR order index must satisfy 1 <= eta <= R");
  if (R + 2 * G >= line_length)
    throw std::invalid_argument("OS-CFAR window R + 2G = " + std::to_string(R + 2 * G) +
                                " does not fit a line of length " + std::to_string(line_length));
}

template <class T>
double os_reference(std::span<const T> line, std::size_t i, const OsCfarConfig& cfg) {
  RefPattern pat(cfg);
  std::vector<double> buf;
  for (auto off : pat.offsets) buf.push_back(static_cast<double>(line[wrap(static_cast<std::ptrdiff_t>(i) + off, line.size())]));
  const std::size_t k = cfg.order();
  std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(k - 1), buf.end());
  return buf[k - 1];
}
template double os_reference<double>(std::span<const double>, std::size_t, const OsCfarConfig&);
template double os_reference<float>(std::span<const float>, std::size_t, const OsCfarConfig&);

std::vector<bool> os_cfar_1d(std::span<const double> line, const OsCfarConfig& cfg) {
  cfg.validate(line.size());
  const double a = cfg.alpha();
  std::vector<bool> out(line.size());
  for (std::size_t i = 0; i < line.size(); ++i) out[i] = line[i] > a * os_reference(line, i, cfg);
  return out;
}

PreDetectionSet predetect(const Array3<float>& mag, const GridSpec& grid, const PredetectConfig& cfg) {
  const MapScan scan(mag, grid, cfg);
  const Shape3 M = scan.M;
  std::vector<std::vector<PreDetection>> per_slice(M.d0);
  const Shape3 span = scan.span();
  parallel_for(span.d0, [&](std::size_t d) {
    std::vector<float> buf;
    auto& found = per_slice[d];
    for (std::size_t s = 0; s < span.d1; ++s)
      for (std::size_t r = 0; r < span.d2; ++r) {
        const float v = mag(d, s, r);
        if (cfg.local_peak && !scan.peak(d, s, r, v)) continue;
        if (cfg.combine == Combine::And ? !scan.and_test(d, s, r, v, scan.alpha) : !scan.or_test(d, s, r, v, buf))
          continue;
        found.push_back({{d, s, r}, {}, 20.0 * std::log10(scan.statistic(d, s, r, v, buf))});
      }
  });
  PreDetectionSet set{grid, {}};
  for (auto& v : per_slice) set.entries.insert(set.entries.end(), v.begin(), v.end());
  return set;
}

PreDetectionSet predetect(const FreqMap3D& map, const GridSpec& grid, const PredetectConfig& cfg) {
  auto set = predetect(magnitude(map), grid, cfg);
  for (auto& e : set.entries) e.y = map(e.cell.d, e.cell.sp, e.cell.r);
  return set;
}

void fill_amplitudes(PreDetectionSet& set, const DataCube& cube, const AxisWindows& w) { fill_impl(set, cube, w); }
void fill_amplitudes(PreDetectionSet& set, const OneBitCube& cube, const AxisWindows& w) { fill_impl(set, cube, w); }

std::vector<float> predetect_statistics(const Array3<float>& mag, const GridSpec& grid, const PredetectConfig& cfg,
                                       double floor_db) {
  const MapScan scan(mag, grid, cfg);
  const Shape3 M = scan.M;
  const float floor_amp = static_cast<float>(std::pow(10.0, floor_db / 20.0));
  const std::array<float, 3> floor_alpha{floor_amp, floor_amp, floor_amp};
  std::vector<std::vector<float>> per_slice(M.d0);
  const Shape3 span = scan.span();
  parallel_for(span.d0, [&](std::size_t d) {
    std::vector<float> buf;
    for (std::size_t s = 0; s < span.d1; ++s)
      for (std::size_t r = 0; r < span.d2; ++r) {
        const float v = mag(d, s, r);
        if (cfg.local_peak && !scan.peak(d, s, r, v)) continue;
        if (cfg.combine == Combine::And && !scan.and_test(d, s, r, v, floor_alpha)) continue;
        const double stat = scan.statistic(d, s, r, v, buf);
        if (stat > floor_amp) per_slice[d].push_back(static_cast<float>(20.0 * std::log10(stat)));
      }
  });
  std::vector<float> out;
  for (auto& v : per_slice) out.insert(out.end(), v.begin(), v.end());
  return out;
}

double calibrate_alpha_db(std::vector<float> stats, double cells, double target_rate) {
  if (!(cells > 0.0) || !(target_rate > 0.0)) throw std::invalid_argument("calibrate_alpha_db: invalid target");
  if (stats.empty()) throw std::invalid_argument("calibrate_alpha_db: no statistics above the floor");
  std::sort(stats.begin(), stats.end(), std::greater<>());
  const double want = target_rate * cells;
  const auto k = static_cast<std::size_t>(std::floor(want));
  if (k == 0) return stats.front() + 1e-3;
  if (k >= stats.size()) return stats.back();
  // between the k-th and (k+1)-th largest statistic
  return 0.5 * (static_cast<double>(stats[k - 1]) + static_cast<double>(stats[k]));
}

double os_cfar_pfa_exponential(std::size_t R, std::size_t eta, double alpha_db) {
  const double T = std::pow(10.0, alpha_db / 10.0);
  double p = 1.0;
  for (std::size_t i = 0; i < eta; ++i) p *= static_cast<double>(R - i) / (static_cast<double>(R - i) + T);
  return p;
}

}  // namespace onebit

#include "onebit/scene.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>
#include <tuple>

#include "onebit/parallel.hpp"
#include "onebit/rng.hpp"

namespace onebit {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

/// exp(j 2 pi f i) for i in [0, count), with the cycle count reduced before the
/// trigonometric call so on-grid frequencies stay accurate for long axes.
std::vector<cplx> phasor_axis(double cycles_per_index, std::size_t count) {
  std::vector<cplx> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double cyc = cycles_per_index * static_cast<double>(i);
    const double frac = cyc - std::floor(cyc);
    out[i] = std::polar(1.0, 2.0 * std::numbers::pi * frac);
  }
  return out;
}

struct TargetPhasors {
  cplx amplitude;
  std::vector<cplx> d, sp, r;
};

std::vector<TargetPhasors> make_phasors(const TargetScene& scene, const RadarParams& p) {
  std::vector<TargetPhasors> out;
  out.reserve(scene.targets.size());
  for (const auto& t : scene.targets) {
    out.push_back({t.amplitude, phasor_axis(t.doppler_hz * p.pulse_interval_s, p.num_pulses),
                   phasor_axis(t.spatial_freq, p.num_elements),
                   phasor_axis(t.beat_freq_hz / p.sample_rate_hz, p.num_fast_samples)});
  }
  return out;
}

/// Fills one (k, l) fast-time row with the target sum, optionally adding noise.
template <class Sink>
void render_rows(const TargetScene& scene, const RadarParams& p, bool noisy, Sink&& sink) {
  p.validate();
  scene.validate(p);
  const auto phasors = make_phasors(scene, p);
  const std::size_t K = p.num_pulses, L = p.num_elements, N = p.num_fast_samples;
  const double sigma = std::sqrt(p.noise_var_per_part());
  parallel_for(K * L, [&](std::size_t kl) {
    const std::size_t k = kl / L, l = kl % L;
    std::vector<cplx> row(N, cplx{});
    for (const auto& tp : phasors) {
      const cplx scale = tp.amplitude * tp.d[k] * tp.sp[l];
      for (std::size_t n = 0; n < N; ++n) row[n] += scale * tp.r[n];
    }
    if (noisy) {
      auto eng = make_engine(scene.rng_seed, kl);
      std::normal_distribution<double> gauss(0.0, sigma);
      for (std::size_t n = 0; n < N; ++n) {
        const double re = gauss(eng);
        const double im = gauss(eng);
        row[n] += cplx(re, im);
      }
    }
    sink(kl * N, row);
  });
}

constexpr std::array<char, 4> kMagic{'O', 'B', 'R', 'C'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put_le(std::ostream& os, T v) {
  std::array<unsigned char, sizeof(T)> b{};
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  os.write(reinterpret_cast<const char*>(b.data()), b.size());
}

template <class T>
T get_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> b{};
  is.read(reinterpret_cast<char*>(b.data()), b.size());
  if (!is) throw std::runtime_error("cube file truncated in header");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(b[i]) << (8 * i);
  return v;
}

void write_header(std::ostream& os, std::uint32_t kind, const Shape3& s) {
  os.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(os, kVersion);
  put_le<std::uint32_t>(os, kind);
  put_le<std::uint64_t>(os, s.d0);
  put_le<std::uint64_t>(os, s.d1);
  put_le<std::uint64_t>(os, s.d2);
}

Shape3 read_header(std::istream& is, std::uint32_t expected_kind) {
  std::array<char, 4> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw std::runtime_error("not a cube file (bad magic)");
  if (get_le<std::uint32_t>(is) != kVersion) throw std::runtime_error("unsupported cube file version");
  const auto kind = get_le<std::uint32_t>(is);
  if (kind != expected_kind) throw std::runtime_error("cube file holds kind " + std::to_string(kind));
  Shape3 s;
  s.d0 = get_le<std::uint64_t>(is);
  s.d1 = get_le<std::uint64_t>(is);
  s.d2 = get_le<std::uint64_t>(is);
  return s;
}

}  // namespace

void RadarParams::validate() const {
  require(finite_positive(carrier_freq_hz), "carrier_freq_hz must be > 0");
  require(finite_positive(fm_slope_hz_per_s), "fm_slope_hz_per_s must be > 0");
  require(finite_positive(pulse_interval_s), "pulse_interval_s must be > 0");
  require(finite_positive(bandwidth_hz), "bandwidth_hz must be > 0");
  require(finite_positive(sample_rate_hz), "sample_rate_hz must be > 0");
  require(sample_rate_hz == bandwidth_hz, "sample_rate_hz must equal bandwidth_hz");
  require(finite_positive(element_spacing_m), "element_spacing_m must be > 0");
  require(num_pulses >= 1, "num_pulses must be >= 1");
  require(num_elements >= 1, "num_elements must be >= 1");
  require(num_fast_samples >= 1, "num_fast_samples must be >= 1");
  require(finite_positive(complex_noise_var), "complex_noise_var must be > 0");
}

RadarParams RadarParams::table1() {
  RadarParams p;
  p.carrier_freq_hz = 24e9;
  p.fm_slope_hz_per_s = 1e13;
  p.pulse_interval_s = 2e-5;
  p.bandwidth_hz = 100e6;
  p.sample_rate_hz = 100e6;
  p.num_pulses = 200;
  p.num_elements = 24;
  p.element_spacing_m = 0.00625;
  p.num_fast_samples = 1000;
  p.complex_noise_var = 1.0;
  p.window_doppler = {WindowKind::Chebyshev, 60.0, 4};
  p.window_spatial = {WindowKind::Taylor, 35.0, 5};
  p.window_range = {WindowKind::Chebyshev, 60.0, 4};
  return p;
}

Target Target::from_snr(double snr_db, double phase_rad, double doppler_hz, double spatial_freq,
                        double beat_freq_hz, const RadarParams& params) {
  const double mag = std::sqrt(params.complex_noise_var * std::pow(10.0, snr_db / 10.0));
  return {std::polar(mag, phase_rad), doppler_hz, spatial_freq, beat_freq_hz};
}

void TargetScene::validate(const RadarParams& p) const {
  std::set<std::tuple<double, double, double>> seen;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& t = targets[i];
    const std::string who = "target " + std::to_string(i) + ": ";
    require(std::isfinite(t.amplitude.real()) && std::isfinite(t.amplitude.imag()), who + "amplitude not finite");
    require(t.beat_freq_hz >= -p.bandwidth_hz && t.beat_freq_hz <= 0.0, who + "beat_freq_hz outside [-B_r, 0]");
    require(std::abs(t.spatial_freq) <= 0.5, who + "|spatial_freq| > 0.5");
    require(t.doppler_hz >= 0.0 && t.doppler_hz < p.prf(), who + "doppler_hz outside [0, 1/T_I)");
    require(seen.emplace(t.doppler_hz, t.spatial_freq, t.beat_freq_hz).second,
            who + "duplicate frequency triple");
  }
}

DataCube OneBitCube::to_complex() const {
  DataCube out(shape_);
  for (std::size_t i = 0; i < size(); ++i) out[i] = at(i);
  return out;
}

DataCube synthesize_signal(const TargetScene& scene, const RadarParams& params) {
  params.validate();
  scene.validate(params);
  DataCube cube(params.shape());
  render_rows(scene, params, false, [&](std::size_t off, const std::vector<cplx>& row) {
    std::copy(row.begin(), row.end(), cube.storage().begin() + static_cast<std::ptrdiff_t>(off));
  });
  return cube;
}

DataCube synthesize_cube(const TargetScene& scene, const RadarParams& params) {
  params.validate();
  scene.validate(params);
  DataCube cube(params.shape());
  render_rows(scene, params, true, [&](std::size_t off, const std::vector<cplx>& row) {
    std::copy(row.begin(), row.end(), cube.storage().begin() + static_cast<std::ptrdiff_t>(off));
  });
  return cube;
}

OneBitCube synthesize_one_bit(const TargetScene& scene, const RadarParams& params) {
  params.validate();
  scene.validate(params);
  OneBitCube out(params.shape());
  render_rows(scene, params, true, [&](std::size_t off, const std::vector<cplx>& row) {
    for (std::size_t n = 0; n < row.size(); ++n)
      out.set(off + n, sign_bit(row[n].real()), sign_bit(row[n].imag()));
  });
  return out;
}

OneBitCube quantize_one_bit(const DataCube& cube) {
  OneBitCube out(cube.shape());
  for (std::size_t i = 0; i < cube.size(); ++i) out.set(i, sign_bit(cube[i].real()), sign_bit(cube[i].imag()));
  return out;
}

double snr_of_target(const Target& target, const RadarParams& params) {
  if (!(params.complex_noise_var > 0.0)) throw std::invalid_argument("complex_noise_var must be > 0");
  const double p = std::norm(target.amplitude);
  if (p == 0.0) return kNegInfDb;
  return 10.0 * std::log10(p / params.complex_noise_var);
}

void write_cube(std::ostream& os, const DataCube& cube) {
  write_header(os, 0, cube.shape());
  for (std::size_t i = 0; i < cube.size(); ++i) {
    for (double v : {cube[i].real(), cube[i].imag()}) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, &v, sizeof bits);
      put_le<std::uint64_t>(os, bits);
    }
  }
  if (!os) throw std::runtime_error("failed writing cube");
}

void write_cube(std::ostream& os, const OneBitCube& cube) {
  write_header(os, 1, cube.shape());
  std::vector<unsigned char> packed((cube.size() + 3) / 4, 0);
  for (std::size_t i = 0; i < cube.size(); ++i) {
    unsigned v = (cube.re(i) > 0 ? 1u : 0u) | (cube.im(i) > 0 ? 2u : 0u);
    packed[i / 4] |= static_cast<unsigned char>(v << (2 * (i % 4)));
  }
  os.write(reinterpret_cast<const char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
  if (!os) throw std::runtime_error("failed writing cube");
}

DataCube read_data_cube(std::istream& is) {
  const Shape3 s = read_header(is, 0);
  DataCube cube(s);
  for (std::size_t i = 0; i < cube.size(); ++i) {
    double parts[2];
    for (double& v : parts) {
      const auto bits = get_le<std::uint64_t>(is);
      std::memcpy(&v, &bits, sizeof v);
    }
    cube[i] = {parts[0], parts[1]};
  }
  return cube;
}

OneBitCube read_one_bit_cube(std::istream& is) {
  const Shape3 s = read_header(is, 1);
  OneBitCube cube(s);
  std::vector<unsigned char> packed((s.size() + 3) / 4);
  is.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
  if (!is) throw std::runtime_error("cube file truncated in payload");
  for (std::size_t i = 0; i < s.size(); ++i) {
    const unsigned v = (packed[i / 4] >> (2 * (i % 4))) & 3u;
    cube.set(i, (v & 1u) ? 1 : -1, (v & 2u) ? 1 : -1);
  }
  return cube;
}

std::string to_string(WindowKind kind) {
  switch (kind) {
    case WindowKind::Rectangular: return "rectangular";
    case WindowKind::Chebyshev: return "chebyshev";
    case WindowKind::Taylor: return "taylor";
  }
  return "unknown";
}

WindowKind window_kind_from_string(const std::string& s) {
  if (s == "rectangular" || s == "rect") return WindowKind::Rectangular;
  if (s == "chebyshev") return WindowKind::Chebyshev;
  if (s == "taylor") return WindowKind::Taylor;
  throw std::invalid_argument("unsupported window kind '" + s + "'");
}

}  // namespace onebit

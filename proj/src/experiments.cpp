#include "onebit/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "onebit/fft.hpp"
#include "onebit/parallel.hpp"
#include "onebit/rng.hpp"

namespace onebit::experiments {

namespace {

double db20(double a) { return a > 0.0 ? 20.0 * std::log10(a) : kNmseFloorDb; }
double db10(double p) { return p > 0.0 ? 10.0 * std::log10(p) : kNmseFloorDb; }

std::size_t bin_index(double freq, std::size_t n) {
  const auto N = static_cast<long long>(n);
  const auto b = static_cast<long long>(std::floor(freq * static_cast<double>(n) + 0.5));
  return static_cast<std::size_t>(((b % N) + N) % N);
}

double snap(double f, std::size_t n) {
  return std::floor(f * static_cast<double>(n) + 0.5) / static_cast<double>(n);
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

std::vector<cplx> to_bits(const OneBitCube& q) {
  std::vector<cplx> out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = q.at(i);
  return out;
}

double gamma2_for(const RadarParams& p, double th_db) {
  return gamma2_from_sensitivity(p.shape().size(), th_db) * std::sqrt(p.complex_noise_var);
}

std::array<double, 3> normalized(const Target& t, const RadarParams& p) {
  return {t.doppler_hz * p.pulse_interval_s, t.spatial_freq, t.beat_freq_hz / p.sample_rate_hz};
}

bool near_any(const GridIndex& c, const std::vector<GridIndex>& cells, const Shape3& dims, std::size_t tol) {
  return std::any_of(cells.begin(), cells.end(), [&](const GridIndex& t) { return cell_distance(c, t, dims) <= tol; });
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

Proportion wilson(std::size_t successes, std::size_t trials, double z) {
  Proportion out{successes, trials, 0.0, 0.0, 1.0};
  if (trials == 0) return out;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  out.p = p;
  out.lo = std::max(0.0, center - half);
  out.hi = std::min(1.0, center + half);
  return out;
}

std::vector<AttenuationRow> run_attenuation_sweep(const AttenuationConfig& cfg) {
  require(cfg.trials >= 1 && !cfg.snr_db.empty(), "attenuation sweep: need trials >= 1 and a nonempty sweep");
  const std::size_t N = cfg.tones.num_samples;
  const std::vector<double> freqs{snap(cfg.tones.f1, N), snap(cfg.tones.f2, N)};
  std::vector<AttenuationRow> rows(cfg.snr_db.size());
  for (std::size_t i = 0; i < cfg.snr_db.size(); ++i) {
    const double s = cfg.snr_db[i];
    const auto tones = harmonics::ToneSpec::from_snr({s, s}, freqs);
    const auto est = harmonics::mc_spectrum_estimate(tones, N, cfg.trials, derive_seed(cfg.tones.seed, i), 3);

    double fund = 0, self = 0, cross = 0;
    int nf = 0, ns = 0, nc = 0;
    for (const auto& l : est.lines) {
      if (!l.estimate) continue;
      const double a = std::abs(*l.estimate);
      if (l.line.order == 1) {
        fund += a;
        ++nf;
      } else if (l.line.order == 3) {
        const bool is_self = l.line.k[0] == 0 || l.line.k[1] == 0;
        (is_self ? self : cross) += a;
        ++(is_self ? ns : nc);
      }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rows[i].snr_db = s;
    rows[i].closed = harmonics::attenuation_closed_form(s);
    rows[i].approx = harmonics::attenuation_low_snr(s);
    rows[i].mc_self_db = nf && ns ? db20((self / ns) / (fund / nf)) : nan;
    rows[i].mc_cross_db = nf && nc ? db20((cross / nc) / (fund / nf)) : nan;
  }
  return rows;
}

std::vector<SnrLossRow> run_snr_loss(const SnrLossConfig& cfg) {
  require(cfg.repeats >= 1, "snr loss: repeats must be >= 1");
  std::vector<double> sweep = cfg.snr2_db;
  if (sweep.empty())
    for (int s = -30; s <= 20; s += 2) sweep.push_back(s);
  const std::size_t N = cfg.tones.num_samples;
  const std::vector<double> freqs{snap(cfg.tones.f1, N), snap(cfg.tones.f2, N)};
  const std::size_t b1 = bin_index(freqs[0], N), b2 = bin_index(freqs[1], N);

  struct Acc {
    double p1 = 0, p2 = 0, floor = 0;
  };
  auto measure = [&](std::vector<cplx>& x, Acc& acc) {
    fft::transform(x);
    std::vector<double> power(N);
    const double scale = 1.0 / (static_cast<double>(N) * static_cast<double>(N));
    for (std::size_t i = 0; i < N; ++i) power[i] = std::norm(x[i]) * scale;
    acc.p1 += power[b1];
    acc.p2 += power[b2];
    acc.floor += median(std::move(power)) / std::numbers::ln2;
  };

  std::vector<SnrLossRow> rows(sweep.size());
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const auto tones = harmonics::ToneSpec::from_snr({cfg.snr1_db, sweep[i]}, freqs);
    Acc c, q;
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
      const std::uint64_t s = derive_seed(cfg.tones.seed, i * 1000003ULL + r);
      auto analog = harmonics::analog_tones(tones, N, s);
      auto bits = analog;
      for (auto& v : bits) v = csign(v);
      measure(analog, c);
      measure(bits, q);
    }
    auto snr = [](double p, double floor) { return db10((p - floor) / floor); };
    auto& row = rows[i];
    row.snr2_db = sweep[i];
    row.snr_c1_db = snr(c.p1, c.floor);
    row.snr_c2_db = snr(c.p2, c.floor);
    row.snr_ob1_db = snr(q.p1, q.floor);
    row.snr_ob2_db = snr(q.p2, q.floor);
    row.loss1_db = row.snr_c1_db - row.snr_ob1_db;
    row.loss2_db = row.snr_c2_db - row.snr_ob2_db;
  }
  return rows;
}

GaussianityReport run_gaussianity_check(const GaussianityConfig& cfg) {
  require(cfg.excise_order >= 1 && cfg.excise_order % 2 == 1, "gaussianity: excise_order must be odd and >= 1");
  const std::size_t N = cfg.tones.num_samples;
  const std::vector<double> freqs{snap(cfg.tones.f1, N), snap(cfg.tones.f2, N)};
  const auto tones = harmonics::ToneSpec::from_snr({cfg.snr_db, cfg.snr_db}, freqs);
  auto x = harmonics::one_bit_tones(tones, N, cfg.tones.seed);
  fft::transform(x);

  std::vector<bool> excised(N, false);
  for (const auto& l : harmonics::harmonic_frequencies(freqs, cfg.excise_order, 1.0)) excised[bin_index(l.frequency, N)] = true;

  std::vector<double> v;
  v.reserve(N);
  for (std::size_t i = 0; i < N; ++i)
    if (!excised[i]) v.push_back(x[i].real());

  GaussianityReport rep;
  rep.snr_db = cfg.snr_db;
  rep.excise_order = cfg.excise_order;
  rep.bins_used = v.size();
  rep.bins_excised = N - v.size();
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double& e : v) {
    e -= mean;
    const double e2 = e * e;
    m2 += e2;
    m3 += e2 * e;
    m4 += e2 * e2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  rep.skewness = m3 / std::pow(m2, 1.5);
  rep.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  rep.jarque_bera = n / 6.0 * (rep.skewness * rep.skewness + rep.excess_kurtosis * rep.excess_kurtosis / 4.0);
  rep.p_value = std::exp(-rep.jarque_bera / 2.0);  // chi-square, 2 degrees of freedom
  rep.normal = rep.p_value >= cfg.significance;

  const double denom = m2 * n;
  for (std::size_t lag = 1; lag <= cfg.max_lag && lag < v.size(); ++lag) {
    double acc = 0;
    for (std::size_t i = 0; i + lag < v.size(); ++i) acc += v[i] * v[i + lag];
    rep.autocorr.push_back(acc / denom);
    rep.max_abs_autocorr = std::max(rep.max_abs_autocorr, std::abs(acc / denom));
  }
  return rep;
}

std::vector<HarmonicCell> harmonic_cells(const std::vector<Target>& targets, const RadarParams& params,
                                         const GridSpec& grid, int order) {
  std::vector<HarmonicCell> out;
  if (targets.empty()) return out;
  std::vector<std::array<double, 3>> f;
  for (const auto& t : targets) f.push_back(normalized(t, params));
  std::vector<GridIndex> truth;
  for (const auto& t : targets) truth.push_back(nearest_cell(t, params, grid));

  const Shape3 M = grid.dims();
  const std::vector<double> dummy(targets.size(), 0.0);
  for (const auto& line : harmonics::harmonic_frequencies(dummy, order, std::nullopt, order)) {
    std::array<double, 3> h{};
    for (std::size_t i = 0; i < targets.size(); ++i)
      for (int a = 0; a < 3; ++a) h[a] += line.k[i] * f[i][a];
    const GridIndex c{nearest_bin(h[0], M.d0), nearest_bin(h[1], M.d1), nearest_bin(h[2], M.d2)};
    if (std::find(truth.begin(), truth.end(), c) != truth.end()) continue;
    if (std::any_of(out.begin(), out.end(), [&](const HarmonicCell& e) { return e.cell == c; })) continue;
    out.push_back({line.k, c});
  }
  return out;
}

PreDetectionSet conventional_baseline(const DataCube& cube, const GridSpec& grid, const AxisWindows& windows,
                                      const PredetectConfig& cfg) {
  auto set = predetect(fft3d_magnitude(cube, grid, windows), grid, cfg);
  fill_amplitudes(set, cube, windows);
  return set;
}

PreDetectionSet one_bit_predetect(const OneBitCube& cube, const GridSpec& grid, const AxisWindows& windows,
                                  const PredetectConfig& cfg) {
  return predetect(fft3d_magnitude(cube, grid, windows), grid, cfg);
}

PredetectConfig fit_to_grid(PredetectConfig cfg, const GridSpec& grid) {
  const Shape3 M = grid.dims();
  auto fit = [](OsCfarConfig& c, std::size_t base, std::size_t len) {
    if (base <= 1 || c.R + 2 * c.G + 1 <= len) return;
    if (len < 2 * c.G + 3) throw std::invalid_argument("OS-CFAR guard cells do not fit the grid");
    std::size_t R = len - 2 * c.G - 1;
    R -= R % 2;
    c.eta = std::max<std::size_t>(1, c.order() * R / c.R);
    c.R = R;
  };
  fit(cfg.d, grid.base.d0, M.d0);
  fit(cfg.sp, grid.base.d1, M.d1);
  fit(cfg.r, grid.base.d2, M.d2);
  return cfg;
}

PredetectConfig uniform_predetect(double alpha_db, std::size_t R, std::size_t G, std::size_t eta) {
  PredetectConfig c;
  c.d = c.sp = c.r = OsCfarConfig{R, G, eta, alpha_db};
  return c;
}

std::vector<Target> suppression_targets(bool off_grid, double snr_db, const RadarParams& p, double phase1,
                                        double phase2) {
  if (off_grid)
    return {Target::from_snr(snr_db, phase1, 2.1e3, 0.0125, -40.015e6, p),
            Target::from_snr(snr_db, phase2, 7.35e3, 0.0354, -3.06e6, p)};
  return {Target::from_snr(snr_db, phase1, 2e3, 0.0, -40e6, p), Target::from_snr(snr_db, phase2, 7e3, 0.0, -3e6, p)};
}

std::vector<SuppressionTrial> run_suppression(const SuppressionConfig& cfg) {
  require(cfg.trials >= 1 && !cfg.r_a.empty(), "suppression: need trials >= 1 and at least one r_a");
  cfg.params.validate();
  const RadarParams& p = cfg.params;
  const AxisWindows windows = AxisWindows::from(p);
  const double g2 = gamma2_for(p, cfg.th_db);
  const std::size_t tol = cfg.off_grid ? 1 : 0;

  std::vector<SuppressionTrial> out;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    auto eng = make_engine(cfg.seed, 0x5u + t);
    std::uniform_real_distribution<double> ph(0.0, 2.0 * std::numbers::pi);
    const double ph1 = ph(eng), ph2 = ph(eng);
    const TargetScene scene{suppression_targets(cfg.off_grid, cfg.snr_db, p, ph1, ph2), derive_seed(cfg.seed, t)};
    const OneBitCube bits_cube = synthesize_one_bit(scene, p);
    const auto bits = to_bits(bits_cube);

    for (std::size_t ra : cfg.r_a) {
      const GridSpec grid = GridSpec::make(p, ra);
      const Shape3 dims = grid.dims();
      SuppressionTrial tr;
      tr.r_a = ra;
      tr.trial = t;
      const auto set = one_bit_predetect(bits_cube, grid, windows, fit_to_grid(cfg.predetect, grid));
      tr.num_pts = set.size();

      std::vector<GridIndex> truth;
      double amp = 0;
      for (const auto& tg : scene.targets) {
        truth.push_back(nearest_cell(tg, p, grid));
        amp = std::max(amp, std::abs(tg.amplitude));
      }
      tr.target_true_db = db20(amp);
      const auto hcells = harmonic_cells(scene.targets, p, grid, 3);
      std::vector<GridIndex> hidx;
      for (const auto& h : hcells) hidx.push_back(h.cell);
      tr.harmonic_cells = hcells.size();

      for (const auto& c : truth)
        if (std::any_of(set.entries.begin(), set.entries.end(),
                        [&](const PreDetection& e) { return cell_distance(e.cell, c, dims) <= tol; }))
          ++tr.target_pts;

      if (set.size() == 0) {
        tr.target_db = tr.harmonic_residual_db = tr.noise_residual_db = kNmseFloorDb;
        tr.converged = true;
        out.push_back(tr);
        continue;
      }
      const ReducedOperator op = ReducedOperator::from(set);
      const auto res = gamp_run(bits, op, std::nullopt, p.noise_var_per_part(), cfg.gamp);
      tr.converged = res.converged;
      tr.iterations = res.iterations;
      tr.final_detections = detect_final(res, op, g2).detected.size();

      double tmax = 0, hmax = 0, nmax = 0;
      std::vector<double> hcell_max(hidx.size(), -1.0);
      for (std::size_t i = 0; i < op.cols(); ++i) {
        const GridIndex& c = op.cells()[i];
        const double a = std::abs(res.x_hat[i]);
        if (near_any(c, truth, dims, tol)) {
          tmax = std::max(tmax, a);
          continue;
        }
        bool harmonic = false;
        for (std::size_t h = 0; h < hidx.size(); ++h)
          if (cell_distance(c, hidx[h], dims) <= tol) {
            hcell_max[h] = std::max(hcell_max[h], a);
            harmonic = true;
          }
        (harmonic ? hmax : nmax) = std::max(harmonic ? hmax : nmax, a);
      }
      for (double m : hcell_max) {
        if (m < 0) continue;
        ++tr.harmonic_found;
        if (m < g2) ++tr.harmonic_suppressed;
      }
      tr.target_db = db20(tmax);
      tr.harmonic_residual_db = hmax > 0 && tmax > 0 ? db20(hmax) - tr.target_db : kNmseFloorDb;
      tr.noise_residual_db = nmax > 0 && tmax > 0 ? db20(nmax) - tr.target_db : kNmseFloorDb;
      out.push_back(tr);
    }
  }
  return out;
}

FastTimeResult run_fast_time_recovery(const FastTimeConfig& cfg) {
  RadarParams p = RadarParams::table1();
  p.num_pulses = 1;
  p.num_elements = 1;
  p.num_fast_samples = cfg.num_samples;
  p.window_range = cfg.window;
  p.validate();

  auto eng = make_engine(cfg.seed, 0x7u);
  std::uniform_real_distribution<double> ph(0.0, 2.0 * std::numbers::pi);
  TargetScene scene{{}, derive_seed(cfg.seed, 1)};
  for (double f : cfg.beat_hz) scene.targets.push_back(Target::from_snr(cfg.snr_db, ph(eng), 0.0, 0.0, f, p));

  const GridSpec grid = GridSpec::make(p, cfg.r_a);
  const AxisWindows windows = AxisWindows::from(p);
  const OneBitCube q = synthesize_one_bit(scene, p);
  const auto bits = to_bits(q);
  const auto truth_signal = synthesize_signal(scene, p);

  PredetectConfig pc;
  pc.d = pc.sp = pc.r = cfg.cfar;
  pc.local_peak = cfg.local_peak;
  const auto set = one_bit_predetect(q, grid, windows, pc);

  std::vector<GridIndex> truth;
  for (const auto& t : scene.targets) truth.push_back(nearest_cell(t, p, grid));

  FastTimeResult out;
  out.num_pts = set.size();
  auto evaluate = [&](const ReducedOperator& op, const GampResult& res, double& margin, double& nmse,
                      std::vector<double>* errors) {
    double weakest = std::numeric_limits<double>::infinity(), spurious = 0;
    std::vector<double> per_target(truth.size(), 0.0);
    for (std::size_t i = 0; i < op.cols(); ++i) {
      const auto it = std::find(truth.begin(), truth.end(), op.cells()[i]);
      const double a = std::abs(res.x_hat[i]);
      if (it != truth.end())
        per_target[static_cast<std::size_t>(it - truth.begin())] = a;
      else
        spurious = std::max(spurious, a);
    }
    for (std::size_t t = 0; t < truth.size(); ++t) {
      weakest = std::min(weakest, per_target[t]);
      if (errors) errors->push_back(db20(per_target[t]) - db20(std::abs(scene.targets[t].amplitude)));
    }
    margin = spurious > 0 ? db20(weakest) - db20(spurious) : -kNmseFloorDb;
    nmse = reconstruct_and_nmse(res, op, truth_signal.flat()).nmse_db;
  };

  if (set.size() == 0) throw std::runtime_error("fast-time recovery: pre-detection found nothing");
  const ReducedOperator op = ReducedOperator::from(set);
  const auto res = gamp_run(bits, op, std::nullopt, p.noise_var_per_part(), cfg.gamp);
  out.converged = res.converged;
  out.iterations = res.iterations;
  evaluate(op, res, out.spurious_margin_db, out.nmse_db, &out.target_error_db);

  if (cfg.full_dictionary) {
    std::vector<GridIndex> all;
    for (std::size_t r = 0; r < grid.dims().d2; ++r) all.push_back({0, 0, r});
    const ReducedOperator full(all, grid);
    const auto fres = gamp_run(bits, full, std::nullopt, p.noise_var_per_part(), cfg.gamp);
    double m = 0, n = 0;
    evaluate(full, fres, m, n, nullptr);
    out.full_spurious_margin_db = m;
    out.full_nmse_db = n;
  }
  return out;
}

ComparisonConfig default_comparison(int scenario) {
  require(scenario == 1 || scenario == 2, "comparison scenario must be 1 or 2");
  ComparisonConfig c;
  c.scenario = scenario;
  c.params.num_pulses = 100;
  c.params.num_elements = 10;
  c.params.num_fast_samples = 100;
  c.params.window_doppler = {WindowKind::Chebyshev, 50.0, 4};
  c.params.window_spatial = {WindowKind::Taylor, 30.0, 4};
  c.params.window_range = {WindowKind::Chebyshev, 50.0, 4};
  c.one_bit.d = {100, 2, 75, 8.0};
  c.one_bit.sp = {24, 2, 18, 8.0};
  c.one_bit.r = {100, 2, 75, 8.0};
  c.conventional = c.one_bit;
  return c;
}

std::vector<Target> random_targets(const ComparisonConfig& cfg, double snr_db, std::uint64_t seed) {
  const RadarParams& p = cfg.params;
  Engine eng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Shape3 base = p.shape();
  std::vector<std::array<double, 3>> placed;  // positions in base resolution cells
  std::vector<Target> out;

  auto circ = [](double a, double b, double n) {
    const double d = std::abs(a - b);
    return std::min(d, n - d);
  };
  auto add = [&](double snr) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      const double fd = u(eng) * p.prf();
      const double fsp = u(eng) - 0.5;
      const double fr = -u(eng) * p.bandwidth_hz;
      const double phase = u(eng) * 2.0 * std::numbers::pi;
      const std::array<double, 3> pos{fd * p.pulse_interval_s * static_cast<double>(base.d0),
                                      (fsp + 0.5) * static_cast<double>(base.d1),
                                      (fr / p.sample_rate_hz + 1.0) * static_cast<double>(base.d2)};
      const bool clear = std::all_of(placed.begin(), placed.end(), [&](const std::array<double, 3>& q) {
        const double sep = std::max({circ(pos[0], q[0], double(base.d0)), circ(pos[1], q[1], double(base.d1)),
                                     circ(pos[2], q[2], double(base.d2))});
        return sep >= static_cast<double>(cfg.min_separation);
      });
      if (!clear) continue;
      placed.push_back(pos);
      out.push_back(Target::from_snr(snr, phase, fd, fsp, fr, p));
      return;
    }
    throw std::runtime_error("random_targets: could not place targets with the requested separation");
  };
  if (cfg.scenario == 2) add(cfg.strong_snr_db);
  for (std::size_t i = 0; i < cfg.num_targets; ++i) add(snr_db);
  return out;
}

std::optional<double> crossing_snr(const DetectionCurve& curve, double level) {
  const auto& pts = curve.points;
  if (pts.empty() || pts.front().pd.p >= level) return std::nullopt;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double a = pts[i].pd.p, b = pts[i + 1].pd.p;
    if (a < level && b >= level)
      return pts[i].snr_db + (level - a) / (b - a) * (pts[i + 1].snr_db - pts[i].snr_db);
  }
  return std::nullopt;
}

Proportion predetection_fa_rate(const RadarParams& params, const GridSpec& grid, const PredetectConfig& cfg,
                                bool one_bit, std::size_t trials, std::uint64_t seed) {
  require(trials >= 1, "predetection_fa_rate: trials must be >= 1");
  const AxisWindows windows = AxisWindows::from(params);
  std::vector<std::size_t> counts(trials, 0);
  parallel_for(trials, [&](std::size_t t) {
    const TargetScene scene{{}, derive_seed(seed, t)};
    counts[t] = one_bit ? predetect(fft3d_magnitude(synthesize_one_bit(scene, params), grid, windows), grid, cfg).size()
                        : predetect(fft3d_magnitude(synthesize_cube(scene, params), grid, windows), grid, cfg).size();
  });
  return wilson(std::accumulate(counts.begin(), counts.end(), std::size_t{0}), trials * grid.cells());
}

namespace {

struct Candidate {
  float ratio_db;
  std::vector<std::uint8_t> near;  // indices of the targets within tolerance
};

struct TrialOutcome {
  std::vector<bool> ob_hit;
  std::size_t ob_fa = 0;
  std::size_t pts = 0;
  bool converged = true;
  std::vector<Candidate> conv;
};

constexpr double kCandidateFloorDb = 3.0;

}  // namespace

ComparisonResult run_detection_comparison(const ComparisonConfig& cfg) {
  require(cfg.trials >= 1 && !cfg.snr_db.empty(), "comparison: need trials >= 1 and a nonempty sweep");
  cfg.params.validate();
  const RadarParams& p = cfg.params;
  const GridSpec grid = GridSpec::make(p, cfg.r_a);
  const Shape3 dims = grid.dims();
  const AxisWindows windows = AxisWindows::from(p);
  const double g2 = gamma2_for(p, cfg.th_db);
  const double cells = static_cast<double>(grid.cells());
  const std::size_t first = cfg.scenario == 2 ? 1 : 0;  // the strong target is not scored

  PredetectConfig conv_scan = cfg.conventional;
  conv_scan.d.alpha_db = conv_scan.sp.alpha_db = conv_scan.r.alpha_db = kCandidateFloorDb;

  const std::size_t S = cfg.snr_db.size(), T = cfg.trials;
  std::vector<TrialOutcome> outcomes(S * T);
  parallel_for(S * T, [&](std::size_t job) {
    const std::size_t si = job / T;
    const std::uint64_t trial_seed = derive_seed(cfg.seed, job);
    const TargetScene scene{random_targets(cfg, cfg.snr_db[si], derive_seed(trial_seed, 1)), derive_seed(trial_seed, 2)};
    std::vector<GridIndex> truth;
    for (const auto& tg : scene.targets) truth.push_back(nearest_cell(tg, p, grid));

    TrialOutcome& out = outcomes[job];
    const DataCube cube = synthesize_cube(scene, p);

    // one-bit: pre-detection then GAMP
    const OneBitCube q = quantize_one_bit(cube);
    const auto set = one_bit_predetect(q, grid, windows, cfg.one_bit);
    out.pts = set.size();
    out.ob_hit.assign(truth.size(), false);
    if (set.size() > 0) {
      const ReducedOperator op = ReducedOperator::from(set);
      const auto res = gamp_run(to_bits(q), op, std::nullopt, p.noise_var_per_part(), cfg.gamp);
      out.converged = res.converged;
      const auto rep = detect_final(res, op, g2, truth, cfg.hit_tolerance);
      for (std::size_t i = 0; i < truth.size(); ++i) out.ob_hit[i] = rep.target_hit[i];
      out.ob_fa = static_cast<std::size_t>(std::count(rep.detected_is_true.begin(), rep.detected_is_true.end(), false));
    }

    // conventional: candidates above a low floor, thresholded after calibration
    const auto cset = predetect(fft3d_magnitude(cube, grid, windows), grid, conv_scan);
    for (const auto& e : cset.entries) {
      Candidate c{static_cast<float>(e.ratio_db), {}};
      for (std::size_t i = 0; i < truth.size(); ++i)
        if (cell_distance(e.cell, truth[i], dims) <= cfg.hit_tolerance) c.near.push_back(static_cast<std::uint8_t>(i));
      out.conv.push_back(std::move(c));
    }
  });

  ComparisonResult result;
  result.one_bit.system = "one-bit";
  result.one_bit.alpha_db = cfg.one_bit.r.alpha_db;
  const std::size_t scored = cfg.num_targets;
  for (std::size_t si = 0; si < S; ++si) {
    CurvePoint pt;
    pt.snr_db = cfg.snr_db[si];
    std::size_t hits = 0, pts = 0;
    for (std::size_t t = 0; t < T; ++t) {
      const auto& o = outcomes[si * T + t];
      for (std::size_t i = first; i < o.ob_hit.size(); ++i) hits += o.ob_hit[i];
      pt.false_alarms += o.ob_fa;
      pts += o.pts;
      pt.non_converged += !o.converged;
    }
    pt.pd = wilson(hits, T * scored);
    pt.fa_rate = static_cast<double>(pt.false_alarms) / (static_cast<double>(T) * cells);
    pt.mean_pts = static_cast<double>(pts) / static_cast<double>(T);
    result.one_bit.max_fa_rate = std::max(result.one_bit.max_fa_rate, pt.fa_rate);
    result.one_bit.points.push_back(pt);
  }

  // calibrate the conventional scale factor on noise-only cubes to the one-bit FA rate
  result.calibration_target_rate =
      result.one_bit.max_fa_rate > 0 ? result.one_bit.max_fa_rate : 1.0 / (static_cast<double>(S * T) * cells);
  double alpha_c = 0;
  if (cfg.conventional_alpha_db) {
    alpha_c = *cfg.conventional_alpha_db;
  } else {
    require(cfg.calibration_trials >= 1, "comparison: calibration_trials must be >= 1");
    std::vector<std::vector<float>> stats(cfg.calibration_trials);
    parallel_for(cfg.calibration_trials, [&](std::size_t t) {
      const TargetScene scene{{}, derive_seed(cfg.seed ^ 0xCA11B8A7EULL, t)};
      stats[t] = predetect_statistics(fft3d_magnitude(synthesize_cube(scene, p), grid, windows), grid, cfg.conventional,
                                      kCandidateFloorDb);
    });
    std::vector<float> all;
    for (auto& s : stats) all.insert(all.end(), s.begin(), s.end());
    alpha_c = calibrate_alpha_db(std::move(all), cells * static_cast<double>(cfg.calibration_trials),
                                 result.calibration_target_rate);
  }

  result.conventional.system = "conventional";
  result.conventional.alpha_db = alpha_c;
  for (std::size_t si = 0; si < S; ++si) {
    CurvePoint pt;
    pt.snr_db = cfg.snr_db[si];
    std::size_t hits = 0;
    for (std::size_t t = 0; t < T; ++t) {
      const auto& o = outcomes[si * T + t];
      std::vector<bool> hit(o.ob_hit.size(), false);
      for (const auto& c : o.conv) {
        if (!(c.ratio_db > alpha_c)) continue;
        if (c.near.empty()) ++pt.false_alarms;
        for (auto i : c.near) hit[i] = true;
      }
      for (std::size_t i = first; i < hit.size(); ++i) hits += hit[i];
    }
    pt.pd = wilson(hits, T * scored);
    pt.fa_rate = static_cast<double>(pt.false_alarms) / (static_cast<double>(T) * cells);
    result.conventional.max_fa_rate = std::max(result.conventional.max_fa_rate, pt.fa_rate);
    result.conventional.points.push_back(pt);
  }

  result.snr50_one_bit = crossing_snr(result.one_bit);
  result.snr50_conventional = crossing_snr(result.conventional);
  if (result.snr50_one_bit && result.snr50_conventional)
    result.advantage_db = *result.snr50_conventional - *result.snr50_one_bit;
  return result;
}

}  // namespace onebit::experiments

// onebit: command-line front end for the one-bit radar toolkit.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include "onebit/config.hpp"
#include "onebit/csv.hpp"
#include "onebit/experiments.hpp"
#include "onebit/fft.hpp"
#include "onebit/parallel.hpp"
#include "onebit/rng.hpp"

#ifndef ONEBIT_VERSION
#define ONEBIT_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
namespace ex = onebit::experiments;
using json = nlohmann::json;
using onebit::CsvWriter;
using Kind = CsvWriter::Kind;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kConfigError = 2, kRuntimeError = 3, kNonConverged = 4 };

struct Common {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
};

class Run {
 public:
  Run(std::string sub, std::vector<std::string> argv, const Common& common, onebit::ExperimentConfig base,
      const std::function<void(onebit::ExperimentConfig&)>& overrides = {})
      : sub_(std::move(sub)), argv_(std::move(argv)) {
    cfg = common.config_path.empty() ? std::move(base) : onebit::load_config(common.config_path, std::move(base));
    if (common.seed) cfg.seed = *common.seed;
    if (overrides) overrides(cfg);
    onebit::job_count() = common.jobs;
    jobs_ = common.jobs;
    config_text_ = onebit::to_text(cfg);

    std::string key = sub_ + "\n" + config_text_;
    for (const auto& a : argv_) key += "\n" + a;
    hash_ = onebit::fnv1a_hex(config_text_);
    if (!common.out.empty()) {
      dir_ = common.out;
    } else {
      const char* root = std::getenv("ONEBIT_OUT_ROOT");
      dir_ = fs::path(root && *root ? root : "runs") / (sub_ + "-" + onebit::fnv1a_hex(key).substr(0, 12));
    }
  }

  // Creates the directory and drops a stale completion marker before anything is written.
  void open() {
    fs::create_directories(dir_);
    fs::remove(dir_ / "DONE");
    std::ofstream(dir_ / "config.cfg") << config_text_;
    files_.push_back("config.cfg");
  }

  fs::path file(const std::string& name) {
    files_.push_back(name);
    return dir_ / name;
  }

  CsvWriter csv(const std::string& name, std::vector<CsvWriter::Column> cols) {
    return CsvWriter(file(name), std::move(cols));
  }

  void write_json(const std::string& name, const json& j) { std::ofstream(file(name)) << j.dump(2) << "\n"; }

  int finish(bool converged) {
    json m;
    m["tool"] = "onebit";
    m["version"] = ONEBIT_VERSION;
    m["subcommand"] = sub_;
    m["argv"] = argv_;
    m["seed"] = cfg.seed;
    m["jobs"] = jobs_;
    m["config_hash"] = hash_;
    m["config"] = config_text_;
    m["files"] = files_;
    m["converged"] = converged;
    m["notes"] = notes;
    std::ofstream(dir_ / "manifest.json") << m.dump(2) << "\n";
    std::ofstream(dir_ / "DONE") << "ok\n";
    std::cout << "wrote " << dir_.string() << "\n";
    return converged ? kOk : kNonConverged;
  }

  onebit::ExperimentConfig cfg;
  json notes = json::object();

 private:
  std::string sub_;
  std::vector<std::string> argv_;
  unsigned jobs_ = 1;
  std::string config_text_;
  std::string hash_;
  fs::path dir_;
  std::vector<std::string> files_;
};

double db20(double a) { return a > 0 ? 20.0 * std::log10(a) : onebit::kNegInfDb; }
double db10(double p) { return p > 0 ? 10.0 * std::log10(p) : onebit::kNegInfDb; }

std::string kvec(const std::vector<int>& k) {
  std::string s;
  for (std::size_t i = 0; i < k.size(); ++i) s += (i ? ";" : "") + std::to_string(k[i]);
  return s;
}

void require_targets(const onebit::ExperimentConfig& cfg, const std::string& what) {
  if (cfg.targets.empty()) throw onebit::ConfigError("<config>", 0, "target", what + " needs at least one [target]");
}

// Reads either cube kind; an analog cube is quantized.
onebit::OneBitCube read_bits(const std::string& path, std::optional<onebit::DataCube>* analog = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char head[12];
  in.read(head, sizeof head);
  if (!in) throw std::runtime_error(path + ": not a cube file");
  const auto kind = static_cast<unsigned char>(head[8]);
  in.seekg(0);
  if (kind == 1) return onebit::read_one_bit_cube(in);
  auto cube = onebit::read_data_cube(in);
  auto bits = onebit::quantize_one_bit(cube);
  if (analog) *analog = std::move(cube);
  return bits;
}

// ---- subcommands -------------------------------------------------------------------------

int cmd_synth(Run& run, bool one_bit) {
  auto& c = run.cfg;
  require_targets(c, "synth");
  const onebit::TargetScene scene{c.targets, c.seed};
  const auto grid = onebit::GridSpec::make(c.radar, c.r_a);
  auto t = run.csv("targets.csv", {{"index", Kind::Int},
                                   {"snr_db", Kind::Db},
                                   {"amplitude", Kind::Complex},
                                   {"doppler_hz", Kind::Real},
                                   {"spatial_freq", Kind::Real},
                                   {"beat_freq_hz", Kind::Real},
                                   {"m_d", Kind::Int},
                                   {"m_sp", Kind::Int},
                                   {"m_r", Kind::Int}});
  for (std::size_t i = 0; i < c.targets.size(); ++i) {
    const auto& tg = c.targets[i];
    const auto cell = onebit::nearest_cell(tg, c.radar, grid);
    t.integer(static_cast<long long>(i)).db(onebit::snr_of_target(tg, c.radar)).complex(tg.amplitude);
    t.real(tg.doppler_hz).real(tg.spatial_freq).real(tg.beat_freq_hz);
    t.integer(static_cast<long long>(cell.d)).integer(static_cast<long long>(cell.sp)).integer(static_cast<long long>(cell.r));
    t.end_row();
  }
  if (one_bit) {
    std::ofstream os(run.file("onebit.bin"), std::ios::binary);
    onebit::write_cube(os, onebit::synthesize_one_bit(scene, c.radar));
  } else {
    std::ofstream os(run.file("cube.bin"), std::ios::binary);
    onebit::write_cube(os, onebit::synthesize_cube(scene, c.radar));
  }
  return run.finish(true);
}

int cmd_quantize(Run& run, const std::string& in_path) {
  std::ifstream in(in_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + in_path);
  const auto bits = onebit::quantize_one_bit(onebit::read_data_cube(in));
  std::ofstream os(run.file("onebit.bin"), std::ios::binary);
  onebit::write_cube(os, bits);
  run.notes["input"] = in_path;
  return run.finish(true);
}

int cmd_harmonics(Run& run, double snr_db, std::size_t trials, int max_order) {
  auto& c = run.cfg;
  const ex::AttenuationConfig defaults;
  const std::size_t n = c.num_samples.value_or(defaults.tones.num_samples);
  const std::vector<double> freqs{std::round(c.f1.value_or(defaults.tones.f1) * n) / n,
                                  std::round(c.f2.value_or(defaults.tones.f2) * n) / n};
  const auto tones = onebit::harmonics::ToneSpec::from_snr({snr_db, snr_db}, freqs);
  const auto est = onebit::harmonics::mc_spectrum_estimate(tones, n, trials, c.seed, max_order);

  const double fund_pred = std::abs(onebit::harmonics::line_amplitude({1, 0}, tones.amplitudes, tones.phases, 1.0));
  double fund_mc = 0;
  int nf = 0;
  for (const auto& l : est.lines)
    if (l.line.order == 1 && l.estimate) {
      fund_mc += std::abs(*l.estimate);
      ++nf;
    }
  fund_mc = nf ? fund_mc / nf : 0.0;

  auto w = run.csv("harmonics.csv", {{"order_pair", Kind::Text},
                                     {"order", Kind::Int},
                                     {"frequency", Kind::Real},
                                     {"closed_form_db", Kind::Db},
                                     {"mc_db", Kind::Db},
                                     {"abs_error_db", Kind::Db},
                                     {"collided", Kind::Int}});
  for (const auto& l : est.lines) {
    const double pred = db20(std::abs(l.predicted) / fund_pred);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double mc = l.estimate && fund_mc > 0 ? db20(std::abs(*l.estimate) / fund_mc) : nan;
    w.text(kvec(l.line.k)).integer(l.line.order).real(l.line.frequency).db(pred).db(mc).db(std::abs(mc - pred));
    w.integer(l.collided ? 1 : 0).end_row();
  }
  const auto closed = onebit::harmonics::attenuation_closed_form(snr_db);
  run.notes["snr_db"] = snr_db;
  run.notes["trials"] = trials;
  run.notes["num_samples"] = n;
  run.notes["f1"] = freqs[0];
  run.notes["f2"] = freqs[1];
  run.notes["closed_self_db"] = closed.self_db;
  run.notes["closed_cross_db"] = closed.cross_db;
  return run.finish(true);
}

int cmd_spectrum(Run& run, std::vector<double> snr_db) {
  auto& c = run.cfg;
  const std::size_t n = c.num_samples.value_or(4096);
  std::vector<double> freqs{c.f1.value_or(0.4), c.f2.value_or(0.05)};
  for (auto& f : freqs) f = std::round(f * n) / n;
  if (snr_db.size() == 1) snr_db.push_back(snr_db[0]);
  if (snr_db.size() != 2) throw std::invalid_argument("spectrum: give one or two --snr values");
  const auto tones = onebit::harmonics::ToneSpec::from_snr(snr_db, freqs);
  auto a = onebit::fft::forward(onebit::harmonics::analog_tones(tones, n, c.seed));
  auto b = onebit::fft::forward(onebit::harmonics::one_bit_tones(tones, n, c.seed));
  auto w = run.csv("spectrum.csv", {{"bin", Kind::Int}, {"frequency", Kind::Real}, {"analog_db", Kind::Db},
                                    {"one_bit_db", Kind::Db}});
  const double nn = static_cast<double>(n) * static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = (i < (n + 1) / 2 ? double(i) : double(i) - double(n)) / double(n);
    w.integer(static_cast<long long>(i)).real(f).db(db10(std::norm(a[i]) / nn)).db(db10(std::norm(b[i]) / nn));
    w.end_row();
  }
  run.notes["num_samples"] = n;
  return run.finish(true);
}

struct DetectArgs {
  std::string in;
  bool stage2 = false;
  std::optional<std::size_t> spatial_bin;
};

int cmd_detect(Run& run, const DetectArgs& args) {
  auto& c = run.cfg;
  const auto& p = c.radar;
  onebit::OneBitCube bits;
  if (!args.in.empty()) {
    bits = read_bits(args.in);
    const auto s = bits.shape();
    if (s.d0 != p.num_pulses || s.d1 != p.num_elements || s.d2 != p.num_fast_samples)
      throw std::invalid_argument("detect: cube shape does not match the [radar] section");
  } else {
    require_targets(c, "detect without --in");
    bits = onebit::synthesize_one_bit({c.targets, c.seed}, p);
  }
  const auto grid = onebit::GridSpec::make(p, c.r_a);
  const auto windows = onebit::AxisWindows::from(p);
  const auto pcfg = ex::fit_to_grid(c.predetect, grid);
  const auto mag = onebit::fft3d_magnitude(bits, grid, windows);
  auto set = onebit::predetect(mag, grid, pcfg);
  onebit::fill_amplitudes(set, bits, windows);

  const auto dims = grid.dims();
  std::size_t sp_bin = 0;
  if (args.spatial_bin) {
    sp_bin = *args.spatial_bin;
    if (sp_bin >= dims.d1) throw std::invalid_argument("detect: --spatial-bin out of range");
  } else if (!set.entries.empty()) {
    const auto best = std::max_element(set.entries.begin(), set.entries.end(),
                                       [](const auto& a, const auto& b) { return std::abs(a.y) < std::abs(b.y); });
    sp_bin = best->cell.sp;
  }
  {
    auto w = run.csv("map_slice.csv", {{"m_d", Kind::Int}, {"m_r", Kind::Int}, {"magnitude_db", Kind::Db}});
    for (std::size_t d = 0; d < dims.d0; ++d)
      for (std::size_t r = 0; r < dims.d2; ++r)
        w.integer(static_cast<long long>(d)).integer(static_cast<long long>(r)).db(db20(mag(d, sp_bin, r))).end_row();
  }
  {
    auto w = run.csv("predetections.csv", {{"m_d", Kind::Int},
                                           {"m_sp", Kind::Int},
                                           {"m_r", Kind::Int},
                                           {"magnitude_db", Kind::Db},
                                           {"phase_rad", Kind::Real},
                                           {"cfar_ratio_db", Kind::Db}});
    for (const auto& e : set.entries) {
      w.integer(static_cast<long long>(e.cell.d)).integer(static_cast<long long>(e.cell.sp));
      w.integer(static_cast<long long>(e.cell.r)).db(db20(std::abs(e.y))).real(std::arg(e.y)).db(e.ratio_db).end_row();
    }
  }
  run.notes["spatial_bin"] = sp_bin;
  run.notes["num_pts"] = set.size();
  if (!args.stage2) return run.finish(true);

  if (set.entries.empty()) throw onebit::EmptySupport();
  const auto op = onebit::ReducedOperator::from(set);
  std::vector<onebit::cplx> r(bits.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = bits.at(i);
  const auto res = onebit::gamp_run(r, op, std::nullopt, p.noise_var_per_part(), c.gamp);
  const double g2 = onebit::gamma2_from_sensitivity(p.shape().size(), c.th_db) * std::sqrt(p.complex_noise_var);

  std::vector<onebit::GridIndex> truth;
  for (const auto& t : c.targets) truth.push_back(onebit::nearest_cell(t, p, grid));
  const auto rep = onebit::detect_final(res, op, g2, truth, c.hit_tolerance);
  std::vector<bool> detected(op.cols(), false);
  for (auto i : rep.detected) detected[i] = true;
  {
    auto w = run.csv("gamp.csv", {{"index", Kind::Int},
                                  {"m_d", Kind::Int},
                                  {"m_sp", Kind::Int},
                                  {"m_r", Kind::Int},
                                  {"magnitude_db", Kind::Db},
                                  {"phase_rad", Kind::Real},
                                  {"activity", Kind::Real},
                                  {"detected", Kind::Int}});
    for (std::size_t i = 0; i < op.cols(); ++i) {
      const auto& cell = op.cells()[i];
      w.integer(static_cast<long long>(i)).integer(static_cast<long long>(cell.d));
      w.integer(static_cast<long long>(cell.sp)).integer(static_cast<long long>(cell.r));
      w.db(db20(std::abs(res.x_hat[i]))).real(std::arg(res.x_hat[i])).real(res.activity[i]);
      w.integer(detected[i] ? 1 : 0).end_row();
    }
  }
  json s;
  s["iterations"] = res.iterations;
  s["converged"] = res.converged;
  s["final_residual"] = res.residuals.empty() ? 0.0 : res.residuals.back();
  s["prior"] = {{"rho", res.prior.rho},
                {"mean_re", res.prior.mean.real()},
                {"mean_im", res.prior.mean.imag()},
                {"var", res.prior.var}};
  s["gamma2"] = g2;
  s["num_pts"] = op.cols();
  s["num_detections"] = rep.detected.size();
  if (!c.targets.empty()) {
    const auto clean = onebit::synthesize_signal({c.targets, c.seed}, p);
    const std::vector<onebit::cplx> truth_signal(clean.storage().begin(), clean.storage().end());
    s["nmse_db"] = onebit::reconstruct_and_nmse(res, op, truth_signal).nmse_db;
    std::size_t hits = 0;
    for (bool h : rep.target_hit) hits += h;
    s["targets_hit"] = hits;
    std::size_t fa = 0;
    for (bool t : rep.detected_is_true) fa += !t;
    s["false_detections"] = fa;
  }
  run.write_json("summary.json", s);
  return run.finish(res.converged);
}

int cmd_attenuation(Run& run) {
  auto& c = run.cfg;
  ex::AttenuationConfig a;
  if (c.f1) a.tones.f1 = *c.f1;
  if (c.f2) a.tones.f2 = *c.f2;
  if (c.num_samples) a.tones.num_samples = *c.num_samples;
  a.tones.seed = c.seed;
  if (c.trials) a.trials = *c.trials;
  if (!c.snr_db.empty()) a.snr_db = c.snr_db;
  auto w = run.csv("attenuation.csv", {{"snr_db", Kind::Db},
                                       {"closed_self_db", Kind::Db},
                                       {"closed_cross_db", Kind::Db},
                                       {"low_snr_self_db", Kind::Db},
                                       {"low_snr_cross_db", Kind::Db},
                                       {"mc_self_db", Kind::Db},
                                       {"mc_cross_db", Kind::Db}});
  for (const auto& r : ex::run_attenuation_sweep(a)) {
    w.db(r.snr_db).db(r.closed.self_db).db(r.closed.cross_db).db(r.approx.self_db).db(r.approx.cross_db);
    w.db(r.mc_self_db).db(r.mc_cross_db).end_row();
  }
  run.notes["trials"] = a.trials;
  return run.finish(true);
}

int cmd_snr_loss(Run& run) {
  auto& c = run.cfg;
  ex::SnrLossConfig s;
  if (c.f1) s.tones.f1 = *c.f1;
  if (c.f2) s.tones.f2 = *c.f2;
  if (c.num_samples) s.tones.num_samples = *c.num_samples;
  s.tones.seed = c.seed;
  s.snr1_db = c.snr1_db;
  s.snr2_db = c.snr_db;
  s.repeats = c.repeats;
  auto w = run.csv("snr_loss.csv", {{"snr2_db", Kind::Db},
                                    {"snr_c1_db", Kind::Db},
                                    {"snr_ob1_db", Kind::Db},
                                    {"snr_c2_db", Kind::Db},
                                    {"snr_ob2_db", Kind::Db},
                                    {"loss1_db", Kind::Db},
                                    {"loss2_db", Kind::Db}});
  for (const auto& r : ex::run_snr_loss(s)) {
    w.db(r.snr2_db).db(r.snr_c1_db).db(r.snr_ob1_db).db(r.snr_c2_db).db(r.snr_ob2_db).db(r.loss1_db).db(r.loss2_db);
    w.end_row();
  }
  return run.finish(true);
}

int cmd_gaussianity(Run& run, std::optional<double> snr) {
  auto& c = run.cfg;
  ex::GaussianityConfig g;
  if (c.f1) g.tones.f1 = *c.f1;
  if (c.f2) g.tones.f2 = *c.f2;
  if (c.num_samples) g.tones.num_samples = *c.num_samples;
  g.tones.seed = c.seed;
  g.excise_order = c.excise_order;
  if (snr) g.snr_db = *snr;
  else if (!c.snr_db.empty()) g.snr_db = c.snr_db.front();
  const auto r = ex::run_gaussianity_check(g);
  {
    auto w = run.csv("gaussianity.csv", {{"snr_db", Kind::Db},
                                         {"excise_order", Kind::Int},
                                         {"bins_used", Kind::Int},
                                         {"bins_excised", Kind::Int},
                                         {"skewness", Kind::Real},
                                         {"excess_kurtosis", Kind::Real},
                                         {"jarque_bera", Kind::Real},
                                         {"p_value", Kind::Real},
                                         {"normal", Kind::Int},
                                         {"max_abs_autocorr", Kind::Real}});
    w.db(r.snr_db).integer(r.excise_order).integer(static_cast<long long>(r.bins_used));
    w.integer(static_cast<long long>(r.bins_excised)).real(r.skewness).real(r.excess_kurtosis).real(r.jarque_bera);
    w.real(r.p_value).integer(r.normal ? 1 : 0).real(r.max_abs_autocorr).end_row();
  }
  auto w = run.csv("autocorr.csv", {{"lag", Kind::Int}, {"autocorr", Kind::Real}});
  for (std::size_t i = 0; i < r.autocorr.size(); ++i) w.integer(static_cast<long long>(i + 1)).real(r.autocorr[i]).end_row();
  return run.finish(true);
}

int cmd_suppress(Run& run) {
  auto& c = run.cfg;
  ex::SuppressionConfig s;
  s.params = c.radar;
  s.off_grid = c.off_grid;
  s.r_a = c.r_a_list.empty() ? std::vector<std::size_t>{c.r_a} : c.r_a_list;
  if (!c.snr_db.empty()) s.snr_db = c.snr_db.front();
  s.predetect = c.predetect;
  s.th_db = c.th_db;
  if (c.trials) s.trials = *c.trials;
  s.seed = c.seed;
  s.gamp = c.gamp;
  const auto trials = ex::run_suppression(s);
  auto w = run.csv("suppression.csv", {{"r_a", Kind::Int},
                                       {"trial", Kind::Int},
                                       {"num_pts", Kind::Int},
                                       {"target_pts", Kind::Int},
                                       {"harmonic_cells", Kind::Int},
                                       {"harmonic_found", Kind::Int},
                                       {"harmonic_suppressed", Kind::Int},
                                       {"target_db", Kind::Db},
                                       {"target_true_db", Kind::Db},
                                       {"harmonic_residual_db", Kind::Db},
                                       {"noise_residual_db", Kind::Db},
                                       {"final_detections", Kind::Int},
                                       {"converged", Kind::Int},
                                       {"iterations", Kind::Int}});
  bool all = true;
  for (const auto& t : trials) {
    all = all && t.converged;
    w.integer(static_cast<long long>(t.r_a)).integer(static_cast<long long>(t.trial));
    w.integer(static_cast<long long>(t.num_pts)).integer(static_cast<long long>(t.target_pts));
    w.integer(static_cast<long long>(t.harmonic_cells)).integer(static_cast<long long>(t.harmonic_found));
    w.integer(static_cast<long long>(t.harmonic_suppressed)).db(t.target_db).db(t.target_true_db);
    w.db(t.harmonic_residual_db).db(t.noise_residual_db).integer(static_cast<long long>(t.final_detections));
    w.integer(t.converged ? 1 : 0).integer(static_cast<long long>(t.iterations)).end_row();
  }
  return run.finish(all);
}

int cmd_recover(Run& run, bool full) {
  auto& c = run.cfg;
  ex::FastTimeConfig f;
  if (c.num_samples) f.num_samples = *c.num_samples;
  f.r_a = c.r_a;
  if (!c.snr_db.empty()) f.snr_db = c.snr_db.front();
  f.cfar = c.predetect.r;
  f.local_peak = c.predetect.local_peak;
  f.full_dictionary = full;
  f.seed = c.seed;
  f.gamp = c.gamp;
  const auto r = ex::run_fast_time_recovery(f);
  json s;
  s["num_pts"] = r.num_pts;
  s["nmse_db"] = r.nmse_db;
  s["target_error_db"] = r.target_error_db;
  s["spurious_margin_db"] = r.spurious_margin_db;
  s["converged"] = r.converged;
  s["iterations"] = r.iterations;
  if (r.full_spurious_margin_db) s["full_spurious_margin_db"] = *r.full_spurious_margin_db;
  if (r.full_nmse_db) s["full_nmse_db"] = *r.full_nmse_db;
  run.write_json("recovery.json", s);
  return run.finish(r.converged);
}

void write_curve(Run& run, const std::string& name, const ex::DetectionCurve& curve) {
  auto w = run.csv(name, {{"snr_db", Kind::Db},
                          {"pd", Kind::Real},
                          {"pd_lo", Kind::Real},
                          {"pd_hi", Kind::Real},
                          {"hits", Kind::Int},
                          {"targets", Kind::Int},
                          {"false_alarms", Kind::Int},
                          {"fa_rate", Kind::Real},
                          {"mean_pts", Kind::Real},
                          {"non_converged", Kind::Int}});
  for (const auto& p : curve.points) {
    w.db(p.snr_db).real(p.pd.p).real(p.pd.lo).real(p.pd.hi).integer(static_cast<long long>(p.pd.successes));
    w.integer(static_cast<long long>(p.pd.trials)).integer(static_cast<long long>(p.false_alarms)).real(p.fa_rate);
    w.real(p.mean_pts).integer(static_cast<long long>(p.non_converged)).end_row();
  }
}

int cmd_compare(Run& run) {
  auto& c = run.cfg;
  auto cc = ex::default_comparison(c.scenario);
  cc.params = c.radar;
  cc.r_a = c.r_a;
  cc.one_bit = c.predetect;
  cc.conventional = c.predetect;
  cc.th_db = c.th_db;
  if (!c.snr_db.empty()) cc.snr_db = c.snr_db;
  if (c.trials) cc.trials = *c.trials;
  if (c.calibration_trials) cc.calibration_trials = *c.calibration_trials;
  cc.conventional_alpha_db = c.conventional_alpha_db;
  cc.hit_tolerance = c.hit_tolerance;
  cc.seed = c.seed;
  cc.gamp = c.gamp;
  const auto r = ex::run_detection_comparison(cc);
  write_curve(run, "curve_one_bit.csv", r.one_bit);
  write_curve(run, "curve_conventional.csv", r.conventional);
  std::size_t nc = 0;
  for (const auto& p : r.one_bit.points) nc += p.non_converged;
  json s;
  s["scenario"] = c.scenario;
  s["alpha_one_bit_db"] = r.one_bit.alpha_db;
  s["alpha_conventional_db"] = r.conventional.alpha_db;
  s["calibration_target_rate"] = r.calibration_target_rate;
  s["max_fa_rate_one_bit"] = r.one_bit.max_fa_rate;
  s["max_fa_rate_conventional"] = r.conventional.max_fa_rate;
  s["snr50_one_bit"] = r.snr50_one_bit ? json(*r.snr50_one_bit) : json(nullptr);
  s["snr50_conventional"] = r.snr50_conventional ? json(*r.snr50_conventional) : json(nullptr);
  s["advantage_db"] = r.advantage_db ? json(*r.advantage_db) : json(nullptr);
  s["non_converged_trials"] = nc;
  run.write_json("comparison.json", s);
  run.notes["scene"] = "uniform targets, uniform phase, min separation " + std::to_string(cc.min_separation) +
                       " resolution cells, hit within " + std::to_string(cc.hit_tolerance) + " grid cells";
  return run.finish(nc == 0);
}

// Experiment defaults applied before the config file.
onebit::ExperimentConfig base_for(const std::string& sub, int scenario) {
  onebit::ExperimentConfig b;
  if (sub == "suppress" || sub == "detect") {
    b.r_a = 2;
    b.predetect = ex::uniform_predetect(10.6);
    b.trials = ex::SuppressionConfig{}.trials;
  } else if (sub == "recover") {
    const ex::FastTimeConfig f;
    b.r_a = f.r_a;
    b.predetect.r = f.cfar;
  } else if (sub == "compare") {
    const auto cc = ex::default_comparison(scenario);
    b.radar = cc.params;
    b.r_a = cc.r_a;
    b.predetect = cc.one_bit;
    b.scenario = scenario;
    b.trials = cc.trials;
    b.calibration_trials = cc.calibration_trials;
  }
  return b;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-bit radar toolkit: synthesis, harmonic analysis, two-stage detection and experiments"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  Common common;
  app.add_option("--config", common.config_path, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("--out", common.out, "output directory (default: $ONEBIT_OUT_ROOT/<subcommand>-<hash>)");
  app.add_option("--seed", common.seed, "master seed, overrides the config");
  app.add_option("--jobs", common.jobs, "worker threads")->check(CLI::PositiveNumber);

  auto* synth = app.add_subcommand("synth", "synthesize a data cube from the config targets");
  bool synth_one_bit = false;
  synth->add_flag("--one-bit", synth_one_bit, "write the quantized cube instead");

  auto* quant = app.add_subcommand("quantize", "one-bit quantize a cube file");
  std::string quant_in;
  quant->add_option("--in", quant_in, "analog cube file")->required()->check(CLI::ExistingFile);

  auto* harm = app.add_subcommand("harmonics", "closed-form vs Monte Carlo harmonic lines of two tones");
  double harm_snr = -5.0;
  std::size_t harm_trials = 2000;
  int harm_order = 5;
  harm->add_option("--snr", harm_snr, "per-tone SNR, dB");
  harm->add_option("--trials", harm_trials, "averaged realizations")->check(CLI::PositiveNumber);
  harm->add_option("--max-order", harm_order, "highest odd order")->check(CLI::Range(1, 15));

  auto* spec = app.add_subcommand("spectrum", "analog and one-bit spectra of two tones");
  std::vector<double> spec_snr{-5.0, -5.0};
  spec->add_option("--snr", spec_snr, "SNR of each tone, dB")->expected(1, 2);

  auto* det = app.add_subcommand("detect", "two-stage detection of a cube");
  DetectArgs dargs;
  bool stage1 = false;
  det->add_option("--in", dargs.in, "cube file (synthesized from the config when absent)")->check(CLI::ExistingFile);
  det->add_flag("--stage1", stage1, "pre-detection only");
  det->add_flag("--stage2", dargs.stage2, "pre-detection followed by GAMP recovery");
  det->add_option("--spatial-bin", dargs.spatial_bin, "spatial bin of the map slice");

  auto* att = app.add_subcommand("attenuation", "3-order attenuation sweep");
  auto* loss = app.add_subcommand("snr-loss", "SNR loss of two tones under one-bit quantization");
  auto* gauss = app.add_subcommand("gaussianity", "normality of the one-bit spectrum after line excision");
  std::optional<double> gauss_snr;
  gauss->add_option("--snr", gauss_snr, "per-tone SNR, dB");
  auto* sup = app.add_subcommand("suppress", "harmonic suppression on the reference scene");
  auto* rec = app.add_subcommand("recover", "fast-time two-tone recovery");
  bool rec_full = false;
  rec->add_flag("--full-dictionary", rec_full, "also recover over every grid cell");
  auto* cmp = app.add_subcommand("compare", "one-bit vs conventional detection curves");
  std::optional<int> scenario;
  cmp->add_option("--scenario", scenario, "1: equal targets, 2: plus one strong target")->check(CLI::IsMember({1, 2}));

  if (argc <= 1) {
    std::cout << app.help();
    return kUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  if (app.get_subcommands().empty()) {
    std::cout << app.help();
    return kUsage;
  }
  auto* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  if (sub == det && stage1 == dargs.stage2) {
    std::cerr << "detect: give exactly one of --stage1 or --stage2\n";
    return kUsage;
  }

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    Run run(name, args, common, base_for(name, scenario.value_or(1)), [&](onebit::ExperimentConfig& c) {
      if (scenario) c.scenario = *scenario;
    });
    run.open();
    if (sub == synth) return cmd_synth(run, synth_one_bit);
    if (sub == quant) return cmd_quantize(run, quant_in);
    if (sub == harm) return cmd_harmonics(run, harm_snr, harm_trials, harm_order);
    if (sub == spec) return cmd_spectrum(run, spec_snr);
    if (sub == det) return cmd_detect(run, dargs);
    if (sub == att) return cmd_attenuation(run);
    if (sub == loss) return cmd_snr_loss(run);
    if (sub == gauss) return cmd_gaussianity(run, gauss_snr);
    if (sub == sup) return cmd_suppress(run);
    if (sub == rec) return cmd_recover(run, rec_full);
    if (sub == cmp) return cmd_compare(run);
  } catch (const onebit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  std::cerr << "unknown subcommand\n";
  return kUsage;
}

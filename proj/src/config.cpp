#include "onebit/config.hpp"

#include <charconv>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace onebit {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Ctx {
  const std::string& source;
  std::size_t line;
  std::string field;

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(source, line, field, msg); }

  double num(const std::string& v) const {
    double out = 0;
    const auto* end = v.data() + v.size();
    const auto r = std::from_chars(v.data(), end, out);
    if (r.ec != std::errc{} || r.ptr != end) fail("expected a number, got '" + v + "'");
    return out;
  }
  std::size_t count(const std::string& v) const {
    std::size_t out = 0;
    const auto* end = v.data() + v.size();
    const auto r = std::from_chars(v.data(), end, out);
    if (r.ec != std::errc{} || r.ptr != end) fail("expected a non-negative integer, got '" + v + "'");
    return out;
  }
  bool flag(const std::string& v) const {
    const auto l = lower(v);
    if (l == "true" || l == "yes" || l == "1") return true;
    if (l == "false" || l == "no" || l == "0") return false;
    fail("expected true or false, got '" + v + "'");
  }
  std::vector<double> list(const std::string& v) const {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      // a:b:c expands to a, a+b, ..., c
      if (const auto c1 = item.find(':'); c1 != std::string::npos) {
        const auto c2 = item.find(':', c1 + 1);
        if (c2 == std::string::npos) fail("range must be start:step:stop");
        const double a = num(trim(item.substr(0, c1))), st = num(trim(item.substr(c1 + 1, c2 - c1 - 1))),
                     b = num(trim(item.substr(c2 + 1)));
        if (!(st > 0)) fail("range step must be > 0");
        for (double x = a; x <= b + 1e-9 * st; x += st) out.push_back(x);
      } else {
        out.push_back(num(item));
      }
    }
    if (out.empty()) fail("empty list");
    return out;
  }
};

using Setter = std::function<void(ExperimentConfig&, const Ctx&, const std::string&)>;
using Table = std::map<std::string, std::map<std::string, Setter>>;

void cfar_keys(std::map<std::string, Setter>& m, OsCfarConfig PredetectConfig::*axis) {
  m["R"] = [axis](auto& c, const Ctx& x, const auto& v) { (c.predetect.*axis).R = x.count(v); };
  m["G"] = [axis](auto& c, const Ctx& x, const auto& v) { (c.predetect.*axis).G = x.count(v); };
  m["eta"] = [axis](auto& c, const Ctx& x, const auto& v) { (c.predetect.*axis).eta = x.count(v); };
  m["alpha_db"] = [axis](auto& c, const Ctx& x, const auto& v) { (c.predetect.*axis).alpha_db = x.num(v); };
}

const Table& table() {
  static const Table t = [] {
    Table t;
    auto& r = t["radar"];
    r["carrier_freq_hz"] = [](auto& c, const Ctx& x, const auto& v) { c.radar.carrier_freq_hz = x.num(v); };
    r["fm_slope_hz_per_s"] = [](auto& c, const Ctx& x, const auto& v) { c.radar.fm_slope_hz_per_s = x.num(v); };
    r["pulse_interval_s"] = [](auto& c, const Ctx& x, const auto& v) { c.radar.pulse_interval_s = x.num(v); };
    r["bandwidth_hz"] = [](auto& c, const Ctx& x, const auto& v) { c.radar.bandwidth_hz = x.num(v); };
    r["sample_rate_hz"] = [](auto& c, const Ctx& x, const auto& v) { c.radar.sample_rate_hz = x.num(v); };
    r["num_pulses"] = [](auto& c, const Ctx& x, const auto& v) { c.radar.num_pulses = x.count(v); };
    r["num_elements"] = [](auto& c, const Ctx& x, const auto& v) { c.radar.num_elements = x.count(v); };
    r["element_spacing_m"] = [](auto& c, const Ctx& x, const auto& v) { c.radar.element_spacing_m = x.num(v); };
    r["num_fast_samples"] = [](auto& c, const Ctx& x, const auto& v) { c.radar.num_fast_samples = x.count(v); };
    r["complex_noise_var"] = [](auto& c, const Ctx& x, const auto& v) { c.radar.complex_noise_var = x.num(v); };
    auto win = [](WindowSpec RadarParams::*w) {
      return [w](ExperimentConfig& c, const Ctx& x, const std::string& v) {
        try {
          c.radar.*w = window_from_text(v);
        } catch (const std::invalid_argument& e) {
          x.fail(e.what());
        }
      };
    };
    r["window_doppler"] = win(&RadarParams::window_doppler);
    r["window_spatial"] = win(&RadarParams::window_spatial);
    r["window_range"] = win(&RadarParams::window_range);

    t["grid"]["r_a"] = [](auto& c, const Ctx& x, const auto& v) {
      const auto ra = x.count(v);
      if (ra == 0) x.fail("overgriding factor r_a must be >= 1");
      c.r_a = ra;
    };

    cfar_keys(t["cfar.doppler"], &PredetectConfig::d);
    cfar_keys(t["cfar.spatial"], &PredetectConfig::sp);
    cfar_keys(t["cfar.range"], &PredetectConfig::r);

    auto& pd = t["predetect"];
    pd["combine"] = [](auto& c, const Ctx& x, const auto& v) {
      const auto l = lower(v);
      if (l == "and") c.predetect.combine = Combine::And;
      else if (l == "or") c.predetect.combine = Combine::Or;
      else x.fail("combine must be 'and' or 'or'");
    };
    pd["local_peak"] = [](auto& c, const Ctx& x, const auto& v) { c.predetect.local_peak = x.flag(v); };
    pd["alpha_db"] = [](auto& c, const Ctx& x, const auto& v) {
      c.predetect.d.alpha_db = c.predetect.sp.alpha_db = c.predetect.r.alpha_db = x.num(v);
    };

    auto& g = t["gamp"];
    g["max_iter"] = [](auto& c, const Ctx& x, const auto& v) { c.gamp.max_iter = x.count(v); };
    g["tol"] = [](auto& c, const Ctx& x, const auto& v) { c.gamp.tol = x.num(v); };
    g["damping"] = [](auto& c, const Ctx& x, const auto& v) {
      c.gamp.damping = x.num(v);
      if (!(c.gamp.damping > 0 && c.gamp.damping <= 1)) x.fail("damping must be in (0, 1]");
    };
    g["min_damping"] = [](auto& c, const Ctx& x, const auto& v) { c.gamp.min_damping = x.num(v); };
    g["warmup"] = [](auto& c, const Ctx& x, const auto& v) { c.gamp.warmup = x.count(v); };
    g["learn_prior"] = [](auto& c, const Ctx& x, const auto& v) { c.gamp.learn_prior = x.flag(v); };
    g["em_interval"] = [](auto& c, const Ctx& x, const auto& v) { c.gamp.em_interval = x.count(v); };

    auto& d = t["detect"];
    d["th_db"] = [](auto& c, const Ctx& x, const auto& v) { c.th_db = x.num(v); };
    d["hit_tolerance"] = [](auto& c, const Ctx& x, const auto& v) { c.hit_tolerance = x.count(v); };

    auto& tg = t["target"];
    tg["snr_db"] = [](auto& c, const Ctx& x, const auto& v) {
      auto& t = c.targets.back();
      const double ph = std::arg(t.amplitude);
      t.amplitude = std::polar(std::sqrt(c.radar.complex_noise_var * std::pow(10.0, x.num(v) / 10.0)), ph);
    };
    tg["amplitude"] = [](auto& c, const Ctx& x, const auto& v) {
      auto& t = c.targets.back();
      t.amplitude = std::polar(x.num(v), std::arg(t.amplitude));
    };
    tg["amplitude_re"] = [](auto& c, const Ctx& x, const auto& v) {
      auto& t = c.targets.back();
      t.amplitude = {x.num(v), t.amplitude.imag()};
    };
    tg["amplitude_im"] = [](auto& c, const Ctx& x, const auto& v) {
      auto& t = c.targets.back();
      t.amplitude = {t.amplitude.real(), x.num(v)};
    };
    tg["phase_rad"] = [](auto& c, const Ctx& x, const auto& v) {
      auto& t = c.targets.back();
      t.amplitude = std::polar(std::abs(t.amplitude), x.num(v));
    };
    tg["doppler_hz"] = [](auto& c, const Ctx& x, const auto& v) { c.targets.back().doppler_hz = x.num(v); };
    tg["spatial_freq"] = [](auto& c, const Ctx& x, const auto& v) { c.targets.back().spatial_freq = x.num(v); };
    tg["beat_freq_hz"] = [](auto& c, const Ctx& x, const auto& v) { c.targets.back().beat_freq_hz = x.num(v); };

    auto& e = t["experiment"];
    e["seed"] = [](auto& c, const Ctx& x, const auto& v) { c.seed = x.count(v); };
    e["trials"] = [](auto& c, const Ctx& x, const auto& v) {
      c.trials = x.count(v);
      if (*c.trials == 0) x.fail("trials must be >= 1");
    };
    e["snr_db"] = [](auto& c, const Ctx& x, const auto& v) { c.snr_db = x.list(v); };
    e["f1"] = [](auto& c, const Ctx& x, const auto& v) { c.f1 = x.num(v); };
    e["f2"] = [](auto& c, const Ctx& x, const auto& v) { c.f2 = x.num(v); };
    e["num_samples"] = [](auto& c, const Ctx& x, const auto& v) { c.num_samples = x.count(v); };
    e["scenario"] = [](auto& c, const Ctx& x, const auto& v) {
      c.scenario = static_cast<int>(x.count(v));
      if (c.scenario != 1 && c.scenario != 2) x.fail("scenario must be 1 or 2");
    };
    e["calibration_trials"] = [](auto& c, const Ctx& x, const auto& v) { c.calibration_trials = x.count(v); };
    e["conventional_alpha_db"] = [](auto& c, const Ctx& x, const auto& v) { c.conventional_alpha_db = x.num(v); };
    e["excise_order"] = [](auto& c, const Ctx& x, const auto& v) { c.excise_order = static_cast<int>(x.count(v)); };
    e["snr1_db"] = [](auto& c, const Ctx& x, const auto& v) { c.snr1_db = x.num(v); };
    e["repeats"] = [](auto& c, const Ctx& x, const auto& v) { c.repeats = x.count(v); };
    e["off_grid"] = [](auto& c, const Ctx& x, const auto& v) { c.off_grid = x.flag(v); };
    e["r_a_list"] = [](auto& c, const Ctx& x, const auto& v) {
      c.r_a_list.clear();
      for (double r : x.list(v)) {
        if (r < 1 || r != std::floor(r)) x.fail("r_a values must be integers >= 1");
        c.r_a_list.push_back(static_cast<std::size_t>(r));
      }
    };
    return t;
  }();
  return t;
}

}  // namespace

ConfigError::ConfigError(const std::string& source, std::size_t line, const std::string& field, const std::string& msg)
    : std::runtime_error(source + (line ? ":" + std::to_string(line) : std::string{}) +
                         (field.empty() ? std::string{} : ": " + field) + ": " + msg),
      line_(line),
      field_(field) {}

std::string window_to_text(const WindowSpec& w) {
  switch (w.kind) {
    case WindowKind::Rectangular:
      return "rectangular";
    case WindowKind::Chebyshev:
      return "chebyshev " + fmt(w.sidelobe_db);
    case WindowKind::Taylor:
      return "taylor " + fmt(w.sidelobe_db) + " " + std::to_string(w.nbar);
  }
  return "rectangular";
}

WindowSpec window_from_text(const std::string& s) {
  std::istringstream in(s);
  std::string kind;
  in >> kind;
  WindowSpec w;
  w.kind = window_kind_from_string(lower(kind));
  if (w.kind == WindowKind::Rectangular) return w;
  if (!(in >> w.sidelobe_db) || !(w.sidelobe_db > 0))
    throw std::invalid_argument("window needs a positive sidelobe level in dB, e.g. 'chebyshev 60'");
  if (w.kind == WindowKind::Taylor && !(in >> w.nbar)) w.nbar = 4;
  std::string rest;
  if (in >> rest) throw std::invalid_argument("unexpected text after window spec: '" + rest + "'");
  return w;
}

ExperimentConfig parse_config(std::istream& in, const std::string& source, ExperimentConfig base) {
  ExperimentConfig cfg = std::move(base);
  const std::size_t base_targets = cfg.targets.size();
  bool noise_var_set = false;
  bool radar_seen = false;
  bool in_target = false;
  std::string section;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    Ctx ctx{source, lineno, {}};

    if (line.front() == '[') {
      if (line.back() != ']') ctx.fail("unterminated section header");
      section = lower(trim(line.substr(1, line.size() - 2)));
      if (!table().count(section)) ctx.fail("unknown section [" + section + "]");
      in_target = section == "target";
      if (in_target && !noise_var_set)
        throw ConfigError(source, lineno, "radar.complex_noise_var",
                          "must be set (or 'paper-default table1' given) before the first [target]");
      if (in_target) cfg.targets.push_back(Target::from_snr(0.0, 0.0, 0.0, 0.0, 0.0, cfg.radar));
      if (section == "radar") {
        if (cfg.targets.size() > base_targets) ctx.fail("[radar] must come before the first [target]");
        radar_seen = true;
      }
      continue;
    }
    if (line.rfind("paper-default", 0) == 0) {
      if (trim(line.substr(13)) != "table1") ctx.fail("only 'paper-default table1' is known");
      if (cfg.targets.size() > base_targets) ctx.fail("'paper-default table1' must come before the first [target]");
      cfg.radar = RadarParams::table1();
      radar_seen = true;
      noise_var_set = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) ctx.fail("expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) ctx.fail("key '" + key + "' appears before any [section]");
    ctx.field = section + "." + key;
    const auto& keys = table().at(section);
    const auto it = keys.find(key);
    if (it == keys.end()) ctx.fail("unknown key");
    if (value.empty()) ctx.fail("missing value");
    it->second(cfg, ctx, value);
    if (ctx.field == "radar.complex_noise_var") noise_var_set = true;
  }

  if ((radar_seen || cfg.targets.size() > base_targets) && !noise_var_set)
    throw ConfigError(source, 0, "radar.complex_noise_var", "missing noise variance (2 sigma_w^2)");
  if (radar_seen) {
    try {
      cfg.radar.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(source, 0, "radar", e.what());
    }
  }
  if (!cfg.targets.empty()) {
    try {
      TargetScene{cfg.targets, cfg.seed}.validate(cfg.radar);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(source, 0, "target", e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "", "cannot open file");
  return parse_config(in, path.string(), std::move(base));
}

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream o;
  const auto& r = c.radar;
  {
    o << "[radar]\n"
      << "carrier_freq_hz = " << fmt(r.carrier_freq_hz) << "\n"
      << "fm_slope_hz_per_s = " << fmt(r.fm_slope_hz_per_s) << "\n"
      << "pulse_interval_s = " << fmt(r.pulse_interval_s) << "\n"
      << "bandwidth_hz = " << fmt(r.bandwidth_hz) << "\n"
      << "sample_rate_hz = " << fmt(r.sample_rate_hz) << "\n"
      << "num_pulses = " << r.num_pulses << "\n"
      << "num_elements = " << r.num_elements << "\n"
      << "element_spacing_m = " << fmt(r.element_spacing_m) << "\n"
      << "num_fast_samples = " << r.num_fast_samples << "\n"
      << "complex_noise_var = " << fmt(r.complex_noise_var) << "\n"
      << "window_doppler = " << window_to_text(r.window_doppler) << "\n"
      << "window_spatial = " << window_to_text(r.window_spatial) << "\n"
      << "window_range = " << window_to_text(r.window_range) << "\n";
  }
  o << "[grid]\nr_a = " << c.r_a << "\n";
  const std::pair<const char*, const OsCfarConfig*> axes[] = {
      {"doppler", &c.predetect.d}, {"spatial", &c.predetect.sp}, {"range", &c.predetect.r}};
  for (const auto& [name, a] : axes)
    o << "[cfar." << name << "]\nR = " << a->R << "\nG = " << a->G << "\neta = " << a->eta
      << "\nalpha_db = " << fmt(a->alpha_db) << "\n";
  o << "[predetect]\ncombine = " << (c.predetect.combine == Combine::And ? "and" : "or")
    << "\nlocal_peak = " << (c.predetect.local_peak ? "true" : "false") << "\n";
  o << "[gamp]\nmax_iter = " << c.gamp.max_iter << "\ntol = " << fmt(c.gamp.tol) << "\ndamping = " << fmt(c.gamp.damping)
    << "\nmin_damping = " << fmt(c.gamp.min_damping) << "\nwarmup = " << c.gamp.warmup
    << "\nlearn_prior = " << (c.gamp.learn_prior ? "true" : "false") << "\nem_interval = " << c.gamp.em_interval
    << "\n";
  o << "[detect]\nth_db = " << fmt(c.th_db) << "\nhit_tolerance = " << c.hit_tolerance << "\n";
  for (const auto& t : c.targets)
    o << "[target]\namplitude_re = " << fmt(t.amplitude.real()) << "\namplitude_im = " << fmt(t.amplitude.imag())
      << "\ndoppler_hz = " << fmt(t.doppler_hz) << "\nspatial_freq = " << fmt(t.spatial_freq)
      << "\nbeat_freq_hz = " << fmt(t.beat_freq_hz) << "\n";
  o << "[experiment]\nseed = " << c.seed << "\n";
  if (c.trials) o << "trials = " << *c.trials << "\n";
  if (!c.snr_db.empty()) {
    o << "snr_db = ";
    for (std::size_t i = 0; i < c.snr_db.size(); ++i) o << (i ? ", " : "") << fmt(c.snr_db[i]);
    o << "\n";
  }
  if (c.f1) o << "f1 = " << fmt(*c.f1) << "\n";
  if (c.f2) o << "f2 = " << fmt(*c.f2) << "\n";
  if (c.num_samples) o << "num_samples = " << *c.num_samples << "\n";
  o << "scenario = " << c.scenario << "\n";
  if (c.calibration_trials) o << "calibration_trials = " << *c.calibration_trials << "\n";
  if (c.conventional_alpha_db) o << "conventional_alpha_db = " << fmt(*c.conventional_alpha_db) << "\n";
  o << "excise_order = " << c.excise_order << "\nsnr1_db = " << fmt(c.snr1_db) << "\nrepeats = " << c.repeats
    << "\noff_grid = " << (c.off_grid ? "true" : "false") << "\n";
  if (!c.r_a_list.empty()) {
    o << "r_a_list = ";
    for (std::size_t i = 0; i < c.r_a_list.size(); ++i) o << (i ? ", " : "") << c.r_a_list[i];
    o << "\n";
  }
  return o.str();
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace onebit

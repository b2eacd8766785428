#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "onebit/config.hpp"
#include "onebit/experiments.hpp"
#include "onebit/parallel.hpp"

namespace py = pybind11;
using namespace onebit;
namespace ex = onebit::experiments;

namespace {

using CArray = py::array_t<cplx, py::array::c_style | py::array::forcecast>;

CArray to_numpy(const Array3<cplx>& a) {
  const auto s = a.shape();
  CArray out({s.d0, s.d1, s.d2});
  std::copy(a.storage().begin(), a.storage().end(), out.mutable_data());
  return out;
}

CArray to_numpy(const OneBitCube& q) {
  const auto s = q.shape();
  CArray out({s.d0, s.d1, s.d2});
  auto* p = out.mutable_data();
  for (std::size_t i = 0; i < q.size(); ++i) p[i] = q.at(i);
  return out;
}

DataCube from_numpy(const CArray& a) {
  if (a.ndim() != 3) throw std::invalid_argument("expected a 3-D array (pulses, elements, samples)");
  DataCube c(Shape3{static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                    static_cast<std::size_t>(a.shape(2))});
  std::copy(a.data(), a.data() + a.size(), c.storage().begin());
  return c;
}

OneBitCube bits_from_numpy(const CArray& a) {
  const DataCube c = from_numpy(a);
  OneBitCube q(c.shape());
  for (std::size_t i = 0; i < c.size(); ++i) q.set(i, sign_bit(c[i].real()), sign_bit(c[i].imag()));
  return q;
}

py::tuple cell_tuple(const GridIndex& c) { return py::make_tuple(c.d, c.sp, c.r); }

py::list entries(const PreDetectionSet& set) {
  py::list out;
  for (const auto& e : set.entries) {
    py::dict d;
    d["cell"] = cell_tuple(e.cell);
    d["y"] = e.y;
    d["ratio_db"] = e.ratio_db;
    out.append(d);
  }
  return out;
}

PredetectConfig predetect_for(const GridSpec& grid, std::optional<PredetectConfig> cfg, double alpha_db) {
  return ex::fit_to_grid(cfg ? *cfg : ex::uniform_predetect(alpha_db), grid);
}

py::dict recover(const CArray& bits_in, const RadarParams& p, std::size_t r_a, std::optional<PredetectConfig> cfg,
                 double alpha_db, double th_db, const GampControls& ctl) {
  const OneBitCube bits = bits_from_numpy(bits_in);
  if (!(bits.shape() == p.shape())) throw std::invalid_argument("cube shape does not match the radar parameters");
  const auto grid = GridSpec::make(p, r_a);
  const auto windows = AxisWindows::from(p);
  PreDetectionSet set;
  {
    py::gil_scoped_release nogil;
    set = ex::one_bit_predetect(bits, grid, windows, predetect_for(grid, cfg, alpha_db));
  }
  if (set.entries.empty()) throw EmptySupport();
  const auto op = ReducedOperator::from(set);
  std::vector<cplx> r(bits.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = bits.at(i);
  GampResult res;
  {
    py::gil_scoped_release nogil;
    res = gamp_run(r, op, std::nullopt, p.noise_var_per_part(), ctl);
  }
  const double g2 = gamma2_from_sensitivity(p.shape().size(), th_db) * std::sqrt(p.complex_noise_var);
  const auto rep = detect_final(res, op, g2);
  py::list cells;
  for (const auto& c : op.cells()) cells.append(cell_tuple(c));
  py::list detected;
  for (auto i : rep.detected) detected.append(cell_tuple(op.cells()[i]));
  py::dict out;
  out["cells"] = cells;
  out["x_hat"] = res.x_hat;
  out["activity"] = res.activity;
  out["iterations"] = res.iterations;
  out["converged"] = res.converged;
  out["residuals"] = res.residuals;
  out["gamma2"] = g2;
  out["detected"] = detected;
  out["prior"] = py::make_tuple(res.prior.rho, res.prior.mean, res.prior.var);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "One-bit MIMO FMCW radar simulation, harmonic analysis and GAMP recovery";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<EmptySupport>(m, "EmptySupport", PyExc_ValueError);

  m.def("set_jobs", [](unsigned n) { job_count() = std::max(1u, n); }, py::arg("n"));
  m.def("jobs", [] { return job_count().load(); });

  py::enum_<WindowKind>(m, "WindowKind")
      .value("rectangular", WindowKind::Rectangular)
      .value("chebyshev", WindowKind::Chebyshev)
      .value("taylor", WindowKind::Taylor);

  py::class_<WindowSpec>(m, "WindowSpec")
      .def(py::init([](WindowKind k, double sl, int nbar) { return WindowSpec{k, sl, nbar}; }), py::arg("kind"),
           py::arg("sidelobe_db") = 60.0, py::arg("nbar") = 4)
      .def_readwrite("kind", &WindowSpec::kind)
      .def_readwrite("sidelobe_db", &WindowSpec::sidelobe_db)
      .def_readwrite("nbar", &WindowSpec::nbar)
      .def("__repr__", [](const WindowSpec& w) { return "WindowSpec('" + window_to_text(w) + "')"; });

  py::class_<RadarParams>(m, "RadarParams")
      .def(py::init<>())
      .def_static("table1", &RadarParams::table1)
      .def_readwrite("carrier_freq_hz", &RadarParams::carrier_freq_hz)
      .def_readwrite("fm_slope_hz_per_s", &RadarParams::fm_slope_hz_per_s)
      .def_readwrite("pulse_interval_s", &RadarParams::pulse_interval_s)
      .def_readwrite("bandwidth_hz", &RadarParams::bandwidth_hz)
      .def_readwrite("sample_rate_hz", &RadarParams::sample_rate_hz)
      .def_readwrite("num_pulses", &RadarParams::num_pulses)
      .def_readwrite("num_elements", &RadarParams::num_elements)
      .def_readwrite("element_spacing_m", &RadarParams::element_spacing_m)
      .def_readwrite("num_fast_samples", &RadarParams::num_fast_samples)
      .def_readwrite("complex_noise_var", &RadarParams::complex_noise_var)
      .def_readwrite("window_doppler", &RadarParams::window_doppler)
      .def_readwrite("window_spatial", &RadarParams::window_spatial)
      .def_readwrite("window_range", &RadarParams::window_range)
      .def_property_readonly("shape",
                             [](const RadarParams& p) { return py::make_tuple(p.num_pulses, p.num_elements, p.num_fast_samples); })
      .def("validate", &RadarParams::validate);

  py::class_<Target>(m, "Target")
      .def(py::init([](cplx a, double fd, double fsp, double fr) { return Target{a, fd, fsp, fr}; }),
           py::arg("amplitude"), py::arg("doppler_hz"), py::arg("spatial_freq"), py::arg("beat_freq_hz"))
      .def_static("from_snr", &Target::from_snr, py::arg("snr_db"), py::arg("phase_rad"), py::arg("doppler_hz"),
                  py::arg("spatial_freq"), py::arg("beat_freq_hz"), py::arg("params"))
      .def_readwrite("amplitude", &Target::amplitude)
      .def_readwrite("doppler_hz", &Target::doppler_hz)
      .def_readwrite("spatial_freq", &Target::spatial_freq)
      .def_readwrite("beat_freq_hz", &Target::beat_freq_hz)
      .def("snr_db", [](const Target& t, const RadarParams& p) { return snr_of_target(t, p); });

  m.def(
      "synthesize_cube",
      [](const std::vector<Target>& targets, const RadarParams& p, std::uint64_t seed) {
        DataCube c;
        {
          py::gil_scoped_release nogil;
          c = synthesize_cube({targets, seed}, p);
        }
        return to_numpy(c);
      },
      py::arg("targets"), py::arg("params"), py::arg("seed"), "Noisy analog cube, shape (K, L, N).");
  m.def(
      "synthesize_signal",
      [](const std::vector<Target>& targets, const RadarParams& p) { return to_numpy(synthesize_signal({targets, 0}, p)); },
      py::arg("targets"), py::arg("params"), "Noiseless target sum, shape (K, L, N).");
  m.def(
      "synthesize_one_bit",
      [](const std::vector<Target>& targets, const RadarParams& p, std::uint64_t seed) {
        OneBitCube q;
        {
          py::gil_scoped_release nogil;
          q = synthesize_one_bit({targets, seed}, p);
        }
        return to_numpy(q);
      },
      py::arg("targets"), py::arg("params"), py::arg("seed"),
      "Sign-quantized cube with entries (+-1) + j(+-1); equals quantize(synthesize_cube(...)).");
  m.def(
      "quantize", [](const CArray& a) { return to_numpy(quantize_one_bit(from_numpy(a))); }, py::arg("cube"),
      "csign of every entry, sign(0) = +1.");

  auto h = m.def_submodule("harmonics", "Harmonic structure of one-bit quantized tones");
  h.def("alpha_m", [](int mm) {
    const auto r = harmonics::alpha_m(mm);
    return py::make_tuple(r.num, r.den);
  });
  h.def("attenuation_closed_form", [](double snr_db) {
    const auto a = harmonics::attenuation_closed_form(snr_db);
    return py::make_tuple(a.self_db, a.cross_db);
  });
  h.def("attenuation_low_snr", [](double snr_db) {
    const auto a = harmonics::attenuation_low_snr(snr_db);
    return py::make_tuple(a.self_db, a.cross_db);
  });
  h.def(
      "line_amplitude",
      [](const std::vector<int>& k, const std::vector<double>& amps, const std::vector<double>& phases, double sigma_w) {
        return harmonics::line_amplitude(k, amps, phases, sigma_w);
      },
      py::arg("k"), py::arg("amplitudes"), py::arg("phases"), py::arg("sigma_w") = 1.0);
  h.def(
      "lines",
      [](const std::vector<double>& tones, int max_order, std::optional<double> fs) {
        py::list out;
        for (const auto& l : harmonics::harmonic_frequencies(tones, max_order, fs)) {
          py::dict d;
          d["k"] = l.k;
          d["order"] = l.order;
          d["frequency"] = l.frequency;
          out.append(d);
        }
        return out;
      },
      py::arg("tones"), py::arg("max_order"), py::arg("sample_rate") = py::none(),
      "Odd-order output lines of csign applied to a sum of tones.");
  h.def(
      "one_bit_tones",
      [](const std::vector<double>& snr_db, const std::vector<double>& freqs, std::size_t n, std::uint64_t seed) {
        return harmonics::one_bit_tones(harmonics::ToneSpec::from_snr(snr_db, freqs), n, seed);
      },
      py::arg("snr_db"), py::arg("freqs"), py::arg("n"), py::arg("seed"));

  py::enum_<Combine>(m, "Combine").value("and_", Combine::And).value("or_", Combine::Or);
  py::class_<OsCfarConfig>(m, "OsCfarConfig")
      .def(py::init([](std::size_t R, std::size_t G, std::size_t eta, double a) { return OsCfarConfig{R, G, eta, a}; }),
           py::arg("R") = 24, py::arg("G") = 2, py::arg("eta") = 0, py::arg("alpha_db") = 8.0)
      .def_readwrite("R", &OsCfarConfig::R)
      .def_readwrite("G", &OsCfarConfig::G)
      .def_readwrite("eta", &OsCfarConfig::eta)
      .def_readwrite("alpha_db", &OsCfarConfig::alpha_db);
  py::class_<PredetectConfig>(m, "PredetectConfig")
      .def(py::init<>())
      .def_static("uniform", &ex::uniform_predetect, py::arg("alpha_db"), py::arg("R") = 24, py::arg("G") = 2,
                  py::arg("eta") = 18)
      .def_readwrite("doppler", &PredetectConfig::d)
      .def_readwrite("spatial", &PredetectConfig::sp)
      .def_readwrite("range", &PredetectConfig::r)
      .def_readwrite("combine", &PredetectConfig::combine)
      .def_readwrite("local_peak", &PredetectConfig::local_peak);

  m.def(
      "os_cfar",
      [](const std::vector<double>& line, const OsCfarConfig& cfg) { return os_cfar_1d(line, cfg); }, py::arg("line"),
      py::arg("config"));
  m.def(
      "freq_map",
      [](const CArray& cube, const RadarParams& p, std::size_t r_a, bool windowed) {
        const auto c = from_numpy(cube);
        const auto grid = GridSpec{r_a, c.shape()};
        const auto w = windowed ? AxisWindows::from(p) : AxisWindows::rectangular(c.shape());
        FreqMap3D map;
        {
          py::gil_scoped_release nogil;
          map = fft3d(c, grid, w);
        }
        return to_numpy(map);
      },
      py::arg("cube"), py::arg("params"), py::arg("r_a") = 1, py::arg("windowed") = true,
      "Windowed, zero-padded 3-D DFT on the r_a-times finer grid.");
  m.def(
      "predetect",
      [](const CArray& bits, const RadarParams& p, std::size_t r_a, std::optional<PredetectConfig> cfg, double alpha_db) {
        const auto grid = GridSpec::make(p, r_a);
        PreDetectionSet set;
        const OneBitCube q = bits_from_numpy(bits);
        {
          py::gil_scoped_release nogil;
          set = ex::one_bit_predetect(q, grid, AxisWindows::from(p), predetect_for(grid, cfg, alpha_db));
        }
        return entries(set);
      },
      py::arg("bits"), py::arg("params"), py::arg("r_a") = 1, py::arg("config") = py::none(),
      py::arg("alpha_db") = 10.6, "OS-CFAR pre-detection on the one-bit map; returns dicts with cell, y, ratio_db.");

  py::class_<BGPrior>(m, "BGPrior")
      .def(py::init([](double rho, cplx mean, double var) { return BGPrior{rho, mean, var}; }), py::arg("rho"),
           py::arg("mean"), py::arg("var"))
      .def_readwrite("rho", &BGPrior::rho)
      .def_readwrite("mean", &BGPrior::mean)
      .def_readwrite("var", &BGPrior::var);
  py::class_<GampControls>(m, "GampControls")
      .def(py::init<>())
      .def_readwrite("max_iter", &GampControls::max_iter)
      .def_readwrite("tol", &GampControls::tol)
      .def_readwrite("damping", &GampControls::damping)
      .def_readwrite("min_damping", &GampControls::min_damping)
      .def_readwrite("warmup", &GampControls::warmup)
      .def_readwrite("learn_prior", &GampControls::learn_prior)
      .def_readwrite("em_interval", &GampControls::em_interval);

  m.def(
      "denoise_output",
      [](double p, double tau, int y, double nv) {
        const auto r = denoise_output(p, tau, y, nv);
        return py::make_tuple(r.mean, r.var);
      },
      py::arg("p"), py::arg("tau"), py::arg("y"), py::arg("noise_var"), "Posterior mean and variance of the probit channel.");
  m.def(
      "denoise_input",
      [](cplx r, double tau, const BGPrior& prior) {
        const auto q = denoise_input(r, tau, prior);
        return py::make_tuple(q.mean, q.var, q.activity);
      },
      py::arg("r"), py::arg("tau"), py::arg("prior"), "Posterior mean, variance and activity under the BG prior.");
  m.def("gamma2", [](const RadarParams& p, double th_db) {
    return gamma2_from_sensitivity(p.shape().size(), th_db) * std::sqrt(p.complex_noise_var);
  });
  m.def("recover", &recover, py::arg("bits"), py::arg("params"), py::arg("r_a") = 2, py::arg("config") = py::none(),
        py::arg("alpha_db") = 10.6, py::arg("th_db") = 13.6, py::arg("controls") = GampControls{},
        "Pre-detection, GAMP over the pre-detected cells and final thresholding.");

  auto e = m.def_submodule("experiments", "Experiment drivers");
  e.def(
      "attenuation_sweep",
      [](const std::vector<double>& snr_db, std::size_t trials, std::size_t num_samples, std::uint64_t seed) {
        ex::AttenuationConfig cfg;
        cfg.snr_db = snr_db;
        cfg.trials = trials;
        cfg.tones.num_samples = num_samples;
        cfg.tones.seed = seed;
        std::vector<ex::AttenuationRow> rows;
        {
          py::gil_scoped_release nogil;
          rows = ex::run_attenuation_sweep(cfg);
        }
        py::list out;
        for (const auto& r : rows) {
          py::dict d;
          d["snr_db"] = r.snr_db;
          d["closed_self_db"] = r.closed.self_db;
          d["closed_cross_db"] = r.closed.cross_db;
          d["mc_self_db"] = r.mc_self_db;
          d["mc_cross_db"] = r.mc_cross_db;
          out.append(d);
        }
        return out;
      },
      py::arg("snr_db"), py::arg("trials") = 20000, py::arg("num_samples") = 1000000, py::arg("seed") = 1);
  e.def(
      "snr_loss",
      [](const std::vector<double>& snr2_db, double snr1_db, std::size_t num_samples, std::size_t repeats,
         std::uint64_t seed) {
        ex::SnrLossConfig cfg;
        cfg.snr2_db = snr2_db;
        cfg.snr1_db = snr1_db;
        cfg.tones.num_samples = num_samples;
        cfg.tones.seed = seed;
        cfg.repeats = repeats;
        py::list out;
        for (const auto& r : ex::run_snr_loss(cfg)) {
          py::dict d;
          d["snr2_db"] = r.snr2_db;
          d["loss1_db"] = r.loss1_db;
          d["loss2_db"] = r.loss2_db;
          out.append(d);
        }
        return out;
      },
      py::arg("snr2_db"), py::arg("snr1_db") = -30.0, py::arg("num_samples") = 1 << 20, py::arg("repeats") = 8,
      py::arg("seed") = 1);
  e.def(
      "gaussianity",
      [](double snr_db, int excise_order, std::size_t num_samples, std::uint64_t seed) {
        ex::GaussianityConfig cfg;
        cfg.snr_db = snr_db;
        cfg.excise_order = excise_order;
        cfg.tones.num_samples = num_samples;
        cfg.tones.seed = seed;
        const auto r = ex::run_gaussianity_check(cfg);
        py::dict d;
        d["jarque_bera"] = r.jarque_bera;
        d["p_value"] = r.p_value;
        d["normal"] = r.normal;
        d["skewness"] = r.skewness;
        d["excess_kurtosis"] = r.excess_kurtosis;
        d["max_abs_autocorr"] = r.max_abs_autocorr;
        d["bins_excised"] = r.bins_excised;
        return d;
      },
      py::arg("snr_db") = -5.0, py::arg("excise_order") = 3, py::arg("num_samples") = 1000000, py::arg("seed") = 1);
  e.def("wilson", [](std::size_t k, std::size_t n) {
    const auto p = ex::wilson(k, n);
    return py::make_tuple(p.p, p.lo, p.hi);
  });

  m.def(
      "load_config",
      [](const std::string& path) {
        std::ostringstream o;
        o << to_text(load_config(path));
        return o.str();
      },
      py::arg("path"), "Parses a config file and returns its canonical text.");
  m.def(
      "parse_config",
      [](const std::string& text) {
        std::istringstream in(text);
        const auto c = parse_config(in, "<string>");
        py::dict d;
        d["radar"] = c.radar;
        d["targets"] = c.targets;
        d["r_a"] = c.r_a;
        d["seed"] = c.seed;
        d["canonical"] = to_text(c);
        d["hash"] = fnv1a_hex(to_text(c));
        return d;
      },
      py::arg("text"));
}

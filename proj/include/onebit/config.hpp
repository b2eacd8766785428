#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "onebit/gamp.hpp"
#include "onebit/pipeline.hpp"
#include "onebit/scene.hpp"

namespace onebit {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, std::size_t line, const std::string& field, const std::string& msg);
  [[nodiscard]] std::size_t line() const noexcept { return line_; }
  [[nodiscard]] const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

/// Everything a run needs. Groups that a file does not mention keep their defaults.
struct ExperimentConfig {
  RadarParams radar = RadarParams::table1();
  std::size_t r_a = 1;
  PredetectConfig predetect{};
  GampControls gamp{};
  double th_db = 13.6;
  std::size_t hit_tolerance = 1;
  std::vector<Target> targets;

  // [experiment]
  std::uint64_t seed = 1;
  std::optional<std::size_t> trials;
  std::vector<double> snr_db;
  std::optional<double> f1;  // unset: each experiment's own default tones
  std::optional<double> f2;
  std::optional<std::size_t> num_samples;
  int scenario = 1;
  std::optional<std::size_t> calibration_trials;
  std::optional<double> conventional_alpha_db;
  int excise_order = 3;
  double snr1_db = -30.0;
  std::size_t repeats = 8;
  bool off_grid = false;
  std::vector<std::size_t> r_a_list;
};

/// Parses "key = value" lines grouped by "[section]" headers on top of `base`; '#' starts a comment.
/// A line "paper-default table1" loads the reference radar parameters. [target] may repeat and
/// appends to the base targets. A [radar] section or any [target] requires complex_noise_var.
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>", ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Canonical text of a config; parse_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& cfg);

/// 64-bit FNV-1a of a byte string, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

std::string window_to_text(const WindowSpec& w);
WindowSpec window_from_text(const std::string& s);

}  // namespace onebit

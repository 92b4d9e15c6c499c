#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "toda/analysis.hpp"
#include "toda/dynamics.hpp"
#include "toda/poincare.hpp"
#include "toda/quantum.hpp"

namespace toda {

/// Named model plus initial phase-space centre.
struct PresetSpec {
  std::string name;
  ModelParams params;
  PhaseState center;
  GrowthModel growth = GrowthModel::linear;
  ScalingLaw time_law = ScalingLaw::log_inverse;
};

/// Everything a run needs. Serialised as flat `key = value` lines grouped
/// under `[section]` headers; every field has a default.
struct ExperimentConfig {
  // [experiment]
  std::vector<std::string> presets{"regular", "chaotic"};
  double energy = 7.0;
  double chaotic_m2 = 0.54;
  ModelParams custom_params{1.0, 1.0, 7.0};
  PhaseState custom_center{0.0, 0.0, 0.0, 0.0};
  GrowthModel custom_growth = GrowthModel::linear;

  // [quantum]
  std::vector<double> hbar_schedule{0.5, 0.25, 0.125};
  double omega = 1.0;
  // Default cutoff n_sum_max = ceil(cutoff_action / hbar); explicit values override.
  double cutoff_action = 13.0;
  std::optional<int> n_max;
  std::optional<int> n_sum_max;
  PacketWidth packet_width = PacketWidth::unit;
  double truncation_tolerance = 1e-8;
  // Convergence guard: the curve at cutoff N must agree with the curve at
  // N + stability_step to stability_tolerance (sup over the time grid). Auto
  // cutoffs start at the truncation gate and step up until this holds, at most
  // max_refinements times. stability_step = 0 disables the guard.
  int stability_step = 10;
  double stability_tolerance = 1e-3;
  int max_refinements = 4;

  // [classical]
  std::vector<double> delta_schedule{0.32, 0.16, 0.08, 0.04, 0.02};
  std::size_t ensemble_size = 100000;
  std::uint64_t seed = 1;
  double dt = 1e-3;
  double drift_tolerance = 1e-8;
  std::size_t threads = 1;
  // Also compute classical curves at delta = hbar for every quantum hbar.
  bool compare_hbar = true;

  // [time]
  double t_max = 100.0;
  std::size_t samples = 400;

  // [analysis]
  AnalysisWindows windows;

  // [poincare]
  SectionSpec section;
  std::size_t section_orbits = 20;
  std::size_t section_crossings = 500;
  double section_dt = 1e-3;

  // [output]
  std::string output_dir = "toda-out";
  std::string cache_dir;  // empty: TODA_CACHE_DIR, else <output_dir>/cache
  std::size_t workers = 1;

  /// Throws ConfigError on any invalid value.
  void validate() const;

  PresetSpec preset(const std::string& name) const;
  /// Truncated basis from the action rule alone (or explicit cutoffs).
  BasisSpec basis_for(double hbar) const;
  /// Basis for one preset: without explicit cutoffs the sum cutoff is raised
  /// until the preset's initial packet passes the truncation gate.
  BasisSpec basis_for(double hbar, const PresetSpec& preset) const;
  std::vector<double> time_grid() const;
  std::string resolved_cache_dir() const;

  /// Canonical text form; parse_config(serialize()) reproduces the config exactly.
  std::string serialize() const;

  /// Sets one `section.key` from its text form. Throws ConfigError for unknown keys or bad values.
  void set(const std::string& dotted_key, const std::string& value);

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) { return a.serialize() == b.serialize(); }
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// All `section.key` names in serialisation order.
std::vector<std::string> config_keys();

/// Environment variable overriding the spectral cache directory.
inline constexpr const char* kCacheDirEnv = "TODA_CACHE_DIR";

}  // namespace toda

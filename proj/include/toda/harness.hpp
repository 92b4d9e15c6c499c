#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "toda/analysis.hpp"
#include "toda/config.hpp"
#include "toda/ensemble.hpp"
#include "toda/poincare.hpp"
#include "toda/quantum.hpp"

namespace toda {

/// Which kinds of sweep cell a run executes.
struct RunSelection {
  bool quantum = true;
  bool classical = true;
  bool poincare = true;
  bool analysis = true;
};

enum class FailureClass { none, config, numerical, other };

struct CellOutcome {
  std::string name;  // output file name
  FailureClass failure = FailureClass::none;
  std::string message;

  bool ok() const noexcept { return failure == FailureClass::none; }
};

struct RunReport {
  std::filesystem::path directory;
  std::vector<CellOutcome> cells;
  std::string config_hash;

  std::size_t failures() const;
  /// 0 when every cell succeeded; 3 when some failed; 2 or 1 when all failed
  /// on numerical guards or configuration errors respectively.
  int exit_code() const;
};

/// Runs every selected cell of the sweep and writes curve files, Poincare
/// files, the analysis report, config.txt and manifest.txt into
/// config.output_dir. Progress goes to `log` when non-null.
RunReport run_experiment(const ExperimentConfig& config, const RunSelection& selection = {}, std::ostream* log = nullptr);

struct QuantumCell {
  EntanglementCurves curves;
  BasisSpec basis;
  // sup_t |S(t; basis) - S(t; basis + stability_step)|; negative when the guard is off.
  double stability = -1.0;
  int refinements = 0;
};

/// Quantum entanglement curves for one preset at one hbar, through the
/// spectral cache, with the truncation-stability guard applied.
QuantumCell quantum_cell(const ExperimentConfig& config, const PresetSpec& preset, double hbar,
                         std::vector<std::string>* warnings = nullptr);

/// Classical curves for cell area delta with ensemble width parameter `width_hbar`.
ClassicalCurves classical_cell(const ExperimentConfig& config, const PresetSpec& preset, double delta,
                               double width_hbar);

SectionResult poincare_cell(const ExperimentConfig& config, const PresetSpec& preset);

std::string quantum_file_name(const std::string& preset, double hbar);
std::string classical_file_name(const std::string& preset, double delta);
std::string poincare_file_name(const std::string& preset);

/// Quantum-classical comparison at one hbar: sup distance between the quantum
/// curve and the classical curve at delta = hbar on [0, t_d].
struct ConvergencePoint {
  double hbar = 0.0;
  double t_d = 0.0;
  double distance = 0.0;            // particle 1
  double distance_particle2 = 0.0;  // quantum particle 1 against classical particle 2
};

struct ConvergenceAnalysis {
  std::string preset;
  std::vector<ConvergencePoint> points;  // descending hbar
  bool strictly_decreasing = false;
};

struct DirectoryAnalysis {
  std::vector<FamilyAnalysis> families;
  std::vector<ConvergenceAnalysis> convergence;
  std::vector<std::string> notes;  // families that could not be analysed
};

/// Reads the curve files in `dir` and analyses them under `config`.
DirectoryAnalysis analyze_curves(const std::filesystem::path& dir, const ExperimentConfig& config);

/// analyze_curves plus writing `dir/analysis.txt`.
DirectoryAnalysis analyze_directory(const std::filesystem::path& dir, const ExperimentConfig& config);

void write_directory_analysis(std::ostream& os, const DirectoryAnalysis& analysis, const ExperimentConfig& config);

/// Rewrites manifest.txt: every artifact file with its SHA-256, the config
/// hash, and the failed cells.
void write_manifest(const std::filesystem::path& dir, const ExperimentConfig& config,
                    const std::vector<CellOutcome>& cells);

}  // namespace toda

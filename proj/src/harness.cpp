#include "toda/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "toda/cache.hpp"
#include "toda/error.hpp"
#include "toda/hash.hpp"
#include "toda/version.hpp"

namespace toda {

namespace fs = std::filesystem;

std::size_t RunReport::failures() const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const CellOutcome& c) { return !c.ok(); }));
}

int RunReport::exit_code() const {
  const std::size_t failed = failures();
  if (failed == 0) return 0;
  if (failed < cells.size()) return 3;
  const bool all_numerical = std::all_of(cells.begin(), cells.end(), [](const CellOutcome& c) {
    return c.failure == FailureClass::numerical;
  });
  const bool all_config = std::all_of(cells.begin(), cells.end(), [](const CellOutcome& c) {
    return c.failure == FailureClass::config;
  });
  if (all_numerical) return 2;
  if (all_config) return 1;
  return 3;
}

std::string quantum_file_name(const std::string& preset, double hbar) {
  return "quantum_" + preset + "_hbar" + format_double(hbar) + ".dat";
}

std::string classical_file_name(const std::string& preset, double delta) {
  return "classical_" + preset + "_delta" + format_double(delta) + ".dat";
}

std::string poincare_file_name(const std::string& preset) { return "poincare_" + preset + ".dat"; }

namespace {

// Writes through a temporary file so a crash never leaves a partial artifact.
void write_atomically(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    body(out);
    out.flush();
    if (!out) throw ConfigError("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

TableHeader model_header(const PresetSpec& preset) {
  return {{"preset", preset.name},
          {"m1", format_double(preset.params.m1)},
          {"m2", format_double(preset.params.m2)},
          {"energy", format_double(preset.params.energy)},
          {"center", format_double(preset.center.q1) + " " + format_double(preset.center.q2) + " " +
                         format_double(preset.center.p1) + " " + format_double(preset.center.p2)},
          {"code_version", kCodeVersion}};
}

FailureClass classify(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return FailureClass::config;
  if (dynamic_cast<const NumericalError*>(&e) != nullptr) return FailureClass::numerical;
  return FailureClass::other;
}

std::string failure_name(FailureClass f) {
  switch (f) {
    case FailureClass::none: return "ok";
    case FailureClass::config: return "config";
    case FailureClass::numerical: return "numerical";
    case FailureClass::other: return "error";
  }
  return "error";
}

struct Cell {
  std::string name;
  std::function<void(const fs::path&)> run;
};

// Runs cells over `workers` threads; outcomes keep the cell order.
std::vector<CellOutcome> run_cells(const std::vector<Cell>& cells, const fs::path& dir, std::size_t workers,
                                   std::ostream* log) {
  std::vector<CellOutcome> outcomes(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      outcomes[i].name = cells[i].name;
      const auto start = std::chrono::steady_clock::now();
      try {
        cells[i].run(dir / cells[i].name);
      } catch (const std::exception& e) {
        outcomes[i].failure = classify(e);
        outcomes[i].message = e.what();
      }
      if (log != nullptr) {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::lock_guard lock(log_mutex);
        *log << "[" << (outcomes[i].ok() ? "done" : "FAILED") << "] " << cells[i].name << " (" << secs << " s)";
        if (!outcomes[i].ok()) *log << ": " << outcomes[i].message;
        *log << std::endl;
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(workers, cells.size()));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n; ++w) pool.emplace_back(worker);
  }
  return outcomes;
}

bool contains(const std::vector<double>& values, double v) {
  return std::find(values.begin(), values.end(), v) != values.end();
}

}  // namespace

namespace {

BasisSpec widened(const BasisSpec& b, int step) {
  return BasisSpec(b.hbar(), b.omega(), b.n_max() + step,
                   b.n_sum_max() ? std::optional<int>(*b.n_sum_max() + step) : std::nullopt);
}

EntanglementCurves curves_for(const ExperimentConfig& config, const PresetSpec& preset, const BasisSpec& basis,
                              std::vector<std::string>* warnings) {
  const PacketVariances widths = packet_variances(basis.hbar(), preset.params, config.packet_width);
  // Fail on truncation before paying for the diagonalisation.
  const CoherentExpansion initial = coherent_coefficients(preset.center, basis, widths, config.truncation_tolerance);
  CacheLookup lookup = cache_get_or_build(preset.params, basis, config.resolved_cache_dir());
  if (warnings != nullptr) warnings->insert(warnings->end(), lookup.warnings.begin(), lookup.warnings.end());
  const std::vector<double> times = config.time_grid();
  EntanglementCurves curves = entanglement_curves(lookup.spectrum, initial.state, times);
  for (EntropyCurve* c : {&curves.particle1, &curves.particle2}) c->tag.preset = preset.name;
  return curves;
}

double sup_difference(const EntropyCurve& a, const EntropyCurve& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
  return worst;
}

}  // namespace

QuantumCell quantum_cell(const ExperimentConfig& config, const PresetSpec& preset, double hbar,
                         std::vector<std::string>* warnings) {
  QuantumCell cell{{}, config.basis_for(hbar, preset)};
  cell.curves = curves_for(config, preset, cell.basis, warnings);
  if (config.stability_step == 0) return cell;

  // Explicit cutoffs are checked but never moved.
  const bool adaptive = !config.n_max && !config.n_sum_max;
  for (;;) {
    const BasisSpec wider = widened(cell.basis, config.stability_step);
    EntanglementCurves reference = curves_for(config, preset, wider, warnings);
    cell.stability = sup_difference(cell.curves.particle1, reference.particle1);
    if (cell.stability < config.stability_tolerance) return cell;
    if (!adaptive || cell.refinements >= config.max_refinements) {
      std::ostringstream os;
      os << "quantum curve not converged in the basis: raising the cutoff from " << cell.basis.n_max() << " to "
         << wider.n_max() << " changes S(t) by " << cell.stability << " (tolerance " << config.stability_tolerance
         << ")";
      throw TruncationError(os.str(), cell.curves.deficit, wider.n_max() + config.stability_step);
    }
    cell.basis = wider;
    cell.curves = std::move(reference);
    ++cell.refinements;
  }
}

ClassicalCurves classical_cell(const ExperimentConfig& config, const PresetSpec& preset, double delta,
                               double width_hbar) {
  ClassicalRun run;
  run.params = preset.params;
  run.center = preset.center;
  run.hbar = width_hbar;
  run.delta = delta;
  run.M = config.ensemble_size;
  run.seed = config.seed;
  run.width = config.packet_width;
  run.evolve = {config.dt, config.drift_tolerance, config.threads};
  run.preset = preset.name;
  const std::vector<double> times = config.time_grid();
  return classical_entropy_curve(run, times);
}

SectionResult poincare_cell(const ExperimentConfig& config, const PresetSpec& preset) {
  const std::vector<PhaseState> seeds = section_seeds(config.section, preset.params, config.section_orbits);
  SectionOptions options;
  options.dt = config.section_dt;
  return poincare_section(seeds, config.section, preset.params, config.section_crossings, options);
}

RunReport run_experiment(const ExperimentConfig& config, const RunSelection& selection, std::ostream* log) {
  config.validate();
  const fs::path dir = config.output_dir;
  fs::create_directories(dir);

  std::vector<PresetSpec> presets;
  for (const std::string& name : config.presets) presets.push_back(config.preset(name));

  std::vector<Cell> cells;
  std::mutex warn_mutex;
  std::vector<std::string> warnings;

  if (selection.quantum) {
    for (const PresetSpec& p : presets) {
      for (const double hbar : config.hbar_schedule) {
        cells.push_back({quantum_file_name(p.name, hbar), [&, p, hbar](const fs::path& path) {
                           std::vector<std::string> local;
                           const QuantumCell cell = quantum_cell(config, p, hbar, &local);
                           const EntanglementCurves& curves = cell.curves;
                           const BasisSpec& basis = cell.basis;
                           {
                             std::lock_guard lock(warn_mutex);
                             warnings.insert(warnings.end(), local.begin(), local.end());
                           }
                           TableHeader h = model_header(p);
                           h["source"] = "quantum";
                           h["hbar"] = format_double(hbar);
                           h["omega"] = format_double(basis.omega());
                           h["n_max"] = std::to_string(basis.n_max());
                           h["n_sum_max"] = basis.n_sum_max() ? std::to_string(*basis.n_sum_max()) : "none";
                           h["dimension"] = std::to_string(basis.dimension());
                           h["packet_width"] = config.packet_width == PacketWidth::unit ? "unit" : "mass_matched";
                           h["truncation_deficit"] = format_double(curves.deficit);
                           h["schmidt_asymmetry"] = format_double(curves.schmidt_asymmetry);
                           h["truncation_stability"] = format_double(cell.stability);
                           h["stability_step"] = std::to_string(config.stability_step);
                           write_atomically(path, [&](std::ostream& os) {
                             write_curve_table(os, curves.particle1, curves.particle2, h);
                           });
                         }});
      }
    }
  }

  if (selection.classical) {
    for (const PresetSpec& p : presets) {
      std::vector<double> deltas = config.delta_schedule;
      if (config.compare_hbar) {
        for (const double hbar : config.hbar_schedule) {
          if (!contains(deltas, hbar)) deltas.push_back(hbar);
        }
      }
      for (const double delta : deltas) {
        cells.push_back({classical_file_name(p.name, delta), [&, p, delta](const fs::path& path) {
                           // Ensemble width and cell area are paired: delta = hbar.
                           const ClassicalCurves curves = classical_cell(config, p, delta, delta);
                           TableHeader h = model_header(p);
                           h["source"] = "classical";
                           h["delta"] = format_double(delta);
                           h["hbar"] = format_double(delta);
                           h["M"] = std::to_string(config.ensemble_size);
                           h["seed"] = std::to_string(config.seed);
                           h["dt"] = format_double(config.dt);
                           h["sampler_version"] = std::to_string(kSamplerVersion);
                           h["packet_width"] = config.packet_width == PacketWidth::unit ? "unit" : "mass_matched";
                           h["max_relative_drift"] = format_double(curves.max_relative_drift);
                           write_atomically(path, [&](std::ostream& os) {
                             write_curve_table(os, curves.particle1, curves.particle2, h);
                           });
                         }});
      }
    }
  }

  if (selection.poincare) {
    for (const PresetSpec& p : presets) {
      cells.push_back({poincare_file_name(p.name), [&, p](const fs::path& path) {
                         const SectionResult section = poincare_cell(config, p);
                         write_atomically(path, [&](std::ostream& os) {
                           write_section_table(os, section, config.section, p.params, p.name);
                         });
                       }});
    }
  }

  RunReport report;
  report.directory = dir;
  report.config_hash = sha256_hex(config.serialize());
  report.cells = run_cells(cells, dir, config.workers, log);

  if (log != nullptr) {
    for (const std::string& w : warnings) *log << "warning: " << w << '\n';
  }

  write_atomically(dir / "config.txt", [&](std::ostream& os) { os << config.serialize(); });

  if (selection.analysis) {
    CellOutcome outcome{"analysis.txt", FailureClass::none, {}};
    try {
      analyze_directory(dir, config);
    } catch (const std::exception& e) {
      outcome.failure = classify(e);
      outcome.message = e.what();
    }
    report.cells.push_back(outcome);
  }

  write_manifest(dir, config, report.cells);
  return report;
}

DirectoryAnalysis analyze_curves(const fs::path& dir, const ExperimentConfig& config) {
  // Curves per preset, keyed by their parameter.
  std::map<std::string, std::map<double, CurvePair>> quantum, classical;
  for (const auto& item : fs::directory_iterator(dir)) {
    const std::string name = item.path().filename().string();
    if (!item.is_regular_file() || !name.ends_with(".dat")) continue;
    const bool is_quantum = name.starts_with("quantum_");
    if (!is_quantum && !name.starts_with("classical_")) continue;
    std::ifstream in(item.path());
    CurvePair pair = read_curve_table(in);
    const CurveTag& tag = pair.particle1.tag;
    auto& bucket = is_quantum ? quantum[tag.preset] : classical[tag.preset];
    bucket.emplace(tag.parameter(), std::move(pair));
  }

  DirectoryAnalysis out;
  std::map<std::string, const FamilyAnalysis*> classical_family;

  auto run_family = [&](const std::string& label, std::vector<EntropyCurve> curves, const PresetSpec& p) {
    if (curves.empty()) return;
    try {
      out.families.push_back(analyze_family(curves, p.growth, p.time_law, config.windows, label));
    } catch (const Error& e) {
      out.notes.push_back(label + ": " + e.what());
    }
  };

  for (const std::string& name : config.presets) {
    const PresetSpec p = config.preset(name);
    std::vector<EntropyCurve> sweep;
    for (const auto& [delta, pair] : classical[name]) {
      if (contains(config.delta_schedule, delta) && pair.particle1.tag.hbar == delta) sweep.push_back(pair.particle1);
    }
    run_family(name + ".classical", sweep, p);
    std::vector<EntropyCurve> qcurves;
    for (const auto& [hbar, pair] : quantum[name]) {
      if (contains(config.hbar_schedule, hbar)) qcurves.push_back(pair.particle1);
    }
    run_family(name + ".quantum", qcurves, p);
  }
  for (const FamilyAnalysis& f : out.families) {
    if (f.label.ends_with(".classical")) classical_family[f.label.substr(0, f.label.size() - 10)] = &f;
  }

  for (const std::string& name : config.presets) {
    ConvergenceAnalysis conv;
    conv.preset = name;
    const auto fam = classical_family.find(name);
    std::vector<double> hbars = config.hbar_schedule;
    std::sort(hbars.rbegin(), hbars.rend());
    for (const double hbar : hbars) {
      const auto q = quantum[name].find(hbar);
      const auto c = classical[name].find(hbar);
      if (q == quantum[name].end() || c == classical[name].end()) continue;
      ConvergencePoint pt;
      pt.hbar = hbar;
      const EntropyCurve& cl = c->second.particle1;
      const double t_end = std::min(cl.times.back(), q->second.particle1.times.back());
      pt.t_d = t_end;
      if (fam != classical_family.end()) {
        // Saturation time at delta = hbar from the limit curve's growth law.
        try {
          const SaturationValue s = saturation_value(cl, config.windows.tail_fraction);
          pt.t_d = std::clamp(saturation_time(fam->second->limit_fit, s.mean), 0.0, t_end);
        } catch (const Error& e) {
          out.notes.push_back(name + " convergence at hbar " + format_double(hbar) + ": " + e.what() +
                              "; using the full time span");
        }
      }
      pt.distance = curve_distance(q->second.particle1, cl, {0.0, pt.t_d});
      pt.distance_particle2 = curve_distance(q->second.particle1, c->second.particle2, {0.0, pt.t_d});
      conv.points.push_back(pt);
    }
    if (conv.points.empty()) continue;
    conv.strictly_decreasing = conv.points.size() >= 2;
    for (std::size_t i = 1; i < conv.points.size(); ++i) {
      if (!(conv.points[i].distance < conv.points[i - 1].distance)) conv.strictly_decreasing = false;
    }
    out.convergence.push_back(conv);
  }
  return out;
}

void write_directory_analysis(std::ostream& os, const DirectoryAnalysis& analysis, const ExperimentConfig& config) {
  const AnalysisWindows& w = config.windows;
  const TableHeader header{{"code_version", kCodeVersion},
                           {"log_window", "[" + format_double(w.log_t_min) + ", " + format_double(w.log_fraction) + " t_d]"},
                           {"linear_window",
                            "[" + format_double(w.linear_t_min) + ", " + format_double(w.linear_fraction) + " t_d]"},
                           {"tail_fraction", format_double(w.tail_fraction)},
                           {"smoothing", std::to_string(w.smoothing)}};
  write_analysis_report(os, analysis.families, header);
  for (const ConvergenceAnalysis& c : analysis.convergence) {
    const std::string p = c.preset + ".convergence.";
    for (const ConvergencePoint& pt : c.points) {
      const std::string h = format_double(pt.hbar);
      os << p << "hbar" << h << ".t_d=" << format_double(pt.t_d) << '\n'
         << p << "hbar" << h << ".distance=" << format_double(pt.distance) << '\n'
         << p << "hbar" << h << ".distance_particle2=" << format_double(pt.distance_particle2) << '\n';
    }
    os << p << "strictly_decreasing=" << (c.strictly_decreasing ? 1 : 0) << '\n';
  }
  for (const std::string& note : analysis.notes) os << "# note: " << note << '\n';
}

DirectoryAnalysis analyze_directory(const fs::path& dir, const ExperimentConfig& config) {
  DirectoryAnalysis analysis = analyze_curves(dir, config);
  write_atomically(dir / "analysis.txt", [&](std::ostream& os) { write_directory_analysis(os, analysis, config); });
  return analysis;
}

void write_manifest(const fs::path& dir, const ExperimentConfig& config, const std::vector<CellOutcome>& cells) {
  std::vector<std::string> files;
  for (const auto& item : fs::directory_iterator(dir)) {
    const std::string name = item.path().filename().string();
    if (!item.is_regular_file() || name == "manifest.txt" || name.ends_with(".tmp")) continue;
    files.push_back(name);
  }
  std::sort(files.begin(), files.end());
  const std::string text = config.serialize();
  write_atomically(dir / "manifest.txt", [&](std::ostream& os) {
    os << "# code_version = " << kCodeVersion << '\n';
    os << "# config_sha256 = " << sha256_hex(text) << '\n';
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) os << "# config: " << line << '\n';
    os << "# file sha256\n";
    for (const std::string& f : files) os << f << ' ' << sha256_file(dir / f) << '\n';
    for (const CellOutcome& c : cells) {
      if (!c.ok()) os << "# failed " << c.name << ' ' << failure_name(c.failure) << ": " << c.message << '\n';
    }
  });
}

}  // namespace toda

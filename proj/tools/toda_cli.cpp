// Command-line front end: run sweeps, single cell kinds, re-analysis and cache upkeep.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include "toda/cache.hpp"
#include "toda/config.hpp"
#include "toda/error.hpp"
#include "toda/harness.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kNumericalError = 2;

struct Overrides {
  std::string config_file;
  std::map<std::string, std::string> values;
};

toda::ExperimentConfig build_config(const Overrides& o, const toda::ExperimentConfig& base) {
  toda::ExperimentConfig config = o.config_file.empty() ? base : toda::load_config(o.config_file);
  for (const auto& [key, value] : o.values) config.set(key, value);
  config.validate();
  return config;
}

void add_config_flags(CLI::App& app, Overrides& o) {
  app.add_option("-c,--config", o.config_file, "Configuration file (key = value under [section] headers)")
      ->check(CLI::ExistingFile);
  for (const std::string& key : toda::config_keys()) {
    app.add_option_function<std::string>(
        "--" + key, [&o, key](const std::string& v) { o.values[key] = v; }, "Override " + key);
  }
}

int run_verb(const Overrides& o, const toda::RunSelection& selection, bool quiet) {
  const toda::ExperimentConfig config = build_config(o, {});
  const toda::RunReport report = toda::run_experiment(config, selection, quiet ? nullptr : &std::cerr);
  if (!quiet) {
    std::cerr << report.cells.size() - report.failures() << "/" << report.cells.size() << " cells written to "
              << report.directory.string() << '\n';
  }
  return report.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum and classical entanglement growth in the two-particle Toda model"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress output");

  Overrides overrides;
  std::string analyze_dir;

  auto* run = app.add_subcommand("run", "Full sweep: quantum, classical, Poincare sections and analysis");
  auto* quantum = app.add_subcommand("quantum", "Quantum entanglement curves over the hbar schedule");
  auto* classical = app.add_subcommand("classical", "Classical cell-entropy curves over the delta schedule");
  auto* poincare = app.add_subcommand("poincare", "Poincare surface-of-section tables");
  auto* analyze = app.add_subcommand("analyze", "Re-run the analysis on an existing artifact directory");
  auto* config_cmd = app.add_subcommand("config", "Print the effective configuration");
  auto* cache = app.add_subcommand("cache", "Inspect or purge the spectral cache");
  auto* cache_list = cache->add_subcommand("list", "List cached decompositions");
  auto* cache_purge = cache->add_subcommand("purge", "Delete every cached decomposition");
  cache->require_subcommand(1);

  for (auto* sub : {run, quantum, classical, poincare, analyze, config_cmd, cache_list, cache_purge}) {
    add_config_flags(*sub, overrides);
  }
  analyze->add_option("dir", analyze_dir, "Artifact directory (default: output.dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return run_verb(overrides, {}, quiet);
    if (*quantum) return run_verb(overrides, {true, false, false, false}, quiet);
    if (*classical) return run_verb(overrides, {false, true, false, false}, quiet);
    if (*poincare) return run_verb(overrides, {false, false, true, false}, quiet);

    if (*config_cmd) {
      std::cout << build_config(overrides, {}).serialize();
      return kOk;
    }

    if (*analyze) {
      // The directory's own config.txt is the base; file and flags override it.
      toda::ExperimentConfig base;
      fs::path dir = analyze_dir;
      if (dir.empty()) dir = build_config(overrides, {}).output_dir;
      if (fs::exists(dir / "config.txt")) base = toda::load_config((dir / "config.txt").string());
      toda::ExperimentConfig config = build_config(overrides, base);
      config.output_dir = dir.string();
      const toda::DirectoryAnalysis analysis = toda::analyze_directory(dir, config);
      toda::write_manifest(dir, config, {});
      if (!quiet) {
        for (const std::string& note : analysis.notes) std::cerr << "note: " << note << '\n';
        std::cerr << "wrote " << (dir / "analysis.txt").string() << '\n';
      }
      return kOk;
    }

    if (*cache_list || *cache_purge) {
      const toda::ExperimentConfig config = build_config(overrides, {});
      const fs::path dir = config.resolved_cache_dir();
      if (*cache_purge) {
        const std::size_t removed = toda::purge_cache(dir);
        std::cout << "removed " << removed << " files from " << dir.string() << '\n';
        return kOk;
      }
      std::cout << "# cache " << dir.string() << "\n# file bytes hbar omega m1 m2 energy n_max n_sum_max dimension\n";
      for (const toda::CacheEntry& e : toda::list_cache(dir)) {
        std::cout << e.path.filename().string() << ' ' << e.bytes;
        if (e.readable) {
          std::cout << ' ' << e.hbar << ' ' << e.omega << ' ' << e.m1 << ' ' << e.m2 << ' ' << e.energy << ' '
                    << e.n_max << ' ' << e.n_sum_max << ' ' << e.dimension;
        } else {
          std::cout << " unreadable";
        }
        std::cout << '\n';
      }
      return kOk;
    }
  } catch (const toda::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const toda::NumericalError& e) {
    std::cerr << "numerical guard: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}

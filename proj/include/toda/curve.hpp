#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace toda {

enum class CurveSource { quantum, classical };

/// Where a curve came from: quantum at hbar, or classical at cell area delta
/// with ensemble width hbar, size M and seed.
struct CurveTag {
  CurveSource source = CurveSource::classical;
  double hbar = 0.0;
  double delta = 0.0;
  std::size_t ensemble_size = 0;
  std::uint64_t seed = 0;
  std::string preset;

  /// hbar for quantum curves, delta for classical ones.
  double parameter() const noexcept { return source == CurveSource::quantum ? hbar : delta; }
};

struct EntropyCurve {
  std::vector<double> times;   // ascending
  std::vector<double> values;  // nats
  CurveTag tag;
  int particle = 1;

  std::size_t size() const noexcept { return times.size(); }
  /// Lengths match, times strictly ascending, values finite and non-negative.
  void validate() const;
};

/// Header key/value pairs (`# key = value`) preceding a table.
using TableHeader = std::map<std::string, std::string>;

/// Writes `t S_particle1 S_particle2` rows. Both curves must share the time grid.
void write_curve_table(std::ostream& os, const EntropyCurve& particle1, const EntropyCurve& particle2,
                       const TableHeader& header);

struct CurvePair {
  EntropyCurve particle1;
  EntropyCurve particle2;
  TableHeader header;
};

/// Parses a table written by write_curve_table. Throws ConfigError on malformed input.
CurvePair read_curve_table(std::istream& is);

/// `count` uniform samples on [0, t_max] (count >= 2).
std::vector<double> uniform_grid(double t_max, std::size_t count);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace toda

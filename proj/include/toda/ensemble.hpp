#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "toda/curve.hpp"
#include "toda/dynamics.hpp"
#include "toda/quantum.hpp"

namespace toda {

/// Per-coordinate variances of the initial Gaussian ensemble.
struct EnsembleWidths {
  double q1, q2, p1, p2;
};

/// Widths matching the initial wavepacket: position variance s_i and
/// momentum variance hbar^2 / (4 s_i). Unit convention gives hbar / 2 everywhere.
EnsembleWidths ensemble_widths(double hbar, const PacketVariances& packets);

struct Ensemble {
  std::vector<PhaseState> points;
  std::vector<double> initial_energy;  // per point, recorded at sampling time
  PhaseState center;
  double hbar = 0.0;
  std::uint64_t seed = 0;
  double t = 0.0;

  std::size_t size() const noexcept { return points.size(); }
};

/// M independent Gaussian points about `center`. Point i consumes exactly four
/// counter-based uniforms derived from (seed, i), so the sample depends only
/// on (M, seed) and not on evaluation order.
Ensemble sample_initial_ensemble(const PhaseState& center, double hbar, std::size_t M, std::uint64_t seed,
                                 const ModelParams& params, const EnsembleWidths& widths);

/// Unit-width overload: variance hbar / 2 in all four coordinates.
Ensemble sample_initial_ensemble(const PhaseState& center, double hbar, std::size_t M, std::uint64_t seed,
                                 const ModelParams& params);

struct EvolveOptions {
  double dt = 1e-3;
  double drift_tolerance = 1e-8;
  // Worker threads over disjoint point ranges; results do not depend on it.
  std::size_t threads = 1;
};

/// Advances every point from ens.t to t_target with RK4. Throws
/// IntegrationError naming the first offending point when the relative energy
/// drift exceeds the tolerance. Returns the largest drift seen.
double evolve_ensemble(Ensemble& ens, double t_target, const ModelParams& params, const EvolveOptions& options = {});

struct Point2 {
  double x;
  double y;
};

/// (q1, p1) for particle 1, (q2, p2) for particle 2, order preserved.
std::vector<Point2> project(const Ensemble& ens, int particle);
std::vector<Point2> project(std::span<const PhaseState> points, int particle);

/// Square cells of side sqrt(delta) anchored at `origin`. Cells are half-open:
/// a point on an edge belongs to the cell of larger index.
struct CellPartition {
  double delta = 0.02;
  Point2 origin{0.0, 0.0};

  void validate() const;
};

/// Shannon entropy -sum (w_i / M) ln(w_i / M) of the cell occupation counts.
/// Throws DataError for an empty or non-finite input.
double cell_entropy(std::span<const Point2> points, const CellPartition& partition);

struct ClassicalRun {
  ModelParams params;
  PhaseState center;
  double hbar = 0.02;   // ensemble width parameter
  double delta = 0.02;  // cell area
  std::size_t M = 100000;
  std::uint64_t seed = 1;
  PacketWidth width = PacketWidth::unit;
  EvolveOptions evolve;
  std::string preset;
};

struct ClassicalCurves {
  EntropyCurve particle1;
  EntropyCurve particle2;
  double max_relative_drift = 0.0;
};

/// Samples, evolves and bins the ensemble at every grid time for both particles.
ClassicalCurves classical_entropy_curve(const ClassicalRun& run, std::span<const double> times);

}  // namespace toda

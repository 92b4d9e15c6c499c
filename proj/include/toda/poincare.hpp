#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "toda/dynamics.hpp"

namespace toda {

enum class Coord { q1, q2, p1, p2 };

double coordinate(const PhaseState& s, Coord c) noexcept;
void set_coordinate(PhaseState& s, Coord c, double value) noexcept;
Coord conjugate(Coord c) noexcept;
std::string to_string(Coord c);
Coord parse_coord(const std::string& name);

/// Surface of section: the pinned position crosses `value` while its conjugate
/// momentum has sign `direction`; (x_axis, y_axis) are recorded.
///
/// The default pins q2 = 0 with p2 > 0 and plots (q1, p1).
struct SectionSpec {
  Coord pinned = Coord::q2;
  double value = 0.0;
  int direction = +1;
  Coord x_axis = Coord::q1;
  Coord y_axis = Coord::p1;

  /// The pinned coordinate must be a position, direction must be +-1, and the
  /// plotted pair must be the remaining conjugate pair.
  void validate() const;
};

struct SectionPoint {
  std::size_t orbit = 0;
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

struct SectionOptions {
  double dt = 1e-3;
  // Integration time allowed per orbit; 0 means 10 time units per requested crossing.
  double max_time = 0.0;
  // Allowed |E(initial) - params.energy| / params.energy.
  double energy_tolerance = 1e-6;
  bool newton_refine = true;
};

struct SectionResult {
  std::vector<SectionPoint> points;
  std::vector<std::size_t> crossings_per_orbit;
  // Orbits that ran out of time before collecting n_crossings.
  std::size_t incomplete_orbits = 0;
};

/// Records up to n_crossings section crossings per initial state. Crossings
/// are located by linear interpolation between steps and, optionally, one
/// Newton correction of the crossing time. Throws ConfigError when an initial
/// state is off the energy shell.
SectionResult poincare_section(std::span<const PhaseState> initial_states, const SectionSpec& spec,
                               const ModelParams& params, std::size_t n_crossings,
                               const SectionOptions& options = {});

/// Builds a state on the section at plotted coordinates (x, y) with the
/// conjugate momentum of the pinned coordinate fixed by the shell energy and
/// the crossing direction. Empty when (x, y) is energetically forbidden.
std::optional<PhaseState> state_on_section(const SectionSpec& spec, double x, double y,
                                           const ModelParams& params);

/// Square of the pinned coordinate's conjugate momentum implied by the shell
/// energy at plotted point (x, y). Negative when (x, y) is forbidden.
double eliminated_momentum_squared(const SectionSpec& spec, double x, double y,
                                   const ModelParams& params);

struct SectionBounds {
  double x_min, x_max, y_min, y_max;
};

/// Bounding box of the energetically allowed region in the plotted plane.
SectionBounds section_bounds(const SectionSpec& spec, const ModelParams& params);

/// `count` seed states spread along the plotted x axis at y = 0 inside the allowed region.
std::vector<PhaseState> section_seeds(const SectionSpec& spec, const ModelParams& params,
                                      std::size_t count);

/// Number of distinct cells of a grid x grid partition of `bounds` hit by the points.
std::size_t occupied_cells(std::span<const SectionPoint> points, const SectionBounds& bounds,
                           std::size_t grid);

/// Largest nearest-neighbour distance within the point set.
double max_nearest_neighbor_gap(std::span<const SectionPoint> points);

/// Median over points of lambda_min / lambda_max of the covariance of each point
/// and its k nearest neighbours. Near 0 for points on a smooth curve, order 1
/// for area-filling scatter. Degenerate neighbourhoods count as 0. Throws
/// DataError unless k >= 2 and there are more than k points.
double local_flatness(std::span<const SectionPoint> points, std::size_t k = 8);

/// Writes the `orbit_index t_crossing x y` table with `#` headers.
void write_section_table(std::ostream& os, const SectionResult& result, const SectionSpec& spec,
                         const ModelParams& params, const std::string& label);

}  // namespace toda

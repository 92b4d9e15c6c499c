#include "toda/poincare.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <utility>
#include <vector>

#include "toda/version.hpp"

namespace toda {

double coordinate(const PhaseState& s, Coord c) noexcept {
  switch (c) {
    case Coord::q1: return s.q1;
    case Coord::q2: return s.q2;
    case Coord::p1: return s.p1;
    case Coord::p2: return s.p2;
  }
  return 0.0;
}

void set_coordinate(PhaseState& s, Coord c, double value) noexcept {
  switch (c) {
    case Coord::q1: s.q1 = value; break;
    case Coord::q2: s.q2 = value; break;
    case Coord::p1: s.p1 = value; break;
    case Coord::p2: s.p2 = value; break;
  }
}

Coord conjugate(Coord c) noexcept {
  switch (c) {
    case Coord::q1: return Coord::p1;
    case Coord::q2: return Coord::p2;
    case Coord::p1: return Coord::q1;
    case Coord::p2: return Coord::q2;
  }
  return c;
}

std::string to_string(Coord c) {
  switch (c) {
    case Coord::q1: return "q1";
    case Coord::q2: return "q2";
    case Coord::p1: return "p1";
    case Coord::p2: return "p2";
  }
  return "?";
}

Coord parse_coord(const std::string& name) {
  if (name == "q1") return Coord::q1;
  if (name == "q2") return Coord::q2;
  if (name == "p1") return Coord::p1;
  if (name == "p2") return Coord::p2;
  throw ConfigError("unknown phase-space coordinate '" + name + "'");
}

namespace {

bool is_position(Coord c) { return c == Coord::q1 || c == Coord::q2; }

Coord other_position(Coord pinned) { return pinned == Coord::q1 ? Coord::q2 : Coord::q1; }

double mass_of(Coord momentum, const ModelParams& params) {
  return momentum == Coord::p1 ? params.m1 : params.m2;
}

// Potential along the free position axis with the pinned position held at spec.value.
double line_potential(const SectionSpec& spec, double free_position) {
  return spec.pinned == Coord::q2 ? potential_energy(free_position, spec.value)
                                  : potential_energy(spec.value, free_position);
}

// Minimiser of the (convex) line potential by golden-section search.
double line_minimum(const SectionSpec& spec) {
  double lo = -50.0, hi = 50.0;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    const double a = hi - g * (hi - lo);
    const double b = lo + g * (hi - lo);
    if (line_potential(spec, a) < line_potential(spec, b)) {
      hi = b;
    } else {
      lo = a;
    }
  }
  return 0.5 * (lo + hi);
}

// Position where the line potential reaches `level`, searching from `inside` towards `outside`.
double line_turning_point(const SectionSpec& spec, double level, double inside, double outside) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (inside + outside);
    if (line_potential(spec, mid) <= level) {
      inside = mid;
    } else {
      outside = mid;
    }
  }
  return 0.5 * (inside + outside);
}

}  // namespace

void SectionSpec::validate() const {
  if (!is_position(pinned)) throw ConfigError("section must pin a position coordinate (q1 or q2)");
  if (direction != 1 && direction != -1) throw ConfigError("section direction must be +1 or -1");
  if (!std::isfinite(value)) throw ConfigError("section value must be finite");
  const Coord free_q = other_position(pinned);
  const Coord free_p = conjugate(free_q);
  const bool pair_ok = (x_axis == free_q && y_axis == free_p) || (x_axis == free_p && y_axis == free_q);
  if (!pair_ok) {
    throw ConfigError("plotted pair must be (" + to_string(free_q) + ", " + to_string(free_p) +
                      ") for a section pinning " + to_string(pinned));
  }
}

double eliminated_momentum_squared(const SectionSpec& spec, double x, double y,
                                   const ModelParams& params) {
  PhaseState s;
  set_coordinate(s, spec.pinned, spec.value);
  set_coordinate(s, spec.x_axis, x);
  set_coordinate(s, spec.y_axis, y);
  const Coord free_p = conjugate(other_position(spec.pinned));
  const double free_kinetic = 0.5 * coordinate(s, free_p) * coordinate(s, free_p) / mass_of(free_p, params);
  const double remaining = params.energy - free_kinetic - potential_energy(s.q1, s.q2);
  return 2.0 * mass_of(conjugate(spec.pinned), params) * remaining;
}

std::optional<PhaseState> state_on_section(const SectionSpec& spec, double x, double y,
                                           const ModelParams& params) {
  spec.validate();
  const double p_sq = eliminated_momentum_squared(spec, x, y, params);
  if (!(p_sq >= 0.0)) return std::nullopt;
  PhaseState s;
  set_coordinate(s, spec.pinned, spec.value);
  set_coordinate(s, spec.x_axis, x);
  set_coordinate(s, spec.y_axis, y);
  set_coordinate(s, conjugate(spec.pinned), spec.direction * std::sqrt(p_sq));
  return s;
}

SectionBounds section_bounds(const SectionSpec& spec, const ModelParams& params) {
  spec.validate();
  const double q_min_v = line_minimum(spec);
  const double v_min = line_potential(spec, q_min_v);
  if (v_min > params.energy) throw ConfigError("section lies outside the energy shell");
  const double q_lo = line_turning_point(spec, params.energy, q_min_v, q_min_v - 60.0);
  const double q_hi = line_turning_point(spec, params.energy, q_min_v, q_min_v + 60.0);
  const Coord free_p = conjugate(other_position(spec.pinned));
  const double p_max = std::sqrt(2.0 * mass_of(free_p, params) * (params.energy - v_min));
  if (is_position(spec.x_axis)) return {q_lo, q_hi, -p_max, p_max};
  return {-p_max, p_max, q_lo, q_hi};
}

std::vector<PhaseState> section_seeds(const SectionSpec& spec, const ModelParams& params,
                                      std::size_t count) {
  const SectionBounds b = section_bounds(spec, params);
  const bool x_is_q = is_position(spec.x_axis);
  const double lo = x_is_q ? b.x_min : b.y_min;
  const double hi = x_is_q ? b.x_max : b.y_max;
  std::vector<PhaseState> seeds;
  seeds.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double q = lo + (hi - lo) * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
    const auto s = x_is_q ? state_on_section(spec, q, 0.0, params) : state_on_section(spec, 0.0, q, params);
    if (s) seeds.push_back(*s);
  }
  return seeds;
}

SectionResult poincare_section(std::span<const PhaseState> initial_states, const SectionSpec& spec,
                               const ModelParams& params, std::size_t n_crossings,
                               const SectionOptions& options) {
  spec.validate();
  params.validate();
  if (!(options.dt > 0.0)) throw ConfigError("poincare_section: dt must be positive");

  const double inv_m1 = 1.0 / params.m1;
  const double inv_m2 = 1.0 / params.m2;
  const double conj_mass = mass_of(conjugate(spec.pinned), params);
  const double max_time = options.max_time > 0.0 ? options.max_time : 10.0 * static_cast<double>(n_crossings);
  const auto max_steps = static_cast<std::size_t>(std::ceil(max_time / options.dt));

  SectionResult result;
  result.crossings_per_orbit.assign(initial_states.size(), 0);

  for (std::size_t orbit = 0; orbit < initial_states.size(); ++orbit) {
    const PhaseState& s0 = initial_states[orbit];
    const double e0 = total_energy(s0, params);
    if (relative_drift(e0, params.energy) > options.energy_tolerance) {
      std::ostringstream os;
      os << "initial state " << orbit << " has energy " << e0 << ", off the E=" << params.energy << " shell";
      throw ConfigError(os.str());
    }

    std::size_t found = 0;
    PhaseState prev = s0;
    double g_prev = coordinate(prev, spec.pinned) - spec.value;
    for (std::size_t k = 1; k <= max_steps && found < n_crossings; ++k) {
      const PhaseState next = detail::rk4(prev, options.dt, inv_m1, inv_m2);
      if (!next.is_finite()) throw OverflowError("poincare_section: trajectory overflow");
      const double g_next = coordinate(next, spec.pinned) - spec.value;
      const bool crossed = spec.direction > 0 ? (g_prev < 0.0 && g_next >= 0.0)
                                              : (g_prev > 0.0 && g_next <= 0.0);
      if (crossed) {
        const double frac = g_prev / (g_prev - g_next);
        double tau = frac * options.dt;
        PhaseState at = prev + frac * (next - prev);
        if (options.newton_refine) {
          const PhaseState trial = detail::rk4(prev, tau, inv_m1, inv_m2);
          const double velocity = coordinate(trial, conjugate(spec.pinned)) / conj_mass;
          if (velocity != 0.0) {
            const double refined = tau - (coordinate(trial, spec.pinned) - spec.value) / velocity;
            if (refined >= 0.0 && refined <= options.dt) {
              tau = refined;
              at = detail::rk4(prev, tau, inv_m1, inv_m2);
            } else {
              at = trial;
            }
          }
        }
        const double t = static_cast<double>(k - 1) * options.dt + tau;
        result.points.push_back({orbit, t, coordinate(at, spec.x_axis), coordinate(at, spec.y_axis)});
        ++found;
      }
      prev = next;
      g_prev = g_next;
    }
    result.crossings_per_orbit[orbit] = found;
    if (found < n_crossings) ++result.incomplete_orbits;
  }
  return result;
}

std::size_t occupied_cells(std::span<const SectionPoint> points, const SectionBounds& bounds,
                           std::size_t grid) {
  std::vector<bool> hit(grid * grid, false);
  auto bin = [grid](double v, double lo, double hi) {
    const double f = (v - lo) / (hi - lo) * static_cast<double>(grid);
    const auto i = static_cast<long long>(std::floor(f));
    return static_cast<std::size_t>(std::clamp<long long>(i, 0, static_cast<long long>(grid) - 1));
  };
  for (const SectionPoint& p : points) {
    hit[bin(p.x, bounds.x_min, bounds.x_max) * grid + bin(p.y, bounds.y_min, bounds.y_max)] = true;
  }
  return static_cast<std::size_t>(std::count(hit.begin(), hit.end(), true));
}

double max_nearest_neighbor_gap(std::span<const SectionPoint> points) {
  if (points.size() < 2) return 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (i == j) continue;
      best = std::min(best, std::hypot(points[i].x - points[j].x, points[i].y - points[j].y));
    }
    worst = std::max(worst, best);
  }
  return worst;
}

double local_flatness(std::span<const SectionPoint> points, std::size_t k) {
  if (k < 2 || points.size() <= k) throw DataError("local_flatness needs k >= 2 and more than k points");
  std::vector<double> ratios;
  ratios.reserve(points.size());
  std::vector<std::pair<double, std::size_t>> near(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = 0; j < points.size(); ++j) {
      near[j] = {std::hypot(points[i].x - points[j].x, points[i].y - points[j].y), j};
    }
    // The point itself sorts first at distance 0.
    std::partial_sort(near.begin(), near.begin() + static_cast<std::ptrdiff_t>(k + 1), near.end());
    double mx = 0.0, my = 0.0;
    for (std::size_t a = 0; a <= k; ++a) {
      mx += points[near[a].second].x;
      my += points[near[a].second].y;
    }
    mx /= static_cast<double>(k + 1);
    my /= static_cast<double>(k + 1);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t a = 0; a <= k; ++a) {
      const double dx = points[near[a].second].x - mx;
      const double dy = points[near[a].second].y - my;
      sxx += dx * dx;
      syy += dy * dy;
      sxy += dx * dy;
    }
    const double half_trace = 0.5 * (sxx + syy);
    const double disc = std::sqrt(std::max(0.0, half_trace * half_trace - (sxx * syy - sxy * sxy)));
    const double hi = half_trace + disc;
    ratios.push_back(hi > 0.0 ? std::max(0.0, half_trace - disc) / hi : 0.0);
  }
  const auto mid = ratios.begin() + static_cast<std::ptrdiff_t>(ratios.size() / 2);
  std::nth_element(ratios.begin(), mid, ratios.end());
  return *mid;
}

void write_section_table(std::ostream& os, const SectionResult& result, const SectionSpec& spec,
                         const ModelParams& params, const std::string& label) {
  const auto old_precision = os.precision(17);
  os << "# poincare section " << label << "\n"
     << "# code_version = " << kCodeVersion << "\n"
     << "# m1 = " << params.m1 << "\n"
     << "# m2 = " << params.m2 << "\n"
     << "# energy = " << params.energy << "\n"
     << "# pinned = " << to_string(spec.pinned) << "\n"
     << "# value = " << spec.value << "\n"
     << "# direction = " << spec.direction << "\n"
     << "# x = " << to_string(spec.x_axis) << "\n"
     << "# y = " << to_string(spec.y_axis) << "\n"
     << "# incomplete_orbits = " << result.incomplete_orbits << "\n"
     << "# orbit_index t_crossing x y\n";
  for (const SectionPoint& p : result.points) {
    os << p.orbit << ' ' << p.t << ' ' << p.x << ' ' << p.y << '\n';
  }
  os.precision(old_precision);
}

}  // namespace toda

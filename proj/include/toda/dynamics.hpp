#pragma once

// Classical two-particle Toda model:
//
//   H = p1^2/(2 m1) + p2^2/(2 m2) + exp(-q1) + exp(-(q2 - q1)) + exp(q2) - 3
//
// The potential is convex with its global minimum V = 0 at the origin.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "toda/error.hpp"

namespace toda {

struct ModelParams {
  double m1 = 1.0;
  double m2 = 1.0;
  double energy = 7.0;  // nominal shell energy E

  /// Throws ConfigError unless both masses and the energy are positive and finite.
  void validate() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Equal masses: completely integrable at every energy.
ModelParams regular_params(double energy = 7.0);
/// m2/m1 = 0.54: predominantly chaotic at E = 7.
ModelParams chaotic_params(double energy = 7.0, double m2 = 0.54);

struct PhaseState {
  double q1 = 0.0;
  double q2 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;

  bool is_finite() const noexcept {
    return std::isfinite(q1) && std::isfinite(q2) && std::isfinite(p1) && std::isfinite(p2);
  }

  friend bool operator==(const PhaseState&, const PhaseState&) = default;

  friend PhaseState operator+(const PhaseState& a, const PhaseState& b) noexcept {
    return {a.q1 + b.q1, a.q2 + b.q2, a.p1 + b.p1, a.p2 + b.p2};
  }
  friend PhaseState operator-(const PhaseState& a, const PhaseState& b) noexcept {
    return {a.q1 - b.q1, a.q2 - b.q2, a.p1 - b.p1, a.p2 - b.p2};
  }
  friend PhaseState operator*(double s, const PhaseState& a) noexcept {
    return {s * a.q1, s * a.q2, s * a.p1, s * a.p2};
  }
};

/// Coordinate sup-norm |a - b|_inf.
inline double sup_distance(const PhaseState& a, const PhaseState& b) noexcept {
  return std::max({std::abs(a.q1 - b.q1), std::abs(a.q2 - b.q2), std::abs(a.p1 - b.p1),
                   std::abs(a.p2 - b.p2)});
}

/// Same positions, reversed momenta.
inline PhaseState time_reversed(const PhaseState& s) noexcept { return {s.q1, s.q2, -s.p1, -s.p2}; }

/// q = 0, p1 = p2 = sqrt(E).
PhaseState regular_center(const ModelParams& params);
/// q = 0, p1 = sqrt(E), p2 = -sqrt(m2 E); sits in the chaotic sea for the chaotic preset.
PhaseState chaotic_center(const ModelParams& params);

/// V(q1, q2). Throws OverflowError when an exponential leaves the double range.
double potential_energy(double q1, double q2);

double kinetic_energy(const PhaseState& state, const ModelParams& params) noexcept;

/// Kinetic plus potential energy. Throws OverflowError as potential_energy does.
double total_energy(const PhaseState& state, const ModelParams& params);

namespace detail {

// Unchecked Hamilton equations for the integrator hot loop. The tangent vector
// is returned in PhaseState layout: (dq1/dt, dq2/dt, dp1/dt, dp2/dt).
inline PhaseState flow(const PhaseState& s, double inv_m1, double inv_m2) noexcept {
  const double left = std::exp(-s.q1);
  const double right = std::exp(s.q2);
  const double middle = 1.0 / (left * right);  // e^(q1 - q2)
  return {s.p1 * inv_m1, s.p2 * inv_m2, left - middle, middle - right};
}

inline PhaseState rk4(const PhaseState& s, double dt, double inv_m1, double inv_m2) noexcept {
  const double half = 0.5 * dt;
  const PhaseState k1 = flow(s, inv_m1, inv_m2);
  const PhaseState k2 = flow(s + half * k1, inv_m1, inv_m2);
  const PhaseState k3 = flow(s + half * k2, inv_m1, inv_m2);
  const PhaseState k4 = flow(s + dt * k3, inv_m1, inv_m2);
  return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

/// Hamilton's equations. Throws OverflowError on a non-finite component.
PhaseState hamiltonian_flow(const PhaseState& state, const ModelParams& params);

/// One classical fourth-order Runge-Kutta step. Throws OverflowError when the
/// result is not finite.
PhaseState rk4_step(const PhaseState& state, double dt, const ModelParams& params);

struct TrajectorySample {
  double t = 0.0;
  PhaseState state;
};

struct IntegrationOptions {
  double dt = 1e-3;
  std::size_t sample_stride = 1;
  // Relative energy drift |E(t) - E(0)| / |E(0)| allowed before IntegrationError.
  double drift_tolerance = 1e-8;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  double max_relative_drift = 0.0;
};

/// Integrates from t = 0 to t_end. Steps have size dt, except the last one,
/// which is shortened to land exactly on t_end. Every sample_stride-th state
/// is kept, plus the final state.
Trajectory integrate_trajectory(const PhaseState& initial, double t_end, const ModelParams& params,
                                const IntegrationOptions& options = {});

/// Relative drift, falling back to the absolute difference for |reference| < 1e-12.
inline double relative_drift(double energy, double reference) noexcept {
  const double scale = std::abs(reference) < 1e-12 ? 1.0 : std::abs(reference);
  return std::abs(energy - reference) / scale;
}

}  // namespace toda

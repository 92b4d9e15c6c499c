#include "toda/dynamics.hpp"

#include <sstream>

#include "toda/stepping.hpp"

namespace toda {

void ModelParams::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(m1) || !positive(m2)) {
    std::ostringstream os;
    os << "masses must be positive and finite (m1=" << m1 << ", m2=" << m2 << ")";
    throw ConfigError(os.str());
  }
  if (!positive(energy)) {
    std::ostringstream os;
    os << "energy must be positive and finite (E=" << energy << ")";
    throw ConfigError(os.str());
  }
}

ModelParams regular_params(double energy) { return {1.0, 1.0, energy}; }

ModelParams chaotic_params(double energy, double m2) { return {1.0, m2, energy}; }

PhaseState regular_center(const ModelParams& params) {
  const double p = std::sqrt(params.energy);
  return {0.0, 0.0, p, p};
}

PhaseState chaotic_center(const ModelParams& params) {
  return {0.0, 0.0, std::sqrt(params.energy), -std::sqrt(params.m2 * params.energy)};
}

double potential_energy(double q1, double q2) {
  const double v = std::exp(-q1) + std::exp(q1 - q2) + std::exp(q2) - 3.0;
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << "potential overflow at (q1, q2) = (" << q1 << ", " << q2 << ")";
    throw OverflowError(os.str());
  }
  return v;
}

double kinetic_energy(const PhaseState& s, const ModelParams& params) noexcept {
  return 0.5 * s.p1 * s.p1 / params.m1 + 0.5 * s.p2 * s.p2 / params.m2;
}

double total_energy(const PhaseState& s, const ModelParams& params) {
  const double e = kinetic_energy(s, params) + potential_energy(s.q1, s.q2);
  if (!std::isfinite(e)) throw OverflowError("total energy is not finite");
  return e;
}

PhaseState hamiltonian_flow(const PhaseState& s, const ModelParams& params) {
  const PhaseState f = detail::flow(s, 1.0 / params.m1, 1.0 / params.m2);
  if (!f.is_finite()) {
    std::ostringstream os;
    os << "flow overflow at (q1, q2) = (" << s.q1 << ", " << s.q2 << ")";
    throw OverflowError(os.str());
  }
  return f;
}

PhaseState rk4_step(const PhaseState& s, double dt, const ModelParams& params) {
  if (!std::isfinite(dt)) throw ConfigError("rk4_step: dt must be finite");
  const PhaseState next = detail::rk4(s, dt, 1.0 / params.m1, 1.0 / params.m2);
  if (!next.is_finite()) throw OverflowError("rk4_step produced a non-finite state");
  return next;
}

Trajectory integrate_trajectory(const PhaseState& initial, double t_end, const ModelParams& params,
                                const IntegrationOptions& options) {
  params.validate();
  if (!(t_end > 0.0) || !(options.dt > 0.0)) {
    throw ConfigError("integrate_trajectory: t_end and dt must be positive");
  }
  if (!initial.is_finite()) throw ConfigError("integrate_trajectory: initial state not finite");
  const std::size_t stride = std::max<std::size_t>(options.sample_stride, 1);

  const StepPlan plan = plan_steps(t_end, options.dt);
  const double inv_m1 = 1.0 / params.m1;
  const double inv_m2 = 1.0 / params.m2;
  const double e0 = total_energy(initial, params);

  Trajectory out;
  out.samples.reserve(plan.count / stride + 2);
  out.samples.push_back({0.0, initial});

  PhaseState s = initial;
  for (std::size_t k = 1; k <= plan.count; ++k) {
    s = detail::rk4(s, plan.step_size(k), inv_m1, inv_m2);
    const double t = plan.time_after(k, 0.0);
    if (!s.is_finite()) {
      std::ostringstream os;
      os << "trajectory overflow at t=" << t;
      throw OverflowError(os.str());
    }
    const double drift = relative_drift(total_energy(s, params), e0);
    out.max_relative_drift = std::max(out.max_relative_drift, drift);
    if (drift > options.drift_tolerance) {
      std::ostringstream os;
      os << "relative energy drift " << drift << " exceeds " << options.drift_tolerance
         << " at t=" << t;
      throw IntegrationError(os.str(), t, 0);
    }
    if (k % stride == 0 || k == plan.count) out.samples.push_back({t, s});
  }
  return out;
}

}  // namespace toda

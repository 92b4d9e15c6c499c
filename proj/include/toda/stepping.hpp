#pragma once

#include <cmath>
#include <cstddef>

namespace toda {

/// Fixed-step schedule covering an interval of length `span`.
///
/// When span is an integer multiple of dt (to 1e-9 relative), every step has
/// size exactly dt, so stages on an aligned grid compose bitwise. Otherwise
/// the last step is shortened to land on the end point.
struct StepPlan {
  std::size_t count = 0;
  double dt = 0.0;
  double last = 0.0;
  double span = 0.0;

  double step_size(std::size_t k) const noexcept { return k == count ? last : dt; }

  /// Time after k steps when starting at t0.
  double time_after(std::size_t k, double t0) const noexcept {
    return k == count ? t0 + span : t0 + static_cast<double>(k) * dt;
  }
};

inline StepPlan plan_steps(double span, double dt) noexcept {
  StepPlan plan;
  plan.dt = dt;
  plan.span = span;
  if (!(span > 0.0)) return plan;
  const double ratio = span / dt;
  const double nearest = std::round(ratio);
  if (nearest >= 1.0 && std::abs(ratio - nearest) <= 1e-9 * nearest) {
    plan.count = static_cast<std::size_t>(nearest);
    plan.last = dt;
  } else {
    plan.count = static_cast<std::size_t>(std::ceil(ratio));
    plan.last = span - static_cast<double>(plan.count - 1) * dt;
  }
  return plan;
}

}  // namespace toda

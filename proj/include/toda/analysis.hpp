#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "toda/curve.hpp"

namespace toda {

enum class GrowthModel {
  logarithmic,  // S = a + b ln t
  linear,       // S = a + b t
};

std::string to_string(GrowthModel model);
GrowthModel parse_growth_model(const std::string& name);

struct TimeWindow {
  double t_min = 0.0;
  double t_max = 0.0;
};

struct GrowthFit {
  GrowthModel model = GrowthModel::linear;
  TimeWindow window;
  double a = 0.0;
  double b = 0.0;
  double r_squared = 0.0;
  std::size_t samples = 0;

  double predict(double t) const;
};

/// Least-squares fit of the growth law on the samples with t in the window.
/// Throws DataError with fewer than 5 samples, or for a log model whose
/// window reaches t <= 0.
GrowthFit fit_growth(const EntropyCurve& curve, GrowthModel model, TimeWindow window);

struct SaturationValue {
  double mean = 0.0;
  double standard_error = 0.0;
  TimeWindow tail;
};

/// Mean and standard error over the trailing tail_fraction of the samples.
SaturationValue saturation_value(const EntropyCurve& curve, double tail_fraction = 0.2);

/// Time at which the growth law reaches s_bar. Throws EstimationError when
/// the law cannot reach it (b <= 0, or s_bar <= a for the log model).
double saturation_time(const GrowthFit& growth, double s_bar);

/// As above, and additionally requires the result to lie within the curve's time span.
double saturation_time(const EntropyCurve& curve, const GrowthFit& growth, double s_bar);

enum class ScalingLaw {
  log_inverse,   // y = a + b ln(1/x)
  inverse_sqrt,  // y = a + b / sqrt(x)
};

std::string to_string(ScalingLaw law);

struct ScalingFit {
  ScalingLaw law = ScalingLaw::log_inverse;
  double a = 0.0;
  double b = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

/// Least squares of y against the transformed parameter. Throws DataError
/// with fewer than 3 points or non-positive x.
ScalingFit scaling_regression(std::span<const double> xs, std::span<const double> ys, ScalingLaw law);

/// max |S_a(t) - S_b(t)| over a's grid times inside the window, with b
/// interpolated linearly. Throws DataError when either curve misses part of the window.
double curve_distance(const EntropyCurve& a, const EntropyCurve& b, TimeWindow window);

/// Centred moving average over 2 * half_width + 1 samples (shrinking at the ends).
EntropyCurve moving_average(const EntropyCurve& curve, std::size_t half_width);

struct AnalysisWindows {
  // Pre-saturation fit window [t_min, fraction * t_d] per growth model.
  double log_t_min = 2.0;
  double log_fraction = 0.5;
  double linear_t_min = 1.0;
  double linear_fraction = 0.7;
  double tail_fraction = 0.2;
  std::size_t smoothing = 0;  // moving-average half width; 0 disables it

  TimeWindow fit_window(GrowthModel model, double t_d) const;
};

struct FamilyRow {
  double parameter = 0.0;  // delta or hbar
  SaturationValue saturation;
  double t_d = 0.0;
  GrowthFit growth;          // the curve's own fit on its pre-saturation window
  bool growth_valid = false;
  // t_d falls before the tail window; otherwise s_bar is still a growth value.
  bool saturated = false;
};

/// Growth, saturation and scaling analysis for one preset across the delta
/// (or hbar) schedule. The growth law is fitted on the limit curve (smallest
/// parameter) on a self-consistent pre-saturation window; t_d for every
/// parameter is where that law reaches the parameter's saturation value.
struct FamilyAnalysis {
  std::string label;
  GrowthModel model = GrowthModel::linear;
  ScalingLaw time_law = ScalingLaw::log_inverse;
  GrowthFit limit_fit;
  std::vector<FamilyRow> rows;  // ascending parameter
  ScalingFit saturation_scaling;
  ScalingFit time_scaling;

  std::size_t unsaturated() const;
};

FamilyAnalysis analyze_family(std::span<const EntropyCurve> curves, GrowthModel model, ScalingLaw time_law,
                              const AnalysisWindows& windows, const std::string& label);

/// Fits `model` on `curve` with the window iterated to self-consistency with
/// t_d = saturation_time(fit, s_bar).
GrowthFit self_consistent_fit(const EntropyCurve& curve, GrowthModel model, double s_bar,
                              const AnalysisWindows& windows);

/// Table of (preset, parameter, s_bar, s_bar_err, t_d, growth slope, r^2),
/// a summary block and a `key=value` trailer.
void write_analysis_report(std::ostream& os, std::span<const FamilyAnalysis> families, const TableHeader& header);

}  // namespace toda

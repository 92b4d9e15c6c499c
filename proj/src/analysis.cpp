#include "toda/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "toda/error.hpp"

namespace toda {

std::string to_string(GrowthModel model) { return model == GrowthModel::logarithmic ? "log" : "linear"; }

GrowthModel parse_growth_model(const std::string& name) {
  if (name == "log" || name == "logarithmic") return GrowthModel::logarithmic;
  if (name == "linear") return GrowthModel::linear;
  throw ConfigError("unknown growth model '" + name + "'");
}

std::string to_string(ScalingLaw law) { return law == ScalingLaw::log_inverse ? "ln(1/x)" : "1/sqrt(x)"; }

double GrowthFit::predict(double t) const { return a + b * (model == GrowthModel::logarithmic ? std::log(t) : t); }

namespace {

struct LineFit {
  double a, b, r_squared;
};

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DataError("least squares: abscissae are all equal");
  const double b = sxy / sxx;
  const double a = my - b * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (a + b * x[i]);
    ss_res += r * r;
  }
  const double r2 = syy > 0.0 ? 1.0 - ss_res / syy : (ss_res == 0.0 ? 1.0 : 0.0);
  return {a, b, std::clamp(r2, 0.0, 1.0)};
}

}  // namespace

GrowthFit fit_growth(const EntropyCurve& curve, GrowthModel model, TimeWindow window) {
  if (!(window.t_max >= window.t_min)) throw DataError("fit_growth: empty window");
  if (model == GrowthModel::logarithmic && !(window.t_min > 0.0)) {
    throw DataError("fit_growth: log model needs a window with t > 0");
  }
  std::vector<double> x, y;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double t = curve.times[i];
    if (t < window.t_min || t > window.t_max) continue;
    x.push_back(model == GrowthModel::logarithmic ? std::log(t) : t);
    y.push_back(curve.values[i]);
  }
  if (x.size() < 5) {
    std::ostringstream os;
    os << "fit_growth: only " << x.size() << " samples in [" << window.t_min << ", " << window.t_max << "]";
    throw DataError(os.str());
  }
  const LineFit f = least_squares(x, y);
  return {model, window, f.a, f.b, f.r_squared, x.size()};
}

SaturationValue saturation_value(const EntropyCurve& curve, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 0.5)) throw DataError("saturation_value: tail fraction must be in (0, 0.5]");
  if (curve.size() == 0) throw DataError("saturation_value: empty curve");
  const auto n = curve.size();
  const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(n))));
  const std::size_t start = n - count;
  double mean = 0.0;
  for (std::size_t i = start; i < n; ++i) mean += curve.values[i];
  mean /= static_cast<double>(count);
  double var = 0.0;
  for (std::size_t i = start; i < n; ++i) var += (curve.values[i] - mean) * (curve.values[i] - mean);
  const double err = count > 1 ? std::sqrt(var / static_cast<double>(count - 1) / static_cast<double>(count)) : 0.0;
  return {mean, err, {curve.times[start], curve.times[n - 1]}};
}

double saturation_time(const GrowthFit& growth, double s_bar) {
  if (!(growth.b > 0.0)) {
    std::ostringstream os;
    os << "saturation_time: growth slope " << growth.b << " is not positive";
    throw EstimationError(os.str());
  }
  if (growth.model == GrowthModel::logarithmic) {
    if (!(s_bar > growth.a)) throw EstimationError("saturation_time: saturation value below the log-law intercept");
    return std::exp((s_bar - growth.a) / growth.b);
  }
  return (s_bar - growth.a) / growth.b;
}

double saturation_time(const EntropyCurve& curve, const GrowthFit& growth, double s_bar) {
  const double t_d = saturation_time(growth, s_bar);
  if (curve.size() == 0 || t_d < curve.times.front() || t_d > curve.times.back()) {
    std::ostringstream os;
    os << "saturation_time: t_d = " << t_d << " lies outside the curve's time span";
    throw EstimationError(os.str());
  }
  return t_d;
}

ScalingFit scaling_regression(std::span<const double> xs, std::span<const double> ys, ScalingLaw law) {
  if (xs.size() != ys.size()) throw DataError("scaling_regression: xs and ys differ in length");
  if (xs.size() < 3) throw DataError("scaling_regression: needs at least 3 points");
  std::vector<double> f(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0)) throw DataError("scaling_regression: parameters must be positive");
    f[i] = law == ScalingLaw::log_inverse ? std::log(1.0 / xs[i]) : 1.0 / std::sqrt(xs[i]);
  }
  const LineFit fit = least_squares(f, ys);
  return {law, fit.a, fit.b, fit.r_squared, xs.size()};
}

namespace {

double interpolate(const EntropyCurve& c, double t) {
  const auto it = std::lower_bound(c.times.begin(), c.times.end(), t);
  const auto j = static_cast<std::size_t>(it - c.times.begin());
  if (j < c.size() && c.times[j] == t) return c.values[j];
  const double t0 = c.times[j - 1], t1 = c.times[j];
  const double w = (t - t0) / (t1 - t0);
  return (1.0 - w) * c.values[j - 1] + w * c.values[j];
}

}  // namespace

double curve_distance(const EntropyCurve& a, const EntropyCurve& b, TimeWindow window) {
  auto covers = [&](const EntropyCurve& c) {
    return c.size() > 0 && c.times.front() <= window.t_min && c.times.back() >= window.t_max;
  };
  if (!(window.t_max >= window.t_min) || !covers(a) || !covers(b)) {
    std::ostringstream os;
    os << "curve_distance: curves do not cover [" << window.t_min << ", " << window.t_max << "]";
    throw DataError(os.str());
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a.times[i];
    if (t < window.t_min || t > window.t_max) continue;
    worst = std::max(worst, std::abs(a.values[i] - interpolate(b, t)));
  }
  return worst;
}

EntropyCurve moving_average(const EntropyCurve& curve, std::size_t half_width) {
  EntropyCurve out = curve;
  if (half_width == 0) return out;
  const std::size_t n = curve.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half_width ? i - half_width : 0;
    const std::size_t hi = std::min(n - 1, i + half_width);
    double sum = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) sum += curve.values[j];
    out.values[i] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

TimeWindow AnalysisWindows::fit_window(GrowthModel model, double t_d) const {
  if (model == GrowthModel::logarithmic) return {log_t_min, log_fraction * t_d};
  return {linear_t_min, linear_fraction * t_d};
}

GrowthFit self_consistent_fit(const EntropyCurve& curve, GrowthModel model, double s_bar,
                              const AnalysisWindows& windows) {
  // Start from the first time the curve reaches its saturation value.
  double t_d = curve.times.back();
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve.values[i] >= s_bar) {
      t_d = curve.times[i];
      break;
    }
  }
  auto samples_in = [&](TimeWindow w) {
    return std::count_if(curve.times.begin(), curve.times.end(), [&](double t) { return t >= w.t_min && t <= w.t_max; });
  };
  GrowthFit fit = fit_growth(curve, model, windows.fit_window(model, t_d));
  for (int iter = 0; iter < 50; ++iter) {
    const double next = std::min(saturation_time(fit, s_bar), curve.times.back());
    const TimeWindow w = windows.fit_window(model, next);
    if (samples_in(w) == static_cast<std::ptrdiff_t>(fit.samples)) break;  // same grid samples, same fit
    t_d = next;
    fit = fit_growth(curve, model, w);
  }
  return fit;
}

std::size_t FamilyAnalysis::unsaturated() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const FamilyRow& r) { return !r.saturated; }));
}

FamilyAnalysis analyze_family(std::span<const EntropyCurve> curves, GrowthModel model, ScalingLaw time_law,
                              const AnalysisWindows& windows, const std::string& label) {
  if (curves.empty()) throw DataError("analyze_family: no curves");
  std::vector<EntropyCurve> prepared;
  prepared.reserve(curves.size());
  for (const EntropyCurve& c : curves) prepared.push_back(moving_average(c, windows.smoothing));
  std::sort(prepared.begin(), prepared.end(),
            [](const EntropyCurve& x, const EntropyCurve& y) { return x.tag.parameter() < y.tag.parameter(); });

  FamilyAnalysis out;
  out.label = label;
  out.model = model;
  out.time_law = time_law;

  for (const EntropyCurve& c : prepared) {
    FamilyRow row;
    row.parameter = c.tag.parameter();
    row.saturation = saturation_value(c, windows.tail_fraction);
    out.rows.push_back(row);
  }

  const EntropyCurve& limit = prepared.front();
  out.limit_fit = self_consistent_fit(limit, model, out.rows.front().saturation.mean, windows);

  for (std::size_t i = 0; i < prepared.size(); ++i) {
    FamilyRow& row = out.rows[i];
    row.t_d = saturation_time(out.limit_fit, row.saturation.mean);
    row.saturated = row.t_d < row.saturation.tail.t_min;
    try {
      row.growth = self_consistent_fit(prepared[i], model, row.saturation.mean, windows);
      row.growth_valid = true;
    } catch (const Error&) {
      row.growth_valid = false;  // too few pre-saturation samples at this parameter
    }
  }

  if (out.rows.size() >= 3) {
    std::vector<double> xs, s_bars, t_ds;
    for (const FamilyRow& row : out.rows) {
      xs.push_back(row.parameter);
      s_bars.push_back(row.saturation.mean);
      t_ds.push_back(row.t_d);
    }
    out.saturation_scaling = scaling_regression(xs, s_bars, ScalingLaw::log_inverse);
    out.time_scaling = scaling_regression(xs, t_ds, time_law);
  }
  return out;
}

void write_analysis_report(std::ostream& os, std::span<const FamilyAnalysis> families, const TableHeader& header) {
  for (const auto& [key, value] : header) os << "# " << key << " = " << value << '\n';
  os << "# preset parameter s_bar s_bar_err t_d growth_slope r_squared\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const FamilyAnalysis& f : families) {
    for (const FamilyRow& row : f.rows) {
      os << f.label << ' ' << format_double(row.parameter) << ' ' << format_double(row.saturation.mean) << ' '
         << format_double(row.saturation.standard_error) << ' ' << format_double(row.t_d) << ' '
         << format_double(row.growth_valid ? row.growth.b : nan) << ' '
         << format_double(row.growth_valid ? row.growth.r_squared : nan) << '\n';
    }
  }
  os << "#\n# summary\n";
  for (const FamilyAnalysis& f : families) {
    os << "# " << f.label << ": limit-curve " << to_string(f.model) << " growth S = " << f.limit_fit.a << " + "
       << f.limit_fit.b << (f.model == GrowthModel::logarithmic ? " ln t" : " t") << " on [" << f.limit_fit.window.t_min
       << ", " << f.limit_fit.window.t_max << "], r^2 = " << f.limit_fit.r_squared << '\n';
    os << "# " << f.label << ": s_bar = a + C ln(1/x), C = " << f.saturation_scaling.b
       << ", r^2 = " << f.saturation_scaling.r_squared << '\n';
    os << "# " << f.label << ": t_d = a + b " << to_string(f.time_law) << ", b = " << f.time_scaling.b
       << ", r^2 = " << f.time_scaling.r_squared << '\n';
    for (const FamilyRow& row : f.rows) {
      if (!row.saturated) {
        os << "# " << f.label << ": " << format_double(row.parameter) << " not saturated before the tail window (t_d "
           << format_double(row.t_d) << " >= " << format_double(row.saturation.tail.t_min) << ")\n";
      }
    }
  }
  os << "#\n# key=value trailer\n";
  for (const FamilyAnalysis& f : families) {
    const std::string p = f.label + ".";
    os << p << "growth_model=" << to_string(f.model) << '\n'
       << p << "growth_intercept=" << format_double(f.limit_fit.a) << '\n'
       << p << "growth_slope=" << format_double(f.limit_fit.b) << '\n'
       << p << "growth_r2=" << format_double(f.limit_fit.r_squared) << '\n'
       << p << "growth_window_min=" << format_double(f.limit_fit.window.t_min) << '\n'
       << p << "growth_window_max=" << format_double(f.limit_fit.window.t_max) << '\n'
       << p << "saturation_C=" << format_double(f.saturation_scaling.b) << '\n'
       << p << "saturation_r2=" << format_double(f.saturation_scaling.r_squared) << '\n'
       << p << "t_d_slope=" << format_double(f.time_scaling.b) << '\n'
       << p << "t_d_r2=" << format_double(f.time_scaling.r_squared) << '\n'
       << p << "unsaturated=" << f.unsaturated() << '\n';
  }
}

}  // namespace toda

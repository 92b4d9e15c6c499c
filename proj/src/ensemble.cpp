#include "toda/ensemble.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <thread>
#include <utility>

#include "toda/error.hpp"
#include "toda/stepping.hpp"
#include "toda/version.hpp"

namespace toda {

namespace {

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// k-th output of the SplitMix64 stream keyed by `key`; random access by counter.
constexpr std::uint64_t stream_at(std::uint64_t key, std::uint64_t k) noexcept {
  return mix64(key + (k + 1) * kGoldenGamma);
}

// Four standard normals for point `index` from two Box-Muller pairs.
std::array<double, 4> gaussian_quad(std::uint64_t key, std::uint64_t index) {
  constexpr double kUnit = 0x1.0p-53;
  std::array<double, 4> z{};
  for (std::uint64_t pair = 0; pair < 2; ++pair) {
    const std::uint64_t a = stream_at(key, 4 * index + 2 * pair);
    const std::uint64_t b = stream_at(key, 4 * index + 2 * pair + 1);
    const double u1 = static_cast<double>((a >> 11) + 1) * kUnit;  // (0, 1]
    const double u2 = static_cast<double>(b >> 11) * kUnit;        // [0, 1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    z[2 * pair] = r * std::cos(phi);
    z[2 * pair + 1] = r * std::sin(phi);
  }
  return z;
}

// Runs body(slice, begin, end) over `threads` contiguous slices of [0, n).
template <typename Body>
void parallel_ranges(std::size_t n, std::size_t threads, Body&& body) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    body(std::size_t{0}, std::size_t{0}, n);
    return;
  }
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    const std::size_t begin = n * w / threads;
    const std::size_t end = n * (w + 1) / threads;
    workers.emplace_back([&body, w, begin, end] { body(w, begin, end); });
  }
}

}  // namespace

EnsembleWidths ensemble_widths(double hbar, const PacketVariances& packets) {
  return {packets.q1, packets.q2, hbar * hbar / (4.0 * packets.q1), hbar * hbar / (4.0 * packets.q2)};
}

Ensemble sample_initial_ensemble(const PhaseState& center, double hbar, std::size_t M, std::uint64_t seed,
                                 const ModelParams& params, const EnsembleWidths& widths) {
  if (M < 1) throw ConfigError("sample_initial_ensemble: M must be at least 1");
  if (!(hbar > 0.0)) throw ConfigError("sample_initial_ensemble: hbar must be positive");
  if (!(widths.q1 > 0.0 && widths.q2 > 0.0 && widths.p1 > 0.0 && widths.p2 > 0.0)) {
    throw ConfigError("sample_initial_ensemble: variances must be positive");
  }
  params.validate();

  Ensemble ens;
  ens.center = center;
  ens.hbar = hbar;
  ens.seed = seed;
  ens.points.resize(M);
  ens.initial_energy.resize(M);

  const std::uint64_t key = mix64(seed ^ (static_cast<std::uint64_t>(kSamplerVersion) << 56));
  const double s_q1 = std::sqrt(widths.q1), s_q2 = std::sqrt(widths.q2);
  const double s_p1 = std::sqrt(widths.p1), s_p2 = std::sqrt(widths.p2);
  for (std::size_t i = 0; i < M; ++i) {
    const auto z = gaussian_quad(key, i);
    const PhaseState s{center.q1 + s_q1 * z[0], center.q2 + s_q2 * z[1], center.p1 + s_p1 * z[2],
                       center.p2 + s_p2 * z[3]};
    ens.points[i] = s;
    ens.initial_energy[i] = total_energy(s, params);
  }
  return ens;
}

Ensemble sample_initial_ensemble(const PhaseState& center, double hbar, std::size_t M, std::uint64_t seed,
                                 const ModelParams& params) {
  return sample_initial_ensemble(center, hbar, M, seed, params, {hbar / 2.0, hbar / 2.0, hbar / 2.0, hbar / 2.0});
}

double evolve_ensemble(Ensemble& ens, double t_target, const ModelParams& params, const EvolveOptions& options) {
  if (!(t_target >= ens.t)) throw ConfigError("evolve_ensemble: target time precedes the ensemble time");
  if (!(options.dt > 0.0)) throw ConfigError("evolve_ensemble: dt must be positive");
  if (ens.initial_energy.size() != ens.points.size()) throw ConfigError("evolve_ensemble: energy record missing");
  if (t_target == ens.t) return 0.0;

  const StepPlan plan = plan_steps(t_target - ens.t, options.dt);
  const double inv_m1 = 1.0 / params.m1;
  const double inv_m2 = 1.0 / params.m2;
  const std::size_t n = ens.points.size();

  struct Failure {
    std::size_t index;
    double drift;
    bool overflow;
  };
  const std::size_t slices = std::clamp<std::size_t>(options.threads, 1, std::max<std::size_t>(n, 1));
  std::vector<std::optional<Failure>> failures(slices);
  std::vector<double> slice_drift(slices, 0.0);

  parallel_ranges(n, slices, [&](std::size_t slice, std::size_t begin, std::size_t end) {
    double worst = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      PhaseState s = ens.points[i];
      for (std::size_t k = 1; k <= plan.count; ++k) s = detail::rk4(s, plan.step_size(k), inv_m1, inv_m2);
      ens.points[i] = s;
      if (!s.is_finite()) {
        if (!failures[slice]) failures[slice] = Failure{i, 0.0, true};
        continue;
      }
      const double e = ens.initial_energy[i];
      const double v = std::exp(-s.q1) + std::exp(s.q1 - s.q2) + std::exp(s.q2) - 3.0;
      const double drift = relative_drift(kinetic_energy(s, params) + v, e);
      worst = std::max(worst, drift);
      if (!(drift <= options.drift_tolerance) && !failures[slice]) failures[slice] = Failure{i, drift, false};
    }
    slice_drift[slice] = worst;
  });

  ens.t = t_target;
  for (const auto& f : failures) {
    if (!f) continue;
    std::ostringstream os;
    if (f->overflow) {
      os << "ensemble point " << f->index << " overflowed before t=" << t_target;
      throw OverflowError(os.str());
    }
    os << "ensemble point " << f->index << " drifted by " << f->drift << " (relative) at t=" << t_target
       << ", tolerance " << options.drift_tolerance;
    throw IntegrationError(os.str(), t_target, f->index);
  }
  return *std::max_element(slice_drift.begin(), slice_drift.end());
}

std::vector<Point2> project(std::span<const PhaseState> points, int particle) {
  if (particle != 1 && particle != 2) throw ConfigError("project: particle must be 1 or 2");
  std::vector<Point2> out;
  out.reserve(points.size());
  for (const PhaseState& s : points) {
    out.push_back(particle == 1 ? Point2{s.q1, s.p1} : Point2{s.q2, s.p2});
  }
  return out;
}

std::vector<Point2> project(const Ensemble& ens, int particle) { return project(std::span(ens.points), particle); }

void CellPartition::validate() const {
  if (!(std::isfinite(delta) && delta > 0.0)) throw ConfigError("cell partition: delta must be positive");
  if (!std::isfinite(origin.x) || !std::isfinite(origin.y)) throw ConfigError("cell partition: origin not finite");
}

double cell_entropy(std::span<const Point2> points, const CellPartition& partition) {
  partition.validate();
  if (points.empty()) throw DataError("cell_entropy: no points");
  const double side = std::sqrt(partition.delta);
  constexpr double kIndexLimit = 0x1.0p62;

  std::vector<std::pair<std::int64_t, std::int64_t>> cells;
  cells.reserve(points.size());
  for (const Point2& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw DataError("cell_entropy: non-finite point");
    const double fx = std::floor((p.x - partition.origin.x) / side);
    const double fy = std::floor((p.y - partition.origin.y) / side);
    if (std::abs(fx) >= kIndexLimit || std::abs(fy) >= kIndexLimit) throw DataError("cell_entropy: cell index out of range");
    cells.emplace_back(static_cast<std::int64_t>(fx), static_cast<std::int64_t>(fy));
  }
  std::sort(cells.begin(), cells.end());

  // S = ln M - (1/M) sum w ln w
  const double m = static_cast<double>(points.size());
  double weighted = 0.0;
  for (std::size_t i = 0; i < cells.size();) {
    std::size_t j = i + 1;
    while (j < cells.size() && cells[j] == cells[i]) ++j;
    const double w = static_cast<double>(j - i);
    weighted += w * std::log(w);
    i = j;
  }
  return std::clamp(std::log(m) - weighted / m, 0.0, std::log(m));
}

ClassicalCurves classical_entropy_curve(const ClassicalRun& run, std::span<const double> times) {
  const CellPartition partition{run.delta, {0.0, 0.0}};
  partition.validate();
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0) || (i > 0 && !(times[i] > times[i - 1]))) {
      throw ConfigError("classical_entropy_curve: times must be non-negative and ascending");
    }
  }
  const PacketVariances packets = packet_variances(run.hbar, run.params, run.width);
  Ensemble ens = sample_initial_ensemble(run.center, run.hbar, run.M, run.seed, run.params,
                                         ensemble_widths(run.hbar, packets));

  CurveTag tag;
  tag.source = CurveSource::classical;
  tag.hbar = run.hbar;
  tag.delta = run.delta;
  tag.ensemble_size = run.M;
  tag.seed = run.seed;
  tag.preset = run.preset;

  ClassicalCurves out;
  out.particle1 = {std::vector<double>(times.begin(), times.end()), std::vector<double>(times.size()), tag, 1};
  out.particle2 = {std::vector<double>(times.begin(), times.end()), std::vector<double>(times.size()), tag, 2};
  for (std::size_t k = 0; k < times.size(); ++k) {
    out.max_relative_drift = std::max(out.max_relative_drift, evolve_ensemble(ens, times[k], run.params, run.evolve));
    out.particle1.values[k] = cell_entropy(project(ens, 1), partition);
    out.particle2.values[k] = cell_entropy(project(ens, 2), partition);
  }
  return out;
}

}  // namespace toda

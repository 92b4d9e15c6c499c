#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "toda/ensemble.hpp"
#include "toda/error.hpp"

using namespace toda;

TEST_CASE("sampling is deterministic and matches the target moments") {
  const ModelParams p = regular_params();
  const PhaseState c = regular_center(p);
  const double hbar = 0.1;
  const std::size_t M = 100000;
  const Ensemble a = sample_initial_ensemble(c, hbar, M, 42, p);
  const Ensemble b = sample_initial_ensemble(c, hbar, M, 42, p);
  CHECK(a.points == b.points);
  const Ensemble other = sample_initial_ensemble(c, hbar, M, 43, p);
  CHECK_FALSE(a.points == other.points);

  // A prefix of a larger sample is the smaller sample.
  const Ensemble small = sample_initial_ensemble(c, hbar, 100, 42, p);
  CHECK(std::equal(small.points.begin(), small.points.end(), a.points.begin()));

  const double target = hbar / 2.0;
  const double mean_tol = 4.0 * std::sqrt(target / static_cast<double>(M));
  auto coord = [](const PhaseState& s, int k) { return k == 0 ? s.q1 : k == 1 ? s.q2 : k == 2 ? s.p1 : s.p2; };
  for (int k = 0; k < 4; ++k) {
    double mean = 0.0;
    for (const PhaseState& s : a.points) mean += coord(s, k);
    mean /= static_cast<double>(M);
    double var = 0.0;
    for (const PhaseState& s : a.points) var += (coord(s, k) - mean) * (coord(s, k) - mean);
    var /= static_cast<double>(M - 1);
    if (std::abs(mean - coord(c, k)) > mean_tol) MESSAGE("coordinate " << k << " mean outside 4 standard errors");
    CHECK(std::abs(var - target) / target < 0.05);
  }
  for (std::size_t i = 0; i < 10; ++i) CHECK(a.initial_energy[i] == total_energy(a.points[i], p));
}

TEST_CASE("mass-matched widths") {
  const ModelParams p = chaotic_params();
  const EnsembleWidths w = ensemble_widths(0.2, packet_variances(0.2, p, PacketWidth::mass_matched));
  CHECK(w.q1 == doctest::Approx(0.1));
  CHECK(w.q2 == doctest::Approx(0.1 / 0.54));
  CHECK(w.q2 * w.p2 == doctest::Approx(0.01));
  const EnsembleWidths u = ensemble_widths(0.2, packet_variances(0.2, p, PacketWidth::unit));
  CHECK(u.p2 == doctest::Approx(0.1));
}

TEST_CASE("evolution identity, composition and thread independence") {
  const ModelParams p = chaotic_params();
  Ensemble base = sample_initial_ensemble(chaotic_center(p), 0.05, 257, 3, p);
  Ensemble same = base;
  CHECK(evolve_ensemble(same, 0.0, p) == 0.0);
  CHECK(same.points == base.points);

  EvolveOptions opt;
  opt.dt = 1e-3;
  Ensemble one = base, two = base, threaded = base;
  evolve_ensemble(one, 2.0, p, opt);
  evolve_ensemble(two, 0.75, p, opt);
  evolve_ensemble(two, 2.0, p, opt);
  CHECK(one.points == two.points);
  CHECK(one.t == 2.0);

  opt.threads = 4;
  evolve_ensemble(threaded, 2.0, p, opt);
  CHECK(threaded.points == one.points);

  CHECK_THROWS_AS(evolve_ensemble(one, 1.0, p, opt), ConfigError);
}

TEST_CASE("ensemble energy conservation over t = 100") {
  const ModelParams p = chaotic_params();
  Ensemble ens = sample_initial_ensemble(chaotic_center(p), 0.02, 200, 11, p);
  double mean0 = 0.0;
  for (double e : ens.initial_energy) mean0 += e;
  const double drift = evolve_ensemble(ens, 100.0, p);
  CHECK(drift < 1e-8);
  double mean1 = 0.0;
  for (const PhaseState& s : ens.points) mean1 += total_energy(s, p);
  CHECK(std::abs(mean1 - mean0) / std::abs(mean0) < 1e-8);
}

TEST_CASE("drift guard names the offending point") {
  const ModelParams p = chaotic_params();
  Ensemble ens = sample_initial_ensemble(chaotic_center(p), 0.02, 8, 11, p);
  ens.initial_energy[5] += 1.0;  // a corrupted energy record must trip the guard
  try {
    evolve_ensemble(ens, 0.1, p);
    FAIL("expected IntegrationError");
  } catch (const IntegrationError& e) {
    CHECK(e.point_index() == 5);
  }
}

TEST_CASE("projection") {
  const std::vector<PhaseState> pts{{1, 2, 3, 4}, {5, 6, 7, 8}};
  const auto a = project(pts, 1);
  const auto b = project(pts, 2);
  CHECK(a[0].x == 1);
  CHECK(a[0].y == 3);
  CHECK(b[1].x == 6);
  CHECK(b[1].y == 8);
  std::vector<PhaseState> both = pts;
  both.insert(both.end(), pts.begin(), pts.end());
  const auto c = project(both, 1);
  CHECK(c.size() == 4);
  CHECK(c[2].x == a[0].x);
  CHECK(c[3].y == a[1].y);
}

TEST_CASE("cell entropy examples") {
  CellPartition part{1.0, {0.0, 0.0}};
  const std::vector<Point2> one_cell{{0.1, 0.1}, {0.2, 0.3}, {0.9, 0.5}};
  CHECK(cell_entropy(one_cell, part) == 0.0);
  const std::vector<Point2> four{{0.5, 0.5}, {1.5, 0.5}, {0.5, 1.5}, {1.5, 1.5}};
  CHECK(cell_entropy(four, part) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  CHECK(cell_entropy(four, part) == doctest::Approx(1.386294).epsilon(1e-6));
  const std::vector<Point2> counts{{0.5, 0.5}, {0.6, 0.5}, {1.5, 0.5}, {2.5, 0.5}};
  CHECK(cell_entropy(counts, part) == doctest::Approx(1.039721).epsilon(1e-6));
  CHECK(cell_entropy(counts, part) == doctest::Approx(oracle::shannon({0.5, 0.25, 0.25})).epsilon(1e-14));

  // Half-open cells: an edge point belongs to the larger index.
  const std::vector<Point2> edge{{1.0, 0.5}, {1.5, 0.5}};
  CHECK(cell_entropy(edge, part) == 0.0);
  const std::vector<Point2> below{{0.9999, 0.5}, {1.0, 0.5}};
  CHECK(cell_entropy(below, part) == doctest::Approx(std::log(2.0)));

  // Cell side is sqrt(delta).
  CellPartition quarter{0.25, {0.0, 0.0}};
  const std::vector<Point2> split{{0.25, 0.25}, {0.75, 0.25}};
  CHECK(cell_entropy(split, quarter) == doctest::Approx(std::log(2.0)));

  CHECK_THROWS_AS(cell_entropy(std::vector<Point2>{}, part), DataError);
  CHECK_THROWS_AS(cell_entropy(std::vector<Point2>{{NAN, 0.0}}, part), DataError);
  CHECK_THROWS_AS((CellPartition{0.0, {0, 0}}.validate()), ConfigError);
}

TEST_CASE("cell entropy invariances and bounds") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Point2> pts(5000);
  for (auto& q : pts) q = {g(rng), g(rng)};
  const CellPartition part{0.05, {0.0, 0.0}};
  const double s = cell_entropy(pts, part);
  CHECK(s >= 0.0);
  CHECK(s <= std::log(static_cast<double>(pts.size())));

  std::vector<Point2> shuffled = pts;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  CHECK(cell_entropy(shuffled, part) == s);

  // Shift by a multiple of the side keeps every point in the corresponding cell.
  const double side = std::sqrt(part.delta);
  std::vector<Point2> moved = pts;
  for (auto& q : moved) q = {q.x + 0.37, q.y - 1.21};
  const CellPartition moved_part{part.delta, {0.37, -1.21}};
  const double s_moved = cell_entropy(moved, moved_part);
  CHECK(std::abs(s_moved - s) < 1e-12);
  std::vector<Point2> lattice = pts;
  for (auto& q : lattice) q = {q.x + 7 * side, q.y - 3 * side};
  CHECK(std::abs(cell_entropy(lattice, part) - s) < 1e-12);

  // Refinement: each cell splits into four.
  double delta = 0.8;
  double prev = cell_entropy(pts, {delta, {0, 0}});
  for (int k = 0; k < 6; ++k) {
    delta /= 4.0;
    const double next = cell_entropy(pts, {delta, {0, 0}});
    CHECK(next >= prev - 1e-12);
    CHECK(next <= prev + std::log(4.0) + 1e-12);
    prev = next;
  }
  // Halving delta is not a refinement, but stays within ln 4 either way.
  for (double d = 0.64; d > 0.005; d /= 2.0) {
    const double coarse = cell_entropy(pts, {d, {0, 0}});
    const double fine = cell_entropy(pts, {d / 2.0, {0, 0}});
    CHECK(std::abs(fine - coarse) <= std::log(4.0));
  }
}

TEST_CASE("classical curve basics") {
  const ModelParams p = regular_params();
  ClassicalRun run;
  run.params = p;
  // Cells are anchored at the origin; keep the packet clear of cell edges.
  run.center = {1.0, 1.0, std::sqrt(7.0), std::sqrt(7.0)};
  run.hbar = 0.02;
  run.delta = 4.0;  // delta much larger than hbar
  run.M = 2000;
  run.seed = 9;
  const std::vector<double> times{0.0, 0.5, 1.0};
  const ClassicalCurves big = classical_entropy_curve(run, times);
  CHECK(big.particle1.values[0] == 0.0);
  CHECK(big.particle2.values[0] == 0.0);

  run.delta = 0.02;
  const ClassicalCurves matched = classical_entropy_curve(run, times);
  CHECK(matched.particle1.values[0] > 0.0);
  CHECK(matched.particle1.values[0] <= std::log(2000.0));
  CHECK(matched.particle1.tag.delta == 0.02);
  CHECK(matched.particle1.tag.hbar == 0.02);
  CHECK(matched.particle1.tag.seed == 9);
  CHECK(matched.particle1.tag.ensemble_size == 2000);
  CHECK(matched.max_relative_drift < 1e-8);

  run.evolve.threads = 3;
  const ClassicalCurves threaded = classical_entropy_curve(run, times);
  CHECK(threaded.particle1.values == matched.particle1.values);
  CHECK(threaded.particle2.values == matched.particle2.values);
}

TEST_CASE("particle curves approach each other as delta shrinks") {
  const ModelParams p = chaotic_params();
  std::vector<double> times;
  for (int i = 0; i <= 40; ++i) times.push_back(i * 1.0);
  double prev = 1e9;
  for (const double delta : {0.32, 0.08, 0.02}) {
    ClassicalRun run;
    run.params = p;
    run.center = chaotic_center(p);
    run.hbar = delta;
    run.delta = delta;
    run.M = 20000;
    run.evolve.dt = 2e-3;
    const ClassicalCurves c = classical_entropy_curve(run, times);
    double sup = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      sup = std::max(sup, std::abs(c.particle1.values[i] - c.particle2.values[i]));
    }
    MESSAGE("delta " << delta << " sup distance " << sup);
    CHECK(sup < prev);
    prev = sup;
  }
}

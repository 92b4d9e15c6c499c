#include <doctest.h>

#include <cmath>
#include <limits>

#include "toda/dynamics.hpp"
#include "toda/error.hpp"

using namespace toda;

TEST_CASE("potential energy values") {
  CHECK(potential_energy(0.0, 0.0) == doctest::Approx(0.0).epsilon(1e-15));
  // e^{-1.2} + e^{1.2} + 1 - 3
  CHECK(potential_energy(1.2, 0.0) == doctest::Approx(1.6213109).epsilon(1e-7));
  CHECK(std::abs(potential_energy(1.2, 0.0) - (std::exp(-1.2) + std::exp(1.2) - 2.0)) < 1e-14);
  CHECK_THROWS_AS(potential_energy(800.0, 0.0), OverflowError);
  CHECK_THROWS_AS(potential_energy(-800.0, 0.0), OverflowError);
}

TEST_CASE("preset energies") {
  const ModelParams reg = regular_params();
  const ModelParams cha = chaotic_params();
  CHECK(total_energy(regular_center(reg), reg) == doctest::Approx(7.0).epsilon(1e-14));
  CHECK(total_energy(chaotic_center(cha), cha) == doctest::Approx(7.0).epsilon(1e-14));
  CHECK(chaotic_center(cha).p2 == doctest::Approx(-std::sqrt(0.54 * 7.0)));
  CHECK(total_energy({1.2, 0.0, 0.0, 0.0}, cha) == doctest::Approx(1.621311).epsilon(1e-6));
}

TEST_CASE("model parameter validation") {
  CHECK_THROWS_AS((ModelParams{0.0, 1.0, 7.0}.validate()), ConfigError);
  CHECK_THROWS_AS((ModelParams{1.0, -1.0, 7.0}.validate()), ConfigError);
  CHECK_THROWS_AS((ModelParams{1.0, 1.0, 0.0}.validate()), ConfigError);
  CHECK_NOTHROW(chaotic_params().validate());
}

TEST_CASE("flow field") {
  const ModelParams reg = regular_params();
  const PhaseState f0 = hamiltonian_flow(regular_center(reg), reg);
  CHECK(f0.q1 == doctest::Approx(std::sqrt(7.0)));
  CHECK(f0.q2 == doctest::Approx(std::sqrt(7.0)));
  CHECK(std::abs(f0.p1) < 1e-15);
  CHECK(std::abs(f0.p2) < 1e-15);

  const PhaseState f1 = hamiltonian_flow({1.0, 0.0, 0.0, 0.0}, reg);
  CHECK(f1.q1 == 0.0);
  CHECK(f1.q2 == 0.0);
  CHECK(f1.p1 == doctest::Approx(-2.350402).epsilon(1e-6));
  CHECK(f1.p2 == doctest::Approx(1.718282).epsilon(1e-6));
}

TEST_CASE("flow is minus the potential gradient and antisymmetric under momentum reversal") {
  const ModelParams p = chaotic_params();
  const PhaseState s{0.3, -0.4, 1.1, -0.7};
  const double h = 1e-6;
  const PhaseState f = hamiltonian_flow(s, p);
  const double dv1 = (potential_energy(s.q1 + h, s.q2) - potential_energy(s.q1 - h, s.q2)) / (2 * h);
  const double dv2 = (potential_energy(s.q1, s.q2 + h) - potential_energy(s.q1, s.q2 - h)) / (2 * h);
  CHECK(f.p1 == doctest::Approx(-dv1).epsilon(1e-8));
  CHECK(f.p2 == doctest::Approx(-dv2).epsilon(1e-8));
  CHECK(f.q1 == doctest::Approx(s.p1 / p.m1));
  CHECK(f.q2 == doctest::Approx(s.p2 / p.m2));

  const PhaseState g = hamiltonian_flow(time_reversed(s), p);
  CHECK(g.q1 == -f.q1);
  CHECK(g.q2 == -f.q2);
  CHECK(g.p1 == f.p1);
  CHECK(g.p2 == f.p2);
}

TEST_CASE("flow divergence vanishes") {
  // dq_i/dt depends only on p_i and dp_i/dt only on q, so each diagonal
  // Jacobian entry is zero; check numerically.
  const ModelParams p = chaotic_params();
  const PhaseState s{0.2, 0.5, -0.3, 0.9};
  const double h = 1e-6;
  auto d = [&](PhaseState dir, auto pick) {
    return (pick(hamiltonian_flow(s + h * dir, p)) - pick(hamiltonian_flow(s - h * dir, p))) / (2 * h);
  };
  const double div = d({1, 0, 0, 0}, [](const PhaseState& f) { return f.q1; }) +
                     d({0, 1, 0, 0}, [](const PhaseState& f) { return f.q2; }) +
                     d({0, 0, 1, 0}, [](const PhaseState& f) { return f.p1; }) +
                     d({0, 0, 0, 1}, [](const PhaseState& f) { return f.p2; });
  CHECK(std::abs(div) < 1e-8);
}

TEST_CASE("potential is convex along lines") {
  const double h = 1e-3;
  for (double angle = 0.0; angle < 3.14; angle += 0.3) {
    const double dx = std::cos(angle), dy = std::sin(angle);
    for (double s = -3.0; s <= 3.0; s += 0.25) {
      const double x0 = 0.4 + s * dx, y0 = -0.2 + s * dy;
      const double second = potential_energy(x0 + h * dx, y0 + h * dy) - 2 * potential_energy(x0, y0) +
                            potential_energy(x0 - h * dx, y0 - h * dy);
      CHECK(second >= 0.0);
    }
  }
}

TEST_CASE("rk4 single steps") {
  const ModelParams reg = regular_params();
  const PhaseState c = regular_center(reg);
  CHECK(rk4_step(c, 0.0, reg) == c);

  const PhaseState one = rk4_step(c, 0.01, reg);
  CHECK(std::abs(total_energy(one, reg) - total_energy(c, reg)) < 1e-10);

  PhaseState fine = c;
  for (int i = 0; i < 10; ++i) fine = rk4_step(fine, 0.001, reg);
  CHECK(sup_distance(one, fine) < 1e-9);

  const PhaseState back = rk4_step(one, -0.01, reg);
  CHECK(sup_distance(back, c) < 1e-10);
}

TEST_CASE("rk4 order ratio") {
  const ModelParams p = chaotic_params();
  const PhaseState s = chaotic_center(p);
  auto reference = [&](double dt) {
    PhaseState r = s;
    for (int i = 0; i < 100; ++i) r = rk4_step(r, dt / 100.0, p);
    return r;
  };
  const double dt = 0.02;
  const double e1 = sup_distance(rk4_step(s, dt, p), reference(dt));
  const double e2 = sup_distance(rk4_step(s, dt / 2, p), reference(dt / 2));
  const double ratio = e1 / e2;
  INFO("ratio = " << ratio);
  CHECK(ratio >= 24.0);
  CHECK(ratio <= 40.0);
}

TEST_CASE("rk4 step reports overflow") {
  const ModelParams p = regular_params();
  CHECK_THROWS_AS(rk4_step({-700.0, 0.0, 0.0, 0.0}, 0.1, p), OverflowError);
  CHECK_THROWS_AS(hamiltonian_flow({0.0, 0.0, std::numeric_limits<double>::infinity(), 0.0}, p), OverflowError);
}

TEST_CASE("trajectory sampling") {
  const ModelParams reg = regular_params();
  const PhaseState c = regular_center(reg);
  IntegrationOptions opt;
  opt.dt = 0.01;
  const Trajectory one = integrate_trajectory(c, 0.01, reg, opt);
  REQUIRE(one.samples.size() == 2);
  CHECK(one.samples[0].state == c);
  CHECK(one.samples[1].state == rk4_step(c, 0.01, reg));

  opt.dt = 0.1;
  opt.sample_stride = 3;
  opt.drift_tolerance = 1e-4;  // coarse step, only the bookkeeping is under test
  const Trajectory strided = integrate_trajectory(c, 1.0, reg, opt);
  // steps 0,3,6,9 plus the final step 10
  REQUIRE(strided.samples.size() == 5);
  CHECK(strided.samples.back().t == doctest::Approx(1.0));
}

TEST_CASE("energy drift over t = 100 at the default step") {
  for (const ModelParams& p : {regular_params(), chaotic_params()}) {
    const PhaseState c = p.m2 == 1.0 ? regular_center(p) : chaotic_center(p);
    IntegrationOptions opt;
    opt.sample_stride = 10000;
    const Trajectory t = integrate_trajectory(c, 100.0, p, opt);
    INFO("m2 = " << p.m2 << " drift = " << t.max_relative_drift);
    CHECK(t.max_relative_drift < 1e-8);
  }
}

TEST_CASE("drift guard fires with a coarse step") {
  const ModelParams p = chaotic_params();
  IntegrationOptions opt;
  opt.dt = 0.2;
  try {
    (void)integrate_trajectory(chaotic_center(p), 100.0, p, opt);
    FAIL("expected IntegrationError");
  } catch (const IntegrationError& e) {
    CHECK(e.time() > 0.0);
    CHECK(e.time() <= 100.0);
  }
}

TEST_CASE("time reversal symmetry") {
  const ModelParams p = chaotic_params();
  const PhaseState c = chaotic_center(p);
  IntegrationOptions opt;
  opt.dt = 1e-3;
  opt.sample_stride = 1000;
  const Trajectory fwd = integrate_trajectory(c, 2.0, p, opt);
  const Trajectory bwd = integrate_trajectory(time_reversed(fwd.samples.back().state), 2.0, p, opt);
  CHECK(sup_distance(time_reversed(bwd.samples.back().state), c) < 1e-9);
}

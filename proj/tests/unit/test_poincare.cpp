#include <doctest.h>

#include <cmath>
#include <numbers>
#include <span>
#include <sstream>
#include <vector>

#include "toda/error.hpp"
#include "toda/poincare.hpp"

using namespace toda;

TEST_CASE("section spec validation") {
  SectionSpec s;
  CHECK_NOTHROW(s.validate());
  s.pinned = Coord::p1;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = {};
  s.direction = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = {};
  s.y_axis = Coord::p2;  // the eliminated momentum cannot be plotted
  CHECK_THROWS_AS(s.validate(), ConfigError);
  SectionSpec alt{Coord::q1, 0.0, -1, Coord::q2, Coord::p2};
  CHECK_NOTHROW(alt.validate());
  CHECK(parse_coord("p2") == Coord::p2);
  CHECK_THROWS_AS(parse_coord("x"), ConfigError);
}

TEST_CASE("states built on the section lie on the shell") {
  const ModelParams p = chaotic_params();
  const SectionSpec spec;
  const auto s = state_on_section(spec, 0.5, 1.0, p);
  REQUIRE(s.has_value());
  CHECK(s->q2 == 0.0);
  CHECK(s->p2 > 0.0);
  CHECK(total_energy(*s, p) == doctest::Approx(7.0).epsilon(1e-12));
  CHECK_FALSE(state_on_section(spec, 5.0, 0.0, p).has_value());

  const SectionBounds b = section_bounds(spec, p);
  CHECK(b.x_min < 0.0);
  CHECK(b.x_max > 0.0);
  CHECK(b.y_max == doctest::Approx(std::sqrt(2.0 * 7.0 * p.m1)).epsilon(1e-6));
  CHECK(eliminated_momentum_squared(spec, b.x_max, 0.0, p) == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("crossings are on the section and on the shell") {
  const ModelParams p = chaotic_params();
  const SectionSpec spec;
  const std::vector<PhaseState> seeds = section_seeds(spec, p, 4);
  REQUIRE(seeds.size() == 4);
  const SectionResult r = poincare_section(seeds, spec, p, 30);
  CHECK(r.points.size() == 120);
  CHECK(r.incomplete_orbits == 0);
  for (const SectionPoint& pt : r.points) {
    CHECK(eliminated_momentum_squared(spec, pt.x, pt.y, p) > -1e-6);
  }
  CHECK_THROWS_AS(poincare_section(std::vector<PhaseState>{{0, 0, 0, 0}}, spec, p, 5), ConfigError);
}

TEST_CASE("a periodic orbit returns to its section point") {
  // For equal masses V is symmetric under (q1, q2) -> (-q2, -q1), so the line
  // q2 = -q1, p2 = -p1 is invariant and carries a periodic orbit.
  const ModelParams p = regular_params();
  const SectionSpec spec;
  const auto s = state_on_section(spec, 0.0, -std::sqrt(7.0), p);
  REQUIRE(s.has_value());
  CHECK(s->p2 == doctest::Approx(std::sqrt(7.0)));
  const SectionResult r = poincare_section(std::vector<PhaseState>{*s}, spec, p, 3);
  REQUIRE(r.points.size() == 3);
  for (const SectionPoint& pt : r.points) {
    CHECK(std::abs(pt.x) < 1e-6);
    CHECK(std::abs(pt.y + std::sqrt(7.0)) < 1e-6);
  }
  CHECK(r.points[2].t - r.points[1].t == doctest::Approx(r.points[1].t - r.points[0].t).epsilon(1e-6));
}

TEST_CASE("local flatness separates curves from area") {
  std::vector<SectionPoint> circle, lattice, line;
  for (int i = 0; i < 400; ++i) {
    const double a = 2.0 * std::numbers::pi * i / 400.0;
    circle.push_back({0, 0.0, std::cos(a), std::sin(a)});
    line.push_back({0, 0.0, 0.01 * i, 0.5 - 0.02 * i});
  }
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) lattice.push_back({0, 0.0, 0.1 * i, 0.1 * j});
  // arc of 8 steps: (1 - cos)/sin ratio squared is far below 1e-3
  CHECK(local_flatness(circle) < 1e-3);
  CHECK(local_flatness(line) == doctest::Approx(0.0).epsilon(1e-12));
  // interior 3x3 blocks are isotropic
  CHECK(local_flatness(lattice) == doctest::Approx(1.0));
  const std::vector<SectionPoint> same(10, SectionPoint{0, 0.0, 1.0, 1.0});
  CHECK(local_flatness(same) == 0.0);
  CHECK_THROWS_AS(local_flatness(circle, 1), DataError);
  CHECK_THROWS_AS(local_flatness(std::span<const SectionPoint>(circle).first(8)), DataError);
}

TEST_CASE("regular orbits trace curves, chaotic orbits fill area") {
  const SectionSpec spec;
  const std::size_t grid = 50;

  const ModelParams reg = regular_params();
  const SectionBounds rb = section_bounds(spec, reg);
  const double diagonal = std::hypot(rb.x_max - rb.x_min, rb.y_max - rb.y_min);
  std::size_t regular_max = 0;
  for (const PhaseState& s : section_seeds(spec, reg, 6)) {
    const SectionResult r = poincare_section(std::vector<PhaseState>{s}, spec, reg, 4800);
    const std::span<const SectionPoint> all(r.points);
    regular_max = std::max(regular_max, occupied_cells(all, rb, grid));
    CHECK(local_flatness(all.first(1200)) < 0.01);
    CHECK(local_flatness(all) < 0.01);
    CHECK(max_nearest_neighbor_gap(all.first(1200)) < 0.05 * diagonal);
    CHECK(max_nearest_neighbor_gap(all) < 0.05 * diagonal);
  }

  const ModelParams cha = chaotic_params();
  const SectionBounds cb = section_bounds(spec, cha);
  const SectionResult r = poincare_section(std::vector<PhaseState>{chaotic_center(cha)}, spec, cha, 4800);
  const std::span<const SectionPoint> all(r.points);
  const std::size_t c_mid = occupied_cells(all.first(1200), cb, grid);
  const std::size_t c_all = occupied_cells(all, cb, grid);
  INFO("chaotic cells " << c_mid << " -> " << c_all << ", regular max " << regular_max);
  CHECK(local_flatness(all) > 0.1);
  CHECK(static_cast<double>(c_all) > 1.5 * static_cast<double>(c_mid));
  CHECK(c_all > regular_max);
}

TEST_CASE("section table format") {
  const ModelParams p = regular_params();
  const SectionSpec spec;
  const SectionResult r = poincare_section(section_seeds(spec, p, 2), spec, p, 3);
  std::ostringstream os;
  write_section_table(os, r, spec, p, "regular");
  const std::string text = os.str();
  CHECK(text.find("# orbit_index t_crossing x y") != std::string::npos);
  std::istringstream in(text);
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line[0] != '#') ++rows;
  }
  CHECK(rows == 6);
}

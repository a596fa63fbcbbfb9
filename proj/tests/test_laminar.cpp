#include <catch2/catch_amalgamated.hpp>

#include <functional>

#include "pourplan/laminar.hpp"

using namespace pourplan;

namespace {

LiquidState velocity_blob(int nx, int ny, double spacing,
                          const std::function<Vec2(Vec2)>& field) {
  LiquidState s;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const Vec2 p{i * spacing, j * spacing};
      s.particles.push_back({p, field(p)});
    }
  return s;
}

}  // namespace

TEST_CASE("uniform translation is maximally laminar") {
  const LiquidState s = velocity_blob(40, 40, 0.009, [](Vec2) { return Vec2{0.4, 0.3}; });
  REQUIRE(laminar_metric(s, kLaminarResolution) < 1e-6);
}

TEST_CASE("curl-free shear field scores far below the rotational band") {
  // Gradient of the potential 0.5 x^2 + 0.5 y^2 + 0.3 xy: linear, curl free.
  const LiquidState s = velocity_blob(40, 40, 0.009, [](Vec2 p) {
    return Vec2{p.x + 0.3 * p.y + 0.2, p.y + 0.3 * p.x - 0.1};
  });
  REQUIRE(laminar_metric(s, kLaminarResolution) < 0.05);
}

TEST_CASE("rigid rotation is strongly non-laminar") {
  const Vec2 c{0.18, 0.18};
  const LiquidState s = velocity_blob(40, 40, 0.009, [&](Vec2 p) {
    return Vec2{-2.0 * (p.y - c.y), 2.0 * (p.x - c.x)};
  });
  REQUIRE(laminar_metric(s, kLaminarResolution) > 0.5);
}

TEST_CASE("metric is undefined without enough moving liquid") {
  LiquidState still = velocity_blob(10, 10, 0.009, [](Vec2) { return Vec2{0.0, 0.0}; });
  REQUIRE_THROWS_AS(laminar_metric(still, kLaminarResolution), UndefinedMetric);

  // Nine movers are one short of the cutoff.
  for (int i = 0; i < 9; ++i) still.particles[i].velocity = {1.0, 0.0};
  REQUIRE_THROWS_AS(laminar_metric(still, kLaminarResolution), UndefinedMetric);

  // Coincident particles occupy a single cell: no usable face equations.
  LiquidState point;
  for (int i = 0; i < 12; ++i) point.particles.push_back({{0.5, 0.5}, {1.0, 1.0}});
  REQUIRE_THROWS_AS(laminar_metric(point, kLaminarResolution), UndefinedMetric);

  const LiquidState ok = velocity_blob(20, 20, 0.009, [](Vec2) { return Vec2{0.1, 0.0}; });
  REQUIRE_THROWS_AS(laminar_metric(ok, 0.0), std::invalid_argument);
  REQUIRE_NOTHROW(laminar_metric(ok, kLaminarResolution));
}

TEST_CASE("gate predicate counts fast particles") {
  LiquidState s;
  for (int i = 0; i < 9; ++i) s.particles.push_back({{0.0, 0.0}, {1.0, 0.0}});
  REQUIRE_FALSE(laminar_gate_applies(s));
  s.particles.push_back({{0.0, 0.0}, {0.0, -0.2}});
  REQUIRE(laminar_gate_applies(s));

  LiquidState slow;
  for (int i = 0; i < 100; ++i) slow.particles.push_back({{0.0, 0.0}, {0.04, 0.0}});
  REQUIRE_FALSE(laminar_gate_applies(slow));
}

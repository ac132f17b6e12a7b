#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qlips/geometry.hpp"

using namespace qlips;

namespace {

constexpr double pi = std::numbers::pi;

Box unit_square() { return Box{}; }

Box half_strip() {
  Box b;
  b.y_min = 0.0;
  return b;
}

Box space_time(double horizon) {
  Box b;
  b.timed = true;
  b.t_max = horizon;
  return b;
}

std::vector<InterfaceGeometry> all_kinds() {
  return {InterfaceGeometry::vertical_line(0.0, half_strip()),
          InterfaceGeometry::axes_cross(unit_square()),
          InterfaceGeometry::circle({0.0, 0.0}, 0.5, unit_square()),
          InterfaceGeometry::plum_blossom(0.5, 0.1, 5, unit_square()),
          InterfaceGeometry::moving_circle(0.5, 0.5, space_time(0.2))};
}

}  // namespace

TEST(Classify, CircleCenterIsInner) {
  const auto g = InterfaceGeometry::circle({0.0, 0.0}, 0.5, unit_square());
  const auto c = g.classify({0.0, 0.0});
  EXPECT_EQ(c.subdomain, kMinus);
  EXPECT_FALSE(c.on_interface);
}

TEST(Classify, VerticalLineLeftIsMinus) {
  const auto g = InterfaceGeometry::vertical_line(0.0, half_strip());
  EXPECT_EQ(g.classify({-0.5, 0.5}).subdomain, kMinus);
  EXPECT_EQ(g.classify({0.5, 0.5}).subdomain, kPlus);
}

TEST(Classify, FlatPlumIsCircle) {
  const auto g = InterfaceGeometry::plum_blossom(0.5, 0.0, 7, unit_square());
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * pi);
  for (int k = 0; k < 100; ++k) {
    const double th = angle(rng);
    const double r = 0.5 * 1.0001;
    const auto c = g.classify({r * std::cos(th), r * std::sin(th)});
    EXPECT_EQ(c.subdomain, kPlus);
    EXPECT_FALSE(c.on_interface);
  }
}

TEST(Classify, OnInterfaceWithinTolerance) {
  const auto g = InterfaceGeometry::circle({0.0, 0.0}, 0.5, unit_square());
  EXPECT_TRUE(g.classify({0.5, 0.0}).on_interface);
  EXPECT_FALSE(g.classify({0.5 + 1e-9, 0.0}).on_interface);
  EXPECT_TRUE(g.classify({0.5 + 1e-9, 0.0}, 1e-8).on_interface);
}

TEST(Classify, OutsideBoxThrows) {
  const auto g = InterfaceGeometry::circle({0.0, 0.0}, 0.5, unit_square());
  EXPECT_THROW(g.classify({1.5, 0.0}), DomainError);
  const auto m = InterfaceGeometry::moving_circle(0.5, 0.5, space_time(0.2));
  EXPECT_THROW(m.classify({0.0, 0.0, 0.3}), DomainError);
}

TEST(Classify, AxesCrossQuadrants) {
  const auto g = InterfaceGeometry::axes_cross(unit_square());
  EXPECT_EQ(g.classify({-0.5, 0.5}).subdomain, 0);
  EXPECT_EQ(g.classify({0.5, 0.5}).subdomain, 1);
  EXPECT_EQ(g.classify({-0.5, -0.5}).subdomain, 2);
  EXPECT_EQ(g.classify({0.5, -0.5}).subdomain, 3);
  EXPECT_EQ(g.subdomain_name(0), "Omega1");
}

TEST(Construction, RejectsInvalidShapes) {
  EXPECT_THROW(InterfaceGeometry::plum_blossom(0.1, 0.2, 5, unit_square()), ConfigError);
  EXPECT_THROW(InterfaceGeometry::plum_blossom(0.5, 0.1, 0, unit_square()), ConfigError);
  EXPECT_THROW(InterfaceGeometry::plum_blossom(0.9, 0.2, 5, unit_square()), ConfigError);
  EXPECT_THROW(InterfaceGeometry::circle({0.0, 0.0}, 1.0, unit_square()), ConfigError);
  EXPECT_THROW(InterfaceGeometry::moving_circle(5.0, 0.5, space_time(0.2)), ConfigError);
  EXPECT_THROW(InterfaceGeometry::moving_circle(0.5, 0.5, unit_square()), ConfigError);
  EXPECT_THROW(InterfaceGeometry::vertical_line(1.0, unit_square()), ConfigError);
}

TEST(InterfacePoint, CircleAtZeroAngle) {
  const auto g = InterfaceGeometry::circle({0.0, 0.0}, 0.5, unit_square());
  const auto ip = g.interface_point(0.0);
  EXPECT_NEAR(ip.point.x, 0.5, 1e-15);
  EXPECT_NEAR(ip.point.y, 0.0, 1e-15);
  EXPECT_NEAR(ip.normal[0], -1.0, 1e-15);
  EXPECT_NEAR(ip.normal[1], 0.0, 1e-15);
}

TEST(InterfacePoint, VerticalLineMidpoint) {
  const auto g = InterfaceGeometry::vertical_line(0.0, half_strip());
  const auto ip = g.interface_point(0.5);
  EXPECT_DOUBLE_EQ(ip.point.x, 0.0);
  EXPECT_DOUBLE_EQ(ip.point.y, 0.5);
  EXPECT_DOUBLE_EQ(ip.normal[0], -1.0);
  EXPECT_DOUBLE_EQ(ip.normal[1], 0.0);
}

TEST(InterfacePoint, PlumNormalMatchesLevelSetDifferences) {
  const auto g = InterfaceGeometry::plum_blossom(0.5, 0.1, 5, unit_square());
  const auto ip = g.interface_point(0.1);  // theta = pi/5
  const double h = 1e-6;
  const Point p = ip.point;
  const double gx = (g.level_set({p.x + h, p.y}) - g.level_set({p.x - h, p.y})) / (2 * h);
  const double gy = (g.level_set({p.x, p.y + h}) - g.level_set({p.x, p.y - h})) / (2 * h);
  const double n = std::hypot(gx, gy);
  EXPECT_NEAR(ip.normal[0], -gx / n, 1e-6);
  EXPECT_NEAR(ip.normal[1], -gy / n, 1e-6);
}

TEST(InterfacePoint, MovingCircleFollowsRadius) {
  const auto g = InterfaceGeometry::moving_circle(0.5, 0.5, space_time(0.2));
  const auto ip = g.interface_point(0.25, 0.2);
  EXPECT_NEAR(ip.point.x, 0.0, 1e-15);
  EXPECT_NEAR(ip.point.y, 0.6, 1e-15);
  EXPECT_DOUBLE_EQ(ip.point.t, 0.2);
  EXPECT_NEAR(ip.normal[1], -1.0, 1e-15);
}

TEST(InterfacePoint, ParameterOutOfRangeIsUnsupported) {
  const auto g = InterfaceGeometry::circle({0.0, 0.0}, 0.5, unit_square());
  EXPECT_THROW(g.interface_point(1.5), UnsupportedError);
  EXPECT_THROW(g.segment_point(1, 0.5), UnsupportedError);
  EXPECT_THROW(InterfaceGeometry::axes_cross(unit_square()).negated(), UnsupportedError);
}

TEST(InterfaceProperty, RandomParametersLandOnGammaWithUnitNormals) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& g : all_kinds()) {
    for (int k = 0; k < 10000; ++k) {
      const double t = g.time_dependent() ? 0.2 * unit(rng) : 0.0;
      const auto ip = g.interface_point(unit(rng), t);
      const auto c = g.classify(ip.point);
      ASSERT_TRUE(c.on_interface) << to_string(g.kind()) << " at k=" << k;
      ASSERT_NEAR(norm(ip.normal), 1.0, 1e-12);
    }
  }
}

TEST(InterfaceProperty, NegationFlipsNormals) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& g : all_kinds()) {
    if (g.kind() == InterfaceKind::axes_cross) continue;
    const auto ng = g.negated();
    for (int k = 0; k < 200; ++k) {
      const double t = g.time_dependent() ? 0.2 * unit(rng) : 0.0;
      const auto ip = g.interface_point(unit(rng), t);
      const Vec2 a = g.normal_at(ip.point);
      const Vec2 b = ng.normal_at(ip.point);
      EXPECT_EQ(a[0], -b[0]);
      EXPECT_EQ(a[1], -b[1]);
    }
  }
}

TEST(InterfaceProperty, CrossSegmentsAvoidOrigin) {
  const auto g = InterfaceGeometry::axes_cross(unit_square());
  ASSERT_EQ(g.segment_count(), 4);
  for (int s = 0; s < 4; ++s) {
    const auto ip = g.segment_point(s, 0.0);
    EXPECT_GE(std::hypot(ip.point.x, ip.point.y), InterfaceGeometry::kCrossExclusion);
  }
}

TEST(Sampling, ExampleOneTotals) {
  const auto g = InterfaceGeometry::vertical_line(0.0, half_strip());
  CollocationSpec spec;
  spec.interior = {10000, 10000};
  spec.interface = 304;
  spec.boundary = 1512;
  const auto set = sample_collocation(g, spec, 42);
  EXPECT_EQ(set.total_points(), 21816u);
  for (int s = 0; s < 2; ++s)
    for (const auto& p : set.interior[static_cast<std::size_t>(s)]) {
      const auto c = g.classify(p);
      ASSERT_EQ(c.subdomain, s);
      ASSERT_FALSE(c.on_interface);
    }
  for (const auto& ip : set.interface) ASSERT_LE(std::abs(g.level_set(ip.point)), 1e-12);
  for (const auto& b : set.boundary) {
    const Point& p = b.point;
    const bool on_edge = p.x == -1.0 || p.x == 1.0 || p.y == 0.0 || p.y == 1.0;
    ASSERT_TRUE(on_edge);
    ASSERT_EQ(b.subdomain, g.subdomain_of(p));
  }
}

TEST(Sampling, SingleInterfacePointOnCircle) {
  const auto g = InterfaceGeometry::circle({0.0, 0.0}, 0.5, unit_square());
  CollocationSpec spec;
  spec.interior = {10, 10};
  spec.interface = 1;
  spec.boundary = 4;
  const auto set = sample_collocation(g, spec, 1);
  ASSERT_EQ(set.interface.size(), 1u);
  const Point& p = set.interface[0].point;
  EXPECT_NEAR(std::hypot(p.x, p.y), 0.5, 1e-12);
}

TEST(Sampling, SameSeedIsBitIdentical) {
  for (const auto& g : all_kinds()) {
    CollocationSpec spec;
    spec.interior.assign(static_cast<std::size_t>(g.subdomain_count()), 200);
    spec.interface = 80;
    spec.boundary = 60;
    const auto a = sample_collocation(g, spec, 9);
    const auto b = sample_collocation(g, spec, 9);
    const auto c = sample_collocation(g, spec, 10);
    ASSERT_EQ(a.interior.size(), b.interior.size());
    for (std::size_t s = 0; s < a.interior.size(); ++s)
      for (std::size_t i = 0; i < a.interior[s].size(); ++i) {
        ASSERT_EQ(a.interior[s][i].x, b.interior[s][i].x);
        ASSERT_EQ(a.interior[s][i].y, b.interior[s][i].y);
        ASSERT_EQ(a.interior[s][i].t, b.interior[s][i].t);
      }
    for (std::size_t i = 0; i < a.interface.size(); ++i) {
      ASSERT_EQ(a.interface[i].point.x, b.interface[i].point.x);
      ASSERT_EQ(a.interface[i].normal[1], b.interface[i].normal[1]);
    }
    for (std::size_t i = 0; i < a.boundary.size(); ++i)
      ASSERT_EQ(a.boundary[i].point.y, b.boundary[i].point.y);
    EXPECT_NE(a.interior[0][0].x, c.interior[0][0].x);
  }
}

TEST(Sampling, GroupsUseIndependentStreams) {
  const auto g = InterfaceGeometry::circle({0.0, 0.0}, 0.5, unit_square());
  CollocationSpec spec;
  spec.interior = {300, 300};
  spec.interface = 50;
  spec.boundary = 40;
  const auto a = sample_collocation(g, spec, 4);
  spec.interface = 500;
  spec.boundary = 7;
  spec.interior[1] = 20;
  const auto b = sample_collocation(g, spec, 4);
  for (std::size_t i = 0; i < a.interior[0].size(); ++i) ASSERT_EQ(a.interior[0][i].x, b.interior[0][i].x);
  for (std::size_t i = 0; i < 20; ++i) ASSERT_EQ(a.interior[1][i].y, b.interior[1][i].y);
}

TEST(Sampling, SpaceTimeInterfaceTracksMovingCircle) {
  const auto g = InterfaceGeometry::moving_circle(0.5, 0.5, space_time(0.2));
  CollocationSpec spec;
  spec.interior = {400, 200};
  spec.interface = 100;
  spec.boundary = 100;
  const auto set = sample_collocation(g, spec, 8);
  for (const auto& ip : set.interface)
    ASSERT_NEAR(std::hypot(ip.point.x, ip.point.y), 0.5 * ip.point.t + 0.5, 1e-12);
  int initial = 0;
  for (const auto& b : set.boundary) {
    if (b.initial_slice) {
      ++initial;
      ASSERT_EQ(b.point.t, 0.0);
    }
  }
  EXPECT_EQ(initial, 50);
}

TEST(Sampling, UniformGridClassifiesCorrectly) {
  const auto g = InterfaceGeometry::plum_blossom(0.5, 0.1, 8, unit_square());
  CollocationSpec spec;
  spec.interior = {500, 300};
  spec.interface = 64;
  spec.boundary = 40;
  spec.strategy = SamplingStrategy::uniform_grid;
  const auto set = sample_collocation(g, spec, 0);
  EXPECT_EQ(set.interior[0].size(), 500u);
  EXPECT_EQ(set.interior[1].size(), 300u);
  for (int s = 0; s < 2; ++s)
    for (const auto& p : set.interior[static_cast<std::size_t>(s)]) ASSERT_EQ(g.subdomain_of(p), s);
}

TEST(Sampling, TinySubdomainExhaustsBudget) {
  const auto g = InterfaceGeometry::circle({0.0, 0.0}, 1e-3, unit_square());
  CollocationSpec spec;
  spec.interior = {10, 10};
  spec.interface = 4;
  spec.boundary = 4;
  EXPECT_THROW(sample_collocation(g, spec, 1), SamplingError);
}

TEST(Sampling, RejectsBadSpecs) {
  const auto g = InterfaceGeometry::circle({0.0, 0.0}, 0.5, unit_square());
  CollocationSpec spec;
  spec.interior = {10};
  spec.interface = 4;
  spec.boundary = 4;
  EXPECT_THROW(sample_collocation(g, spec, 1), ConfigError);
  spec.interior = {10, 0};
  EXPECT_THROW(sample_collocation(g, spec, 1), ConfigError);
  spec.interior = {10, 10};
  spec.weights.boundary = 0.0;
  EXPECT_THROW(sample_collocation(g, spec, 1), ConfigError);
}

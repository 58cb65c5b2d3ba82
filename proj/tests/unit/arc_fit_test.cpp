// Copyright 2026 The Betascript Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "betascript/arc_fit.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

namespace betascript {
namespace {

constexpr double kPi = std::numbers::pi;

// Two arcs meeting at M2 with a common tangent along theta. Each arc starts at
// its minor vertex; the curve bends to the left when turn = +1.
std::vector<Point2> ArcPairPoints(double a1, double b1, double b2, double theta, int turn, Point2 m2, double phi1,
                                  double phi2, int per_arc) {
  const double a2 = a1 * std::sqrt(b2 / b1);
  const double c = std::cos(theta), s = std::sin(theta);
  auto place = [&](double u, double w) {
    return Point2{m2.x + u * c - turn * w * s, m2.y + u * s + turn * w * c};
  };
  std::vector<Point2> pts;
  for (int i = per_arc; i > 0; --i) {
    const double phi = -phi1 * i / per_arc;
    pts.push_back(place(a1 * std::sin(phi), b1 - b1 * std::cos(phi)));
  }
  pts.push_back(m2);
  for (int i = 1; i <= per_arc; ++i) {
    const double phi = phi2 * i / per_arc;
    pts.push_back(place(a2 * std::sin(phi), b2 - b2 * std::cos(phi)));
  }
  return pts;
}

TEST(ArcFitTest, RecoversLinkedArcPair) {
  const auto pts = ArcPairPoints(2.0, 1.0, 4.0, kPi / 6, 1, {3.0, -1.0}, 1.2, 1.0, 20);
  const ArcFit f = fit_arc_pair(pts, 20);
  EXPECT_FALSE(f.degenerate);
  EXPECT_NEAR(f.arcs.a1, 2.0, 0.04);
  EXPECT_NEAR(f.arcs.b1, 1.0, 0.02);
  EXPECT_NEAR(f.arcs.b2, 4.0, 0.08);
  EXPECT_NEAR(f.arcs.a2(), 4.0, 0.08);
  EXPECT_NEAR(f.arcs.theta, kPi / 6, 0.02 * kPi / 6);
  EXPECT_EQ(f.arcs.turn, 1);
  EXPECT_EQ(f.arcs.link_point, (Point2{3.0, -1.0}));
}

TEST(ArcFitTest, ClockwiseTurnIsDetected) {
  const auto pts = ArcPairPoints(30.0, 12.0, 12.0, -2.0, -1, {0.0, 0.0}, 1.5, 1.5, 15);
  const ArcFit f = fit_arc_pair(pts, 15);
  EXPECT_EQ(f.arcs.turn, -1);
  EXPECT_NEAR(f.arcs.a2(), f.arcs.a1, 1e-9);
  EXPECT_NEAR(f.arcs.a1, 30.0, 0.6);
  EXPECT_NEAR(f.arcs.theta, -2.0, 0.01);
}

TEST(ArcFitTest, StraightSegmentFallsBack) {
  std::vector<Point2> pts;
  const double dir = 0.7;
  for (int i = 0; i < 12; ++i) pts.push_back({1.0 + i * std::cos(dir), 2.0 + i * std::sin(dir)});
  const ArcFit f = fit_arc_pair(pts, 6);
  EXPECT_TRUE(f.degenerate);
  EXPECT_NEAR(f.arcs.theta, dir, 1e-6);
  EXPECT_NEAR(f.arcs.a1, 5.5, 1e-9);
  EXPECT_GT(f.arcs.b1, 0.0);
  EXPECT_GT(f.arcs.b2, 0.0);
}

TEST(ArcFitTest, EndTangentsFollowTheTrajectory) {
  const auto pts = ArcPairPoints(10.0, 5.0, 5.0, 0.0, 1, {0.0, 0.0}, 1.0, 1.0, 30);
  const ArcFit f = fit_arc_pair(pts, 30);
  // Tangent of the ellipse at phi: direction of (a cos phi, b sin phi) in the local frame.
  EXPECT_NEAR(f.arcs.theta_p1, std::atan2(5.0 * std::sin(-1.0), 10.0 * std::cos(-1.0)), 0.05);
  EXPECT_NEAR(f.arcs.theta_p2, std::atan2(5.0 * std::sin(1.0), 10.0 * std::cos(1.0)), 0.05);
}

TEST(ArcFitTest, RejectsTooFewPoints) {
  const std::vector<Point2> pts = {{0, 0}, {1, 1}, {2, 1}, {3, 0}, {4, -1}};
  EXPECT_THROW(fit_arc_pair(pts, 2), Error);
}

TEST(ArcFitPropertyTest, LinkingConstraintAlwaysHolds) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> axis(2, 80), ang(-kPi, kPi), sweep(0.5, 2.0), jitter(-0.05, 0.05);
  for (int trial = 0; trial < 40; ++trial) {
    auto pts = ArcPairPoints(axis(rng), axis(rng), axis(rng), ang(rng), rng() % 2 ? 1 : -1, {0, 0}, sweep(rng),
                             sweep(rng), 10);
    for (auto& p : pts) {
      p.x += jitter(rng);
      p.y += jitter(rng);
    }
    const ArcFit f = fit_arc_pair(pts, 10);
    EXPECT_NEAR(f.arcs.a2(), f.arcs.a1 * std::sqrt(f.arcs.b2 / f.arcs.b1), 1e-9 * f.arcs.a2());
    EXPECT_GT(f.arcs.theta, -kPi);
    EXPECT_LE(f.arcs.theta, kPi);
    EXPECT_GE(f.residual, 0.0);
  }
}

}  // namespace
}  // namespace betascript

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


#include "betascript/beta_model.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

namespace betascript {
namespace {

BetaPulseParams UnitPulse() { return BetaPulseParams::make(1.0, 0.0, 0.5, 1.0, 2.0); }

TEST(BetaPulseTest, SpecExamples) {
  EXPECT_DOUBLE_EQ(beta_pulse(UnitPulse(), 0.5), 1.0);
  EXPECT_DOUBLE_EQ(beta_pulse(UnitPulse(), 0.25), 0.5625);
  EXPECT_EQ(beta_pulse(UnitPulse(), -0.1), 0.0);
  EXPECT_EQ(beta_pulse(UnitPulse(), 1.0), 0.0);
  EXPECT_EQ(beta_pulse(UnitPulse(), 1.3), 0.0);
}

TEST(BetaPulseTest, DeriveQ) {
  EXPECT_DOUBLE_EQ(derive_q(2.0, 0.0, 0.5, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(derive_q(3.0, 0.0, 0.25, 1.0), 9.0);
  EXPECT_NEAR(derive_q(1.0, 0.0, 0.9, 1.0), 1.0 / 9.0, 1e-15);
  EXPECT_THROW(derive_q(2.0, 0.0, 0.0, 1.0), Error);
  EXPECT_THROW(derive_q(2.0, 0.0, 1.0, 1.0), Error);
  EXPECT_THROW(derive_q(0.0, 0.0, 0.5, 1.0), Error);
}

TEST(BetaPulseTest, PeakPropertyOnDenseGrid) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> K(0.1, 500), p(0.5, 12), rap(0.1, 0.9), t0(-2, 2), dur(0.05, 2);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = t0(rng), d = dur(rng);
    const auto b = BetaPulseParams::make(K(rng), a, a + rap(rng) * d, a + d, p(rng));
    ASSERT_TRUE(b.valid());
    const int n = 2000;
    const double h = d / n;
    double best = -1.0, arg = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double t = a + i * h;
      const double v = beta_pulse(b, t);
      EXPECT_GE(v, 0.0);
      if (v > best) {
        best = v;
        arg = t;
      }
    }
    EXPECT_NEAR(arg, b.tc, h * 1.000001) << trial;
    EXPECT_NEAR(beta_pulse(b, b.tc), b.K, 1e-9 * b.K);
  }
}

TEST(TrainingComponentTest, SpecExamples) {
  const TrainingComponentParams tr{2.0, 5.0};
  EXPECT_DOUBLE_EQ(tr.A(0.0, 1.0), -18.0);
  EXPECT_DOUBLE_EQ(training_component(tr, 0.0, 1.0, 0.0), 2.0);
  EXPECT_DOUBLE_EQ(training_component(tr, 0.0, 1.0, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(training_component(tr, 0.0, 1.0, 0.5), 3.5);
  EXPECT_THROW(training_component(tr, 0.0, 1.0, 1.5), Error);
}

TEST(TrainingComponentTest, MonotoneAndMeanProperties) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> v(0.0, 300.0), t0(-1, 1), dur(0.01, 3);
  for (int trial = 0; trial < 100; ++trial) {
    const TrainingComponentParams tr{v(rng), v(rng)};
    const double a = t0(rng), b = a + dur(rng);
    const double sign = tr.Vf >= tr.Vi ? 1.0 : -1.0;
    double prev = training_component(tr, a, b, a);
    // Trapezoid rule on the cubic; error is O(h^2) and far below tolerance.
    double integral = 0.0;
    const int n = 1000;
    for (int i = 1; i <= n; ++i) {
      const double cur = training_component(tr, a, b, a + (b - a) * i / n);
      EXPECT_GE(sign * (cur - prev), -1e-9);
      integral += 0.5 * (cur + prev) * (b - a) / n;
      prev = cur;
    }
    EXPECT_NEAR(integral / (b - a), tr.mean(), 1e-4 * std::max(1.0, tr.mean()));
    EXPECT_NEAR(tr.mean(), 0.5 * (tr.Vi + tr.Vf), 1e-9);
  }
}

BetaStroke Stroke(double K, double p, double Vi, double Vf) {
  BetaStroke s;
  s.pulse = BetaPulseParams::make(K, 0.0, 0.5, 1.0, p);
  s.training = {Vi, Vf};
  return s;
}

TEST(ReconstructTest, SumOfImpulseAndTraining) {
  const BetaStroke s = Stroke(1.0, 2.0, 2.0, 5.0);
  EXPECT_DOUBLE_EQ(reconstruct_velocity(s, 0.5), 4.5);
  EXPECT_NEAR(reconstruct_velocity(s, 0.0), 2.0, 1e-12);
  EXPECT_NEAR(reconstruct_velocity(s, 1.0), 5.0, 1e-12);
  EXPECT_THROW(reconstruct_velocity(s, -0.5), Error);
}

TEST(SuperposeTest, SpecExamples) {
  const BetaStroke one = Stroke(1.0, 2.0, 0, 0);
  EXPECT_DOUBLE_EQ(superpose(std::span(&one, 1), 0.3), beta_pulse(one.pulse, 0.3));

  BetaStroke shifted = one;
  shifted.pulse = BetaPulseParams::make(1.0, 0.25, 0.75, 1.25, 2.0);
  const BetaStroke pair[] = {one, shifted};
  // 0.5 sits at one's peak (1.0) and a quarter into the shifted pulse (0.5625).
  EXPECT_DOUBLE_EQ(superpose(pair, 0.5), 1.5625);

  BetaStroke far = one;
  far.pulse = BetaPulseParams::make(1.0, 2.0, 2.5, 3.0, 2.0);
  const BetaStroke disjoint[] = {one, far};
  EXPECT_DOUBLE_EQ(superpose(disjoint, 0.25), 0.5625);
}

TEST(EllipticArcPairTest, LinkingConstraint) {
  EllipticArcPair arcs;
  arcs.a1 = 2.0;
  arcs.b1 = 1.0;
  arcs.b2 = 4.0;
  EXPECT_DOUBLE_EQ(arcs.a2(), 4.0);
  arcs.b2 = arcs.b1;
  EXPECT_DOUBLE_EQ(arcs.a2(), arcs.a1);
}

TEST(WrapAngleTest, HalfOpenInterval) {
  constexpr double kPi = std::numbers::pi;
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
  EXPECT_NEAR(wrap_angle(3 * kPi / 2), -kPi / 2, 1e-15);
  EXPECT_NEAR(wrap_angle(-5 * kPi / 2), -kPi / 2, 1e-15);
}

}  // namespace
}  // namespace betascript

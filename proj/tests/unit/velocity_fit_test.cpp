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


#include "betascript/velocity_fit.hpp"

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

namespace betascript {
namespace {

struct Samples {
  std::vector<double> t, v;
};

// Direct evaluation of impulse plus cubic drag on a uniform grid.
Samples Synthesize(double K, double p, double rap, double Vi, double Vf, int n = 101, double t0 = 0.0,
                   double dur = 1.0) {
  const double tc = t0 + rap * dur, t1 = t0 + dur;
  const double q = p * (t1 - tc) / (tc - t0);
  const double A = -6.0 * (Vf - Vi) / (dur * dur * dur);
  Samples s;
  for (int i = 0; i < n; ++i) {
    const double t = t0 + dur * i / (n - 1);
    double pulse = 0.0;
    if (t > t0 && t < t1) pulse = K * std::pow((t - t0) / (tc - t0), p) * std::pow((t1 - t) / (t1 - tc), q);
    const double u = t - t0;
    s.t.push_back(t);
    s.v.push_back(pulse + A * (u * u * u / 3.0 - dur * u * u / 2.0) + Vi);
  }
  return s;
}

TEST(VelocityFitTest, RecoversNoiselessStroke) {
  const Samples s = Synthesize(3.0, 2.5, 0.4, 1.0, 2.0);
  const VelocityFit f = fit_velocity(s.t, s.v);
  EXPECT_FALSE(f.degenerate);
  EXPECT_NEAR(f.pulse.K, 3.0, 0.03);
  EXPECT_NEAR(f.pulse.tc, 0.4, 0.01);
  EXPECT_NEAR(f.pulse.p, 2.5, 0.125);
  EXPECT_DOUBLE_EQ(f.training.Vi, 1.0);
  EXPECT_DOUBLE_EQ(f.training.Vf, 2.0);
  EXPECT_TRUE(f.pulse.valid());
  EXPECT_LT(f.residual, 1e-6);
}

TEST(VelocityFitTest, SymmetricPulsePeaksAtMidpoint) {
  const Samples s = Synthesize(50.0, 4.0, 0.5, 0.0, 0.0, 41, 0.2, 0.4);
  const VelocityFit f = fit_velocity(s.t, s.v);
  EXPECT_NEAR(f.pulse.rap_tc(), 0.5, 0.01);
}

TEST(VelocityFitTest, FlatProfileIsDegenerate) {
  const std::vector<double> t = {0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06};
  const std::vector<double> v(t.size(), 7.0);
  const VelocityFit f = fit_velocity(t, v);
  EXPECT_TRUE(f.degenerate);
  EXPECT_NEAR(f.pulse.tc, 0.03, 1e-12);
  EXPECT_EQ(f.training.Vi, 7.0);
  EXPECT_EQ(f.training.Vf, 7.0);
  EXPECT_NEAR(f.residual, 0.0, 1e-9);
}

TEST(VelocityFitTest, RejectsShortSlice) {
  const std::vector<double> t = {0.0, 0.1, 0.2, 0.3}, v = {0, 1, 1, 0};
  EXPECT_THROW(fit_velocity(t, v), Error);
}

TEST(VelocityFitPropertyTest, RoundTripOverShapeRange) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> K(5, 300), p(1, 10), rap(0.2, 0.8), V(0, 40), dur(0.1, 0.6);
  for (int trial = 0; trial < 60; ++trial) {
    const double k = K(rng), pp = p(rng), r = rap(rng), d = dur(rng);
    const Samples s = Synthesize(k, pp, r, V(rng), V(rng), static_cast<int>(d * 100) + 1, 0.0, d);
    const VelocityFit f = fit_velocity(s.t, s.v);
    EXPECT_NEAR(f.pulse.K, k, 0.01 * k) << "trial " << trial;
    EXPECT_NEAR(f.pulse.tc, r * d, 0.01 * d) << "trial " << trial;
    EXPECT_NEAR(f.pulse.p, pp, 0.05 * pp) << "trial " << trial;
  }
}

TEST(VelocityFitPropertyTest, ResidualUnderNoiseIsBounded) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> K(20, 300), p(1.5, 6), rap(0.3, 0.7);
  for (int trial = 0; trial < 30; ++trial) {
    const double k = K(rng);
    Samples s = Synthesize(k, p(rng), rap(rng), 5.0, 10.0, 41, 0.0, 0.4);
    std::normal_distribution<double> noise(0.0, 0.02 * k);
    for (double& v : s.v) v += noise(rng);
    EXPECT_LE(fit_velocity(s.t, s.v).residual, 0.05 * k) << "trial " << trial;
  }
}

}  // namespace
}  // namespace betascript

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


#include "betascript/filter.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

namespace betascript {
namespace {

SosFilter DefaultFilter() { return design_cheby2_lowpass(4, 40.0, 12.0, 100.0); }

// Reference cascade for order 4, 40 dB, 12 Hz edge at 100 Hz from an
// independent design routine. Section gains are distributed differently, so
// only the overall response is compared.
const std::vector<Biquad> kReference = {
    {0.014390591248522232, 0.00097888184451465246, 0.014390591248522235, 1, -1.3130795492176115,
     0.44837157362846081},
    {1, -1.3793642780248272, 0.99999999999999967, 1, -1.6329122957546058, 0.76943297462745441},
};

TEST(FilterTest, MatchesReferenceResponse) {
  const SosFilter f = DefaultFilter();
  const SosFilter ref{kReference};
  ASSERT_EQ(f.sections.size(), 2u);
  for (double hz = 0.0; hz < 50.0; hz += 0.5) {
    EXPECT_NEAR(magnitude_response(f, hz, 100.0), magnitude_response(ref, hz, 100.0), 1e-9) << hz;
  }
}

TEST(FilterTest, PassbandStopbandAndDcGain) {
  const SosFilter f = DefaultFilter();
  EXPECT_NEAR(magnitude_response(f, 0.0, 100.0), 1.0, 1e-12);
  EXPECT_NEAR(magnitude_response(f, 2.0, 100.0), 1.0, 0.01);
  EXPECT_NEAR(magnitude_response(f, 12.0, 100.0), 0.01, 1e-9);
  EXPECT_LE(20.0 * std::log10(magnitude_response(f, 30.0, 100.0)), -40.0);
  for (double hz = 12.0; hz <= 50.0; hz += 0.25) {
    EXPECT_LE(magnitude_response(f, hz, 100.0), 0.01 + 1e-9) << hz;
  }
}

TEST(FilterTest, FiltfiltMatchesReference) {
  const SosFilter f = DefaultFilter();
  std::vector<double> x(40);
  for (int i = 0; i < 40; ++i) {
    const double t = i / 100.0;
    x[i] = std::sin(2 * std::numbers::pi * 3 * t) + 0.5 * std::cos(2 * std::numbers::pi * 20 * t) + 0.05 * i;
  }
  const auto y = filtfilt(f, x);
  ASSERT_EQ(y.size(), x.size());
  EXPECT_NEAR(y[0], 0.47416208911157381, 1e-9);
  EXPECT_NEAR(y[1], 0.58531331091215222, 1e-9);
  EXPECT_NEAR(y[5], 1.0482157657007001, 1e-9);
  EXPECT_NEAR(y[17], 0.80205888081796939, 1e-9);
  EXPECT_NEAR(y[30], 0.908327877067027, 1e-9);
  EXPECT_NEAR(y[39], 3.0122125791936387, 1e-9);
}

TEST(FilterTest, ConstantSignalIsUnchanged) {
  const std::vector<double> x(50, 3.25);
  for (double v : filtfilt(DefaultFilter(), x)) EXPECT_NEAR(v, 3.25, 1e-12);
}

TEST(FilterTest, LinearityProperty) {
  const SosFilter f = DefaultFilter();
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> a(64), b(64), mix(64);
    const double alpha = n(rng), beta = n(rng);
    for (int i = 0; i < 64; ++i) {
      a[i] = n(rng);
      b[i] = n(rng);
      mix[i] = alpha * a[i] + beta * b[i];
    }
    const auto fa = filtfilt(f, a), fb = filtfilt(f, b), fm = filtfilt(f, mix);
    for (int i = 0; i < 64; ++i) EXPECT_NEAR(fm[i], alpha * fa[i] + beta * fb[i], 1e-10);
  }
}

TEST(FilterTest, ZeroPhaseKeepsSymmetricPulseSymmetric) {
  std::vector<double> x(81);
  for (int i = 0; i < 81; ++i) x[i] = std::exp(-0.5 * std::pow((i - 40) / 4.0, 2));
  const auto y = filtfilt(DefaultFilter(), x);
  // Edge transients of the two passes differ slightly; the pulse body does not.
  for (int i = 20; i <= 40; ++i) EXPECT_NEAR(y[i], y[80 - i], 1e-4) << i;
  EXPECT_EQ(std::max_element(y.begin(), y.end()) - y.begin(), 40);
}

TEST(FilterTest, RejectsInvalidDesign) {
  EXPECT_THROW(design_cheby2_lowpass(0, 40.0, 12.0, 100.0), Error);
  EXPECT_THROW(design_cheby2_lowpass(4, 40.0, 60.0, 100.0), Error);
  EXPECT_THROW(design_cheby2_lowpass(4, -1.0, 12.0, 100.0), Error);
}

}  // namespace
}  // namespace betascript

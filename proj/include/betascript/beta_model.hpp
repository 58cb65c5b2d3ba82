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

// Extended Beta-Elliptic stroke model.
//
// Kinematics: a stroke's curvilinear velocity on [t0, t1] is a Beta impulse
//
//   K * ((t - t0) / (tc - t0))^p * ((t1 - t) / (t1 - tc))^q
//
// riding on a monotone cubic training (drag) component that runs from Vi at
// t0 to Vf at t1 with zero slope at both ends. q is not free: the impulse
// peaks at tc exactly when q = p (t1 - tc) / (tc - t0).
//
// Geometry: two elliptic arcs sharing the major-axis direction and joined at
// the link point M2 (a minor-axis vertex of both ellipses). Curvature at such
// a vertex is b / a^2, so continuity forces a2 = a1 * sqrt(b2 / b1).

#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "betascript/error.hpp"

namespace betascript {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double derive_q(double p, double t0, double tc, double t1) {
  if (!(t0 < tc && tc < t1)) throw Error(Error::Kind::kInvalidInput, "degenerate Beta interval (need t0 < tc < t1)");
  if (!(p > 0.0)) throw Error(Error::Kind::kInvalidInput, "Beta shape parameter p must be positive");
  return p * (t1 - tc) / (tc - t0);
}

struct BetaPulseParams {
  double K = 0.0;
  double t0 = 0.0;
  double t1 = 1.0;
  double tc = 0.5;
  double p = 1.0;
  double q = 1.0;

  // q is always derived from (p, t0, tc, t1).
  static BetaPulseParams make(double K, double t0, double tc, double t1, double p) {
    return {K, t0, t1, tc, p, derive_q(p, t0, tc, t1)};
  }

  double duration() const { return t1 - t0; }
  double rap_tc() const { return (tc - t0) / (t1 - t0); }

  bool valid() const {
    return t0 < tc && tc < t1 && K > 0.0 && p > 0.0 && q > 0.0 &&
           std::abs(q - p * (t1 - tc) / (tc - t0)) <= 1e-9 * std::max(1.0, q);
  }
};

inline double beta_pulse(const BetaPulseParams& b, double t) {
  if (t <= b.t0 || t >= b.t1) return 0.0;
  const double u = (t - b.t0) / (b.tc - b.t0);
  const double w = (b.t1 - t) / (b.t1 - b.tc);
  return b.K * std::pow(u, b.p) * std::pow(w, b.q);
}

struct TrainingComponentParams {
  double Vi = 0.0;
  double Vf = 0.0;

  double A(double t0, double t1) const {
    const double d = t1 - t0;
    return -6.0 * (Vf - Vi) / (d * d * d);
  }
  // Time average over [t0, t1]; the integral of the cubic is (Vi + Vf) / 2.
  double mean() const { return 0.5 * (Vi + Vf); }
};

namespace detail {

inline void check_in_interval(double t, double t0, double t1) {
  const double slack = 1e-12 * std::max(1.0, std::abs(t1 - t0));
  if (t < t0 - slack || t > t1 + slack) {
    throw Error(Error::Kind::kInvalidInput, "time outside stroke interval [t0, t1]");
  }
}

}  // namespace detail

inline double training_component(const TrainingComponentParams& tr, double t0, double t1, double t) {
  detail::check_in_interval(t, t0, t1);
  const double s = t - t0;
  const double d = t1 - t0;
  return tr.A(t0, t1) * (s * s * s / 3.0 - d * s * s / 2.0) + tr.Vi;
}

struct EllipticArcPair {
  double a1 = 1.0;
  double b1 = 1.0;
  double b2 = 1.0;
  double theta = 0.0;     // shared major-axis direction (direction of motion at M2)
  double theta_p1 = 0.0;  // tangent at the first point M1
  double theta_p2 = 0.0;  // tangent at the last point M3
  Point2 link_point;      // M2
  // +1 when the arcs turn counter-clockwise (left) as the pen moves.
  int turn = 1;

  double a2() const { return a1 * std::sqrt(b2 / b1); }
};

struct BetaStroke {
  BetaPulseParams pulse;
  TrainingComponentParams training;
  EllipticArcPair arcs;
  std::pair<std::size_t, std::size_t> sample_range{0, 0};
  double fit_residual = 0.0;
  bool velocity_degenerate = false;
  bool geometry_degenerate = false;
};

inline double reconstruct_velocity(const BetaStroke& s, double t) {
  detail::check_in_interval(t, s.pulse.t0, s.pulse.t1);
  return beta_pulse(s.pulse, t) + training_component(s.training, s.pulse.t0, s.pulse.t1, t);
}

// Sum of the strokes' Beta impulses at t.
inline double superpose(std::span<const BetaStroke> strokes, double t) {
  double v = 0.0;
  for (const auto& s : strokes) v += beta_pulse(s.pulse, t);
  return v;
}

// Wraps to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double kPi = std::numbers::pi;
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

}  // namespace betascript

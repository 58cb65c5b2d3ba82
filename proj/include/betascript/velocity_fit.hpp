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

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "betascript/beta_model.hpp"
#include "betascript/error.hpp"

namespace betascript {

struct VelocityFitConfig {
  double p_min = 0.1;
  double p_max = 30.0;
  int max_iterations = 50;
  double relative_tolerance = 1e-8;
  // Amplitude substituted for impulse-free slices.
  double degenerate_amplitude = 1e-12;
};

struct VelocityFit {
  BetaPulseParams pulse;
  TrainingComponentParams training;
  double residual = 0.0;  // RMS of V_R - v over the slice
  bool degenerate = false;
  int iterations = 0;
};

namespace detail {

// Impulse value and its partial derivatives w.r.t. (K, tc, p), q tied to p.
struct PulseJet {
  double value = 0.0;
  std::array<double, 3> grad{0.0, 0.0, 0.0};
};

inline PulseJet pulse_jet(double K, double tc, double p, double t0, double t1, double t) {
  PulseJet j;
  if (t <= t0 || t >= t1) return j;
  const double lu = std::log((t - t0) / (tc - t0));
  const double lw = std::log((t1 - t) / (t1 - tc));
  const double q = p * (t1 - tc) / (tc - t0);
  const double shape = std::exp(p * lu + q * lw);
  j.value = K * shape;
  j.grad[0] = shape;
  j.grad[1] = j.value * (-p * (t1 - t0) / ((tc - t0) * (tc - t0))) * lw;
  j.grad[2] = j.value * (lu + (q / p) * lw);
  return j;
}

inline double excess_cost(std::span<const double> t, std::span<const double> excess, double K, double tc,
                          double p, double t0, double t1) {
  double c = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = pulse_jet(K, tc, p, t0, t1, t[i]).value - excess[i];
    c += r * r;
  }
  return c;
}

}  // namespace detail

// Decomposes a velocity slice into a Beta impulse plus the training component
// anchored at the endpoint velocities. The impulse is fitted to the excess
// v - V_Tra: initial (tc, K) at the excess peak, p by a bounded scalar search
// with q tied, then damped Gauss-Newton (Levenberg-Marquardt) on (K, tc, p).
inline VelocityFit fit_velocity(std::span<const double> t, std::span<const double> v,
                                const VelocityFitConfig& cfg = {}) {
  const std::size_t n = t.size();
  if (n != v.size()) throw Error(Error::Kind::kShapeMismatch, "time and velocity lengths differ");
  if (n < 5) throw Error(Error::Kind::kInvalidInput, "velocity slice needs at least 5 samples");
  const double t0 = t.front();
  const double t1 = t.back();
  if (!(t1 > t0)) throw Error(Error::Kind::kInvalidInput, "velocity slice has zero duration");

  VelocityFit fit;
  fit.training = {v.front(), v.back()};
  std::vector<double> excess(n);
  double vscale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    excess[i] = v[i] - training_component(fit.training, t0, t1, t[i]);
    vscale = std::max(vscale, std::abs(v[i]));
  }

  std::size_t peak = 1;
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (excess[i] > excess[peak]) peak = i;

  auto finish = [&](double K, double tc, double p) {
    fit.pulse = BetaPulseParams::make(K, t0, tc, t1, p);
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = beta_pulse(fit.pulse, t[i]) + training_component(fit.training, t0, t1, t[i]) - v[i];
      c += r * r;
    }
    fit.residual = std::sqrt(c / static_cast<double>(n));
    return fit;
  };

  if (!(excess[peak] > 1e-12 * std::max(1.0, vscale))) {
    fit.degenerate = true;
    return finish(cfg.degenerate_amplitude, 0.5 * (t0 + t1), 1.0);
  }

  double K = excess[peak];
  double tc = t[peak];

  // Scalar search for p on a log grid, refined by golden section.
  const double lo = std::log(cfg.p_min), hi = std::log(cfg.p_max);
  constexpr int kGrid = 64;
  int best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int g = 0; g < kGrid; ++g) {
    const double lp = lo + (hi - lo) * g / (kGrid - 1);
    const double c = detail::excess_cost(t, excess, K, tc, std::exp(lp), t0, t1);
    if (c < best_cost) {
      best_cost = c;
      best = g;
    }
  }
  double a = lo + (hi - lo) * std::max(best - 1, 0) / (kGrid - 1);
  double b = lo + (hi - lo) * std::min(best + 1, kGrid - 1) / (kGrid - 1);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 60 && b - a > 1e-10; ++it) {
    const double c1 = b - gr * (b - a);
    const double c2 = a + gr * (b - a);
    if (detail::excess_cost(t, excess, K, tc, std::exp(c1), t0, t1) <
        detail::excess_cost(t, excess, K, tc, std::exp(c2), t0, t1)) {
      b = c2;
    } else {
      a = c1;
    }
  }
  double p = std::exp(0.5 * (a + b));

  const double dt = t1 - t0;
  const double tc_lo = t0 + 1e-4 * dt, tc_hi = t1 - 1e-4 * dt;
  auto project = [&](Eigen::Vector3d& x) {
    x[0] = std::max(x[0], cfg.degenerate_amplitude);
    x[1] = std::clamp(x[1], tc_lo, tc_hi);
    x[2] = std::clamp(x[2], cfg.p_min, cfg.p_max);
  };

  Eigen::Vector3d x(K, tc, p);
  project(x);
  double cost = detail::excess_cost(t, excess, x[0], x[1], x[2], t0, t1);
  double lambda = 1e-3;
  int it = 0;
  for (; it < cfg.max_iterations && cost > 0.0; ++it) {
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const auto jet = detail::pulse_jet(x[0], x[1], x[2], t0, t1, t[i]);
      const Eigen::Vector3d g(jet.grad[0], jet.grad[1], jet.grad[2]);
      jtj += g * g.transpose();
      jtr += g * (jet.value - excess[i]);
    }
    bool accepted = false;
    while (lambda < 1e16) {
      Eigen::Matrix3d damped = jtj;
      for (int d = 0; d < 3; ++d) damped(d, d) += lambda * std::max(jtj(d, d), 1e-300);
      Eigen::Vector3d cand = x - damped.ldlt().solve(jtr);
      project(cand);
      const double c = detail::excess_cost(t, excess, cand[0], cand[1], cand[2], t0, t1);
      if (std::isfinite(c) && c < cost) {
        const double rel = (cost - c) / cost;
        x = cand;
        cost = c;
        lambda = std::max(lambda * 0.3, 1e-12);
        accepted = true;
        if (rel < cfg.relative_tolerance) it = cfg.max_iterations;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
  }
  fit.iterations = std::min(it, cfg.max_iterations);
  return finish(x[0], x[1], x[2]);
}

}  // namespace betascript

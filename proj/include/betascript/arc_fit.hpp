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

// Two-arc elliptic fit of a stroke's geometry.
//
// In the local frame at the link point M2 (u along the shared major axis in
// the direction of motion, w toward the outside of the turn) both ellipses
// have their minor-axis vertex at the origin:
//
//   u^2 / a^2 + (w + b)^2 / b^2 = 1,
//
// with (a1, b1) before M2 and (a2, b2) after it, a2 = a1 sqrt(b2 / b1).
// The residual is the algebraic distance scaled by b / 2, which approximates
// the normal distance near the vertex.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "betascript/beta_model.hpp"
#include "betascript/error.hpp"

namespace betascript {

struct ArcFitConfig {
  int max_iterations = 100;
  double relative_tolerance = 1e-12;
  // Points within this fraction of the path length of the chord line count
  // as collinear.
  double collinear_tolerance = 1e-6;
  // Semi-axes are kept within [min, max] * path length.
  double min_axis_fraction = 1e-3;
  double max_axis_fraction = 1e3;
  // Weight of a pull toward circular arcs, log(a / b) -> 0 for each arc, in
  // path-normalized units. It only decides directions the points leave
  // undetermined, such as the axes of a nearly straight arc.
  double shape_prior = 1e-3;
};

struct ArcFit {
  EllipticArcPair arcs;
  bool degenerate = false;
  double residual = 0.0;  // RMS scaled algebraic distance
};

namespace detail {

inline double direction_between(std::span<const Point2> pts, std::size_t i, std::size_t j) {
  return std::atan2(pts[j].y - pts[i].y, pts[j].x - pts[i].x);
}

// Tangent at an endpoint from the first neighbour that differs from it.
inline double end_tangent(std::span<const Point2> pts, bool at_start) {
  const std::size_t n = pts.size();
  if (at_start) {
    for (std::size_t j = 1; j < n; ++j)
      if (pts[j] != pts[0]) return direction_between(pts, 0, j);
  } else {
    for (std::size_t j = n - 1; j-- > 0;)
      if (pts[j] != pts[n - 1]) return direction_between(pts, j, n - 1);
  }
  return 0.0;
}

struct ArcModel {
  std::span<const Point2> pts;
  std::size_t split;
  Point2 m2;
  int turn;
  double prior;

  // x = (theta, log a1, log b1, log b2). The last two entries are the prior.
  void residuals(const Eigen::Vector4d& x, Eigen::VectorXd& r) const {
    const double c = std::cos(x[0]), s = std::sin(x[0]);
    const double a1 = std::exp(x[1]), b1 = std::exp(x[2]), b2 = std::exp(x[3]);
    const double a2 = a1 * std::sqrt(b2 / b1);
    const auto n = static_cast<Eigen::Index>(pts.size());
    r.resize(n + 2);
    r[n] = prior * (x[1] - x[2]);
    r[n + 1] = prior * (x[1] + 0.5 * (x[3] - x[2]) - x[3]);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double dx = pts[i].x - m2.x, dy = pts[i].y - m2.y;
      const double u = dx * c + dy * s;
      const double w = -turn * (-dx * s + dy * c);
      const double a = i < split ? a1 : a2;
      const double b = i < split ? b1 : b2;
      r[static_cast<Eigen::Index>(i)] = (u * u / (a * a) + (w + b) * (w + b) / (b * b) - 1.0) * b * 0.5;
    }
  }
};

// Solves a u^2 + g w^2 = -2 w in least squares; returns (a, b) or false.
inline bool conic_init(const std::vector<double>& us, const std::vector<double>& ws, double& a, double& b) {
  Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
  Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < us.size(); ++i) {
    const Eigen::Vector2d row(us[i] * us[i], ws[i] * ws[i]);
    m += row * row.transpose();
    rhs += row * (-2.0 * ws[i]);
  }
  if (std::abs(m.determinant()) < 1e-300) return false;
  const Eigen::Vector2d sol = m.ldlt().solve(rhs);
  if (!(sol[0] > 0.0) || !(sol[1] > 0.0)) return false;
  b = 1.0 / sol[1];
  a = std::sqrt(b / sol[0]);
  return std::isfinite(a) && std::isfinite(b);
}

}  // namespace detail

// Fits the arc pair to `pts`, joining the arcs at `split` (usually the sample
// of peak velocity). Collinear input falls back to a flagged straight-line
// description.
inline ArcFit fit_arc_pair(std::span<const Point2> pts, std::size_t split, const ArcFitConfig& cfg = {}) {
  const std::size_t n = pts.size();
  if (n < 6) throw Error(Error::Kind::kInvalidInput, "arc fitting needs at least 6 points");
  split = std::clamp<std::size_t>(split, 1, n - 2);

  ArcFit out;
  out.arcs.theta_p1 = detail::end_tangent(pts, true);
  out.arcs.theta_p2 = detail::end_tangent(pts, false);
  out.arcs.link_point = pts[split];

  double path = 0.0;
  for (std::size_t i = 1; i < n; ++i) path += std::hypot(pts[i].x - pts[i - 1].x, pts[i].y - pts[i - 1].y);

  const double cx = pts[n - 1].x - pts[0].x, cy = pts[n - 1].y - pts[0].y;
  const double chord = std::hypot(cx, cy);
  bool collinear = path == 0.0;
  if (!collinear && chord > 1e-12 * path) {
    double dev = 0.0;
    for (const auto& p : pts) dev = std::max(dev, std::abs((p.x - pts[0].x) * cy - (p.y - pts[0].y) * cx) / chord);
    collinear = dev <= cfg.collinear_tolerance * path;
  }
  if (collinear) {
    const double eps = 1e-9 * std::max(path, 1e-300);
    out.degenerate = true;
    out.arcs.theta = chord > 0.0 ? std::atan2(cy, cx) : 0.0;
    out.arcs.a1 = chord > 0.0 ? 0.5 * chord : eps;
    out.arcs.b1 = eps;
    out.arcs.b2 = eps;
    out.arcs.turn = 1;
    return out;
  }

  // Fit in units of path length about M2 so the estimate is scale-equivariant
  // even where the cost is flat (nearly straight arcs).
  std::vector<Point2> unit(n);
  for (std::size_t i = 0; i < n; ++i) unit[i] = {(pts[i].x - pts[split].x) / path, (pts[i].y - pts[split].y) / path};
  const Point2 m2{0.0, 0.0};
  const double theta0 = detail::direction_between(unit, split - 1, split + 1);
  double side = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    side += -(unit[i].x - m2.x) * std::sin(theta0) + (unit[i].y - m2.y) * std::cos(theta0);
  }
  const int turn = side >= 0.0 ? 1 : -1;

  // Per-arc linear initialization in the initial frame.
  std::vector<double> u1, w1, u2, w2;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == split) continue;
    const double dx = unit[i].x - m2.x, dy = unit[i].y - m2.y;
    const double u = dx * std::cos(theta0) + dy * std::sin(theta0);
    const double w = -turn * (-dx * std::sin(theta0) + dy * std::cos(theta0));
    (i < split ? u1 : u2).push_back(u);
    (i < split ? w1 : w2).push_back(w);
  }
  double a1 = 0.5, b1 = 0.25, a2 = a1, b2 = b1;
  if (!detail::conic_init(u1, w1, a1, b1)) {
    a1 = 0.5;
    b1 = 0.25;
  }
  if (!detail::conic_init(u2, w2, a2, b2)) b2 = b1;

  const double lmin = std::log(cfg.min_axis_fraction), lmax = std::log(cfg.max_axis_fraction);
  auto project = [&](Eigen::Vector4d& x) {
    for (int d = 1; d < 4; ++d) x[d] = std::clamp(x[d], lmin, lmax);
  };

  const detail::ArcModel model{unit, split, m2, turn, cfg.shape_prior};
  Eigen::Vector4d x(theta0, std::log(a1), std::log(b1), std::log(b2));
  project(x);
  Eigen::VectorXd r, rp, rm;
  model.residuals(x, r);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(n) + 2, 4);
  for (int it = 0; it < cfg.max_iterations && cost > 0.0; ++it) {
    for (int d = 0; d < 4; ++d) {
      const double h = 1e-7 * std::max(1.0, std::abs(x[d]));
      Eigen::Vector4d xp = x, xm = x;
      xp[d] += h;
      xm[d] -= h;
      model.residuals(xp, rp);
      model.residuals(xm, rm);
      jac.col(d) = (rp - rm) / (2.0 * h);
    }
    const Eigen::Matrix4d jtj = jac.transpose() * jac;
    const Eigen::Vector4d jtr = jac.transpose() * r;
    bool accepted = false;
    while (lambda < 1e16) {
      Eigen::Matrix4d damped = jtj;
      for (int d = 0; d < 4; ++d) damped(d, d) += lambda * std::max(jtj(d, d), 1e-300);
      Eigen::Vector4d cand = x - damped.ldlt().solve(jtr);
      project(cand);
      Eigen::VectorXd rc;
      model.residuals(cand, rc);
      const double c = rc.squaredNorm();
      if (std::isfinite(c) && c < cost) {
        const double rel = (cost - c) / cost;
        x = cand;
        r = rc;
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

  out.arcs.theta = wrap_angle(x[0]);
  out.arcs.a1 = path * std::exp(x[1]);
  out.arcs.b1 = path * std::exp(x[2]);
  out.arcs.b2 = path * std::exp(x[3]);
  out.arcs.turn = turn;
  out.residual = path * r.head(static_cast<Eigen::Index>(n)).norm() / std::sqrt(static_cast<double>(n));
  return out;
}

}  // namespace betascript

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

// Curvilinear velocity and Beta-stroke segmentation at velocity minima and
// double-inflexion points.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "betascript/error.hpp"
#include "betascript/ink.hpp"

namespace betascript {

struct VelocityProfile {
  std::vector<double> t;
  std::vector<double> v;

  std::size_t size() const { return v.size(); }
};

enum class BoundaryKind { kTraceStart, kVelocityMinimum, kDoubleInflexion, kTraceEnd };

inline std::string_view boundary_kind_name(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::kTraceStart:
      return "trace-start";
    case BoundaryKind::kVelocityMinimum:
      return "velocity-minimum";
    case BoundaryKind::kDoubleInflexion:
      return "double-inflexion";
    case BoundaryKind::kTraceEnd:
      return "trace-end";
  }
  return "trace-start";
}

inline BoundaryKind parse_boundary_kind(std::string_view s) {
  if (s == "trace-start") return BoundaryKind::kTraceStart;
  if (s == "velocity-minimum") return BoundaryKind::kVelocityMinimum;
  if (s == "double-inflexion") return BoundaryKind::kDoubleInflexion;
  if (s == "trace-end") return BoundaryKind::kTraceEnd;
  throw Error(Error::Kind::kParse, "unknown boundary kind '" + std::string(s) + "'");
}

struct StrokeBoundary {
  std::size_t index = 0;
  BoundaryKind kind = BoundaryKind::kTraceStart;

  friend bool operator==(const StrokeBoundary&, const StrokeBoundary&) = default;
};

// Closed sample range [begin, end]; adjacent slices share their boundary.
struct StrokeSlice {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin + 1; }
  friend bool operator==(const StrokeSlice&, const StrokeSlice&) = default;
};

struct SegmentationConfig {
  // A minimum is kept when the lower of its two flanking peaks rises at least
  // this fraction of max(v) above it.
  double prominence_fraction = 0.05;
  // Double-inflexion window half-width (7-sample window).
  int inflexion_half_window = 3;
  // |v'| must stay under this fraction of max |v'| at a double inflexion.
  double inflexion_slope_fraction = 0.10;
  std::size_t min_stroke_samples = 5;
};

// Central differences inside, one-sided at the ends.
inline VelocityProfile compute_velocity(const Trace& trace) {
  const std::size_t n = trace.size();
  if (n < 3) throw Error(Error::Kind::kInvalidInput, "trace too short for velocity (< 3 samples)");
  const auto& s = trace.samples;
  VelocityProfile prof;
  prof.t.resize(n);
  prof.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 == n ? n - 1 : i + 1;
    const double dt = s[b].t - s[a].t;
    prof.t[i] = s[i].t;
    prof.v[i] = std::hypot(s[b].x - s[a].x, s[b].y - s[a].y) / dt;
  }
  return prof;
}

namespace detail {

// First derivative w.r.t. time; central inside, one-sided at ends.
inline std::vector<double> time_gradient(const std::vector<double>& t, const std::vector<double>& f) {
  const std::size_t n = f.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 == n ? n - 1 : i + 1;
    d[i] = (f[b] - f[a]) / (t[b] - t[a]);
  }
  return d;
}

inline int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

struct Candidate {
  std::size_t index;
  BoundaryKind kind;
  double score;  // lower is a better boundary
};

// Local minima (plateaus collapse to their middle index) that pass the
// prominence test.
inline std::vector<Candidate> velocity_minima(const VelocityProfile& p, const SegmentationConfig& cfg) {
  const auto& v = p.v;
  const std::size_t n = v.size();
  const double vmax = *std::max_element(v.begin(), v.end());
  std::vector<Candidate> out;
  std::size_t i = 1;
  while (i + 1 < n) {
    if (v[i] < v[i - 1]) {
      std::size_t r = i;
      while (r + 1 < n && v[r + 1] == v[i]) ++r;
      if (r + 1 < n && v[r + 1] > v[i]) {
        const std::size_t c = (i + r) / 2;
        double left_peak = v[c];
        for (std::size_t j = c; j-- > 0;) {
          if (v[j] < v[c]) break;
          left_peak = std::max(left_peak, v[j]);
        }
        double right_peak = v[c];
        for (std::size_t j = c + 1; j < n; ++j) {
          if (v[j] < v[c]) break;
          right_peak = std::max(right_peak, v[j]);
        }
        if (std::min(left_peak, right_peak) - v[c] >= cfg.prominence_fraction * vmax && vmax > 0.0) {
          out.push_back({c, BoundaryKind::kVelocityMinimum, v[c]});
        }
      }
      i = r + 1;
    } else {
      ++i;
    }
  }
  return out;
}

// A convex pocket of v (v'' > 0, bracketed by sign changes of v'' on both
// sides within the window) where the slope nearly vanishes but no minimum
// forms. One candidate per run of qualifying indices, at the smallest |v'|.
inline std::vector<Candidate> double_inflexions(const VelocityProfile& p, const SegmentationConfig& cfg) {
  const auto& v = p.v;
  const std::size_t n = v.size();
  const auto k = static_cast<std::size_t>(std::max(cfg.inflexion_half_window, 1));
  std::vector<Candidate> out;
  if (n < 2 * k + 1) return out;
  const auto d1 = time_gradient(p.t, v);
  const auto d2 = time_gradient(p.t, d1);
  double max_slope = 0.0;
  for (double d : d1) max_slope = std::max(max_slope, std::abs(d));
  const double vmax = *std::max_element(v.begin(), v.end());
  if (max_slope == 0.0) return out;

  auto changes_between = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t j = lo; j < hi; ++j)
      if (sign_of(d2[j]) != sign_of(d2[j + 1])) return true;
    return false;
  };

  std::vector<bool> ok(n, false);
  for (std::size_t i = k; i + k < n; ++i) {
    if (!(d2[i] > 0.0)) continue;
    if (std::abs(d1[i]) >= cfg.inflexion_slope_fraction * max_slope) continue;
    if (v[i] < cfg.prominence_fraction * vmax) continue;
    if (changes_between(i - k, i) && changes_between(i, i + k)) ok[i] = true;
  }
  for (std::size_t i = 0; i < n;) {
    if (!ok[i]) {
      ++i;
      continue;
    }
    std::size_t best = i;
    std::size_t j = i;
    for (; j < n && ok[j]; ++j)
      if (std::abs(d1[j]) < std::abs(d1[best])) best = j;
    out.push_back({best, BoundaryKind::kDoubleInflexion, std::abs(d1[best])});
    i = j;
  }
  return out;
}

}  // namespace detail

// Trace start, accepted interior boundaries, trace end. Interior boundaries
// are at least `min_stroke_samples` apart from each other and from the ends;
// velocity minima win over inflexions, lower velocity wins among minima.
inline std::vector<StrokeBoundary> detect_boundaries(const VelocityProfile& profile,
                                                     const SegmentationConfig& cfg = {}) {
  const std::size_t n = profile.size();
  if (n == 0) throw Error(Error::Kind::kInvalidInput, "empty velocity profile");
  std::vector<StrokeBoundary> out{{0, BoundaryKind::kTraceStart}};
  if (n < 2) return out;
  if (n >= 5) {
    auto minima = detail::velocity_minima(profile, cfg);
    auto inflex = detail::double_inflexions(profile, cfg);
    std::sort(minima.begin(), minima.end(), [](const auto& a, const auto& b) {
      return a.score != b.score ? a.score < b.score : a.index < b.index;
    });
    std::sort(inflex.begin(), inflex.end(), [](const auto& a, const auto& b) {
      return a.score != b.score ? a.score < b.score : a.index < b.index;
    });
    std::vector<detail::Candidate> ordered = minima;
    ordered.insert(ordered.end(), inflex.begin(), inflex.end());

    const std::size_t gap = cfg.min_stroke_samples;
    std::vector<std::size_t> accepted{0, n - 1};
    std::vector<StrokeBoundary> interior;
    for (const auto& c : ordered) {
      const bool far_enough = std::all_of(accepted.begin(), accepted.end(), [&](std::size_t a) {
        const std::size_t d = a > c.index ? a - c.index : c.index - a;
        return d >= gap;
      });
      if (!far_enough) continue;
      accepted.push_back(c.index);
      interior.push_back({c.index, c.kind});
    }
    std::sort(interior.begin(), interior.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
    out.insert(out.end(), interior.begin(), interior.end());
  }
  out.push_back({n - 1, BoundaryKind::kTraceEnd});
  return out;
}

// Splits the sample range at the boundaries. Slices with fewer than
// `min_stroke_samples` samples are merged away by removing whichever of their
// interior boundaries has the higher velocity.
inline std::vector<StrokeSlice> split_strokes(const VelocityProfile& profile,
                                              const std::vector<StrokeBoundary>& boundaries,
                                              const SegmentationConfig& cfg = {}) {
  if (boundaries.size() < 2) throw Error(Error::Kind::kInvalidInput, "need at least start and end boundaries");
  std::vector<std::size_t> idx;
  for (const auto& b : boundaries) {
    if (b.index >= profile.size()) throw Error(Error::Kind::kInvalidInput, "boundary index out of range");
    if (!idx.empty() && b.index <= idx.back()) {
      throw Error(Error::Kind::kInvalidInput, "boundary indices must be strictly increasing");
    }
    idx.push_back(b.index);
  }
  while (idx.size() > 2) {
    std::size_t shortest = 0;
    std::size_t shortest_len = std::numeric_limits<std::size_t>::max();
    for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
      const std::size_t len = idx[k + 1] - idx[k] + 1;
      if (len < shortest_len) {
        shortest_len = len;
        shortest = k;
      }
    }
    if (shortest_len >= cfg.min_stroke_samples) break;
    // Interior boundaries only: the first and last index never move.
    const bool left_interior = shortest > 0;
    const bool right_interior = shortest + 1 < idx.size() - 1;
    std::size_t drop;
    if (left_interior && right_interior) {
      drop = profile.v[idx[shortest]] > profile.v[idx[shortest + 1]] ? shortest : shortest + 1;
    } else {
      drop = left_interior ? shortest : shortest + 1;
    }
    idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(drop));
  }
  std::vector<StrokeSlice> out;
  for (std::size_t k = 0; k + 1 < idx.size(); ++k) out.push_back({idx[k], idx[k + 1]});
  return out;
}

}  // namespace betascript

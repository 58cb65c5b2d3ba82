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

// Per-stroke feature vectors, fuzzy perceptual codes and segment vectors.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "betascript/beta_model.hpp"
#include "betascript/error.hpp"

namespace betascript {

// Position of a stroke or segment in its word. The numeric value is the f14
// encoding.
enum class Group { kBeginning = 0, kMiddle = 1, kEnd = 2, kIsolated = 3 };

inline constexpr std::array<Group, 4> kAllGroups{Group::kBeginning, Group::kMiddle, Group::kEnd, Group::kIsolated};

inline std::string_view group_name(Group g) {
  switch (g) {
    case Group::kBeginning:
      return "beginning";
    case Group::kMiddle:
      return "middle";
    case Group::kEnd:
      return "end";
    case Group::kIsolated:
      return "isolated";
  }
  return "beginning";
}

inline Group parse_group(std::string_view s) {
  for (Group g : kAllGroups)
    if (group_name(g) == s) return g;
  throw Error(Error::Kind::kParse, "unknown group '" + std::string(s) + "'");
}

// Stroke position code: first, last, or in between; a lone stroke is isolated.
inline Group stroke_position(std::size_t index, std::size_t count) {
  if (count <= 1) return Group::kIsolated;
  if (index == 0) return Group::kBeginning;
  if (index + 1 == count) return Group::kEnd;
  return Group::kMiddle;
}

inline constexpr std::size_t kStrokeFeatureCount = 14;
inline constexpr std::size_t kEpcCount = 4;
inline constexpr std::size_t kSegmentStrokes = 2;

// Cap on f7 for strokes whose training component averages to zero.
inline constexpr double kMaxImpulseRatio = 100.0;

struct StrokeFeatures {
  double duration = 0.0;  // f1
  double rap_tc = 0.5;    // f2
  double p = 1.0;         // f3
  double K = 0.0;         // f4
  double Vi = 0.0;        // f5
  double Vf = 0.0;        // f6
  double K_over_training = 0.0;  // f7
  double a1 = 0.0;        // f8
  double b1 = 0.0;        // f9
  double b2 = 0.0;        // f10
  double theta_p1 = 0.0;  // f11
  double theta = 0.0;     // f12
  double theta_p2 = 0.0;  // f13
  Group position = Group::kIsolated;  // f14

  std::array<double, kStrokeFeatureCount> values() const {
    return {duration, rap_tc, p, K, Vi, Vf, K_over_training, a1, b1, b2, theta_p1, theta, theta_p2,
            static_cast<double>(static_cast<int>(position))};
  }
};

inline StrokeFeatures extract_stroke_features(const BetaStroke& s, Group position) {
  const double dt = s.pulse.t1 - s.pulse.t0;
  if (!(dt > 0.0)) throw Error(Error::Kind::kInvalidInput, "stroke has non-positive duration");
  StrokeFeatures f;
  f.duration = dt;
  f.Vi = s.training.Vi;
  f.Vf = s.training.Vf;
  if (s.velocity_degenerate) {
    f.rap_tc = 0.5;
    f.p = 1.0;
    f.K = 0.0;
    f.K_over_training = 0.0;
  } else {
    f.rap_tc = s.pulse.rap_tc();
    f.p = s.pulse.p;
    f.K = s.pulse.K;
    const double mean = s.training.mean();
    f.K_over_training = mean > 0.0 ? std::min(f.K / mean, kMaxImpulseRatio) : kMaxImpulseRatio;
  }
  f.a1 = s.arcs.a1;
  f.b1 = s.geometry_degenerate ? 0.0 : s.arcs.b1;
  f.b2 = s.geometry_degenerate ? 0.0 : s.arcs.b2;
  f.theta_p1 = wrap_angle(s.arcs.theta_p1);
  f.theta = wrap_angle(s.arcs.theta);
  f.theta_p2 = wrap_angle(s.arcs.theta_p2);
  f.position = position;
  return f;
}

// EPC1 valley (-), EPC2 left oblique (/), EPC3 shaft (|), EPC4 right oblique (\).
struct FepcMembership {
  std::array<double, kEpcCount> degree{1.0, 0.0, 0.0, 0.0};

  // 0-based index of the largest degree; ties go to the lower index.
  std::size_t dominant() const {
    return static_cast<std::size_t>(std::max_element(degree.begin(), degree.end()) - degree.begin());
  }
};

inline constexpr double kFepcOverlap = std::numbers::pi / 16.0;

inline FepcMembership fepc_membership(double theta) {
  constexpr double kPi = std::numbers::pi;
  double r = std::fmod(theta, kPi);
  if (r < 0.0) r += kPi;
  FepcMembership m;
  m.degree = {0.0, 0.0, 0.0, 0.0};
  // Boundary k sits between region k and region k + 1 (mod 4).
  for (int k = 0; k < 4; ++k) {
    const double b = kPi / 8.0 + k * kPi / 4.0;
    if (r >= b - kFepcOverlap && r <= b + kFepcOverlap) {
      const double upper = (r - (b - kFepcOverlap)) / (2.0 * kFepcOverlap);
      m.degree[static_cast<std::size_t>(k)] = 1.0 - upper;
      m.degree[static_cast<std::size_t>((k + 1) % 4)] = upper;
      return m;
    }
  }
  const auto owner = static_cast<std::size_t>(std::floor((r + kPi / 8.0) / (kPi / 4.0))) % 4;
  m.degree[owner] = 1.0;
  return m;
}

enum class FeatureMode { kEbe, kEbeFepc };

inline std::string_view feature_mode_name(FeatureMode m) { return m == FeatureMode::kEbe ? "ebe" : "ebe+fepc"; }

inline FeatureMode parse_feature_mode(std::string_view s) {
  if (s == "ebe") return FeatureMode::kEbe;
  if (s == "ebe+fepc") return FeatureMode::kEbeFepc;
  throw Error(Error::Kind::kParse, "unknown feature mode '" + std::string(s) + "' (expected ebe or ebe+fepc)");
}

inline std::size_t segment_length(FeatureMode m) {
  return kSegmentStrokes * (kStrokeFeatureCount + (m == FeatureMode::kEbeFepc ? kEpcCount : 0));
}

struct SegmentFeatureVector {
  std::array<StrokeFeatures, kSegmentStrokes> strokes;
  std::array<FepcMembership, kSegmentStrokes> fepc;
  std::vector<double> values;
  FeatureMode mode = FeatureMode::kEbeFepc;
};

// [stroke1, (fepc1), stroke2, (fepc2)]
inline SegmentFeatureVector build_segment_vector(const StrokeFeatures& s1, const StrokeFeatures& s2,
                                                 FeatureMode mode) {
  SegmentFeatureVector seg;
  seg.strokes = {s1, s2};
  seg.fepc = {fepc_membership(s1.theta), fepc_membership(s2.theta)};
  seg.mode = mode;
  seg.values.reserve(segment_length(mode));
  for (std::size_t k = 0; k < kSegmentStrokes; ++k) {
    const auto v = seg.strokes[k].values();
    seg.values.insert(seg.values.end(), v.begin(), v.end());
    if (mode == FeatureMode::kEbeFepc) {
      seg.values.insert(seg.values.end(), seg.fepc[k].degree.begin(), seg.fepc[k].degree.end());
    }
  }
  return seg;
}

// Sliding windows of two consecutive strokes, stride 1. Words with fewer than
// two strokes yield nothing.
inline std::vector<SegmentFeatureVector> word_segments(std::span<const BetaStroke> strokes, FeatureMode mode) {
  std::vector<SegmentFeatureVector> out;
  if (strokes.size() < kSegmentStrokes) return out;
  std::vector<StrokeFeatures> f;
  f.reserve(strokes.size());
  for (std::size_t i = 0; i < strokes.size(); ++i) {
    f.push_back(extract_stroke_features(strokes[i], stroke_position(i, strokes.size())));
  }
  for (std::size_t i = 0; i + 1 < f.size(); ++i) out.push_back(build_segment_vector(f[i], f[i + 1], mode));
  return out;
}

}  // namespace betascript

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

// Segment pre-classification into position groups and shape subgroups.

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
#include "betascript/features.hpp"
#include "betascript/ink.hpp"
#include "toml.hpp"

namespace betascript {

enum class Band { kLow, kMedian, kTop };

inline std::string_view band_name(Band b) {
  switch (b) {
    case Band::kLow:
      return "low";
    case Band::kMedian:
      return "median";
    case Band::kTop:
      return "top";
  }
  return "low";
}

struct ShapeDescriptors {
  Point2 start, end;
  Point2 leftmost, rightmost, top, bottom;
  double width = 0.0;
  double height = 0.0;
  double path_length = 0.0;
  Band band = Band::kLow;
  double net_rotation = 0.0;
  double closure = 0.0;  // endpoint distance / path length
  // 0-based EPC index of each stroke's chord and of the whole segment's chord.
  std::array<std::size_t, kSegmentStrokes> stroke_epc{0, 0};
  std::size_t chord_epc = 0;
  bool degenerate = false;
};

// Thresholds of the rule set. Every number the rules use lives here.
struct TaxonomyRules {
  double reference_height = 128.0;
  double closed_closure = 0.2;                          // occlusions below this
  double open_closure = 0.5;                            // open curves above this
  double straight_closure = 0.8;                        // shafts above this
  double loop_rotation = 1.5 * std::numbers::pi;        // narrow occlusion / e
  double begin_occlusion_rotation = std::numbers::pi;
  double curve_rotation = 0.5 * std::numbers::pi;
  double broad_aspect = 1.0;                            // width / height
  double half_shaft_fraction = 0.5;                     // of reference height
  double arch_margin_fraction = 0.0625;                 // of reference height
};

inline TaxonomyRules parse_rules(const toml::table& root) {
  TaxonomyRules r;
  const toml::node_view<const toml::node> t = root["thresholds"];
  if (!root.contains("thresholds")) throw Error(Error::Kind::kSchema, "rules: missing [thresholds] table");
  auto get = [&](const char* key, double& dst) {
    const auto node = t[key];
    if (!node) return;
    const auto v = node.value<double>();
    if (!v) throw Error(Error::Kind::kSchema, std::string("rules: thresholds.") + key + " must be a number");
    dst = *v;
  };
  get("reference_height", r.reference_height);
  get("closed_closure", r.closed_closure);
  get("open_closure", r.open_closure);
  get("straight_closure", r.straight_closure);
  get("loop_rotation", r.loop_rotation);
  get("begin_occlusion_rotation", r.begin_occlusion_rotation);
  get("curve_rotation", r.curve_rotation);
  get("broad_aspect", r.broad_aspect);
  get("half_shaft_fraction", r.half_shaft_fraction);
  get("arch_margin_fraction", r.arch_margin_fraction);
  if (!(r.reference_height > 0.0) || !(r.closed_closure < r.open_closure) || !(r.open_closure <= r.straight_closure)) {
    throw Error(Error::Kind::kSchema, "rules: thresholds out of order");
  }
  return r;
}

inline TaxonomyRules load_rules(const std::string& path) {
  try {
    return parse_rules(toml::parse_file(path));
  } catch (const toml::parse_error& e) {
    throw Error(Error::Kind::kParse, path + ":" + std::to_string(e.source().begin.line) + ": " +
                                         std::string(e.description()));
  }
}

struct SegmentClass {
  Group group = Group::kIsolated;
  int subgroup_id = 1;
  std::string rule;  // name of the rule that fired
};

namespace detail {

struct SubgroupInfo {
  std::string_view latin;
  std::string_view arabic;
};

inline std::span<const SubgroupInfo> subgroup_table(Group g) {
  static constexpr SubgroupInfo kBeginning[] = {
      {"opened right curve", "opened right curve"},
      {"opened left curve", "opened left curve"},
      {"beginning ascending shaft", "beginning ascending shaft"},
      {"beginning descending shaft", "beginning descending shaft"},
      {"half shaft in the beginning", "half shaft in the beginning"},
      {"broad occlusion in the beginning", "broad occlusion in the beginning"},
      {"occlusion e beginning", "nabra in the beginning"},
      {"residual segments in the low", "residual segments in the low"},
      {"residual segments in the top", "residual segments in the top"},
      {"residual segments in the median", "residual segments in the median"},
  };
  static constexpr SubgroupInfo kMiddle[] = {
      {"medium ascending shaft", "medium ascending shaft"},
      {"medium descending shaft", "medium descending shaft"},
      {"broad occlusion in the medium", "broad occlusion in the medium"},
      {"begin of occlusion in the medium", "begin of occlusion in the medium"},
      {"medium occlusion", "medium occlusion"},
      {"half shaft in the medium", "half shaft in the medium"},
      {"e in the medium", "narrow occlusion in the medium"},
      {"n in the medium", "middle half Nabra"},
      {"medium valley", "ligature madda"},
      {"residual segments in the low", "residual segments in the low"},
      {"residual segments in the top", "residual segments in the top"},
      {"residual segments in the median", "residual segments in the median"},
  };
  static constexpr SubgroupInfo kEnd[] = {
      {"end ascending shaft", "end ascending shaft"},
      {"end descending shaft", "end descending shaft"},
      {"half shaft in the end", "half shaft in the end"},
      {"curvy leg end", "curvy leg end"},
      {"end occlusion", "end occlusion"},
      {"e in the end", "narrow occlusion in the end"},
      {"pocket leg end", "Nabra in the end"},
      {"residual segments in the low", "residual segments in the low"},
      {"residual segments in the top", "residual segments in the top"},
      {"residual segments in the median", "residual segments in the median"},
  };
  static constexpr SubgroupInfo kIsolated[] = {
      {"isolated shaft", "isolated shaft"},
      {"isolated begin of occlusion", "isolated begin of occlusion"},
      {"isolated pocket", "isolated pocket"},
      {"isolated j", "diacritics"},
      {"isolated O occlusion", "curvy leg isolated"},
      {"residual segments in the low", "residual segments in the low"},
      {"residual segments in the top", "residual segments in the top"},
      {"residual segments in the median", "residual segments in the median"},
  };
  switch (g) {
    case Group::kBeginning:
      return kBeginning;
    case Group::kMiddle:
      return kMiddle;
    case Group::kEnd:
      return kEnd;
    case Group::kIsolated:
      return kIsolated;
  }
  return kIsolated;
}

}  // namespace detail

inline int subgroup_count(Group g) { return static_cast<int>(detail::subgroup_table(g).size()); }

inline std::string_view subgroup_name(Group g, int id, Script script = Script::kLatin) {
  const auto table = detail::subgroup_table(g);
  if (id < 1 || id > static_cast<int>(table.size())) {
    throw Error(Error::Kind::kInvalidInput, "subgroup id out of range for group " + std::string(group_name(g)));
  }
  const auto& info = table[static_cast<std::size_t>(id - 1)];
  return script == Script::kArabic ? info.arabic : info.latin;
}

// N = 2 windows: a word with at most two strokes has one isolated segment.
inline Group assign_group(std::size_t first_stroke, std::size_t stroke_count) {
  if (stroke_count <= kSegmentStrokes) return Group::kIsolated;
  if (first_stroke == 0) return Group::kBeginning;
  if (first_stroke + kSegmentStrokes >= stroke_count) return Group::kEnd;
  return Group::kMiddle;
}

// `split` is the index of the first point of the second stroke.
inline ShapeDescriptors compute_descriptors(std::span<const Point2> pts, std::size_t split,
                                            const TaxonomyRules& rules = {}) {
  if (pts.size() < 4) throw Error(Error::Kind::kInvalidInput, "shape descriptors need at least 4 points");
  ShapeDescriptors d;
  const bool all_equal = std::all_of(pts.begin(), pts.end(), [&](const Point2& p) { return p == pts[0]; });
  if (all_equal) {
    d.degenerate = true;
    return d;
  }
  d.start = pts.front();
  d.end = pts.back();
  d.leftmost = d.rightmost = d.top = d.bottom = pts[0];
  for (const auto& p : pts) {
    if (p.x < d.leftmost.x) d.leftmost = p;
    if (p.x > d.rightmost.x) d.rightmost = p;
    if (p.y > d.top.y) d.top = p;
    if (p.y < d.bottom.y) d.bottom = p;
  }
  d.width = d.rightmost.x - d.leftmost.x;
  d.height = d.top.y - d.bottom.y;
  const double cy = 0.5 * (d.top.y + d.bottom.y);
  const double third = rules.reference_height / 3.0;
  d.band = cy < third ? Band::kLow : (cy < 2.0 * third ? Band::kMedian : Band::kTop);

  double prev_heading = 0.0;
  bool have_heading = false;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double dx = pts[i].x - pts[i - 1].x, dy = pts[i].y - pts[i - 1].y;
    const double len = std::hypot(dx, dy);
    if (len == 0.0) continue;
    d.path_length += len;
    const double h = std::atan2(dy, dx);
    if (have_heading) d.net_rotation += wrap_angle(h - prev_heading);
    prev_heading = h;
    have_heading = true;
  }
  d.closure = std::hypot(d.end.x - d.start.x, d.end.y - d.start.y) / d.path_length;

  auto chord_epc = [&](std::size_t a, std::size_t b) -> std::size_t {
    const double dx = pts[b].x - pts[a].x, dy = pts[b].y - pts[a].y;
    if (dx == 0.0 && dy == 0.0) return 0;
    return fepc_membership(std::atan2(dy, dx)).dominant();
  };
  split = std::clamp<std::size_t>(split, 1, pts.size() - 1);
  d.stroke_epc = {chord_epc(0, split), chord_epc(split - 1, pts.size() - 1)};
  d.chord_epc = chord_epc(0, pts.size() - 1);
  return d;
}

namespace detail {

struct Predicates {
  bool narrow_occlusion, broad_occlusion, occlusion, begin_occlusion;
  bool shaft, half_shaft, ascending;
  bool ccw_curve, cw_curve, arch, pocket;
};

inline Predicates predicates(const ShapeDescriptors& d, const TaxonomyRules& r) {
  Predicates p{};
  const double rot = d.net_rotation;
  p.occlusion = d.closure < r.closed_closure;
  p.narrow_occlusion = p.occlusion && std::abs(rot) > r.loop_rotation;
  p.broad_occlusion = p.occlusion && d.width >= r.broad_aspect * d.height;
  p.begin_occlusion = d.closure < r.open_closure && std::abs(rot) > r.begin_occlusion_rotation;
  // Shafts are straight and vertical or oblique (EPC2..EPC4).
  p.shaft = d.closure >= r.straight_closure && d.chord_epc != 0;
  p.half_shaft = p.shaft && d.height < r.half_shaft_fraction * r.reference_height;
  p.ascending = d.end.y > d.start.y;
  const bool open = d.closure > r.open_closure;
  p.ccw_curve = open && rot > r.curve_rotation;
  p.cw_curve = open && rot < -r.curve_rotation;
  const double margin = r.arch_margin_fraction * r.reference_height;
  p.arch = p.cw_curve && d.top.y > std::max(d.start.y, d.end.y) + margin;
  p.pocket = p.ccw_curve && d.bottom.y < std::min(d.start.y, d.end.y) - margin;
  return p;
}

}  // namespace detail

// First matching rule wins; the group's last three ids are the residual
// low/top/median fallbacks.
inline SegmentClass assign_subgroup(Group g, const ShapeDescriptors& d, const TaxonomyRules& rules = {}) {
  SegmentClass c;
  c.group = g;
  const int n = subgroup_count(g);
  auto residual = [&] {
    c.rule = "residual-" + std::string(band_name(d.band));
    c.subgroup_id = d.band == Band::kLow ? n - 2 : (d.band == Band::kTop ? n - 1 : n);
    return c;
  };
  if (d.degenerate) return residual();
  const auto p = detail::predicates(d, rules);
  auto fire = [&](int id, const char* rule) {
    c.subgroup_id = id;
    c.rule = rule;
    return c;
  };
  switch (g) {
    case Group::kBeginning:
      if (p.narrow_occlusion) return fire(7, "narrow-occlusion");
      if (p.broad_occlusion) return fire(6, "broad-occlusion");
      if (p.half_shaft) return fire(5, "half-shaft");
      if (p.shaft) return p.ascending ? fire(3, "ascending-shaft") : fire(4, "descending-shaft");
      if (p.ccw_curve) return fire(1, "ccw-curve");
      if (p.cw_curve) return fire(2, "cw-curve");
      break;
    case Group::kMiddle:
      if (p.narrow_occlusion) return fire(7, "narrow-occlusion");
      if (p.broad_occlusion) return fire(3, "broad-occlusion");
      if (p.occlusion) return fire(5, "occlusion");
      if (p.begin_occlusion) return fire(4, "begin-occlusion");
      if (p.half_shaft) return fire(6, "half-shaft");
      if (p.shaft) return p.ascending ? fire(1, "ascending-shaft") : fire(2, "descending-shaft");
      if (p.arch) return fire(8, "arch");
      if (p.pocket) return fire(9, "pocket");
      break;
    case Group::kEnd:
      if (p.narrow_occlusion) return fire(6, "narrow-occlusion");
      if (p.occlusion) return fire(5, "occlusion");
      if (p.half_shaft) return fire(3, "half-shaft");
      if (p.shaft) return p.ascending ? fire(1, "ascending-shaft") : fire(2, "descending-shaft");
      if (p.pocket) return fire(7, "pocket");
      if (p.ccw_curve || p.cw_curve) return fire(4, "curve");
      break;
    case Group::kIsolated:
      if (p.narrow_occlusion) return fire(5, "narrow-occlusion");
      if (p.begin_occlusion) return fire(2, "begin-occlusion");
      if (p.shaft) return fire(1, "shaft");
      if (p.pocket) return fire(3, "pocket");
      if (p.cw_curve) return fire(4, "cw-curve");
      break;
  }
  return residual();
}

}  // namespace betascript

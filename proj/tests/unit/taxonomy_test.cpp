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


#include "betascript/taxonomy.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "betascript/pipeline.hpp"
#include "betascript/synth.hpp"

namespace betascript {
namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Point2> Line(Point2 from, Point2 to, int n) {
  std::vector<Point2> pts;
  for (int i = 0; i < n; ++i) {
    const double f = static_cast<double>(i) / (n - 1);
    pts.push_back({from.x + f * (to.x - from.x), from.y + f * (to.y - from.y)});
  }
  return pts;
}

TEST(AssignGroupTest, SpecExamples) {
  EXPECT_EQ(assign_group(0, 2), Group::kIsolated);
  EXPECT_EQ(assign_group(0, 1), Group::kIsolated);
  EXPECT_EQ(assign_group(0, 6), Group::kBeginning);
  EXPECT_EQ(assign_group(2, 6), Group::kMiddle);
  EXPECT_EQ(assign_group(4, 6), Group::kEnd);
  // Three strokes: the first window is beginning even though it is also
  // adjacent to the end.
  EXPECT_EQ(assign_group(0, 3), Group::kBeginning);
  EXPECT_EQ(assign_group(1, 3), Group::kEnd);
}

TEST(DescriptorTest, FullCircle) {
  const int n = 200;
  std::vector<Point2> pts;
  for (int i = 0; i <= n; ++i) {
    const double a = 2 * kPi * i / n;
    pts.push_back({64 + 30 * std::cos(a), 64 + 30 * std::sin(a)});
  }
  const ShapeDescriptors d = compute_descriptors(pts, n / 2);
  // n chords turn through 2 pi minus one chord step.
  EXPECT_NEAR(d.net_rotation, 2 * kPi, 2 * kPi / n + 1e-9);
  EXPECT_NEAR(d.closure, 0.0, 1e-9);
  EXPECT_NEAR(d.width, 60.0, 1e-9);
  EXPECT_NEAR(d.height, 60.0, 1e-9);
  EXPECT_NEAR(d.path_length, 2 * n * 30 * std::sin(kPi / n), 1e-9);
  EXPECT_EQ(d.band, Band::kMedian);
}

TEST(DescriptorTest, VerticalLineUp) {
  const ShapeDescriptors d = compute_descriptors(Line({10, 10}, {10, 90}, 9), 4);
  EXPECT_EQ(d.chord_epc, 2u);
  EXPECT_EQ(d.stroke_epc[0], 2u);
  EXPECT_EQ(d.stroke_epc[1], 2u);
  EXPECT_NEAR(d.net_rotation, 0.0, 1e-12);
  EXPECT_NEAR(d.closure, 1.0, 1e-12);
}

TEST(DescriptorTest, BandsByThirds) {
  EXPECT_EQ(compute_descriptors(Line({0, 10}, {10, 30}, 5), 2).band, Band::kLow);
  EXPECT_EQ(compute_descriptors(Line({0, 54}, {10, 74}, 5), 2).band, Band::kMedian);
  EXPECT_EQ(compute_descriptors(Line({0, 100}, {10, 120}, 5), 2).band, Band::kTop);
}

TEST(DescriptorTest, DegenerateAndTooShort) {
  const std::vector<Point2> same(6, Point2{3, 3});
  EXPECT_TRUE(compute_descriptors(same, 3).degenerate);
  EXPECT_THROW(compute_descriptors(std::vector<Point2>(3, Point2{}), 1), Error);
  ShapeDescriptors d;
  d.degenerate = true;
  d.band = Band::kLow;
  EXPECT_EQ(assign_subgroup(Group::kMiddle, d).subgroup_id, 10);
}

TEST(SubgroupTest, BeginningAscendingShaft) {
  const auto d = compute_descriptors(Line({20, 10}, {24, 110}, 12), 6);
  const SegmentClass c = assign_subgroup(Group::kBeginning, d);
  EXPECT_EQ(c.subgroup_id, 3);
  EXPECT_EQ(subgroup_name(c.group, c.subgroup_id), "beginning ascending shaft");
  const SegmentClass down = assign_subgroup(Group::kBeginning, compute_descriptors(Line({24, 110}, {20, 10}, 12), 6));
  EXPECT_EQ(subgroup_name(down.group, down.subgroup_id), "beginning descending shaft");
  const SegmentClass half = assign_subgroup(Group::kBeginning, compute_descriptors(Line({20, 10}, {20, 50}, 12), 6));
  EXPECT_EQ(subgroup_name(half.group, half.subgroup_id), "half shaft in the beginning");
}

TEST(SubgroupTest, ResidualFallbackFollowsBand) {
  // A horizontal stroke is no shaft, no curve and no occlusion.
  const auto low = assign_subgroup(Group::kBeginning, compute_descriptors(Line({0, 20}, {60, 20}, 10), 5));
  EXPECT_EQ(low.subgroup_id, 8);
  EXPECT_EQ(low.rule, "residual-low");
  EXPECT_EQ(subgroup_name(Group::kBeginning, low.subgroup_id), "residual segments in the low");
  EXPECT_EQ(assign_subgroup(Group::kBeginning, compute_descriptors(Line({0, 110}, {60, 110}, 10), 5)).subgroup_id, 9);
  EXPECT_EQ(assign_subgroup(Group::kBeginning, compute_descriptors(Line({0, 64}, {60, 64}, 10), 5)).subgroup_id, 10);
  EXPECT_EQ(assign_subgroup(Group::kIsolated, compute_descriptors(Line({0, 64}, {60, 64}, 10), 5)).subgroup_id, 8);
}

// Definite integral of a Beta impulse by composite Simpson.
double PulseArea(const BetaPulseParams& b) {
  const int n = 20000;
  const double h = (b.t1 - b.t0) / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * beta_pulse(b, b.t0 + i * h);
  }
  return s * h / 3.0;
}

TEST(SubgroupTest, SynthesizedLoopInMiddleIsOcclusion) {
  // Two symmetric strokes on one circle. Each sweeps psi = pi - gap / 2, so
  // the loop stops `gap` radians short of closing: closure ~ gap / (2 pi).
  constexpr double kGap = 0.31;
  const double psi = kPi - kGap / 2;
  BetaStroke a;
  a.pulse = BetaPulseParams::make(100, 0.0, 0.15, 0.3, 3);
  const double r = PulseArea(a.pulse) / psi;
  a.arcs = {r, r, r, 0.0, 0.0, 0.0, {}, 1};
  BetaStroke b = a;
  b.pulse = BetaPulseParams::make(100, 0.3, 0.45, 0.6, 3);
  b.arcs.theta = psi;
  const BetaStroke strokes[] = {a, b};
  const auto traj = synth_trajectory(strokes, 100.0, {40, 60});
  std::vector<Point2> pts;
  for (const auto& s : traj.trace.samples) pts.push_back({s.x, s.y});
  const ShapeDescriptors d = compute_descriptors(pts, 30);
  EXPECT_NEAR(d.closure, kGap / (2 * kPi), 0.005);
  EXPECT_NEAR(d.net_rotation, 2 * kPi - kGap, 0.05);
  const SegmentClass c = assign_subgroup(Group::kMiddle, d);
  EXPECT_EQ(c.rule, "narrow-occlusion");
  EXPECT_EQ(c.subgroup_id, 7);
  EXPECT_EQ(subgroup_name(Group::kMiddle, 7), "e in the medium");
  EXPECT_EQ(subgroup_name(Group::kMiddle, 7, Script::kArabic), "narrow occlusion in the medium");
}

TEST(SubgroupTest, TableCardinalityAndNames) {
  EXPECT_EQ(subgroup_count(Group::kBeginning), 10);
  EXPECT_EQ(subgroup_count(Group::kMiddle), 12);
  EXPECT_EQ(subgroup_count(Group::kEnd), 10);
  EXPECT_EQ(subgroup_count(Group::kIsolated), 8);
  EXPECT_EQ(subgroup_name(Group::kBeginning, 7), "occlusion e beginning");
  EXPECT_EQ(subgroup_name(Group::kBeginning, 7, Script::kArabic), "nabra in the beginning");
  EXPECT_EQ(subgroup_name(Group::kMiddle, 9, Script::kArabic), "ligature madda");
  EXPECT_EQ(subgroup_name(Group::kEnd, 7), "pocket leg end");
  EXPECT_EQ(subgroup_name(Group::kIsolated, 4, Script::kArabic), "diacritics");
  EXPECT_THROW(subgroup_name(Group::kIsolated, 9), Error);
  EXPECT_THROW(subgroup_name(Group::kEnd, 0), Error);
}

ShapeDescriptors RandomDescriptors(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> y(0, 128), extra(0, 40), width(0, 150), closure(0, 1.0),
      rotation(-3 * kPi, 3 * kPi);
  ShapeDescriptors d;
  d.start = {0, y(rng)};
  d.end = {10, y(rng)};
  d.bottom = {5, std::min(d.start.y, d.end.y) - extra(rng)};
  d.top = {5, std::max(d.start.y, d.end.y) + extra(rng)};
  d.height = d.top.y - d.bottom.y;
  d.width = width(rng);
  d.closure = closure(rng);
  d.net_rotation = rotation(rng);
  d.chord_epc = rng() % 4;
  d.band = static_cast<Band>(rng() % 3);
  d.path_length = 100;
  return d;
}

TEST(SubgroupPropertyTest, TotalDeterministicAndExhaustive) {
  std::mt19937_64 rng(404);
  for (Group g : kAllGroups) {
    std::set<int> seen;
    for (int i = 0; i < 100000; ++i) {
      const ShapeDescriptors d = RandomDescriptors(rng);
      const SegmentClass c = assign_subgroup(g, d);
      ASSERT_GE(c.subgroup_id, 1);
      ASSERT_LE(c.subgroup_id, subgroup_count(g));
      ASSERT_FALSE(c.rule.empty());
      const SegmentClass again = assign_subgroup(g, d);
      ASSERT_EQ(again.subgroup_id, c.subgroup_id);
      seen.insert(c.subgroup_id);
    }
    EXPECT_EQ(static_cast<int>(seen.size()), subgroup_count(g)) << group_name(g);
  }
}

TEST(SubgroupPropertyTest, StableUnderSmallPerturbation) {
  CorpusOptions opt;
  opt.words_per_writer = 20;
  const auto writers = make_writer_family(6, 21);
  const SynthCorpus corpus = synth_corpus(writers, opt);
  PipelineConfig cfg;
  auto records = process_document(corpus.ink, cfg);
  ASSERT_GT(records.size(), 300u);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  std::size_t changed = 0;
  for (auto& r : records) {
    const SegmentClass before = r.seg.cls;
    for (auto& p : r.points) {
      p.x += jitter(rng);
      p.y += jitter(rng);
    }
    classify_record(r, cfg.rules);
    changed += r.seg.cls.subgroup_id != before.subgroup_id;
  }
  const double rate = static_cast<double>(changed) / records.size();
  RecordProperty("changed_fraction", std::to_string(rate));
  EXPECT_LT(rate, 0.05);
}

TEST(RulesFileTest, ShippedRulesMatchDefaults) {
  const TaxonomyRules r = load_rules(std::string(BETASCRIPT_DATA_DIR) + "/rules.toml");
  const TaxonomyRules def;
  EXPECT_DOUBLE_EQ(r.closed_closure, def.closed_closure);
  EXPECT_DOUBLE_EQ(r.open_closure, def.open_closure);
  EXPECT_DOUBLE_EQ(r.straight_closure, def.straight_closure);
  EXPECT_NEAR(r.loop_rotation, def.loop_rotation, 1e-12);
  EXPECT_NEAR(r.curve_rotation, def.curve_rotation, 1e-12);
  EXPECT_DOUBLE_EQ(r.reference_height, 128.0);
}

std::string RulesError(const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / "betascript_rules_test.toml";
  std::ofstream(path) << text;
  try {
    load_rules(path.string());
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(RulesFileTest, ErrorsAreReported) {
  EXPECT_NE(RulesError("[thresholds]\nclosed_closure = 0.2\nopen_closure = = 1\n").find(":3:"), std::string::npos);
  EXPECT_NE(RulesError("[other]\nx = 1\n").find("missing [thresholds]"), std::string::npos);
  EXPECT_NE(RulesError("[thresholds]\nclosed_closure = 0.7\n").find("out of order"), std::string::npos);
  EXPECT_NE(RulesError("[thresholds]\nbroad_aspect = \"wide\"\n").find("broad_aspect"), std::string::npos);
}

}  // namespace
}  // namespace betascript

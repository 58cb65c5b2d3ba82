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


#include "betascript/identify.hpp"

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

namespace betascript {
namespace {

Vector Vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::string WriterName(int w) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "w%02d", w);
  return buf;
}

// A model whose pooled middle-group network maps feature 0 = w / (n - 1) to
// writer w: the classifier logits a_w h + b_w are a shifted form of
// -c (h - h_w)^2, so the nearest writer wins.
Model NearestWriterModel(int n) {
  Model m;
  m.mode = FeatureMode::kEbe;
  for (int w = 0; w < n; ++w) m.writers.push_back(WriterName(w));
  m.scaler.min = Vector::Zero(28);
  m.scaler.max = Vector::Ones(28);
  SubgroupNetwork net;
  Matrix W1 = Matrix::Zero(1, 28);
  W1(0, 0) = 6.0;
  net.encoder1 = {W1, Vec({-3.0}), Activation::kSigmoid};
  net.encoder2 = {Matrix::Constant(1, 1, 8.0), Vec({-4.0}), Activation::kSigmoid};
  const double c = 2000.0;
  Matrix W3(n, 1);
  Vector b3(n);
  for (int w = 0; w < n; ++w) {
    Matrix x = Matrix::Zero(28, 1);
    x(0, 0) = static_cast<double>(w) / (n - 1);
    const double h = forward(net.encoder2, forward(net.encoder1, x))(0, 0);
    W3(w, 0) = 2 * c * h;
    b3[w] = -c * h * h;
  }
  net.classifier = {W3, b3, Activation::kSoftmax};
  m.networks.emplace(NetworkKey{Group::kMiddle, 0}, net);
  return m;
}

LabeledSegment Segment(const std::string& writer, double feature0, std::size_t word, const std::string& page = "",
                       Group group = Group::kMiddle) {
  LabeledSegment s;
  s.writer_id = writer;
  s.word_index = word;
  s.page = page;
  s.cls = {group, 3, "test"};
  s.features.values.assign(28, 0.5);
  s.features.values[0] = feature0;
  s.features.mode = FeatureMode::kEbe;
  return s;
}

double Feature(int w, int n) { return static_cast<double>(w) / (n - 1); }

TEST(AffectationTest, RoutesToNetworkAndSumsToOne) {
  const Model m = NearestWriterModel(5);
  const LabeledSegment s = Segment("w00", Feature(3, 5), 0);
  const auto a = affectation(s, m);
  ASSERT_TRUE(a.has_value());
  ASSERT_EQ(a->size(), 5);
  EXPECT_NEAR(a->sum(), 1.0, 1e-12);
  Eigen::Index arg;
  a->maxCoeff(&arg);
  EXPECT_EQ(arg, 3);
  // Routing identity: same as predicting with the pooled network directly.
  const Matrix x = Eigen::Map<const Vector>(s.features.values.data(), 28);
  const Vector direct = predict(m.networks.at({Group::kMiddle, 0}), m.scaler.transform(x)).col(0);
  EXPECT_EQ(*a, direct);

  EXPECT_FALSE(affectation(Segment("w00", 0.5, 0, "", Group::kEnd), m).has_value());
  LabeledSegment wrong = s;
  wrong.features.values.resize(36);
  EXPECT_THROW(affectation(wrong, m), Error);
}

TEST(IdentifyTest, HandSummedScores) {
  const std::vector<Vector> rates = {Vec({0.9, 0.1}), Vec({0.4, 0.6})};
  const auto r = identify_from_affectations(rates, 2);
  EXPECT_DOUBLE_EQ(r.scores[0], 1.3);
  EXPECT_DOUBLE_EQ(r.scores[1], 0.7);
  EXPECT_EQ(r.identified, 0u);
  EXPECT_EQ(r.ranking, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(r.segment_count, 2u);
}

TEST(IdentifyTest, TiesGoToLowerIndexAndSingleWriter) {
  const std::vector<Vector> tie = {Vec({0.5, 0.5})};
  EXPECT_EQ(identify_from_affectations(tie, 2).identified, 0u);
  const std::vector<Vector> tie3 = {Vec({0.2, 0.4, 0.4})};
  EXPECT_EQ(identify_from_affectations(tie3, 3).ranking, (std::vector<std::size_t>{1, 2, 0}));
  const std::vector<Vector> one = {Vec({1.0}), Vec({1.0})};
  EXPECT_EQ(identify_from_affectations(one, 1).identified, 0u);
}

TEST(IdentifyTest, NoEvidenceAndShapeErrors) {
  try {
    identify_from_affectations({}, 3);
    FAIL() << "expected no evidence";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), Error::Kind::kNoEvidence);
    EXPECT_NE(std::string(e.what()).find("no evidence"), std::string::npos);
  }
  const std::vector<Vector> bad = {Vec({0.5, 0.5})};
  EXPECT_THROW(identify_from_affectations(bad, 3), Error);

  const Model m = NearestWriterModel(4);
  const std::vector<LabeledSegment> unroutable = {Segment("w00", 0.1, 0, "", Group::kEnd)};
  EXPECT_THROW(identify(unroutable, m), Error);
  const std::vector<LabeledSegment> mixed = {Segment("w00", Feature(2, 4), 0),
                                             Segment("w00", 0.1, 1, "", Group::kBeginning)};
  const auto r = identify(mixed, m);
  EXPECT_EQ(r.identified, 2u);
  EXPECT_EQ(r.segment_count, 1u);
  EXPECT_EQ(r.skipped, 1u);
}

std::vector<Vector> RandomAffectations(std::mt19937_64& rng, int count, int writers) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<Vector> out;
  for (int i = 0; i < count; ++i) {
    Vector a(writers);
    for (int w = 0; w < writers; ++w) a[w] = u(rng);
    out.push_back(a / a.sum());
  }
  return out;
}

TEST(IdentifyPropertyTest, DecompositionPermutationAndScale) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const int writers = 2 + static_cast<int>(rng() % 12);
    auto rates = RandomAffectations(rng, 1 + static_cast<int>(rng() % 30), writers);
    const auto r = identify_from_affectations(rates, writers);

    std::vector<double> expected(writers, 0.0);
    for (const auto& a : rates)
      for (int w = 0; w < writers; ++w) expected[w] += a[w];
    for (int w = 0; w < writers; ++w) {
      EXPECT_NEAR(r.scores[w], expected[w], 1e-12);
      EXPECT_GE(r.scores[w], 0.0);
    }
    auto sorted = r.ranking;
    std::sort(sorted.begin(), sorted.end());
    for (int w = 0; w < writers; ++w) ASSERT_EQ(sorted[w], static_cast<std::size_t>(w));

    std::shuffle(rates.begin(), rates.end(), rng);
    const auto shuffled = identify_from_affectations(rates, writers);
    EXPECT_EQ(shuffled.identified, r.identified);
    for (int w = 0; w < writers; ++w) EXPECT_NEAR(shuffled.scores[w], r.scores[w], 1e-12);

    // Powers of two scale exactly, so the ranking must match bit for bit.
    for (auto& a : rates) a *= 4.0;
    EXPECT_EQ(identify_from_affectations(rates, writers).ranking, shuffled.ranking);
  }
}

TEST(CmcTest, PublishedRates) {
  std::vector<std::size_t> pages(118, 1);
  pages.insert(pages.end(), 11, 4);
  const auto cmc = cmc_curve(pages, 43);
  EXPECT_EQ(format_percent(cmc[0]), "91.47");
  EXPECT_DOUBLE_EQ(cmc[3], 1.0);

  std::vector<std::size_t> bundles(54, 1);
  bundles.insert(bundles.end(), 3, 2);
  EXPECT_EQ(format_percent(cmc_curve(bundles, 19)[0]), "94.74");
}

TEST(CmcTest, MonotoneAndComplete) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t writers = 1 + rng() % 50;
    std::vector<std::size_t> ranks;
    for (std::size_t i = 0, n = 1 + rng() % 80; i < n; ++i) ranks.push_back(1 + rng() % writers);
    const auto cmc = cmc_curve(ranks, writers);
    ASSERT_EQ(cmc.size(), writers);
    for (std::size_t k = 1; k < writers; ++k) EXPECT_LE(cmc[k - 1], cmc[k]);
    EXPECT_DOUBLE_EQ(cmc.back(), 1.0);
  }
  EXPECT_DOUBLE_EQ(cmc_curve({}, 3)[2], 0.0);
}

TEST(TestUnitTest, BundlesOfTenKeepTrailingBundle) {
  std::vector<LabeledSegment> segs;
  for (std::size_t word = 0; word < 25; ++word) {
    segs.push_back(Segment("b", 0.1, 100 + word));
    segs.push_back(Segment("b", 0.2, 100 + word));
  }
  for (std::size_t word = 0; word < 20; ++word) segs.push_back(Segment("a", 0.1, word));
  const auto units = build_test_units(segs, Protocol::kBundles);
  ASSERT_EQ(units.size(), 5u);
  EXPECT_EQ(units[0].id, "a/bundle0");
  EXPECT_EQ(units[1].id, "a/bundle1");
  EXPECT_EQ(units[2].id, "b/bundle0");
  EXPECT_EQ(units[2].words, 10u);
  EXPECT_EQ(units[2].segments.size(), 20u);
  EXPECT_EQ(units[4].id, "b/bundle2");
  EXPECT_EQ(units[4].words, 5u);
  EXPECT_EQ(build_test_units(segs, Protocol::kBundles, 25).size(), 2u);
}

TEST(TestUnitTest, PagesGroupByWriterAndPage) {
  std::vector<LabeledSegment> segs = {Segment("b", 0.1, 0, "p2"), Segment("a", 0.1, 1, "p1"),
                                      Segment("b", 0.1, 2, "p1"), Segment("b", 0.1, 3, "p2")};
  const auto units = build_test_units(segs, Protocol::kPages);
  ASSERT_EQ(units.size(), 3u);
  EXPECT_EQ(units[0].id, "a/p1");
  EXPECT_EQ(units[1].id, "b/p2");
  EXPECT_EQ(units[1].words, 2u);
  EXPECT_EQ(units[2].id, "b/p1");
  segs.push_back(Segment("c", 0.1, 4));
  EXPECT_THROW(build_test_units(segs, Protocol::kPages), Error);
}

// `writers` writers with `units_each` units of two words; the first `wrong`
// units carry the next writer's handwriting.
std::vector<LabeledSegment> ProtocolCorpus(int writers, int units_each, int wrong, Protocol protocol) {
  std::vector<LabeledSegment> segs;
  int unit = 0;
  std::size_t word = 0;
  for (int w = 0; w < writers; ++w) {
    for (int u = 0; u < units_each; ++u, ++unit) {
      const int style = unit < wrong ? (w + 1) % writers : w;
      const int words = protocol == Protocol::kPages ? 2 : 10;
      for (int k = 0; k < words; ++k, ++word) {
        segs.push_back(Segment(WriterName(w), Feature(style, writers), word, "page" + std::to_string(u)));
      }
    }
  }
  return segs;
}

TEST(EvaluateTest, PagesProtocolShape) {
  const Model m = NearestWriterModel(43);
  const auto units = build_test_units(ProtocolCorpus(43, 3, 11, Protocol::kPages), Protocol::kPages);
  const auto rep = evaluate(units, m, Protocol::kPages);
  EXPECT_EQ(rep.tests(), 129u);
  EXPECT_EQ(rep.correct(), 118u);
  EXPECT_EQ(format_percent(rep.top(1)), "91.47");
  EXPECT_EQ(rep.ranks, (std::vector<int>{1, 5, 10}));
  EXPECT_EQ(rep.cmc.size(), 43u);
  EXPECT_DOUBLE_EQ(rep.top(43), 1.0);
  const std::string csv = topk_csv(rep);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "protocol,tests,top1,top5,top10");
  EXPECT_NE(csv.find("pages,129,91.47,"), std::string::npos);
  EXPECT_EQ(cmc_csv(rep).substr(0, 16), "k,rate\n1,0.91472");
  EXPECT_NE(topk_table(rep).find("Top-10"), std::string::npos);
}

TEST(EvaluateTest, BundlesProtocolShape) {
  const Model m = NearestWriterModel(19);
  const auto units = build_test_units(ProtocolCorpus(19, 3, 3, Protocol::kBundles), Protocol::kBundles);
  const auto rep = evaluate(units, m, Protocol::kBundles);
  EXPECT_EQ(rep.tests(), 57u);
  EXPECT_EQ(rep.correct(), 54u);
  EXPECT_EQ(format_percent(rep.top(1)), "94.74");
  EXPECT_NE(topk_csv(rep).find("top1,top2,top3"), std::string::npos);
}

TEST(EvaluateTest, NoEvidenceUnitAndUnenrolledWriter) {
  const Model m = NearestWriterModel(4);
  std::vector<LabeledSegment> segs = {Segment("w02", 0.0, 0, "", Group::kEnd)};
  auto rep = evaluate(build_test_units(segs, Protocol::kBundles), m, Protocol::kBundles);
  ASSERT_EQ(rep.outcomes.size(), 1u);
  EXPECT_FALSE(rep.outcomes[0].evidence);
  EXPECT_EQ(rep.outcomes[0].identified, "w00");
  EXPECT_EQ(rep.outcomes[0].rank, 3u);
  EXPECT_EQ(rep.outcomes[0].skipped, 1u);

  segs = {Segment("stranger", 0.0, 0)};
  EXPECT_THROW(evaluate(build_test_units(segs, Protocol::kBundles), m, Protocol::kBundles), Error);
}

TEST(ProtocolTest, NamesRoundTrip) {
  EXPECT_EQ(parse_protocol("pages"), Protocol::kPages);
  EXPECT_EQ(parse_protocol(protocol_name(Protocol::kBundles)), Protocol::kBundles);
  EXPECT_THROW(parse_protocol("page"), Error);
}

}  // namespace
}  // namespace betascript

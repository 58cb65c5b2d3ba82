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

// Writer identification by summed affectation rates, Top-k ranking, CMC, and
// the page/bundle evaluation protocols.

#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "betascript/error.hpp"
#include "betascript/model.hpp"

namespace betascript {

// Softmax output of the segment's routed network, or nullopt when neither its
// subgroup nor its group has a network.
inline std::optional<Vector> affectation(const LabeledSegment& seg, const Model& model) {
  const SubgroupNetwork* net = model.route(seg.cls);
  if (net == nullptr) return std::nullopt;
  const auto& v = seg.features.values;
  if (v.size() != segment_length(model.mode)) {
    throw Error(Error::Kind::kShapeMismatch, "segment vector length does not match the model's feature mode");
  }
  const Matrix x = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  return predict(*net, model.scaler.transform(x)).col(0);
}

struct IdentificationResult {
  std::vector<double> scores;         // per enrolled writer
  std::vector<std::size_t> ranking;   // writer indices, best first
  std::size_t identified = 0;
  std::size_t segment_count = 0;      // segments that contributed
  std::size_t skipped = 0;            // segments without a network
};

// Ranks writers by descending score; equal scores keep the lower index first.
inline std::vector<std::size_t> rank_scores(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

inline IdentificationResult identify_from_affectations(std::span<const Vector> rates, std::size_t writers) {
  if (rates.empty()) throw Error(Error::Kind::kNoEvidence, "no evidence: no scorable segments");
  IdentificationResult r;
  r.scores.assign(writers, 0.0);
  for (const auto& a : rates) {
    if (static_cast<std::size_t>(a.size()) != writers) {
      throw Error(Error::Kind::kShapeMismatch, "affectation length differs from writer count");
    }
    for (std::size_t w = 0; w < writers; ++w) r.scores[w] += a[static_cast<Eigen::Index>(w)];
  }
  r.segment_count = rates.size();
  r.ranking = rank_scores(r.scores);
  r.identified = r.ranking.front();
  return r;
}

inline IdentificationResult identify(std::span<const LabeledSegment> segments, const Model& model) {
  std::vector<Vector> rates;
  std::size_t skipped = 0;
  for (const auto& s : segments) {
    if (auto a = affectation(s, model)) {
      rates.push_back(std::move(*a));
    } else {
      ++skipped;
    }
  }
  auto r = identify_from_affectations(rates, model.writers.size());
  r.skipped = skipped;
  return r;
}

enum class Protocol { kPages, kBundles };

inline std::string_view protocol_name(Protocol p) { return p == Protocol::kPages ? "pages" : "bundles"; }

inline Protocol parse_protocol(std::string_view s) {
  if (s == "pages") return Protocol::kPages;
  if (s == "bundles") return Protocol::kBundles;
  throw Error(Error::Kind::kParse, "unknown protocol '" + std::string(s) + "' (expected pages or bundles)");
}

inline std::vector<int> reported_ranks(Protocol p) {
  return p == Protocol::kPages ? std::vector<int>{1, 5, 10} : std::vector<int>{1, 2, 3};
}

inline constexpr std::size_t kBundleWords = 10;

struct TestUnit {
  std::string id;
  std::string writer_id;
  std::vector<LabeledSegment> segments;
  std::size_t words = 0;
};

// Groups test segments into units: one per (writer, page), or consecutive
// bundles of ten words per writer (a trailing partial bundle is kept). Units
// follow writer order, then first appearance.
inline std::vector<TestUnit> build_test_units(const std::vector<LabeledSegment>& segments, Protocol protocol,
                                              std::size_t bundle_words = kBundleWords) {
  std::vector<std::string> writer_order;
  std::map<std::string, std::vector<std::size_t>> word_order;  // writer -> distinct word indices, first-seen order
  for (const auto& s : segments) {
    if (std::find(writer_order.begin(), writer_order.end(), s.writer_id) == writer_order.end()) {
      writer_order.push_back(s.writer_id);
    }
    auto& words = word_order[s.writer_id];
    if (std::find(words.begin(), words.end(), s.word_index) == words.end()) words.push_back(s.word_index);
  }
  std::sort(writer_order.begin(), writer_order.end());

  std::vector<TestUnit> units;
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  for (const auto& w : writer_order) {
    const auto& words = word_order[w];
    if (protocol == Protocol::kPages) {
      for (const auto& s : segments) {
        if (s.writer_id != w) continue;
        if (s.page.empty()) throw Error(Error::Kind::kInvalidInput, "pages protocol needs page labels on every word");
        auto [it, fresh] = slot.try_emplace({w, s.page}, units.size());
        if (fresh) units.push_back({w + "/" + s.page, w, {}, 0});
      }
    } else {
      for (std::size_t b = 0; b * bundle_words < words.size(); ++b) {
        units.push_back({w + "/bundle" + std::to_string(b), w, {}, 0});
      }
    }
  }
  std::map<std::pair<std::string, std::size_t>, std::size_t> word_unit;
  for (const auto& s : segments) {
    std::size_t u;
    if (protocol == Protocol::kPages) {
      u = slot.at({s.writer_id, s.page});
    } else {
      const auto& words = word_order[s.writer_id];
      const auto pos = static_cast<std::size_t>(std::find(words.begin(), words.end(), s.word_index) - words.begin());
      const std::size_t first = static_cast<std::size_t>(
          std::find_if(units.begin(), units.end(), [&](const TestUnit& t) { return t.writer_id == s.writer_id; }) -
          units.begin());
      u = first + pos / bundle_words;
    }
    if (word_unit.try_emplace({s.writer_id, s.word_index}, u).second) ++units[u].words;
    units[u].segments.push_back(s);
  }
  return units;
}

struct UnitOutcome {
  std::string unit;
  std::string writer_id;
  std::string identified;
  std::size_t rank = 0;  // 1-based rank of the true writer
  std::size_t segments = 0;
  std::size_t skipped = 0;
  bool evidence = true;
};

struct EvaluationReport {
  Protocol protocol = Protocol::kPages;
  std::vector<UnitOutcome> outcomes;
  std::vector<double> cmc;  // cmc[k - 1] = Top-k rate, k = 1..Nw
  std::vector<int> ranks;   // reported Top-k columns

  std::size_t tests() const { return outcomes.size(); }
  double top(std::size_t k) const {
    if (cmc.empty()) return 0.0;
    return cmc[std::min(k, cmc.size()) - 1];
  }
  std::size_t correct() const {
    return static_cast<std::size_t>(
        std::count_if(outcomes.begin(), outcomes.end(), [](const UnitOutcome& o) { return o.rank == 1; }));
  }
};

// Top-k rates for k = 1..writers from 1-based true-writer ranks.
inline std::vector<double> cmc_curve(const std::vector<std::size_t>& ranks, std::size_t writers) {
  std::vector<double> cmc(writers, 0.0);
  if (ranks.empty()) return cmc;
  for (std::size_t k = 1; k <= writers; ++k) {
    const auto hits = std::count_if(ranks.begin(), ranks.end(), [&](std::size_t r) { return r <= k; });
    cmc[k - 1] = static_cast<double>(hits) / static_cast<double>(ranks.size());
  }
  return cmc;
}

// A unit without evidence scores zero for every writer and is ranked by index.
inline EvaluationReport evaluate(const std::vector<TestUnit>& units, const Model& model, Protocol protocol) {
  EvaluationReport rep;
  rep.protocol = protocol;
  rep.ranks = reported_ranks(protocol);
  std::vector<std::size_t> ranks;
  for (const auto& u : units) {
    const std::size_t truth = model.writer_index(u.writer_id);
    UnitOutcome o;
    o.unit = u.id;
    o.writer_id = u.writer_id;
    IdentificationResult r;
    try {
      r = identify(u.segments, model);
    } catch (const Error& e) {
      if (e.kind() != Error::Kind::kNoEvidence) throw;
      r.scores.assign(model.writers.size(), 0.0);
      r.ranking = rank_scores(r.scores);
      r.identified = r.ranking.front();
      r.skipped = u.segments.size();
      o.evidence = false;
    }
    o.identified = model.writers[r.identified];
    o.rank = static_cast<std::size_t>(std::find(r.ranking.begin(), r.ranking.end(), truth) - r.ranking.begin()) + 1;
    o.segments = r.segment_count;
    o.skipped = r.skipped;
    ranks.push_back(o.rank);
    rep.outcomes.push_back(std::move(o));
  }
  rep.cmc = cmc_curve(ranks, model.writers.size());
  return rep;
}

inline std::string format_percent(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * rate);
  return buf;
}

inline std::string cmc_csv(const EvaluationReport& rep) {
  std::string out = "k,rate\n";
  char buf[64];
  for (std::size_t k = 1; k <= rep.cmc.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f\n", k, rep.cmc[k - 1]);
    out += buf;
  }
  return out;
}

inline std::string topk_csv(const EvaluationReport& rep) {
  std::string head = "protocol,tests", row = std::string(protocol_name(rep.protocol)) + "," + std::to_string(rep.tests());
  for (int k : rep.ranks) {
    head += ",top" + std::to_string(k);
    row += "," + format_percent(rep.top(static_cast<std::size_t>(k)));
  }
  return head + "\n" + row + "\n";
}

inline std::string topk_table(const EvaluationReport& rep) {
  std::string head = "protocol  tests", row;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-8s  %5zu", std::string(protocol_name(rep.protocol)).c_str(), rep.tests());
  row = buf;
  for (int k : rep.ranks) {
    std::snprintf(buf, sizeof buf, "  %7s", ("Top-" + std::to_string(k)).c_str());
    head += buf;
    std::snprintf(buf, sizeof buf, "  %6s%%", format_percent(rep.top(static_cast<std::size_t>(k))).c_str());
    row += buf;
  }
  return head + "\n" + row + "\n";
}

}  // namespace betascript

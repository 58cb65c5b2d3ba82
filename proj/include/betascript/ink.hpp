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

// Ink data model and the canonical JSON ink file format.
//
// Canonical serialization: keys in fixed order (version, sample_rate_hz,
// words, provenance), every number printed with 6 decimal places, one word
// per line. `save_ink(load_ink(f))` is byte-stable.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "betascript/error.hpp"

namespace betascript {

inline constexpr int kInkSchemaVersion = 1;

struct InkSample {
  double t = 0.0;  // seconds
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const InkSample&, const InkSample&) = default;
};

// One continuous pen-down movement.
struct Trace {
  std::vector<InkSample> samples;

  std::size_t size() const { return samples.size(); }
  friend bool operator==(const Trace&, const Trace&) = default;
};

enum class Script { kLatin, kArabic, kOther };

inline std::string_view script_name(Script s) {
  switch (s) {
    case Script::kLatin:
      return "latin";
    case Script::kArabic:
      return "arabic";
    case Script::kOther:
      return "other";
  }
  return "other";
}

inline Script parse_script(std::string_view name) {
  if (name == "latin") return Script::kLatin;
  if (name == "arabic") return Script::kArabic;
  if (name == "other") return Script::kOther;
  throw Error(Error::Kind::kParse, "unknown script tag '" + std::string(name) + "'");
}

struct Word {
  std::vector<Trace> traces;
  std::optional<std::string> writer_id;
  Script script = Script::kLatin;
  // Test-unit grouping key for page-level evaluation. Not part of the minimal
  // format; written only when present.
  std::optional<std::string> page;

  friend bool operator==(const Word&, const Word&) = default;
};

struct Provenance {
  std::string tool_version;
  std::string config_hash;
  bool preprocessed = false;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct InkDocument {
  std::optional<double> sample_rate_hz;
  std::vector<Word> words;
  std::optional<Provenance> provenance;

  friend bool operator==(const InkDocument&, const InkDocument&) = default;
};

namespace detail {

inline std::string format_fixed6(double value) {
  if (!std::isfinite(value)) {
    throw Error(Error::Kind::kInvalidInput, "cannot serialize non-finite coordinate");
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

inline std::string quote(const std::string& s) { return nlohmann::json(s).dump(); }

// Maps a byte offset reported by the JSON parser to a 1-based line number.
inline std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + offset, '\n'));
}

inline double require_number(const nlohmann::json& node, const char* key, const std::string& where) {
  auto it = node.find(key);
  if (it == node.end()) {
    throw Error(Error::Kind::kParse, where + ": missing field '" + key + "'");
  }
  if (!it->is_number()) {
    throw Error(Error::Kind::kParse, where + "." + key + ": expected a number");
  }
  double v = it->get<double>();
  if (!std::isfinite(v)) {
    throw Error(Error::Kind::kParse, where + "." + key + ": non-finite value");
  }
  return v;
}

inline std::optional<std::string> optional_string(const nlohmann::json& node, const char* key,
                                                  const std::string& where) {
  auto it = node.find(key);
  if (it == node.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw Error(Error::Kind::kParse, where + "." + key + ": expected a string");
  }
  return it->get<std::string>();
}

}  // namespace detail

// Rounds every number to the 6-decimal precision of the canonical form, so an
// in-memory document matches what a save/load cycle would produce.
inline double quantize_coordinate(double v) {
  return std::strtod(detail::format_fixed6(v).c_str(), nullptr);
}

inline void quantize(InkDocument& doc) {
  if (doc.sample_rate_hz) doc.sample_rate_hz = quantize_coordinate(*doc.sample_rate_hz);
  for (auto& w : doc.words)
    for (auto& tr : w.traces)
      for (auto& s : tr.samples) {
        s.t = quantize_coordinate(s.t);
        s.x = quantize_coordinate(s.x);
        s.y = quantize_coordinate(s.y);
      }
}

inline InkDocument parse_ink(std::string_view text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Error::Kind::kParse, "ink parse error at line " +
                                         std::to_string(detail::line_of_offset(text, e.byte)) +
                                         ": " + e.what());
  }
  if (!root.is_object()) throw Error(Error::Kind::kParse, "ink: top level must be an object");
  auto version = root.find("version");
  if (version == root.end() || !version->is_number_integer()) {
    throw Error(Error::Kind::kSchema, "ink: missing integer 'version' (expected schema version " +
                                          std::to_string(kInkSchemaVersion) + ")");
  }
  if (version->get<int>() != kInkSchemaVersion) {
    throw Error(Error::Kind::kSchema, "ink: schema version " + std::to_string(version->get<int>()) +
                                          " is not supported (expected schema version " +
                                          std::to_string(kInkSchemaVersion) + ")");
  }

  InkDocument doc;
  if (auto it = root.find("sample_rate_hz"); it != root.end() && !it->is_null()) {
    double rate = detail::require_number(root, "sample_rate_hz", "ink");
    if (rate <= 0.0) throw Error(Error::Kind::kParse, "ink.sample_rate_hz: must be positive");
    doc.sample_rate_hz = rate;
  }
  auto words = root.find("words");
  if (words == root.end() || !words->is_array()) {
    throw Error(Error::Kind::kParse, "ink: missing array 'words'");
  }
  for (std::size_t wi = 0; wi < words->size(); ++wi) {
    const auto& wj = (*words)[wi];
    const std::string wpath = "words[" + std::to_string(wi) + "]";
    if (!wj.is_object()) throw Error(Error::Kind::kParse, wpath + ": expected an object");
    Word word;
    word.writer_id = detail::optional_string(wj, "writer_id", wpath);
    if (auto s = detail::optional_string(wj, "script", wpath)) {
      try {
        word.script = parse_script(*s);
      } catch (const Error& e) {
        throw Error(Error::Kind::kParse, wpath + ".script: " + e.what());
      }
    }
    word.page = detail::optional_string(wj, "page", wpath);
    auto traces = wj.find("traces");
    if (traces == wj.end() || !traces->is_array() || traces->empty()) {
      throw Error(Error::Kind::kParse, wpath + ": a word needs a non-empty 'traces' array");
    }
    for (std::size_t ti = 0; ti < traces->size(); ++ti) {
      const auto& tj = (*traces)[ti];
      const std::string tpath = wpath + ".traces[" + std::to_string(ti) + "]";
      auto points = tj.find("points");
      if (points == tj.end() || !points->is_array()) {
        throw Error(Error::Kind::kParse, tpath + ": missing array 'points'");
      }
      if (points->empty()) throw Error(Error::Kind::kParse, tpath + ": empty trace");
      Trace trace;
      trace.samples.reserve(points->size());
      for (std::size_t pi = 0; pi < points->size(); ++pi) {
        const auto& pj = (*points)[pi];
        const std::string ppath = tpath + ".points[" + std::to_string(pi) + "]";
        if (!pj.is_object()) throw Error(Error::Kind::kParse, ppath + ": expected an object");
        InkSample s{detail::require_number(pj, "t", ppath), detail::require_number(pj, "x", ppath),
                    detail::require_number(pj, "y", ppath)};
        if (!trace.samples.empty() && !(s.t > trace.samples.back().t)) {
          throw Error(Error::Kind::kParse, ppath + ".t: non-monotone timestamps");
        }
        trace.samples.push_back(s);
      }
      word.traces.push_back(std::move(trace));
    }
    doc.words.push_back(std::move(word));
  }
  if (auto it = root.find("provenance"); it != root.end() && it->is_object()) {
    Provenance p;
    p.tool_version = it->value("tool_version", "");
    p.config_hash = it->value("config_hash", "");
    p.preprocessed = it->value("preprocessed", false);
    doc.provenance = p;
  }
  return doc;
}

inline std::string to_canonical_ink(const InkDocument& doc) {
  using detail::format_fixed6;
  using detail::quote;
  std::ostringstream out;
  out << "{\"version\": " << kInkSchemaVersion;
  if (doc.sample_rate_hz) out << ", \"sample_rate_hz\": " << format_fixed6(*doc.sample_rate_hz);
  out << ", \"words\": [";
  for (std::size_t wi = 0; wi < doc.words.size(); ++wi) {
    const Word& w = doc.words[wi];
    out << (wi == 0 ? "\n" : ",\n") << "{";
    if (w.writer_id) out << "\"writer_id\": " << quote(*w.writer_id) << ", ";
    out << "\"script\": " << quote(std::string(script_name(w.script))) << ", ";
    if (w.page) out << "\"page\": " << quote(*w.page) << ", ";
    out << "\"traces\": [";
    for (std::size_t ti = 0; ti < w.traces.size(); ++ti) {
      if (ti) out << ", ";
      out << "{\"points\": [";
      const auto& samples = w.traces[ti].samples;
      for (std::size_t pi = 0; pi < samples.size(); ++pi) {
        if (pi) out << ", ";
        out << "{\"t\": " << format_fixed6(samples[pi].t) << ", \"x\": " << format_fixed6(samples[pi].x)
            << ", \"y\": " << format_fixed6(samples[pi].y) << "}";
      }
      out << "]}";
    }
    out << "]}";
  }
  out << (doc.words.empty() ? "]" : "\n]");
  if (doc.provenance) {
    out << ", \"provenance\": {\"tool_version\": " << quote(doc.provenance->tool_version)
        << ", \"config_hash\": " << quote(doc.provenance->config_hash)
        << ", \"preprocessed\": " << (doc.provenance->preprocessed ? "true" : "false") << "}";
  }
  out << "}\n";
  return out.str();
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Error::Kind::kInvalidInput, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Error::Kind::kInvalidInput, "cannot write '" + path + "'");
  out << text;
}

inline InkDocument load_ink(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_ink(text);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

inline void save_ink(const InkDocument& doc, const std::string& path) {
  write_text_file(path, to_canonical_ink(doc));
}

}  // namespace betascript

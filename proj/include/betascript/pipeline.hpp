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

// Pipeline stages and their JSON artifacts.
//
// preprocess: ink -> ink            segment: ink -> betascript.strokes
// fit: strokes -> betascript.params features: params -> betascript.segments
// classify: segments -> betascript.labeled
//
// Every artifact carries schema, schema_version, tool_version and
// config_hash. Numbers are written with round-trip precision, so running the
// stages one by one gives the same doubles as the in-memory path.

#pragma once

#include <algorithm>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "betascript/arc_fit.hpp"
#include "betascript/error.hpp"
#include "betascript/features.hpp"
#include "betascript/identify.hpp"
#include "betascript/ink.hpp"
#include "betascript/model.hpp"
#include "betascript/preprocess.hpp"
#include "betascript/segmentation.hpp"
#include "betascript/synth.hpp"
#include "betascript/taxonomy.hpp"
#include "betascript/velocity_fit.hpp"
#include "toml.hpp"

namespace betascript {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kArtifactSchemaVersion = 1;

struct PipelineConfig {
  PreprocessConfig preprocess;
  SegmentationConfig segmentation;
  VelocityFitConfig velocity_fit;
  ArcFitConfig arc_fit;
  FeatureMode mode = FeatureMode::kEbeFepc;
  std::string rules_path;
  TaxonomyRules rules;
  TrainingConfig training;
  Protocol protocol = Protocol::kPages;
  std::size_t bundle_words = kBundleWords;
  int jobs = 1;
};

namespace detail {

template <typename T>
void read_key(const toml::table& t, const char* section, const char* key, T& dst) {
  const auto node = t[section][key];
  if (!node) return;
  if constexpr (std::is_same_v<T, bool>) {
    const auto v = node.is_boolean() ? node.template value<bool>() : std::nullopt;
    if (!v) throw Error(Error::Kind::kSchema, std::string("config: ") + section + "." + key + " must be a boolean");
    dst = *v;
  } else if constexpr (std::is_same_v<T, std::string>) {
    const auto v = node.template value<std::string>();
    if (!v) throw Error(Error::Kind::kSchema, std::string("config: ") + section + "." + key + " must be a string");
    dst = *v;
  } else if constexpr (std::is_integral_v<T>) {
    const auto v = node.is_integer() ? node.template value<std::int64_t>() : std::nullopt;
    if (!v || *v < 0) {
      throw Error(Error::Kind::kSchema, std::string("config: ") + section + "." + key + " must be a non-negative integer");
    }
    dst = static_cast<T>(*v);
  } else {
    const auto v = node.is_number() ? node.template value<double>() : std::nullopt;
    if (!v) throw Error(Error::Kind::kSchema, std::string("config: ") + section + "." + key + " must be a number");
    dst = *v;
  }
}

inline void read_autoencoder(const toml::table& t, const char* section, AutoencoderHyper& h) {
  read_key(t, section, "hidden", h.hidden);
  read_key(t, section, "max_epochs", h.max_epochs);
  read_key(t, section, "l2_weight", h.l2_weight);
  read_key(t, section, "sparsity_weight", h.sparsity_weight);
  read_key(t, section, "sparsity_proportion", h.sparsity_proportion);
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace detail

// Overlays the TOML file's values on `cfg`. Relative rule paths resolve
// against the config file's directory.
inline void apply_config_file(PipelineConfig& cfg, const std::string& path) {
  toml::table t;
  try {
    t = toml::parse_file(path);
  } catch (const toml::parse_error& e) {
    throw Error(Error::Kind::kParse, path + ":" + std::to_string(e.source().begin.line) + ": " +
                                         std::string(e.description()));
  }
  auto& p = cfg.preprocess;
  detail::read_key(t, "preprocess", "cutoff_hz", p.cutoff_hz);
  detail::read_key(t, "preprocess", "target_height", p.target_height);
  detail::read_key(t, "preprocess", "filter_order", p.filter_order);
  detail::read_key(t, "preprocess", "stopband_attenuation_db", p.stopband_attenuation_db);
  if (t["preprocess"]["sample_rate_hz"]) {
    double r = 0.0;
    detail::read_key(t, "preprocess", "sample_rate_hz", r);
    p.sample_rate_hz = r;
  }
  auto& s = cfg.segmentation;
  detail::read_key(t, "segmentation", "prominence_fraction", s.prominence_fraction);
  detail::read_key(t, "segmentation", "inflexion_half_window", s.inflexion_half_window);
  detail::read_key(t, "segmentation", "inflexion_slope_fraction", s.inflexion_slope_fraction);
  detail::read_key(t, "segmentation", "min_stroke_samples", s.min_stroke_samples);
  auto& f = cfg.velocity_fit;
  detail::read_key(t, "fit", "p_min", f.p_min);
  detail::read_key(t, "fit", "p_max", f.p_max);
  detail::read_key(t, "fit", "max_iterations", f.max_iterations);
  detail::read_key(t, "fit", "relative_tolerance", f.relative_tolerance);
  detail::read_key(t, "fit", "arc_max_iterations", cfg.arc_fit.max_iterations);
  detail::read_key(t, "fit", "arc_shape_prior", cfg.arc_fit.shape_prior);
  std::string mode;
  detail::read_key(t, "features", "mode", mode);
  if (!mode.empty()) cfg.mode = parse_feature_mode(mode);
  std::string rules;
  detail::read_key(t, "taxonomy", "rules", rules);
  if (!rules.empty()) {
    const auto slash = path.find_last_of('/');
    cfg.rules_path = (rules.front() == '/' || slash == std::string::npos) ? rules : path.substr(0, slash + 1) + rules;
    cfg.rules = load_rules(cfg.rules_path);
  }
  auto& tr = cfg.training;
  detail::read_autoencoder(t, "autoencoder1", tr.ae1);
  detail::read_autoencoder(t, "autoencoder2", tr.ae2);
  detail::read_key(t, "training", "learning_rate", tr.learning_rate);
  detail::read_key(t, "training", "classifier_learning_rate", tr.classifier_learning_rate);
  detail::read_key(t, "training", "momentum", tr.momentum);
  detail::read_key(t, "training", "seed", tr.seed);
  detail::read_key(t, "training", "softmax_epochs", tr.softmax_epochs);
  detail::read_key(t, "training", "softmax_l2", tr.softmax_l2);
  detail::read_key(t, "training", "fine_tune", tr.fine_tune);
  detail::read_key(t, "training", "fine_tune_epochs", tr.fine_tune_epochs);
  detail::read_key(t, "training", "min_samples_per_subgroup", tr.min_samples_per_subgroup);
  std::string protocol;
  detail::read_key(t, "evaluation", "protocol", protocol);
  if (!protocol.empty()) cfg.protocol = parse_protocol(protocol);
  detail::read_key(t, "evaluation", "bundle_words", cfg.bundle_words);
}

// Canonical text of every setting that can change an artifact. Paths and
// job counts are excluded.
inline std::string canonical_config(const PipelineConfig& c) {
  std::string out;
  char buf[96];
  auto add = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%s=%.17g\n", key, v);
    out += buf;
  };
  add("preprocess.cutoff_hz", c.preprocess.cutoff_hz);
  add("preprocess.target_height", c.preprocess.target_height);
  add("preprocess.filter_order", c.preprocess.filter_order);
  add("preprocess.stopband_attenuation_db", c.preprocess.stopband_attenuation_db);
  add("preprocess.sample_rate_hz", c.preprocess.sample_rate_hz.value_or(0.0));
  add("segmentation.prominence_fraction", c.segmentation.prominence_fraction);
  add("segmentation.inflexion_half_window", c.segmentation.inflexion_half_window);
  add("segmentation.inflexion_slope_fraction", c.segmentation.inflexion_slope_fraction);
  add("segmentation.min_stroke_samples", static_cast<double>(c.segmentation.min_stroke_samples));
  add("fit.p_min", c.velocity_fit.p_min);
  add("fit.p_max", c.velocity_fit.p_max);
  add("fit.max_iterations", c.velocity_fit.max_iterations);
  add("fit.relative_tolerance", c.velocity_fit.relative_tolerance);
  add("fit.arc_max_iterations", c.arc_fit.max_iterations);
  add("fit.arc_shape_prior", c.arc_fit.shape_prior);
  out += "features.mode=" + std::string(feature_mode_name(c.mode)) + "\n";
  const auto& r = c.rules;
  for (auto [k, v] : {std::pair{"reference_height", r.reference_height}, {"closed_closure", r.closed_closure},
                      {"open_closure", r.open_closure}, {"straight_closure", r.straight_closure},
                      {"loop_rotation", r.loop_rotation}, {"begin_occlusion_rotation", r.begin_occlusion_rotation},
                      {"curve_rotation", r.curve_rotation}, {"broad_aspect", r.broad_aspect},
                      {"half_shaft_fraction", r.half_shaft_fraction},
                      {"arch_margin_fraction", r.arch_margin_fraction}}) {
    add((std::string("taxonomy.") + k).c_str(), v);
  }
  const auto& t = c.training;
  for (const auto& [name, h] : {std::pair{"autoencoder1", &t.ae1}, {"autoencoder2", &t.ae2}}) {
    const std::string pre = name;
    add((pre + ".hidden").c_str(), h->hidden);
    add((pre + ".max_epochs").c_str(), h->max_epochs);
    add((pre + ".l2_weight").c_str(), h->l2_weight);
    add((pre + ".sparsity_weight").c_str(), h->sparsity_weight);
    add((pre + ".sparsity_proportion").c_str(), h->sparsity_proportion);
  }
  add("training.learning_rate", t.learning_rate);
  add("training.classifier_learning_rate", t.classifier_learning_rate);
  add("training.momentum", t.momentum);
  add("training.seed", static_cast<double>(t.seed));
  add("training.softmax_epochs", t.softmax_epochs);
  add("training.softmax_l2", t.softmax_l2);
  add("training.fine_tune", t.fine_tune ? 1.0 : 0.0);
  add("training.fine_tune_epochs", t.fine_tune_epochs);
  add("training.min_samples_per_subgroup", static_cast<double>(t.min_samples_per_subgroup));
  out += "evaluation.protocol=" + std::string(protocol_name(c.protocol)) + "\n";
  add("evaluation.bundle_words", static_cast<double>(c.bundle_words));
  return out;
}

inline std::string config_hash(const PipelineConfig& c) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, detail::fnv1a(canonical_config(c)));
  return buf;
}

// ---------------------------------------------------------------------------
// Artifact envelope

inline nlohmann::ordered_json artifact_header(const std::string& schema, const PipelineConfig& cfg) {
  return {{"schema", schema},
          {"schema_version", kArtifactSchemaVersion},
          {"tool_version", kToolVersion},
          {"config_hash", config_hash(cfg)}};
}

inline nlohmann::json parse_artifact(const std::string& text, const std::string& schema) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Error::Kind::kParse, std::string("invalid JSON: ") + e.what());
  }
  const std::string expected = "expected schema " + schema + " version " + std::to_string(kArtifactSchemaVersion);
  if (!j.is_object() || !j.contains("schema") || j["schema"] != schema) {
    const std::string got = j.is_object() && j.contains("schema") ? j["schema"].dump() : std::string("none");
    throw Error(Error::Kind::kSchema, "wrong artifact schema " + got + " (" + expected + ")");
  }
  if (j.value("schema_version", -1) != kArtifactSchemaVersion) {
    throw Error(Error::Kind::kSchema, "unsupported schema_version " + j.value("schema_version", nlohmann::json()).dump() +
                                          " (" + expected + ")");
  }
  return j;
}

// Peeks at the schema field; "ink" for ink files (which carry a bare version).
inline std::string detect_schema(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.is_object() && j.contains("schema") && j["schema"].is_string()) return j["schema"].get<std::string>();
    if (j.is_object() && j.contains("words")) return "ink";
  } catch (const nlohmann::json::parse_error&) {
  }
  return "";
}

// ---------------------------------------------------------------------------
// Stage data

struct WordMeta {
  std::size_t index = 0;
  std::optional<std::string> writer_id;
  Script script = Script::kLatin;
  std::optional<std::string> page;
};

struct RawStroke {
  std::size_t trace = 0;
  StrokeSlice slice;
  BoundaryKind start_kind = BoundaryKind::kTraceStart;
  BoundaryKind end_kind = BoundaryKind::kTraceEnd;
  std::vector<double> t, x, y, v;
};

struct SegmentedWord {
  WordMeta meta;
  std::vector<RawStroke> strokes;
  std::size_t skipped_traces = 0;
};

struct FittedStroke {
  BetaStroke stroke;
  std::vector<Point2> points;
};

struct FittedWord {
  WordMeta meta;
  std::vector<FittedStroke> strokes;
};

// A segment ready for classification: features plus the points that the
// shape descriptors need.
struct SegmentRecord {
  LabeledSegment seg;
  Script script = Script::kLatin;
  std::size_t first_stroke = 0;
  std::size_t stroke_count = 0;
  std::vector<Point2> points;
  std::size_t split = 0;
  bool classified = false;
};

inline WordMeta meta_of(const Word& w, std::size_t index) { return {index, w.writer_id, w.script, w.page}; }

// Velocity, boundaries and slices of every trace long enough to segment.
inline SegmentedWord segment_word(const Word& word, std::size_t index, const SegmentationConfig& cfg) {
  SegmentedWord out;
  out.meta = meta_of(word, index);
  for (std::size_t k = 0; k < word.traces.size(); ++k) {
    const Trace& tr = word.traces[k];
    if (tr.size() < std::max<std::size_t>(cfg.min_stroke_samples, 5)) {
      ++out.skipped_traces;
      continue;
    }
    const auto prof = compute_velocity(tr);
    const auto bounds = detect_boundaries(prof, cfg);
    const auto slices = split_strokes(prof, bounds, cfg);
    auto kind_at = [&](std::size_t idx, BoundaryKind fallback) {
      for (const auto& b : bounds)
        if (b.index == idx) return b.kind;
      return fallback;
    };
    for (const auto& s : slices) {
      RawStroke r;
      r.trace = k;
      r.slice = s;
      r.start_kind = kind_at(s.begin, BoundaryKind::kVelocityMinimum);
      r.end_kind = kind_at(s.end, BoundaryKind::kVelocityMinimum);
      for (std::size_t i = s.begin; i <= s.end; ++i) {
        r.t.push_back(tr.samples[i].t);
        r.x.push_back(tr.samples[i].x);
        r.y.push_back(tr.samples[i].y);
        r.v.push_back(prof.v[i]);
      }
      out.strokes.push_back(std::move(r));
    }
  }
  return out;
}

// Velocity decomposition plus arc-pair geometry, split at the sample nearest
// the fitted peak time.
inline FittedStroke fit_stroke(const RawStroke& raw, const PipelineConfig& cfg) {
  FittedStroke out;
  const auto vf = fit_velocity(raw.t, raw.v, cfg.velocity_fit);
  out.stroke.pulse = vf.pulse;
  out.stroke.training = vf.training;
  out.stroke.fit_residual = vf.residual;
  out.stroke.velocity_degenerate = vf.degenerate;
  out.stroke.sample_range = {raw.slice.begin, raw.slice.end};
  for (std::size_t i = 0; i < raw.x.size(); ++i) out.points.push_back({raw.x[i], raw.y[i]});
  std::size_t split = 0;
  for (std::size_t i = 1; i < raw.t.size(); ++i)
    if (std::abs(raw.t[i] - vf.pulse.tc) < std::abs(raw.t[split] - vf.pulse.tc)) split = i;
  if (out.points.size() >= 6) {
    const auto af = fit_arc_pair(out.points, split, cfg.arc_fit);
    out.stroke.arcs = af.arcs;
    out.stroke.geometry_degenerate = af.degenerate;
  } else {
    const Point2 a = out.points.front(), b = out.points.back();
    const double chord = std::hypot(b.x - a.x, b.y - a.y);
    const double eps = 1e-9 * std::max(chord, 1e-300);
    out.stroke.arcs.theta = chord > 0.0 ? std::atan2(b.y - a.y, b.x - a.x) : 0.0;
    out.stroke.arcs.theta_p1 = out.stroke.arcs.theta;
    out.stroke.arcs.theta_p2 = out.stroke.arcs.theta;
    out.stroke.arcs.a1 = chord > 0.0 ? 0.5 * chord : eps;
    out.stroke.arcs.b1 = out.stroke.arcs.b2 = eps;
    out.stroke.arcs.link_point = out.points[std::min(split, out.points.size() - 1)];
    out.stroke.geometry_degenerate = true;
  }
  return out;
}

inline FittedWord fit_word(const SegmentedWord& w, const PipelineConfig& cfg) {
  FittedWord out;
  out.meta = w.meta;
  for (const auto& r : w.strokes) out.strokes.push_back(fit_stroke(r, cfg));
  return out;
}

inline std::vector<SegmentRecord> word_records(const FittedWord& w, FeatureMode mode) {
  std::vector<SegmentRecord> out;
  const std::size_t n = w.strokes.size();
  if (n < kSegmentStrokes) return out;
  std::vector<StrokeFeatures> f;
  for (std::size_t i = 0; i < n; ++i) f.push_back(extract_stroke_features(w.strokes[i].stroke, stroke_position(i, n)));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    SegmentRecord r;
    r.seg.features = build_segment_vector(f[i], f[i + 1], mode);
    r.seg.writer_id = w.meta.writer_id.value_or("");
    r.seg.word_index = w.meta.index;
    r.seg.page = w.meta.page.value_or("");
    r.seg.cls.group = assign_group(i, n);
    r.script = w.meta.script;
    r.first_stroke = i;
    r.stroke_count = n;
    r.points = w.strokes[i].points;
    r.split = r.points.size();
    // Strokes share their boundary sample; keep it once.
    const auto& next = w.strokes[i + 1].points;
    const bool shared = !r.points.empty() && !next.empty() && r.points.back() == next.front();
    r.points.insert(r.points.end(), next.begin() + (shared ? 1 : 0), next.end());
    out.push_back(std::move(r));
  }
  return out;
}

inline void classify_record(SegmentRecord& r, const TaxonomyRules& rules) {
  if (r.points.size() >= 4) {
    r.seg.cls = assign_subgroup(r.seg.cls.group, compute_descriptors(r.points, r.split, rules), rules);
  } else {
    ShapeDescriptors d;
    d.degenerate = true;
    r.seg.cls = assign_subgroup(r.seg.cls.group, d, rules);
  }
  r.classified = true;
}

// Runs `fn(i)` for i in [0, n) on up to `jobs` threads. Each index writes its
// own slot, so output order never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct StageReport {
  std::size_t words = 0;
  std::size_t words_without_segments = 0;
  std::size_t skipped_traces = 0;
  PreprocessReport preprocess;
};

// Preprocessed, quantized copy of `doc`; documents already marked as
// preprocessed pass through. Quantizing makes the in-memory result equal to
// what a saved-and-reloaded preprocess artifact holds.
inline InkDocument preprocess_stage(const InkDocument& doc, const PipelineConfig& cfg, StageReport* report = nullptr) {
  if (doc.provenance && doc.provenance->preprocessed) return doc;
  PreprocessReport pr;
  InkDocument out = preprocess(doc, cfg.preprocess, &pr);
  out.provenance = Provenance{kToolVersion, config_hash(cfg), true};
  quantize(out);
  if (report) report->preprocess = pr;
  return out;
}

inline std::vector<SegmentedWord> segment_stage(const InkDocument& doc, const PipelineConfig& cfg,
                                                StageReport* report = nullptr) {
  std::vector<SegmentedWord> out(doc.words.size());
  parallel_for(doc.words.size(), cfg.jobs, [&](std::size_t i) { out[i] = segment_word(doc.words[i], i, cfg.segmentation); });
  if (report) {
    report->words = out.size();
    for (const auto& w : out) report->skipped_traces += w.skipped_traces;
  }
  return out;
}

inline std::vector<FittedWord> fit_stage(const std::vector<SegmentedWord>& words, const PipelineConfig& cfg) {
  std::vector<FittedWord> out(words.size());
  parallel_for(words.size(), cfg.jobs, [&](std::size_t i) { out[i] = fit_word(words[i], cfg); });
  return out;
}

inline std::vector<SegmentRecord> features_stage(const std::vector<FittedWord>& words, FeatureMode mode,
                                                 StageReport* report = nullptr) {
  std::vector<SegmentRecord> out;
  for (const auto& w : words) {
    auto recs = word_records(w, mode);
    if (recs.empty() && report) ++report->words_without_segments;
    for (auto& r : recs) out.push_back(std::move(r));
  }
  return out;
}

inline void classify_stage(std::vector<SegmentRecord>& records, const TaxonomyRules& rules) {
  for (auto& r : records) classify_record(r, rules);
}

// Ink -> labeled segments, all stages in memory.
inline std::vector<SegmentRecord> process_document(const InkDocument& doc, const PipelineConfig& cfg,
                                                   StageReport* report = nullptr) {
  const auto pre = preprocess_stage(doc, cfg, report);
  const auto seg = segment_stage(pre, cfg, report);
  const auto fit = fit_stage(seg, cfg);
  auto recs = features_stage(fit, cfg.mode, report);
  classify_stage(recs, cfg.rules);
  return recs;
}

inline std::vector<LabeledSegment> labeled_segments(const std::vector<SegmentRecord>& records) {
  std::vector<LabeledSegment> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (!r.classified) throw Error(Error::Kind::kInvalidInput, "segments must be classified first");
    out.push_back(r.seg);
  }
  return out;
}

inline Model train_from_records(const std::vector<SegmentRecord>& records, const PipelineConfig& cfg,
                                const std::function<void(const NetworkKey&, std::size_t)>& progress = {}) {
  for (const auto& r : records) {
    if (r.seg.writer_id.empty()) {
      throw Error(Error::Kind::kInvalidInput,
                  "training word " + std::to_string(r.seg.word_index) + " has no writer_id");
    }
  }
  Model m = train_model(labeled_segments(records), cfg.mode, cfg.training, progress);
  m.tool_version = kToolVersion;
  m.config_hash = config_hash(cfg);
  return m;
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

inline nlohmann::ordered_json meta_json(const WordMeta& m) {
  nlohmann::ordered_json j;
  j["word_index"] = m.index;
  if (m.writer_id) j["writer_id"] = *m.writer_id;
  j["script"] = std::string(script_name(m.script));
  if (m.page) j["page"] = *m.page;
  return j;
}

inline WordMeta meta_from(const nlohmann::json& j) {
  WordMeta m;
  m.index = j.at("word_index").get<std::size_t>();
  if (j.contains("writer_id")) m.writer_id = j["writer_id"].get<std::string>();
  m.script = parse_script(j.value("script", "latin"));
  if (j.contains("page")) m.page = j["page"].get<std::string>();
  return m;
}

inline nlohmann::ordered_json points_json(const std::vector<Point2>& pts) {
  nlohmann::ordered_json xs = nlohmann::ordered_json::array(), ys = nlohmann::ordered_json::array();
  for (const auto& p : pts) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  return {{"x", xs}, {"y", ys}};
}

inline std::vector<Point2> points_from(const nlohmann::json& j) {
  const auto xs = j.at("x").get<std::vector<double>>();
  const auto ys = j.at("y").get<std::vector<double>>();
  if (xs.size() != ys.size()) throw Error(Error::Kind::kSchema, "point arrays differ in length");
  std::vector<Point2> out;
  for (std::size_t i = 0; i < xs.size(); ++i) out.push_back({xs[i], ys[i]});
  return out;
}

inline nlohmann::ordered_json stroke_json(const FittedStroke& f) {
  const auto& s = f.stroke;
  return {{"t0", s.pulse.t0},
          {"t1", s.pulse.t1},
          {"tc", s.pulse.tc},
          {"K", s.pulse.K},
          {"p", s.pulse.p},
          {"q", s.pulse.q},
          {"Vi", s.training.Vi},
          {"Vf", s.training.Vf},
          {"a1", s.arcs.a1},
          {"b1", s.arcs.b1},
          {"b2", s.arcs.b2},
          {"a2", s.arcs.a2()},
          {"theta", s.arcs.theta},
          {"theta_p1", s.arcs.theta_p1},
          {"theta_p2", s.arcs.theta_p2},
          {"turn", s.arcs.turn},
          {"link_point", {s.arcs.link_point.x, s.arcs.link_point.y}},
          {"sample_range", {s.sample_range.first, s.sample_range.second}},
          {"residual", s.fit_residual},
          {"velocity_degenerate", s.velocity_degenerate},
          {"geometry_degenerate", s.geometry_degenerate},
          {"points", points_json(f.points)}};
}

inline FittedStroke stroke_from(const nlohmann::json& j) {
  FittedStroke f;
  auto& s = f.stroke;
  s.pulse.t0 = j.at("t0").get<double>();
  s.pulse.t1 = j.at("t1").get<double>();
  s.pulse.tc = j.at("tc").get<double>();
  s.pulse.K = j.at("K").get<double>();
  s.pulse.p = j.at("p").get<double>();
  s.pulse.q = j.at("q").get<double>();
  s.training = {j.at("Vi").get<double>(), j.at("Vf").get<double>()};
  s.arcs.a1 = j.at("a1").get<double>();
  s.arcs.b1 = j.at("b1").get<double>();
  s.arcs.b2 = j.at("b2").get<double>();
  s.arcs.theta = j.at("theta").get<double>();
  s.arcs.theta_p1 = j.at("theta_p1").get<double>();
  s.arcs.theta_p2 = j.at("theta_p2").get<double>();
  s.arcs.turn = j.at("turn").get<int>();
  s.arcs.link_point = {j.at("link_point")[0].get<double>(), j.at("link_point")[1].get<double>()};
  s.sample_range = {j.at("sample_range")[0].get<std::size_t>(), j.at("sample_range")[1].get<std::size_t>()};
  s.fit_residual = j.at("residual").get<double>();
  s.velocity_degenerate = j.at("velocity_degenerate").get<bool>();
  s.geometry_degenerate = j.at("geometry_degenerate").get<bool>();
  f.points = points_from(j.at("points"));
  return f;
}

template <typename F>
auto with_schema_errors(const char* what, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Error::Kind::kSchema, std::string(what) + ": " + e.what());
  }
}

}  // namespace detail

inline std::string strokes_to_json(const std::vector<SegmentedWord>& words, const PipelineConfig& cfg) {
  auto j = artifact_header("betascript.strokes", cfg);
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& w : words) {
    auto wj = detail::meta_json(w.meta);
    nlohmann::ordered_json strokes = nlohmann::ordered_json::array();
    for (const auto& s : w.strokes) {
      strokes.push_back({{"trace", s.trace},
                         {"begin", s.slice.begin},
                         {"end", s.slice.end},
                         {"start_kind", std::string(boundary_kind_name(s.start_kind))},
                         {"end_kind", std::string(boundary_kind_name(s.end_kind))},
                         {"t", s.t},
                         {"x", s.x},
                         {"y", s.y},
                         {"v", s.v}});
    }
    wj["strokes"] = std::move(strokes);
    arr.push_back(std::move(wj));
  }
  j["words"] = std::move(arr);
  return j.dump() + "\n";
}

inline std::vector<SegmentedWord> strokes_from_json(const std::string& text) {
  const auto j = parse_artifact(text, "betascript.strokes");
  return detail::with_schema_errors("strokes artifact", [&] {
    std::vector<SegmentedWord> out;
    for (const auto& wj : j.at("words")) {
      SegmentedWord w;
      w.meta = detail::meta_from(wj);
      for (const auto& sj : wj.at("strokes")) {
        RawStroke s;
        s.trace = sj.at("trace").get<std::size_t>();
        s.slice = {sj.at("begin").get<std::size_t>(), sj.at("end").get<std::size_t>()};
        s.start_kind = parse_boundary_kind(sj.at("start_kind").get<std::string>());
        s.end_kind = parse_boundary_kind(sj.at("end_kind").get<std::string>());
        s.t = sj.at("t").get<std::vector<double>>();
        s.x = sj.at("x").get<std::vector<double>>();
        s.y = sj.at("y").get<std::vector<double>>();
        s.v = sj.at("v").get<std::vector<double>>();
        if (s.x.size() != s.t.size() || s.y.size() != s.t.size() || s.v.size() != s.t.size()) {
          throw Error(Error::Kind::kSchema, "stroke sample arrays differ in length");
        }
        w.strokes.push_back(std::move(s));
      }
      out.push_back(std::move(w));
    }
    return out;
  });
}

inline std::string params_to_json(const std::vector<FittedWord>& words, const PipelineConfig& cfg) {
  auto j = artifact_header("betascript.params", cfg);
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& w : words) {
    auto wj = detail::meta_json(w.meta);
    nlohmann::ordered_json strokes = nlohmann::ordered_json::array();
    for (const auto& s : w.strokes) strokes.push_back(detail::stroke_json(s));
    wj["strokes"] = std::move(strokes);
    arr.push_back(std::move(wj));
  }
  j["words"] = std::move(arr);
  return j.dump() + "\n";
}

inline std::vector<FittedWord> params_from_json(const std::string& text) {
  const auto j = parse_artifact(text, "betascript.params");
  return detail::with_schema_errors("params artifact", [&] {
    std::vector<FittedWord> out;
    for (const auto& wj : j.at("words")) {
      FittedWord w;
      w.meta = detail::meta_from(wj);
      for (const auto& sj : wj.at("strokes")) w.strokes.push_back(detail::stroke_from(sj));
      out.push_back(std::move(w));
    }
    return out;
  });
}

// Segments (schema betascript.segments) or, once classified,
// betascript.labeled.
inline std::string segments_to_json(const std::vector<SegmentRecord>& recs, FeatureMode mode,
                                    const PipelineConfig& cfg, bool labeled) {
  auto j = artifact_header(labeled ? "betascript.labeled" : "betascript.segments", cfg);
  j["mode"] = std::string(feature_mode_name(mode));
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : recs) {
    nlohmann::ordered_json sj;
    sj["word_index"] = r.seg.word_index;
    if (!r.seg.writer_id.empty()) sj["writer_id"] = r.seg.writer_id;
    if (!r.seg.page.empty()) sj["page"] = r.seg.page;
    sj["script"] = std::string(script_name(r.script));
    sj["first_stroke"] = r.first_stroke;
    sj["stroke_count"] = r.stroke_count;
    sj["group"] = std::string(group_name(r.seg.cls.group));
    if (labeled) {
      sj["subgroup_id"] = r.seg.cls.subgroup_id;
      sj["subgroup_name"] = std::string(subgroup_name(r.seg.cls.group, r.seg.cls.subgroup_id, r.script));
      sj["rule"] = r.seg.cls.rule;
    }
    sj["values"] = r.seg.features.values;
    sj["split"] = r.split;
    sj["points"] = detail::points_json(r.points);
    arr.push_back(std::move(sj));
  }
  j["segments"] = std::move(arr);
  return j.dump() + "\n";
}

inline std::vector<SegmentRecord> segments_from_json(const std::string& text, bool labeled, FeatureMode* mode_out) {
  const auto j = parse_artifact(text, labeled ? "betascript.labeled" : "betascript.segments");
  return detail::with_schema_errors("segments artifact", [&] {
    const FeatureMode mode = parse_feature_mode(j.at("mode").get<std::string>());
    if (mode_out) *mode_out = mode;
    std::vector<SegmentRecord> out;
    for (const auto& sj : j.at("segments")) {
      SegmentRecord r;
      r.seg.word_index = sj.at("word_index").get<std::size_t>();
      r.seg.writer_id = sj.value("writer_id", "");
      r.seg.page = sj.value("page", "");
      r.script = parse_script(sj.value("script", "latin"));
      r.first_stroke = sj.at("first_stroke").get<std::size_t>();
      r.stroke_count = sj.at("stroke_count").get<std::size_t>();
      r.seg.cls.group = parse_group(sj.at("group").get<std::string>());
      r.seg.features.mode = mode;
      r.seg.features.values = sj.at("values").get<std::vector<double>>();
      if (r.seg.features.values.size() != segment_length(mode)) {
        throw Error(Error::Kind::kSchema, "segment vector length does not match mode " +
                                              std::string(feature_mode_name(mode)));
      }
      if (labeled) {
        r.seg.cls.subgroup_id = sj.at("subgroup_id").get<int>();
        r.seg.cls.rule = sj.value("rule", "");
        if (r.seg.cls.subgroup_id < 1 || r.seg.cls.subgroup_id > subgroup_count(r.seg.cls.group)) {
          throw Error(Error::Kind::kSchema, "subgroup_id out of range");
        }
        r.classified = true;
      }
      r.split = sj.at("split").get<std::size_t>();
      r.points = detail::points_from(sj.at("points"));
      out.push_back(std::move(r));
    }
    return out;
  });
}

inline std::string model_file_text(const Model& m) { return model_to_json(m).dump() + "\n"; }

inline Model load_model(const std::string& path) {
  const std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Error::Kind::kParse, path + ": invalid JSON: " + e.what());
  }
  return detail::with_schema_errors("model file", [&] { return model_from_json(j); });
}

// Labeled segments from either an ink file (runs every stage) or a
// betascript.labeled artifact. The mode must match `cfg.mode`.
inline std::vector<SegmentRecord> load_labeled_input(const std::string& path, const PipelineConfig& cfg,
                                                     StageReport* report = nullptr) {
  const std::string text = read_text_file(path);
  const std::string schema = detect_schema(text);
  if (schema == "betascript.labeled") {
    FeatureMode mode;
    auto recs = segments_from_json(text, true, &mode);
    if (mode != cfg.mode) {
      throw Error(Error::Kind::kInvalidInput, "mode mismatch: input has " + std::string(feature_mode_name(mode)) +
                                                  ", requested " + std::string(feature_mode_name(cfg.mode)));
    }
    return recs;
  }
  if (schema == "ink") return process_document(parse_ink(text), cfg, report);
  throw Error(Error::Kind::kSchema, path + ": expected an ink file or schema betascript.labeled version " +
                                        std::to_string(kArtifactSchemaVersion));
}

inline std::string result_to_json(const IdentificationResult& r, const Model& m, const PipelineConfig& cfg) {
  auto j = artifact_header("betascript.result", cfg);
  j["writers"] = m.writers;
  j["scores"] = r.scores;
  nlohmann::ordered_json ranking = nlohmann::ordered_json::array();
  for (auto i : r.ranking) ranking.push_back(m.writers[i]);
  j["ranking"] = std::move(ranking);
  j["identified"] = m.writers[r.identified];
  j["segment_count"] = r.segment_count;
  j["skipped"] = r.skipped;
  return j.dump(2) + "\n";
}

inline std::string evaluation_to_json(const EvaluationReport& rep, const PipelineConfig& cfg) {
  auto j = artifact_header("betascript.evaluation", cfg);
  j["protocol"] = std::string(protocol_name(rep.protocol));
  j["tests"] = rep.tests();
  j["correct"] = rep.correct();
  nlohmann::ordered_json top = nlohmann::ordered_json::object();
  for (int k : rep.ranks) top["top" + std::to_string(k)] = rep.top(static_cast<std::size_t>(k));
  j["top_k"] = std::move(top);
  j["cmc"] = rep.cmc;
  nlohmann::ordered_json units = nlohmann::ordered_json::array();
  for (const auto& o : rep.outcomes) {
    units.push_back({{"unit", o.unit},
                     {"writer_id", o.writer_id},
                     {"identified", o.identified},
                     {"rank", o.rank},
                     {"segments", o.segments},
                     {"skipped", o.skipped},
                     {"evidence", o.evidence}});
  }
  j["units"] = std::move(units);
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Synthetic writer profiles (TOML)

struct ProfileSet {
  std::vector<SyntheticWriterProfile> writers;
  CorpusOptions corpus;
};

inline ProfileSet load_profiles(const std::string& path) {
  toml::table t;
  try {
    t = toml::parse_file(path);
  } catch (const toml::parse_error& e) {
    throw Error(Error::Kind::kParse, path + ":" + std::to_string(e.source().begin.line) + ": " +
                                         std::string(e.description()));
  }
  ProfileSet set;
  detail::read_key(t, "corpus", "sample_rate_hz", set.corpus.sample_rate_hz);
  detail::read_key(t, "corpus", "words_per_writer", set.corpus.words_per_writer);
  detail::read_key(t, "corpus", "first_word_index", set.corpus.first_word_index);
  detail::read_key(t, "corpus", "words_per_page", set.corpus.words_per_page);
  std::string script;
  detail::read_key(t, "corpus", "script", script);
  if (!script.empty()) set.corpus.script = parse_script(script);

  if (t["family"].as_table() != nullptr) {
    std::size_t count = 10;
    std::uint64_t seed = 1;
    double noise = 0.01;
    detail::read_key(t, "family", "count", count);
    detail::read_key(t, "family", "seed", seed);
    detail::read_key(t, "family", "noise", noise);
    set.writers = make_writer_family(count, seed, noise);
  }
  const auto* arr = t["writer"].as_array();
  if (arr == nullptr && set.writers.empty()) {
    throw Error(Error::Kind::kSchema, path + ": no [[writer]] entries and no [family] table");
  }
  if (arr != nullptr) {
    for (std::size_t k = 0; k < arr->size(); ++k) {
      const auto* w = arr->get(k)->as_table();
      const std::string where = "writer[" + std::to_string(k) + "]";
      if (w == nullptr) throw Error(Error::Kind::kSchema, path + ": " + where + " must be a table");
      SyntheticWriterProfile p;
      p.id = (*w)["id"].value_or(std::string());
      if (p.id.empty()) throw Error(Error::Kind::kSchema, path + ": " + where + ".id is required");
      p.seed = static_cast<std::uint64_t>((*w)["seed"].value_or(std::int64_t{1}));
      auto range = [&](const char* key, Range& r) {
        const auto node = (*w)[key];
        if (!node) return;
        const auto* a = node.as_array();
        if (a == nullptr || a->size() != 2 || !a->get(0)->value<double>() || !a->get(1)->value<double>()) {
          throw Error(Error::Kind::kSchema, path + ": " + where + "." + key + " must be [min, max]");
        }
        r = {*a->get(0)->value<double>(), *a->get(1)->value<double>()};
      };
      range("K", p.K);
      range("p", p.p);
      range("rap_tc", p.rap_tc);
      range("duration", p.duration);
      range("Vi", p.Vi);
      range("Vf", p.Vf);
      range("a1", p.a1);
      range("b1", p.b1);
      range("b2", p.b2);
      range("theta", p.theta);
      range("theta_p1", p.theta_p1);
      range("theta_p2", p.theta_p2);
      Range spw{static_cast<double>(p.strokes_per_word[0]), static_cast<double>(p.strokes_per_word[1])};
      range("strokes_per_word", spw);
      p.strokes_per_word = {static_cast<int>(spw[0]), static_cast<int>(spw[1])};
      p.noise = (*w)["noise"].value_or(p.noise);
      if (!p.valid()) throw Error(Error::Kind::kSchema, path + ": " + where + " has invalid ranges");
      set.writers.push_back(p);
    }
  }
  return set;
}

}  // namespace betascript

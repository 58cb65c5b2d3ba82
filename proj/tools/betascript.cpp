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

// betascript: command-line front end for the pipeline stages.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "betascript/pipeline.hpp"

namespace {

using namespace betascript;

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

Level log_level() {
  const char* env = std::getenv("BETASCRIPT_LOG");
  if (env == nullptr) return Level::kWarn;
  const std::string v = env;
  if (v == "error") return Level::kError;
  if (v == "info") return Level::kInfo;
  if (v == "debug") return Level::kDebug;
  return Level::kWarn;
}

void log(Level level, const std::string& msg) {
  static const Level threshold = log_level();
  if (level > threshold) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::fprintf(stderr, "betascript: %s: %s\n", names[static_cast<int>(level)], msg.c_str());
}

struct Options {
  std::string in, out, config, mode, protocol, rules, model, truth, profiles, report;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

PipelineConfig effective_config(const Options& o) {
  PipelineConfig cfg;
  if (!o.config.empty()) apply_config_file(cfg, o.config);
  if (!o.rules.empty()) {
    cfg.rules_path = o.rules;
    cfg.rules = load_rules(o.rules);
  }
  if (!o.mode.empty()) cfg.mode = parse_feature_mode(o.mode);
  if (!o.protocol.empty()) cfg.protocol = parse_protocol(o.protocol);
  if (o.seed) cfg.training.seed = *o.seed;
  cfg.jobs = o.jobs;
  return cfg;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(Error::Kind::kInvalidInput, std::string("missing required option ") + flag);
}

void report_stages(const StageReport& r) {
  if (r.preprocess.words_dropped) log(Level::kWarn, std::to_string(r.preprocess.words_dropped) + " degenerate word(s) dropped");
  if (r.preprocess.traces_dropped) log(Level::kInfo, std::to_string(r.preprocess.traces_dropped) + " single-point trace(s) dropped");
  if (r.preprocess.traces_unfiltered) {
    log(Level::kInfo, std::to_string(r.preprocess.traces_unfiltered) + " short trace(s) left unfiltered");
  }
  if (r.skipped_traces) log(Level::kInfo, std::to_string(r.skipped_traces) + " trace(s) too short to segment");
  if (r.words_without_segments) {
    log(Level::kWarn, std::to_string(r.words_without_segments) + " word(s) with fewer than 2 strokes contribute no segments");
  }
}

InkDocument load_preprocessed(const std::string& path, const PipelineConfig& cfg, StageReport* rep) {
  return preprocess_stage(load_ink(path), cfg, rep);
}

int cmd_preprocess(const Options& o) {
  require(o.in, "--in");
  require(o.out, "--out");
  const auto cfg = effective_config(o);
  StageReport rep;
  const auto doc = preprocess_stage(load_ink(o.in), cfg, &rep);
  report_stages(rep);
  save_ink(doc, o.out);
  log(Level::kInfo, "wrote " + std::to_string(doc.words.size()) + " word(s) to " + o.out);
  return 0;
}

int cmd_segment(const Options& o) {
  require(o.in, "--in");
  require(o.out, "--out");
  const auto cfg = effective_config(o);
  StageReport rep;
  const auto words = segment_stage(load_preprocessed(o.in, cfg, &rep), cfg, &rep);
  report_stages(rep);
  write_text_file(o.out, strokes_to_json(words, cfg));
  return 0;
}

int cmd_fit(const Options& o) {
  require(o.in, "--in");
  require(o.out, "--out");
  const auto cfg = effective_config(o);
  const auto fitted = fit_stage(strokes_from_json(read_text_file(o.in)), cfg);
  write_text_file(o.out, params_to_json(fitted, cfg));
  return 0;
}

int cmd_features(const Options& o) {
  require(o.in, "--in");
  require(o.out, "--out");
  const auto cfg = effective_config(o);
  StageReport rep;
  const auto recs = features_stage(params_from_json(read_text_file(o.in)), cfg.mode, &rep);
  report_stages(rep);
  write_text_file(o.out, segments_to_json(recs, cfg.mode, cfg, false));
  return 0;
}

int cmd_classify(const Options& o) {
  require(o.in, "--in");
  require(o.out, "--out");
  FeatureMode mode;
  auto recs = segments_from_json(read_text_file(o.in), false, &mode);
  Options with_mode = o;
  if (!o.mode.empty() && parse_feature_mode(o.mode) != mode) {
    throw Error(Error::Kind::kInvalidInput, "mode mismatch: input has " + std::string(feature_mode_name(mode)) +
                                                ", requested " + o.mode);
  }
  with_mode.mode = std::string(feature_mode_name(mode));
  const auto cfg = effective_config(with_mode);
  classify_stage(recs, cfg.rules);
  write_text_file(o.out, segments_to_json(recs, mode, cfg, true));
  return 0;
}

int cmd_train(const Options& o) {
  require(o.in, "--in");
  require(o.out, "--out");
  const auto cfg = effective_config(o);
  StageReport rep;
  const auto recs = load_labeled_input(o.in, cfg, &rep);
  report_stages(rep);
  log(Level::kInfo, std::to_string(recs.size()) + " training segment(s)");
  const Model m = train_from_records(recs, cfg, [](const NetworkKey& key, std::size_t n) {
    log(Level::kInfo, "training " + std::string(group_name(key.first)) + "/" + std::to_string(key.second) + " on " +
                          std::to_string(n) + " segment(s)");
  });
  write_text_file(o.out, model_file_text(m));
  log(Level::kInfo, "model with " + std::to_string(m.networks.size()) + " network(s), " +
                        std::to_string(m.writers.size()) + " writer(s)");
  return 0;
}

// The model fixes the feature mode; an explicit --mode must agree.
PipelineConfig config_for_model(const Options& o, const Model& m) {
  if (!o.mode.empty() && parse_feature_mode(o.mode) != m.mode) {
    throw Error(Error::Kind::kInvalidInput, "mode mismatch: model uses " + std::string(feature_mode_name(m.mode)) +
                                                ", requested " + o.mode);
  }
  Options with_mode = o;
  with_mode.mode = std::string(feature_mode_name(m.mode));
  return effective_config(with_mode);
}

int cmd_identify(const Options& o) {
  require(o.model, "--model");
  require(o.in, "--in");
  require(o.out, "--out");
  const Model m = load_model(o.model);
  const auto cfg = config_for_model(o, m);
  StageReport rep;
  const auto segs = labeled_segments(load_labeled_input(o.in, cfg, &rep));
  report_stages(rep);
  const auto r = identify(segs, m);
  if (r.skipped) log(Level::kWarn, std::to_string(r.skipped) + " segment(s) had no network and were skipped");
  write_text_file(o.out, result_to_json(r, m, cfg));
  std::printf("identified %s (%zu segment(s))\n", m.writers[r.identified].c_str(), r.segment_count);
  return 0;
}

int cmd_evaluate(const Options& o) {
  require(o.model, "--model");
  require(o.in, "--in");
  require(o.out, "--out");
  const Model m = load_model(o.model);
  const auto cfg = config_for_model(o, m);
  StageReport rep;
  const auto segs = labeled_segments(load_labeled_input(o.in, cfg, &rep));
  report_stages(rep);
  const auto units = build_test_units(segs, cfg.protocol, cfg.bundle_words);
  const auto result = evaluate(units, m, cfg.protocol);
  for (const auto& u : result.outcomes) {
    if (!u.evidence) log(Level::kWarn, "test unit " + u.unit + " has no scorable segments");
  }
  write_text_file(o.out, cmc_csv(result));
  if (!o.report.empty()) write_text_file(o.report, evaluation_to_json(result, cfg));
  std::cout << topk_table(result) << "\n" << topk_csv(result);
  return 0;
}

int cmd_synth(const Options& o) {
  require(o.profiles, "--profiles");
  require(o.out, "--out");
  const auto set = load_profiles(o.profiles);
  const auto corpus = synth_corpus(set.writers, set.corpus);
  save_ink(corpus.ink, o.out);
  if (!o.truth.empty()) write_text_file(o.truth, corpus.truth.dump(2) + "\n");
  log(Level::kInfo, "synthesized " + std::to_string(corpus.ink.words.size()) + " word(s)");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beta-elliptic handwriting modeling and writer identification"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  Options o;

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const std::vector<Command> commands = {
      {"preprocess", "low-pass filter and height-normalize an ink file", cmd_preprocess},
      {"segment", "split traces into Beta strokes", cmd_segment},
      {"fit", "fit Beta velocity and elliptic arc parameters", cmd_fit},
      {"features", "build segment feature vectors", cmd_features},
      {"classify", "assign group and subgroup to segments", cmd_classify},
      {"train", "train the writer model from ink or labeled segments", cmd_train},
      {"identify", "identify the writer of an input", cmd_identify},
      {"evaluate", "run the page or bundle evaluation protocol", cmd_evaluate},
      {"synth", "synthesize a labeled corpus from writer profiles", cmd_synth},
  };
  int (*selected)(const Options&) = nullptr;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--in", o.in, "input file");
    sub->add_option("--out", o.out, "output file");
    sub->add_option("--config", o.config, "TOML configuration file")->check(CLI::ExistingFile);
    sub->add_option("--mode", o.mode, "feature mode")->check(CLI::IsMember({"ebe", "ebe+fepc"}));
    sub->add_option("--seed", o.seed, "training seed");
    sub->add_option("--protocol", o.protocol, "evaluation protocol")->check(CLI::IsMember({"pages", "bundles"}));
    sub->add_option("--rules", o.rules, "taxonomy rules TOML")->check(CLI::ExistingFile);
    sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--model", o.model, "model file");
    sub->add_option("--truth", o.truth, "ground-truth sidecar output (synth)");
    sub->add_option("--profiles", o.profiles, "writer profiles TOML (synth)")->check(CLI::ExistingFile);
    sub->add_option("--report", o.report, "per-unit evaluation report JSON (evaluate)");
    auto run = c.run;
    sub->callback([&selected, run] { selected = run; });
  }
  CLI11_PARSE(app, argc, argv);
  try {
    return selected(o);
  } catch (const betascript::Error& e) {
    log(Level::kError, e.what());
    return 1;
  } catch (const std::exception& e) {
    log(Level::kError, e.what());
    return 1;
  }
}

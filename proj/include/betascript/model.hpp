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

// Enrolled-writer model: one network per (group, subgroup) plus a pooled
// network per group, a shared input scaler, and the JSON model file.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "betascript/error.hpp"
#include "betascript/features.hpp"
#include "betascript/neural.hpp"
#include "betascript/taxonomy.hpp"

namespace betascript {

inline constexpr int kModelVersion = 1;

// Subgroup id 0 denotes the group's pooled network.
using NetworkKey = std::pair<Group, int>;

struct LabeledSegment {
  SegmentFeatureVector features;
  SegmentClass cls;
  std::string writer_id;
  std::size_t word_index = 0;
  std::string page;
};

struct Model {
  FeatureMode mode = FeatureMode::kEbeFepc;
  std::vector<std::string> writers;
  MinMaxScaler scaler;
  std::map<NetworkKey, SubgroupNetwork> networks;
  std::string tool_version;
  std::string config_hash;

  std::size_t writer_index(const std::string& id) const {
    const auto it = std::find(writers.begin(), writers.end(), id);
    if (it == writers.end()) throw Error(Error::Kind::kInvalidInput, "writer '" + id + "' is not enrolled");
    return static_cast<std::size_t>(it - writers.begin());
  }

  // Dedicated subgroup network, else the group's pooled network, else null.
  const SubgroupNetwork* route(const SegmentClass& c) const {
    if (auto it = networks.find({c.group, c.subgroup_id}); it != networks.end()) return &it->second;
    if (auto it = networks.find({c.group, 0}); it != networks.end()) return &it->second;
    return nullptr;
  }
};

inline Matrix segment_matrix(const std::vector<const LabeledSegment*>& segs, std::size_t dim) {
  Matrix X(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(segs.size()));
  for (std::size_t j = 0; j < segs.size(); ++j) {
    const auto& v = segs[j]->features.values;
    if (v.size() != dim) throw Error(Error::Kind::kShapeMismatch, "segment vector length differs from feature mode");
    for (std::size_t i = 0; i < dim; ++i) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i];
  }
  return X;
}

// Trains the pooled network of every group with at least two segments and a
// dedicated network for each subgroup reaching cfg.min_samples_per_subgroup.
// `progress` (optional) is called before each network is trained.
inline Model train_model(const std::vector<LabeledSegment>& segments, FeatureMode mode, const TrainingConfig& cfg,
                         const std::function<void(const NetworkKey&, std::size_t)>& progress = {}) {
  cfg.validate();
  if (segments.empty()) throw Error(Error::Kind::kInvalidInput, "no training segments");
  Model model;
  model.mode = mode;
  for (const auto& s : segments) model.writers.push_back(s.writer_id);
  std::sort(model.writers.begin(), model.writers.end());
  model.writers.erase(std::unique(model.writers.begin(), model.writers.end()), model.writers.end());

  const std::size_t dim = segment_length(mode);
  std::vector<const LabeledSegment*> all;
  for (const auto& s : segments) all.push_back(&s);
  model.scaler = MinMaxScaler::fit(segment_matrix(all, dim));

  std::map<NetworkKey, std::vector<const LabeledSegment*>> buckets;
  for (const auto& s : segments) {
    buckets[{s.cls.group, 0}].push_back(&s);
    buckets[{s.cls.group, s.cls.subgroup_id}].push_back(&s);
  }
  const int classes = static_cast<int>(model.writers.size());
  for (const auto& [key, segs] : buckets) {
    const bool pooled = key.second == 0;
    if (segs.size() < 2 || (!pooled && segs.size() < cfg.min_samples_per_subgroup)) continue;
    if (progress) progress(key, segs.size());
    std::vector<int> labels;
    labels.reserve(segs.size());
    for (const auto* s : segs) labels.push_back(static_cast<int>(model.writer_index(s->writer_id)));
    TrainingConfig local = cfg;
    local.seed = cfg.seed * 1000003ULL + static_cast<std::uint64_t>(static_cast<int>(key.first)) * 100ULL +
                 static_cast<std::uint64_t>(key.second);
    model.networks.emplace(key, train_network(model.scaler.transform(segment_matrix(segs, dim)), labels, classes,
                                              local));
  }
  return model;
}

namespace detail {

// Nearest double to the value printed with 9 significant digits.
inline double round9(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return std::strtod(buf, nullptr);
}

inline nlohmann::ordered_json matrix_json(const Matrix& m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(round9(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::ordered_json vector_json(const Vector& v) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(round9(v[i]));
  return arr;
}

inline Vector vector_from(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) throw Error(Error::Kind::kSchema, where + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw Error(Error::Kind::kSchema, where + "[" + std::to_string(i) + "]: expected a number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

inline Matrix matrix_from(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw Error(Error::Kind::kSchema, where + ": expected a non-empty array of rows");
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vector row = vector_from(j[i], where + "[" + std::to_string(i) + "]");
    if (static_cast<std::size_t>(row.size()) != cols) throw Error(Error::Kind::kSchema, where + ": ragged matrix");
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

}  // namespace detail

inline nlohmann::ordered_json model_to_json(const Model& m) {
  nlohmann::ordered_json j;
  j["schema"] = "betascript.model";
  j["schema_version"] = kModelVersion;
  j["version"] = kModelVersion;
  j["tool_version"] = m.tool_version;
  j["config_hash"] = m.config_hash;
  j["mode"] = std::string(feature_mode_name(m.mode));
  j["writers"] = m.writers;
  j["scaler"] = {{"min", detail::vector_json(m.scaler.min)}, {"max", detail::vector_json(m.scaler.max)}};
  nlohmann::ordered_json nets = nlohmann::ordered_json::array();
  for (const auto& [key, net] : m.networks) {
    nets.push_back({{"group", std::string(group_name(key.first))},
                    {"subgroup_id", key.second},
                    {"W1", detail::matrix_json(net.encoder1.W)},
                    {"b1", detail::vector_json(net.encoder1.b)},
                    {"W2", detail::matrix_json(net.encoder2.W)},
                    {"b2", detail::vector_json(net.encoder2.b)},
                    {"W3", detail::matrix_json(net.classifier.W)},
                    {"b3", detail::vector_json(net.classifier.b)}});
  }
  j["networks"] = std::move(nets);
  return j;
}

inline Model model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("schema", "") != "betascript.model") {
    throw Error(Error::Kind::kSchema, "not a model file (schema must be betascript.model)");
  }
  if (j.value("version", 0) != kModelVersion) {
    throw Error(Error::Kind::kSchema, "unsupported model version (expected " + std::to_string(kModelVersion) + ")");
  }
  Model m;
  m.mode = parse_feature_mode(j.at("mode").get<std::string>());
  m.writers = j.at("writers").get<std::vector<std::string>>();
  m.tool_version = j.value("tool_version", "");
  m.config_hash = j.value("config_hash", "");
  m.scaler.min = detail::vector_from(j.at("scaler").at("min"), "scaler.min");
  m.scaler.max = detail::vector_from(j.at("scaler").at("max"), "scaler.max");
  const auto dim = static_cast<Eigen::Index>(segment_length(m.mode));
  if (m.scaler.min.size() != dim || m.scaler.max.size() != dim) {
    throw Error(Error::Kind::kSchema, "scaler length does not match feature mode");
  }
  const auto& nets = j.at("networks");
  for (std::size_t k = 0; k < nets.size(); ++k) {
    const auto& n = nets[k];
    const std::string where = "networks[" + std::to_string(k) + "]";
    SubgroupNetwork net;
    net.encoder1 = {detail::matrix_from(n.at("W1"), where + ".W1"), detail::vector_from(n.at("b1"), where + ".b1"),
                    Activation::kSigmoid};
    net.encoder2 = {detail::matrix_from(n.at("W2"), where + ".W2"), detail::vector_from(n.at("b2"), where + ".b2"),
                    Activation::kSigmoid};
    net.classifier = {detail::matrix_from(n.at("W3"), where + ".W3"), detail::vector_from(n.at("b3"), where + ".b3"),
                      Activation::kSoftmax};
    const bool chained = net.encoder1.in_dim() == dim && net.encoder2.in_dim() == net.encoder1.out_dim() &&
                         net.classifier.in_dim() == net.encoder2.out_dim() &&
                         net.classifier.out_dim() == static_cast<Eigen::Index>(m.writers.size()) &&
                         net.encoder1.b.size() == net.encoder1.out_dim() &&
                         net.encoder2.b.size() == net.encoder2.out_dim() &&
                         net.classifier.b.size() == net.classifier.out_dim();
    if (!chained) throw Error(Error::Kind::kSchema, where + ": layer shapes do not chain");
    const Group g = parse_group(n.at("group").get<std::string>());
    const int id = n.at("subgroup_id").get<int>();
    if (id < 0 || id > subgroup_count(g)) throw Error(Error::Kind::kSchema, where + ": subgroup_id out of range");
    m.networks.emplace(NetworkKey{g, id}, std::move(net));
  }
  return m;
}

}  // namespace betascript

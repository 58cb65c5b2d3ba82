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

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "betascript/error.hpp"
#include "betascript/filter.hpp"
#include "betascript/ink.hpp"

namespace betascript {

struct PreprocessConfig {
  double cutoff_hz = 12.0;
  double target_height = 128.0;
  int filter_order = 4;
  double stopband_attenuation_db = 40.0;
  // Unset: taken from the document header, else inferred per trace.
  std::optional<double> sample_rate_hz;
};

// Median of 1/dt over the trace.
inline double infer_sample_rate(const Trace& trace) {
  if (trace.size() < 2) throw Error(Error::Kind::kInvalidInput, "cannot infer sample rate from < 2 samples");
  std::vector<double> dts;
  dts.reserve(trace.size() - 1);
  for (std::size_t i = 1; i < trace.size(); ++i) dts.push_back(trace.samples[i].t - trace.samples[i - 1].t);
  std::nth_element(dts.begin(), dts.begin() + static_cast<std::ptrdiff_t>(dts.size() / 2), dts.end());
  return 1.0 / dts[dts.size() / 2];
}

namespace detail {

inline bool is_uniform(const Trace& trace, double rate) {
  const double dt = 1.0 / rate;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (std::abs(trace.samples[i].t - trace.samples[i - 1].t - dt) > 0.01 * dt) return false;
  }
  return true;
}

// Linear interpolation of `values` sampled at `t` onto `query` (both sorted).
inline std::vector<double> interp(const std::vector<double>& t, const std::vector<double>& values,
                                  const std::vector<double>& query) {
  std::vector<double> out(query.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < query.size(); ++i) {
    const double q = query[i];
    while (j + 2 < t.size() && t[j + 1] < q) ++j;
    const double span = t[j + 1] - t[j];
    const double w = std::clamp((q - t[j]) / span, 0.0, 1.0);
    out[i] = values[j] + w * (values[j + 1] - values[j]);
  }
  return out;
}

}  // namespace detail

// Zero-phase Chebyshev-II low-pass of x and y. Non-uniformly sampled traces
// are resampled to a uniform grid, filtered, and interpolated back onto the
// original timestamps.
inline Trace lowpass_filter(const Trace& trace, const PreprocessConfig& cfg) {
  const std::size_t min_len = 3 * static_cast<std::size_t>(std::max(cfg.filter_order, 1));
  if (trace.size() < min_len) {
    throw Error(Error::Kind::kInvalidInput, "trace too short for filtering (" + std::to_string(trace.size()) +
                                                " < " + std::to_string(min_len) + " samples)");
  }
  const double rate = cfg.sample_rate_hz ? *cfg.sample_rate_hz : infer_sample_rate(trace);
  if (!(cfg.cutoff_hz < rate / 2.0)) {
    throw Error(Error::Kind::kInvalidInput, "cutoff must be below Nyquist");
  }
  const SosFilter f = design_cheby2_lowpass(cfg.filter_order, cfg.stopband_attenuation_db, cfg.cutoff_hz, rate);

  std::vector<double> t, x, y;
  for (const auto& s : trace.samples) {
    t.push_back(s.t);
    x.push_back(s.x);
    y.push_back(s.y);
  }

  Trace out = trace;
  if (detail::is_uniform(trace, rate)) {
    x = filtfilt(f, x);
    y = filtfilt(f, y);
  } else {
    std::vector<double> grid;
    const double dt = 1.0 / rate;
    for (double g = t.front(); g < t.back() + 0.5 * dt; g += dt) grid.push_back(std::min(g, t.back()));
    if (grid.size() < 2) grid = {t.front(), t.back()};
    auto gx = filtfilt(f, detail::interp(t, x, grid));
    auto gy = filtfilt(f, detail::interp(t, y, grid));
    x = detail::interp(grid, gx, t);
    y = detail::interp(grid, gy, t);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.samples[i].x = x[i];
    out.samples[i].y = y[i];
  }
  return out;
}

// Scales the word so its y-extent equals target_height, x by the same factor,
// and translates it to min-x = min-y = 0.
inline Word normalize_height(const Word& word, const PreprocessConfig& cfg) {
  if (!(cfg.target_height > 0.0)) throw Error(Error::Kind::kInvalidInput, "target_height must be positive");
  if (std::none_of(word.traces.begin(), word.traces.end(), [](const Trace& t) { return t.size() >= 2; })) {
    throw Error(Error::Kind::kDegenerate, "degenerate word (single-point strokes only)");
  }
  double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
  double max_y = -std::numeric_limits<double>::infinity();
  for (const auto& tr : word.traces)
    for (const auto& s : tr.samples) {
      min_x = std::min(min_x, s.x);
      min_y = std::min(min_y, s.y);
      max_y = std::max(max_y, s.y);
    }
  const double height = max_y - min_y;
  if (!(height > 0.0) || !std::isfinite(height)) {
    throw Error(Error::Kind::kDegenerate, "degenerate word (zero height)");
  }
  const double scale = cfg.target_height / height;
  Word out = word;
  for (auto& tr : out.traces)
    for (auto& s : tr.samples) {
      s.x = (s.x - min_x) * scale;
      s.y = (s.y - min_y) * scale;
    }
  return out;
}

struct PreprocessReport {
  std::size_t words_dropped = 0;
  std::size_t traces_unfiltered = 0;
  std::size_t traces_dropped = 0;
};

// Filters every trace, then normalizes each word. Traces shorter than the
// filter minimum pass through unfiltered; single-sample traces are dropped;
// words that end up degenerate are dropped.
inline InkDocument preprocess(const InkDocument& doc, PreprocessConfig cfg, PreprocessReport* report = nullptr) {
  if (!cfg.sample_rate_hz && doc.sample_rate_hz) cfg.sample_rate_hz = doc.sample_rate_hz;
  PreprocessReport rep;
  InkDocument out;
  out.sample_rate_hz = doc.sample_rate_hz;
  out.provenance = doc.provenance;
  const std::size_t min_len = 3 * static_cast<std::size_t>(std::max(cfg.filter_order, 1));
  for (const auto& word : doc.words) {
    Word filtered = word;
    filtered.traces.clear();
    for (const auto& tr : word.traces) {
      if (tr.size() < 2) {
        ++rep.traces_dropped;
        continue;
      }
      if (tr.size() < min_len) {
        ++rep.traces_unfiltered;
        filtered.traces.push_back(tr);
        continue;
      }
      filtered.traces.push_back(lowpass_filter(tr, cfg));
    }
    if (filtered.traces.empty()) {
      ++rep.words_dropped;
      continue;
    }
    try {
      out.words.push_back(normalize_height(filtered, cfg));
    } catch (const Error& e) {
      if (e.kind() != Error::Kind::kDegenerate) throw;
      ++rep.words_dropped;
    }
  }
  if (report) *report = rep;
  return out;
}

}  // namespace betascript

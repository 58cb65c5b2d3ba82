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

// Synthesis from known model parameters: velocity profiles, trajectories and
// whole labeled corpora with ground truth. Used as the round-trip oracle for
// segmentation and fitting and as the data source for identification runs.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "betascript/beta_model.hpp"
#include "betascript/error.hpp"
#include "betascript/ink.hpp"
#include "betascript/segmentation.hpp"

namespace betascript {

// Uniform grid t_i = t_begin + i / rate covering [t_begin, t_end].
inline std::vector<double> uniform_grid(double t_begin, double t_end, double rate_hz) {
  if (!(rate_hz > 0.0)) throw Error(Error::Kind::kInvalidInput, "sample rate must be positive");
  const auto n = static_cast<std::size_t>(std::floor((t_end - t_begin) * rate_hz + 1e-9)) + 1;
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = t_begin + static_cast<double>(i) / rate_hz;
  return t;
}

namespace detail {

// Stroke k covers [t0, t1); its closing instant t1 belongs to it only when no
// other stroke starts there, so chained strokes are not double counted.
inline double chained_velocity(std::span<const BetaStroke> strokes, double t) {
  double v = 0.0;
  for (std::size_t k = 0; k < strokes.size(); ++k) {
    const auto& s = strokes[k];
    if (t >= s.pulse.t0 && t < s.pulse.t1) {
      v += reconstruct_velocity(s, t);
    } else if (t == s.pulse.t1) {
      const bool continued = std::any_of(strokes.begin(), strokes.end(),
                                         [&](const BetaStroke& o) { return o.pulse.t0 == s.pulse.t1; });
      if (!continued) v += s.training.Vf;
    }
  }
  return v;
}

// 5-point Gauss-Legendre on [a, b].
template <typename F>
double gauss5(F&& f, double a, double b) {
  static constexpr std::array<double, 5> x{0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                                           0.9061798459386640};
  static constexpr std::array<double, 5> w{0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                           0.2369268850561891, 0.2369268850561891};
  const double h = 0.5 * (b - a), m = 0.5 * (a + b);
  double s = 0.0;
  for (int i = 0; i < 5; ++i) s += w[i] * f(m + h * x[i]);
  return s * h;
}

// Arc length along an ellipse measured from its minor-axis vertex, and its
// inverse. Parametrization (u, w) = (a sin phi, b cos phi - b).
class EllipseArcLength {
 public:
  EllipseArcLength(double a, double b) : a_(a), b_(b) { cumulative_.push_back(0.0); }

  double speed(double phi) const {
    const double c = std::cos(phi), s = std::sin(phi);
    return std::sqrt(a_ * a_ * c * c + b_ * b_ * s * s);
  }

  // phi >= 0 with arc length `d` from the vertex.
  double angle_at(double d) {
    while (cumulative_.back() < d) {
      const double lo = kStep * static_cast<double>(cumulative_.size() - 1);
      cumulative_.push_back(cumulative_.back() + gauss5([&](double p) { return speed(p); }, lo, lo + kStep));
    }
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), d);
    const std::size_t k = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    const double base = kStep * static_cast<double>(k);
    double phi = base;
    if (k + 1 < cumulative_.size()) {
      phi = base + kStep * (d - cumulative_[k]) / (cumulative_[k + 1] - cumulative_[k]);
    }
    for (int it_n = 0; it_n < 6; ++it_n) {
      const double s = cumulative_[k] + gauss5([&](double p) { return speed(p); }, base, phi);
      const double sp = speed(phi);
      if (sp <= 0.0) break;
      phi -= (s - d) / sp;
    }
    return phi;
  }

  double a() const { return a_; }
  double b() const { return b_; }

 private:
  static constexpr double kStep = std::numbers::pi / 512.0;
  double a_, b_;
  std::vector<double> cumulative_;
};

}  // namespace detail

// Samples the chained reconstructed velocity on [t_begin, t_end].
inline VelocityProfile synth_velocity(std::span<const BetaStroke> strokes, double rate_hz, double t_begin,
                                      double t_end) {
  VelocityProfile prof;
  prof.t = uniform_grid(t_begin, t_end, rate_hz);
  prof.v.resize(prof.t.size());
  for (std::size_t i = 0; i < prof.t.size(); ++i) prof.v[i] = detail::chained_velocity(strokes, prof.t[i]);
  return prof;
}

inline VelocityProfile synth_velocity(std::span<const BetaStroke> strokes, double rate_hz) {
  if (strokes.empty()) return synth_velocity(strokes, rate_hz, 0.0, 0.0);
  return synth_velocity(strokes, rate_hz, strokes.front().pulse.t0, strokes.back().pulse.t1);
}

struct SynthTrajectory {
  Trace trace;
  // Per stroke: link point M2 and the true end tangents.
  std::vector<Point2> link_points;
  std::vector<double> theta_p1;
  std::vector<double> theta_p2;
};

// Integrates position along each stroke's two arcs at the reconstructed
// speed. The arc switch (link point) is at tc; consecutive strokes join
// position-continuously; the pen rests during time gaps.
inline SynthTrajectory synth_trajectory(std::span<const BetaStroke> strokes, double rate_hz,
                                        Point2 origin = {0.0, 0.0}) {
  if (strokes.empty()) throw Error(Error::Kind::kInvalidInput, "no strokes to synthesize");
  for (std::size_t k = 1; k < strokes.size(); ++k) {
    const double gap = strokes[k].pulse.t0 - strokes[k - 1].pulse.t1;
    if (gap < -1e-9) throw Error(Error::Kind::kInvalidInput, "inconsistent arc chain: strokes overlap in time");
  }

  struct Placed {
    double L1 = 0.0, L2 = 0.0;
    Point2 m2;
    double c = 1.0, s = 0.0;
    int turn = 1;
    detail::EllipseArcLength e1{1.0, 1.0}, e2{1.0, 1.0};
  };

  auto speed_integral = [](const BetaStroke& st, double a, double b) {
    if (b <= a) return 0.0;
    // Panels keep the quadrature accurate for sharp impulses.
    constexpr int kPanels = 64;
    double total = 0.0;
    const double h = (b - a) / kPanels;
    for (int i = 0; i < kPanels; ++i) {
      total += detail::gauss5([&](double t) { return reconstruct_velocity(st, t); }, a + i * h, a + (i + 1) * h);
    }
    return total;
  };

  auto local_point = [](detail::EllipseArcLength& e, double dist, bool before) {
    const double phi = (before ? -1.0 : 1.0) * e.angle_at(dist);
    return std::pair{e.a() * std::sin(phi), e.b() * std::cos(phi) - e.b()};
  };
  auto local_tangent = [](detail::EllipseArcLength& e, double dist, bool before) {
    const double phi = (before ? -1.0 : 1.0) * e.angle_at(dist);
    return std::pair{e.a() * std::cos(phi), -e.b() * std::sin(phi)};
  };
  auto to_world = [](const Placed& pl, double u, double w) {
    const double v = -pl.turn * w;
    return Point2{pl.m2.x + u * pl.c - v * pl.s, pl.m2.y + u * pl.s + v * pl.c};
  };

  SynthTrajectory out;
  std::vector<Placed> placed;
  Point2 pen = origin;
  for (const auto& st : strokes) {
    Placed pl;
    pl.L1 = speed_integral(st, st.pulse.t0, st.pulse.tc);
    pl.L2 = speed_integral(st, st.pulse.tc, st.pulse.t1);
    if (!(pl.L1 + pl.L2 > 0.0)) throw Error(Error::Kind::kDegenerate, "zero-velocity stroke has no path");
    const auto& arcs = st.arcs;
    pl.c = std::cos(arcs.theta);
    pl.s = std::sin(arcs.theta);
    pl.turn = arcs.turn >= 0 ? 1 : -1;
    pl.e1 = detail::EllipseArcLength(arcs.a1, arcs.b1);
    pl.e2 = detail::EllipseArcLength(arcs.a2(), arcs.b2);
    const auto [u1, w1] = local_point(pl.e1, pl.L1, true);
    // Place M2 so that the stroke starts at the pen.
    pl.m2 = {0.0, 0.0};
    const Point2 start_rel = to_world(pl, u1, w1);
    pl.m2 = {pen.x - start_rel.x, pen.y - start_rel.y};
    const auto [ue, we] = local_point(pl.e2, pl.L2, false);
    pen = to_world(pl, ue, we);

    const auto [tu1, tw1] = local_tangent(pl.e1, pl.L1, true);
    const auto [tu2, tw2] = local_tangent(pl.e2, pl.L2, false);
    auto dir = [&](double tu, double tw) {
      const double tv = -pl.turn * tw;
      return std::atan2(tu * pl.s + tv * pl.c, tu * pl.c - tv * pl.s);
    };
    out.link_points.push_back(pl.m2);
    out.theta_p1.push_back(dir(tu1, tw1));
    out.theta_p2.push_back(dir(tu2, tw2));
    placed.push_back(std::move(pl));
  }

  const auto grid = uniform_grid(strokes.front().pulse.t0, strokes.back().pulse.t1, rate_hz);
  out.trace.samples.reserve(grid.size());
  std::size_t k = 0;
  Point2 rest = origin;
  double covered = 0.0;  // arc length covered inside stroke k at time `tprev`
  double tprev = strokes.front().pulse.t0;
  for (double t : grid) {
    while (k < strokes.size() && t >= strokes[k].pulse.t1 && k + 1 < strokes.size()) {
      // Finish stroke k: the pen sits at its end point.
      auto& pl = placed[k];
      const auto [ue, we] = local_point(pl.e2, pl.L2, false);
      rest = to_world(pl, ue, we);
      ++k;
      covered = 0.0;
      tprev = strokes[k].pulse.t0;
    }
    const auto& st = strokes[k];
    Point2 pos;
    if (t < st.pulse.t0) {
      pos = rest;
    } else {
      const double te = std::min(t, st.pulse.t1);
      covered += speed_integral(st, std::max(tprev, st.pulse.t0), te);
      tprev = te;
      auto& pl = placed[k];
      const double s = std::min(covered, pl.L1 + pl.L2);
      if (s <= pl.L1) {
        const auto [u, w] = local_point(pl.e1, pl.L1 - s, true);
        pos = to_world(pl, u, w);
      } else {
        const auto [u, w] = local_point(pl.e2, s - pl.L1, false);
        pos = to_world(pl, u, w);
      }
    }
    out.trace.samples.push_back({t, pos.x, pos.y});
  }
  return out;
}

using Range = std::array<double, 2>;

struct SyntheticWriterProfile {
  std::string id;
  std::uint64_t seed = 1;
  Range K{80.0, 160.0};
  Range p{2.0, 4.0};
  Range rap_tc{0.35, 0.65};
  Range duration{0.18, 0.32};
  Range Vi{0.0, 20.0};
  Range Vf{0.0, 20.0};
  Range a1{8.0, 20.0};
  Range b1{4.0, 10.0};
  Range b2{4.0, 10.0};
  Range theta{-3.14159, 3.14159};
  // Only the sign matters: it selects the turning direction of the stroke.
  Range theta_p1{-1.0, 1.0};
  Range theta_p2{-1.0, 1.0};
  std::array<int, 2> strokes_per_word{4, 7};
  double noise = 0.0;  // velocity noise, fraction of K

  bool valid() const {
    auto ordered = [](const Range& r) { return r[0] <= r[1]; };
    return ordered(K) && K[0] > 0.0 && ordered(p) && p[0] > 0.0 && ordered(rap_tc) && rap_tc[0] > 0.0 &&
           rap_tc[1] < 1.0 && ordered(duration) && duration[0] > 0.0 && ordered(Vi) && Vi[0] >= 0.0 &&
           ordered(Vf) && Vf[0] >= 0.0 && ordered(a1) && a1[0] > 0.0 && ordered(b1) && b1[0] > 0.0 &&
           ordered(b2) && b2[0] > 0.0 && ordered(theta) && strokes_per_word[0] >= 1 &&
           strokes_per_word[0] <= strokes_per_word[1] && noise >= 0.0;
  }
};

struct CorpusOptions {
  double sample_rate_hz = 100.0;
  std::size_t words_per_writer = 25;
  // Word indices are numbered from here; train and test corpora from the same
  // profiles use disjoint ranges.
  std::size_t first_word_index = 0;
  // When > 0 each writer's words are grouped into pages of this many words.
  std::size_t words_per_page = 0;
  Script script = Script::kLatin;
};

struct SynthWord {
  Word word;
  std::vector<BetaStroke> strokes;
};

namespace detail {

inline double draw(std::mt19937_64& rng, const Range& r) {
  if (r[0] == r[1]) return r[0];
  return std::uniform_real_distribution<double>(r[0], r[1])(rng);
}

}  // namespace detail

// One word: chained strokes sampled from the profile, integrated to a trace,
// with optional velocity noise applied to the arc-length increments.
inline SynthWord synth_word(const SyntheticWriterProfile& prof, std::size_t word_index, double rate_hz) {
  if (!prof.valid()) throw Error(Error::Kind::kInvalidInput, "invalid writer profile '" + prof.id + "'");
  std::seed_seq seq{static_cast<std::uint32_t>(prof.seed), static_cast<std::uint32_t>(prof.seed >> 32),
                    static_cast<std::uint32_t>(word_index), 0x5eedu};
  std::mt19937_64 rng(seq);
  const int nstrokes =
      std::uniform_int_distribution<int>(prof.strokes_per_word[0], prof.strokes_per_word[1])(rng);

  SynthWord out;
  std::size_t sample = 0;
  double vi = detail::draw(rng, prof.Vi);
  for (int k = 0; k < nstrokes; ++k) {
    const auto m = std::max<std::size_t>(
        8, static_cast<std::size_t>(std::lround(detail::draw(rng, prof.duration) * rate_hz)));
    const double t0 = static_cast<double>(sample) / rate_hz;
    const double t1 = static_cast<double>(sample + m) / rate_hz;
    const double rap = detail::draw(rng, prof.rap_tc);
    BetaStroke st;
    st.pulse = BetaPulseParams::make(detail::draw(rng, prof.K), t0, t0 + rap * (t1 - t0), t1,
                                     detail::draw(rng, prof.p));
    st.training = {vi, detail::draw(rng, prof.Vf)};
    vi = st.training.Vf;
    st.arcs.a1 = detail::draw(rng, prof.a1);
    st.arcs.b1 = detail::draw(rng, prof.b1);
    st.arcs.b2 = detail::draw(rng, prof.b2);
    st.arcs.theta = wrap_angle(detail::draw(rng, prof.theta));
    st.arcs.turn = detail::draw(rng, prof.theta_p1) >= 0.0 ? 1 : -1;
    st.sample_range = {sample, sample + m};
    sample += m;
    out.strokes.push_back(st);
  }

  auto traj = synth_trajectory(out.strokes, rate_hz);
  for (std::size_t k = 0; k < out.strokes.size(); ++k) {
    out.strokes[k].arcs.link_point = traj.link_points[k];
    out.strokes[k].arcs.theta_p1 = traj.theta_p1[k];
    out.strokes[k].arcs.theta_p2 = traj.theta_p2[k];
  }
  Trace trace = std::move(traj.trace);
  if (prof.noise > 0.0) {
    // Perturb each step length by sigma * K * dt, keeping direction.
    double kmean = 0.0;
    for (const auto& s : out.strokes) kmean += s.pulse.K;
    kmean /= static_cast<double>(out.strokes.size());
    std::normal_distribution<double> gauss(0.0, prof.noise * kmean / rate_hz);
    Trace noisy = trace;
    for (std::size_t i = 1; i < trace.size(); ++i) {
      const double dx = trace.samples[i].x - trace.samples[i - 1].x;
      const double dy = trace.samples[i].y - trace.samples[i - 1].y;
      const double len = std::hypot(dx, dy);
      const double dl = gauss(rng);
      const double scale = len > 0.0 ? std::max(0.0, len + dl) / len : 0.0;
      noisy.samples[i].x = noisy.samples[i - 1].x + dx * scale;
      noisy.samples[i].y = noisy.samples[i - 1].y + dy * scale;
    }
    trace = std::move(noisy);
  }
  out.word.writer_id = prof.id;
  out.word.traces.push_back(std::move(trace));
  return out;
}

struct SynthCorpus {
  InkDocument ink;
  nlohmann::ordered_json truth;
};

inline nlohmann::ordered_json stroke_truth(const BetaStroke& s) {
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
          {"sample_range", {s.sample_range.first, s.sample_range.second}}};
}

// Deterministic labeled corpus plus ground truth. Writers need distinct seeds.
inline SynthCorpus synth_corpus(std::span<const SyntheticWriterProfile> writers, const CorpusOptions& opt) {
  for (std::size_t i = 0; i < writers.size(); ++i)
    for (std::size_t j = i + 1; j < writers.size(); ++j)
      if (writers[i].seed == writers[j].seed) {
        throw Error(Error::Kind::kInvalidInput, "writer profiles need distinct seeds");
      }
  SynthCorpus out;
  out.ink.sample_rate_hz = opt.sample_rate_hz;
  out.truth = {{"schema", "betascript.truth"}, {"schema_version", 1}, {"words", nlohmann::ordered_json::array()}};
  for (const auto& w : writers) {
    for (std::size_t k = 0; k < opt.words_per_writer; ++k) {
      const std::size_t index = opt.first_word_index + k;
      SynthWord sw = synth_word(w, index, opt.sample_rate_hz);
      sw.word.script = opt.script;
      if (opt.words_per_page > 0) sw.word.page = w.id + "/p" + std::to_string(k / opt.words_per_page);
      nlohmann::ordered_json strokes = nlohmann::ordered_json::array();
      for (const auto& s : sw.strokes) strokes.push_back(stroke_truth(s));
      out.truth["words"].push_back({{"writer_id", w.id}, {"word_index", index}, {"strokes", strokes}});
      out.ink.words.push_back(std::move(sw.word));
    }
  }
  quantize(out.ink);
  return out;
}

// Writers with overlapping but distinct parameter ranges: each writer's ranges
// are centred at a writer-specific point and reach halfway to the next.
inline std::vector<SyntheticWriterProfile> make_writer_family(std::size_t count, std::uint64_t seed,
                                                              double noise = 0.01) {
  std::vector<SyntheticWriterProfile> out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto around = [](double c, double half) { return Range{c - half, c + half}; };
  for (std::size_t i = 0; i < count; ++i) {
    const double f = count > 1 ? static_cast<double>(i) / static_cast<double>(count - 1) : 0.5;
    SyntheticWriterProfile w;
    w.id = "w" + std::string(i + 1 < 10 ? "0" : "") + std::to_string(i + 1);
    w.seed = seed * 1000 + i + 1;
    w.p = around(1.8 + 3.0 * f, 0.35);
    w.rap_tc = around(0.3 + 0.4 * unit(rng), 0.06);
    w.duration = around(0.16 + 0.12 * unit(rng), 0.03);
    w.K = around(120.0, 30.0);
    w.Vi = {0.0, 15.0};
    w.Vf = {0.0, 15.0};
    w.a1 = around(10.0 + 8.0 * unit(rng), 2.0);
    w.b1 = around(4.0 + 6.0 * unit(rng), 1.0);
    w.b2 = around(4.0 + 6.0 * unit(rng), 1.0);
    const double slant = -1.2 + 2.4 * unit(rng);
    w.theta = around(slant, 0.5);
    const double turn_bias = -0.6 + 1.2 * unit(rng);
    w.theta_p1 = {turn_bias - 1.0, turn_bias + 1.0};
    w.theta_p2 = w.theta_p1;
    w.strokes_per_word = {4, 7};
    w.noise = noise;
    out.push_back(w);
  }
  return out;
}

}  // namespace betascript

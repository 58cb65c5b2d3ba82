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

// Chebyshev type II low-pass design as cascaded second-order sections, and
// zero-phase (forward-backward) filtering with odd-extension padding.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "betascript/error.hpp"

namespace betascript {

// b0 b1 b2 a0 a1 a2, with a0 == 1.
using Biquad = std::array<double, 6>;

struct SosFilter {
  std::vector<Biquad> sections;
};

// Designs an order-`order` Chebyshev type II low-pass filter. `edge_hz` is the
// stopband edge: the response is at least `stopband_db` down at and beyond it.
// DC gain is exactly normalized to 1.
inline SosFilter design_cheby2_lowpass(int order, double stopband_db, double edge_hz, double sample_rate_hz) {
  using cd = std::complex<double>;
  constexpr double kPi = std::numbers::pi;
  if (order < 1) throw Error(Error::Kind::kInvalidInput, "filter order must be positive");
  if (!(stopband_db > 0.0)) throw Error(Error::Kind::kInvalidInput, "stopband attenuation must be positive");
  if (!(edge_hz > 0.0) || !(edge_hz < sample_rate_hz / 2.0)) {
    throw Error(Error::Kind::kInvalidInput, "cutoff must lie in (0, Nyquist)");
  }

  // Analog prototype with the stopband edge at 1 rad/s.
  const double de = 1.0 / std::sqrt(std::pow(10.0, 0.1 * stopband_db) - 1.0);
  const double mu = std::asinh(1.0 / de) / order;
  std::vector<cd> zeros, poles;
  for (int m = -order + 1; m < order; m += 2) {
    if (m != 0) zeros.push_back(-std::conj(cd(0.0, 1.0) / std::sin(m * kPi / (2.0 * order))));
    cd p = -std::exp(cd(0.0, kPi * m / (2.0 * order)));
    p = cd(std::sinh(mu) * p.real(), std::cosh(mu) * p.imag());
    poles.push_back(1.0 / p);
  }

  // Pre-warp and bilinear transform (normalized sample rate 2).
  const double fs2 = 4.0;
  const double warped = fs2 * std::tan(kPi * edge_hz / sample_rate_hz);
  std::vector<cd> zd, pd;
  for (auto z : zeros) zd.push_back((fs2 + z * warped) / (fs2 - z * warped));
  for (auto p : poles) pd.push_back((fs2 + p * warped) / (fs2 - p * warped));
  while (zd.size() < pd.size()) zd.emplace_back(-1.0, 0.0);

  // Pair conjugates into sections; a real pole (odd order) pairs with the
  // real zero at z = -1.
  auto take_upper = [](const std::vector<cd>& v) {
    std::vector<cd> upper, real;
    for (auto c : v) {
      if (std::abs(c.imag()) < 1e-12) real.push_back(c.real());
      else if (c.imag() > 0.0) upper.push_back(c);
    }
    std::sort(upper.begin(), upper.end(), [](cd a, cd b) { return std::abs(a) < std::abs(b); });
    return std::pair{upper, real};
  };
  auto [pu, pr] = take_upper(pd);
  auto [zu, zr] = take_upper(zd);

  SosFilter f;
  std::vector<bool> used(zu.size(), false);
  for (auto p : pu) {
    // Nearest unused zero pair.
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < zu.size(); ++i) {
      if (!used[i] && std::abs(zu[i] - p) < best_d) {
        best_d = std::abs(zu[i] - p);
        best = i;
      }
    }
    Biquad s{1.0, 0.0, 0.0, 1.0, -2.0 * p.real(), std::norm(p)};
    if (best_d < std::numeric_limits<double>::infinity()) {
      used[best] = true;
      s[1] = -2.0 * zu[best].real();
      s[2] = std::norm(zu[best]);
    } else if (zr.size() >= 2) {
      s[1] = -(zr[zr.size() - 1].real() + zr[zr.size() - 2].real());
      s[2] = zr[zr.size() - 1].real() * zr[zr.size() - 2].real();
      zr.resize(zr.size() - 2);
    }
    f.sections.push_back(s);
  }
  for (auto p : pr) {
    Biquad s{1.0, 0.0, 0.0, 1.0, -p.real(), 0.0};
    if (!zr.empty()) {
      s[1] = -zr.back().real();
      zr.pop_back();
    }
    f.sections.push_back(s);
  }

  // Normalize each section to unit DC gain so the cascade is exactly 1 at DC.
  for (auto& s : f.sections) {
    const double g = (s[0] + s[1] + s[2]) / (s[3] + s[4] + s[5]);
    s[0] /= g;
    s[1] /= g;
    s[2] /= g;
  }
  return f;
}

// |H(e^{jw})| of the cascade at `freq_hz`.
inline double magnitude_response(const SosFilter& f, double freq_hz, double sample_rate_hz) {
  const std::complex<double> z1 = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / sample_rate_hz);
  const std::complex<double> z2 = z1 * z1;
  std::complex<double> h(1.0, 0.0);
  for (const auto& s : f.sections) h *= (s[0] + s[1] * z1 + s[2] * z2) / (s[3] + s[4] * z1 + s[5] * z2);
  return std::abs(h);
}

namespace detail {

// Transposed direct form II, one pass, steady-state initial conditions for a
// constant input equal to `x0`. Sections are unit-DC-gain, so the steady-state
// input of every section is x0.
inline void sos_pass(const SosFilter& f, std::vector<double>& x) {
  if (x.empty()) return;
  const double x0 = x.front();
  for (const auto& s : f.sections) {
    const double b0 = s[0], b1 = s[1], b2 = s[2], a1 = s[4], a2 = s[5];
    double z2 = (b2 - a2) * x0;
    double z1 = (b1 - a1) * x0 + z2;
    for (double& v : x) {
      const double in = v;
      const double out = b0 * in + z1;
      z1 = b1 * in - a1 * out + z2;
      z2 = b2 * in - a2 * out;
      v = out;
    }
  }
}

}  // namespace detail

inline std::size_t default_padlen(const SosFilter& f) { return 3 * (2 * f.sections.size() + 1); }

// Zero-phase filtering. Output length equals input length.
inline std::vector<double> filtfilt(const SosFilter& f, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) return {x.begin(), x.end()};
  const std::size_t pad = std::min(default_padlen(f), n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  detail::sos_pass(f, ext);
  std::reverse(ext.begin(), ext.end());
  detail::sos_pass(f, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

}  // namespace betascript

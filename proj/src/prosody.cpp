// Copyright 2026 The ProsoQA Authors.
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

#include "prosoqa/prosody.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace prosoqa {

int PitchContour::voiced_count() const {
  int n = 0;
  for (const auto& v : f0_hz) n += v.has_value();
  return n;
}

double PitchContour::voiced_mean_hz() const {
  double sum = 0.0;
  int n = 0;
  for (const auto& v : f0_hz) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) throw ProsodyError("no voiced frames");
  return sum / n;
}

double PitchContour::voiced_std_hz() const {
  double mean = voiced_mean_hz();
  double acc = 0.0;
  int n = 0;
  for (const auto& v : f0_hz) {
    if (v) {
      acc += (*v - mean) * (*v - mean);
      ++n;
    }
  }
  if (n < 2) return 0.0;
  return std::sqrt(acc / (n - 1));
}

double IntensityContour::peak_db() const {
  double peak = kIntensityFloorDb;
  for (double v : level_db) peak = std::max(peak, v);
  return peak;
}

PitchContour estimate_f0(const AudioClip& clip, const PitchConfig& cfg) {
  clip.validate();
  if (clip.duration_s() < cfg.window_s) {
    throw ProsodyError("clip shorter than one analysis window");
  }
  const int fs = clip.sample_rate_hz;
  const int win = static_cast<int>(std::lround(cfg.window_s * fs));
  const int hop = static_cast<int>(std::lround(cfg.hop_s * fs));
  const int integ = win / 2;  // YIN integration window
  const int tau_min =
      std::max(2, static_cast<int>(std::floor(fs / cfg.f0_ceil_hz)));
  const int tau_max = std::min(
      integ - 1, static_cast<int>(std::ceil(fs / cfg.f0_floor_hz)));
  if (tau_max <= tau_min) {
    throw ProsodyError("window too short for the configured f0 floor");
  }

  PitchContour out;
  out.grid = FrameGrid::cover(clip.duration_s(), cfg.window_s, cfg.hop_s);
  out.f0_hz.resize(out.grid.n_frames);

  std::vector<double> d(tau_max + 1), dn(tau_max + 1);
  for (int i = 0; i < out.grid.n_frames; ++i) {
    const double* x = clip.samples.data() + static_cast<std::size_t>(i) * hop;

    d[0] = 0.0;
    for (int tau = 1; tau <= tau_max; ++tau) {
      double acc = 0.0;
      for (int j = 0; j < integ; ++j) {
        double diff = x[j] - x[j + tau];
        acc += diff * diff;
      }
      d[tau] = acc;
    }

    // Cumulative mean normalization.
    dn[0] = 1.0;
    double running = 0.0;
    for (int tau = 1; tau <= tau_max; ++tau) {
      running += d[tau];
      dn[tau] = running > 0.0 ? d[tau] * tau / running : 1.0;
    }

    int best = -1;
    for (int tau = tau_min; tau <= tau_max; ++tau) {
      if (dn[tau] < cfg.aperiodicity_threshold) {
        while (tau + 1 <= tau_max && dn[tau + 1] < dn[tau]) ++tau;
        best = tau;
        break;
      }
    }
    if (best < 0) continue;  // unvoiced

    // Parabolic interpolation on the raw difference function.
    double tau_refined = best;
    if (best > tau_min && best < tau_max) {
      double a = d[best - 1], b = d[best], c = d[best + 1];
      double denom = a - 2.0 * b + c;
      if (std::abs(denom) > 1e-20) {
        double shift = 0.5 * (a - c) / denom;
        if (std::abs(shift) < 1.0) tau_refined = best + shift;
      }
    }
    double f0 = fs / tau_refined;
    if (f0 >= cfg.f0_floor_hz && f0 <= cfg.f0_ceil_hz) out.f0_hz[i] = f0;
  }
  return out;
}

IntensityContour intensity_contour(const AudioClip& clip, double window_s,
                                   double hop_s) {
  clip.validate();
  if (clip.duration_s() < window_s) {
    throw ProsodyError("clip shorter than one analysis window");
  }
  const int fs = clip.sample_rate_hz;
  const int win = static_cast<int>(std::lround(window_s * fs));
  const int hop = static_cast<int>(std::lround(hop_s * fs));

  IntensityContour out;
  out.grid = FrameGrid::cover(clip.duration_s(), window_s, hop_s);
  out.level_db.resize(out.grid.n_frames);
  for (int i = 0; i < out.grid.n_frames; ++i) {
    double acc = 0.0;
    const double* x = clip.samples.data() + static_cast<std::size_t>(i) * hop;
    for (int j = 0; j < win; ++j) acc += x[j] * x[j];
    double r = std::sqrt(acc / win);
    out.level_db[i] =
        r > 0.0 ? std::max(kIntensityFloorDb, 20.0 * std::log10(r))
                : kIntensityFloorDb;
  }
  return out;
}

UtteranceMeans utterance_means(const PitchContour& pitch,
                               const IntensityContour& intensity) {
  UtteranceMeans m{};
  m.mean_f0_hz = pitch.voiced_mean_hz();

  double peak = intensity.peak_db();
  if (peak <= kIntensityFloorDb) {
    throw ProsodyError("fully silent clip: no mean level");
  }
  double threshold = peak - kSilenceRangeDb;
  double sum = 0.0;
  int n = 0;
  for (double v : intensity.level_db) {
    if (v >= threshold) {
      sum += v;
      ++n;
    }
  }
  m.mean_level_db = sum / n;  // peak frame always qualifies, n >= 1
  return m;
}

std::string dump_contours(const PitchContour& pitch,
                          const IntensityContour& intensity) {
  std::ostringstream os;
  os << "frame_start_s\tf0_hz\tlevel_db\n";
  std::size_t n = std::max(pitch.f0_hz.size(), intensity.level_db.size());
  for (std::size_t i = 0; i < n; ++i) {
    os << pitch.grid.frame_start_s(static_cast<int>(i)) << '\t';
    if (i < pitch.f0_hz.size() && pitch.f0_hz[i]) {
      os << *pitch.f0_hz[i];
    } else {
      os << "NA";
    }
    os << '\t';
    if (i < intensity.level_db.size()) os << intensity.level_db[i];
    os << '\n';
  }
  return os.str();
}

}  // namespace prosoqa

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

#include "prosoqa/condition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

namespace prosoqa {

std::string to_string(ConditionVariant v) {
  switch (v) {
    case ConditionVariant::kNatural:
      return "natural";
    case ConditionVariant::kLexical:
      return "lexical";
    case ConditionVariant::kProsodic:
      return "prosodic";
    case ConditionVariant::kNoise:
      return "noise";
  }
  return "?";
}

ConditionVariant variant_from_string(const std::string& s) {
  if (s == "natural") return ConditionVariant::kNatural;
  if (s == "lexical") return ConditionVariant::kLexical;
  if (s == "prosodic") return ConditionVariant::kProsodic;
  if (s == "noise") return ConditionVariant::kNoise;
  throw ConditionError("unknown condition variant: " + s);
}

std::string ConditionSpec::key() const {
  std::ostringstream os;
  os << to_string(variant);
  switch (variant) {
    case ConditionVariant::kProsodic:
      os << "-cutoff" << cutoff_hz;
      break;
    case ConditionVariant::kNoise:
      os << "-seed" << noise_seed << "-level" << noise_level_db;
      break;
    default:
      break;
  }
  return os.str();
}

namespace {

struct VoicedRegion {
  long begin;  // sample index, inclusive
  long end;    // sample index, exclusive
  // Per-frame F0 samples at frame centers, for interpolation.
  std::vector<long> centers;
  std::vector<double> f0;

  double f0_at(double t) const {
    if (t <= centers.front()) return f0.front();
    if (t >= centers.back()) return f0.back();
    auto it = std::upper_bound(centers.begin(), centers.end(),
                               static_cast<long>(t));
    std::size_t hi = static_cast<std::size_t>(it - centers.begin());
    std::size_t lo = hi - 1;
    double w = (t - centers[lo]) /
               static_cast<double>(centers[hi] - centers[lo]);
    return f0[lo] + w * (f0[hi] - f0[lo]);
  }
};

std::vector<VoicedRegion> voiced_regions(const PitchContour& pitch, int fs,
                                         long n_samples) {
  std::vector<VoicedRegion> regions;
  const auto& f0 = pitch.f0_hz;
  const double hop = pitch.grid.hop_s;
  const double win = pitch.grid.window_s;
  int i = 0;
  const int n = static_cast<int>(f0.size());
  while (i < n) {
    if (!f0[i]) {
      ++i;
      continue;
    }
    int j = i;
    while (j < n && f0[j]) ++j;
    VoicedRegion r;
    r.begin = std::lround(i * hop * fs);
    r.end = std::min<long>(n_samples, std::lround(((j - 1) * hop + win) * fs));
    for (int t = i; t < j; ++t) {
      r.centers.push_back(std::lround((t * hop + 0.5 * win) * fs));
      r.f0.push_back(*f0[t]);
    }
    regions.push_back(std::move(r));
    i = j;
  }
  return regions;
}

// Zero-phase 2nd-order Butterworth low-pass (forward-backward biquad).
// Used to build a pitch-marking guide where only the fundamental remains,
// so formant echoes cannot attract the marks.
std::vector<double> smooth_guide(const std::vector<double>& x, double fc,
                                 int fs) {
  double w = std::tan(std::numbers::pi * std::min(fc, 0.45 * fs) / fs);
  double k = 1.0 / (1.0 + std::numbers::sqrt2 * w + w * w);
  double b0 = w * w * k, b1 = 2.0 * b0, b2 = b0;
  double a1 = 2.0 * (w * w - 1.0) * k;
  double a2 = (1.0 - std::numbers::sqrt2 * w + w * w) * k;
  auto pass = [&](const std::vector<double>& in) {
    std::vector<double> out(in.size(), 0.0);
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (std::size_t i = 0; i < in.size(); ++i) {
      double y = b0 * in[i] + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
      x2 = x1;
      x1 = in[i];
      y2 = y1;
      y1 = y;
      out[i] = y;
    }
    return out;
  };
  std::vector<double> fwd = pass(x);
  std::reverse(fwd.begin(), fwd.end());
  std::vector<double> bwd = pass(fwd);
  std::reverse(bwd.begin(), bwd.end());
  return bwd;
}

// Moves a provisional pitch mark to the nearest local waveform maximum,
// which keeps the OLA grains phase-coherent.
long refine_to_peak(const std::vector<double>& x, long mark, long radius) {
  long lo = std::max<long>(0, mark - radius);
  long hi = std::min<long>(static_cast<long>(x.size()) - 1, mark + radius);
  long best = mark;
  double best_v = x[static_cast<std::size_t>(std::clamp(
      mark, 0L, static_cast<long>(x.size()) - 1))];
  for (long t = lo; t <= hi; ++t) {
    if (x[static_cast<std::size_t>(t)] > best_v) {
      best_v = x[static_cast<std::size_t>(t)];
      best = t;
    }
  }
  return best;
}

}  // namespace

AudioClip flatten_pitch(const AudioClip& clip, double target_f0_hz,
                        const PitchConfig& cfg) {
  clip.validate();
  if (target_f0_hz < cfg.f0_floor_hz || target_f0_hz > cfg.f0_ceil_hz) {
    throw ConditionError("target F0 outside configured range");
  }
  PitchContour pitch = estimate_f0(clip, cfg);
  if (pitch.voiced_count() == 0) {
    throw ConditionError("fully unvoiced clip: nothing to flatten");
  }

  const int fs = clip.sample_rate_hz;
  const auto& x = clip.samples;
  const long n = static_cast<long>(x.size());
  AudioClip out = clip;

  const double target_period = fs / target_f0_hz;
  const std::vector<double> guide =
      smooth_guide(x, 1.4 * pitch.voiced_mean_hz(), fs);

  for (const VoicedRegion& region :
       voiced_regions(pitch, fs, n)) {
    // Analysis marks: march at the local period, snapped to waveform peaks.
    // The search radius spans almost half a period so the marks lock onto
    // the dominant pulse train rather than a formant echo, and each step
    // restarts from the snapped mark to absorb drift.
    std::vector<long> marks;
    double t = static_cast<double>(region.begin);
    while (t < region.end) {
      double period = fs / region.f0_at(t);
      long mark = refine_to_peak(guide, std::lround(t),
                                 std::lround(0.45 * period));
      if (marks.empty() || mark > marks.back()) {
        marks.push_back(mark);
        t = static_cast<double>(mark) + period;
      } else {
        t = static_cast<double>(marks.back()) + period;
      }
    }
    if (marks.size() < 2) continue;

    const long reg_len = region.end - region.begin;
    std::vector<double> acc(static_cast<std::size_t>(reg_len), 0.0);
    std::vector<double> wsum(static_cast<std::size_t>(reg_len), 0.0);

    // Synthesis marks spaced at the target period; each takes its grain
    // from the nearest analysis mark. Near region edges the spacing ramps
    // back to the local source period so the junction with the untouched
    // signal stays continuous in period (an abrupt change reads as
    // aperiodicity, or a subharmonic, to the tracker).
    const double edge_ramp = 0.025 * fs;
    auto synth_period = [&](double s) {
      double dist = std::min(s - static_cast<double>(region.begin),
                             static_cast<double>(region.end) - s);
      double w = std::clamp(dist / edge_ramp, 0.0, 1.0);
      return (1.0 - w) * (fs / region.f0_at(s)) + w * target_period;
    };
    std::size_t nearest = 0;
    for (double s = static_cast<double>(marks.front());
         s < region.end; s += synth_period(s)) {
      long smark = std::lround(s);
      while (nearest + 1 < marks.size() &&
             std::abs(marks[nearest + 1] - smark) <=
                 std::abs(marks[nearest] - smark)) {
        ++nearest;
      }
      long amark = marks[nearest];
      double local_period = fs / region.f0_at(static_cast<double>(amark));
      long half = std::lround(local_period);
      if (half < 2) continue;
      for (long k = -half; k <= half; ++k) {
        long src = amark + k;
        long dst = smark + k;
        if (src < 0 || src >= n) continue;
        if (dst < region.begin || dst >= region.end) continue;
        double w = 0.5 + 0.5 * std::cos(std::numbers::pi * k / half);
        acc[static_cast<std::size_t>(dst - region.begin)] +=
            w * x[static_cast<std::size_t>(src)];
        wsum[static_cast<std::size_t>(dst - region.begin)] += w;
      }
    }

    // Normalize by the window overlap; fall back to the input where the
    // synthesis marks left gaps (region edges).
    for (long k = 0; k < reg_len; ++k) {
      auto idx = static_cast<std::size_t>(k);
      if (wsum[idx] > 1e-3) {
        out.samples[static_cast<std::size_t>(region.begin + k)] =
            acc[idx] / wsum[idx];
      }
    }

    // Short crossfade into the untouched signal at region boundaries.
    const long fade = std::min<long>(std::lround(0.005 * fs), reg_len / 2);
    for (long k = 0; k < fade; ++k) {
      double a = static_cast<double>(k + 1) / (fade + 1);
      auto head = static_cast<std::size_t>(region.begin + k);
      auto tail = static_cast<std::size_t>(region.end - 1 - k);
      out.samples[head] = a * out.samples[head] + (1.0 - a) * x[head];
      out.samples[tail] = a * out.samples[tail] + (1.0 - a) * x[tail];
    }
  }
  return out;
}

AudioClip flatten_intensity(const AudioClip& clip, double target_level_db) {
  clip.validate();
  const int fs = clip.sample_rate_hz;
  IntensityContour contour = intensity_contour(clip);
  double peak = contour.peak_db();
  if (peak <= kIntensityFloorDb) {
    throw ConditionError("fully silent clip: nothing to flatten");
  }
  const double silence_db = peak - kSilenceRangeDb;
  const double max_gain = std::pow(10.0, 20.0 / 20.0);

  // Per-frame linear gain at frame centers.
  const int nf = contour.grid.n_frames;
  std::vector<double> gain(static_cast<std::size_t>(nf), 1.0);
  for (int i = 0; i < nf; ++i) {
    if (contour.level_db[i] >= silence_db) {
      double g =
          std::pow(10.0, (target_level_db - contour.level_db[i]) / 20.0);
      gain[static_cast<std::size_t>(i)] =
          std::clamp(g, 1.0 / max_gain, max_gain);
    }
  }

  // Linear interpolation between frame centers, constant at the edges.
  const long n = static_cast<long>(clip.samples.size());
  std::vector<double> g_sample(static_cast<std::size_t>(n));
  for (long s = 0; s < n; ++s) {
    double pos = (static_cast<double>(s) / fs - 0.5 * contour.grid.window_s) /
                 contour.grid.hop_s;
    if (pos <= 0.0 || nf == 1) {
      g_sample[static_cast<std::size_t>(s)] = gain.front();
    } else if (pos >= nf - 1) {
      g_sample[static_cast<std::size_t>(s)] = gain.back();
    } else {
      int lo = static_cast<int>(pos);
      double w = pos - lo;
      g_sample[static_cast<std::size_t>(s)] =
          (1.0 - w) * gain[static_cast<std::size_t>(lo)] +
          w * gain[static_cast<std::size_t>(lo + 1)];
    }
  }

  // 50 ms moving average over the gain contour.
  const long half = std::lround(0.025 * fs);
  std::vector<double> prefix(static_cast<std::size_t>(n) + 1, 0.0);
  for (long s = 0; s < n; ++s) {
    prefix[static_cast<std::size_t>(s) + 1] =
        prefix[static_cast<std::size_t>(s)] +
        g_sample[static_cast<std::size_t>(s)];
  }
  AudioClip out = clip;
  for (long s = 0; s < n; ++s) {
    long lo = std::max<long>(0, s - half);
    long hi = std::min<long>(n, s + half + 1);
    double g = (prefix[static_cast<std::size_t>(hi)] -
                prefix[static_cast<std::size_t>(lo)]) /
               static_cast<double>(hi - lo);
    out.samples[static_cast<std::size_t>(s)] *= g;
  }
  return out;
}

AudioClip make_lexical(const AudioClip& clip, const PitchConfig& cfg) {
  clip.validate();
  PitchContour pitch = estimate_f0(clip, cfg);
  IntensityContour intensity = intensity_contour(clip);
  UtteranceMeans means = utterance_means(pitch, intensity);  // throws if unvoiced/silent

  double target_f0 =
      std::clamp(means.mean_f0_hz, cfg.f0_floor_hz, cfg.f0_ceil_hz);
  AudioClip flat = flatten_pitch(clip, target_f0, cfg);
  return flatten_intensity(flat, means.mean_level_db);
}

namespace {

double kaiser_beta_for(double atten_db) {
  if (atten_db > 50.0) return 0.1102 * (atten_db - 8.7);
  if (atten_db >= 21.0) {
    return 0.5842 * std::pow(atten_db - 21.0, 0.4) +
           0.07886 * (atten_db - 21.0);
  }
  return 0.0;
}

double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  for (int k = 1; k < 64; ++k) {
    term *= (x / (2.0 * k)) * (x / (2.0 * k));
    sum += term;
    if (term < 1e-16 * sum) break;
  }
  return sum;
}

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

// Burg-method AR coefficients. Reflection coefficients stay in [-1, 1], so
// the prediction filter is stable and extrapolation cannot blow up.
std::vector<double> burg_coefficients(const std::vector<double>& x, int order) {
  const std::size_t n = x.size();
  std::vector<double> a(static_cast<std::size_t>(order) + 1, 0.0);
  a[0] = 1.0;
  std::vector<double> f(x), b(x);
  double dk = 0.0;
  for (std::size_t i = 0; i < n; ++i) dk += 2.0 * x[i] * x[i];
  dk -= x[0] * x[0] + x[n - 1] * x[n - 1];
  for (int k = 0; k < order; ++k) {
    double num = 0.0;
    for (std::size_t i = static_cast<std::size_t>(k) + 1; i < n; ++i) {
      num += f[i] * b[i - 1];
    }
    if (dk <= 1e-30) break;
    double mu = -2.0 * num / dk;
    mu = std::clamp(mu, -1.0, 1.0);
    for (int j = (k + 1) / 2; j >= 0; --j) {
      double t1 = a[static_cast<std::size_t>(j)] +
                  mu * a[static_cast<std::size_t>(k + 1 - j)];
      double t2 = a[static_cast<std::size_t>(k + 1 - j)] +
                  mu * a[static_cast<std::size_t>(j)];
      a[static_cast<std::size_t>(j)] = t1;
      a[static_cast<std::size_t>(k + 1 - j)] = t2;
    }
    for (std::size_t i = n - 1; i > static_cast<std::size_t>(k); --i) {
      double fi = f[i], bi = b[i - 1];
      f[i] = fi + mu * bi;
      b[i] = bi + mu * fi;
    }
    dk = (1.0 - mu * mu) * dk - f[static_cast<std::size_t>(k) + 1] *
                                    f[static_cast<std::size_t>(k) + 1] -
         b[n - 1] * b[n - 1];
  }
  return a;
}

// Continues the signal past its last sample by AR prediction fitted near
// that edge. Pass the samples in reverse to extend the start.
std::vector<double> ar_extrapolate(const std::vector<double>& x,
                                   std::size_t n_out) {
  std::vector<double> out(n_out, 0.0);
  if (x.empty() || n_out == 0) return out;
  const std::size_t fit_n = std::min<std::size_t>(x.size(), 4096);
  std::vector<double> tail(x.end() - static_cast<long>(fit_n), x.end());
  const int order = static_cast<int>(std::min<std::size_t>(32, fit_n / 2));
  if (order < 1) {
    std::fill(out.begin(), out.end(), x.back());
    return out;
  }
  std::vector<double> a = burg_coefficients(tail, order);
  double clamp_abs = 0.0;
  for (double v : tail) clamp_abs = std::max(clamp_abs, std::abs(v));
  clamp_abs = 4.0 * clamp_abs + 1e-12;
  std::vector<double> hist(tail.end() - order, tail.end());
  for (std::size_t i = 0; i < n_out; ++i) {
    double pred = 0.0;
    for (int j = 1; j <= order; ++j) {
      pred -= a[static_cast<std::size_t>(j)] *
              hist[hist.size() - static_cast<std::size_t>(j)];
    }
    pred = std::clamp(pred, -clamp_abs, clamp_abs);
    out[i] = pred;
    hist.erase(hist.begin());
    hist.push_back(pred);
  }
  return out;
}

}  // namespace

AudioClip low_pass(const AudioClip& clip, double cutoff_hz) {
  clip.validate();
  const int fs = clip.sample_rate_hz;
  const double nyquist = 0.5 * fs;
  if (cutoff_hz < 20.0 || cutoff_hz >= nyquist) {
    throw ConditionError("cutoff must be in [20 Hz, Nyquist)");
  }
  if (clip.empty()) return clip;

  // Passband edge at the cutoff; stopband edge one transition width above,
  // capped at Nyquist.
  const double atten_db = 65.0;
  double trans_hz =
      std::min(std::max(20.0, 0.1 * cutoff_hz), nyquist - cutoff_hz);
  const double fc = (cutoff_hz + 0.5 * trans_hz) / fs;  // -6 dB point

  const double beta = kaiser_beta_for(atten_db);
  const double dw = 2.0 * std::numbers::pi * trans_hz / fs;
  int taps = static_cast<int>(std::ceil((atten_db - 7.95) / (2.285 * dw))) + 1;
  if (taps % 2 == 0) ++taps;
  const int half = taps / 2;

  std::vector<double> h(static_cast<std::size_t>(taps));
  const double i0_beta = bessel_i0(beta);
  double norm = 0.0;
  for (int i = 0; i < taps; ++i) {
    double u = (i - half) / static_cast<double>(half + 1);
    double w = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - u * u))) /
               i0_beta;
    h[static_cast<std::size_t>(i)] = 2.0 * fc * sinc(2.0 * fc * (i - half)) * w;
    norm += h[static_cast<std::size_t>(i)];
  }
  for (double& v : h) v /= norm;  // exact unity DC gain

  // AR extrapolation past both edges keeps length, compensates the group
  // delay, and continues oscillatory content in phase. Reflection padding
  // would fold the waveform back with a kink (or a DC step), and that edge
  // transient leaks straight through the passband.
  const long n = static_cast<long>(clip.samples.size());
  std::vector<double> right_pad =
      ar_extrapolate(clip.samples, static_cast<std::size_t>(half));
  std::vector<double> reversed(clip.samples.rbegin(), clip.samples.rend());
  std::vector<double> left_pad =
      ar_extrapolate(reversed, static_cast<std::size_t>(half));
  auto padded_at = [&](long idx) -> double {
    if (idx < 0) return left_pad[static_cast<std::size_t>(-idx - 1)];
    if (idx >= n) return right_pad[static_cast<std::size_t>(idx - n)];
    return clip.samples[static_cast<std::size_t>(idx)];
  };

  AudioClip out;
  out.sample_rate_hz = fs;
  out.samples.resize(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < taps; ++j) {
      acc += h[static_cast<std::size_t>(j)] * padded_at(i + j - half);
    }
    out.samples[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

AudioClip white_noise_like(double duration_s, int sample_rate_hz,
                           std::uint64_t seed, double level_db) {
  if (duration_s <= 0.0) throw ConditionError("noise duration must be > 0");
  AudioClip out;
  out.sample_rate_hz = sample_rate_hz;
  const auto n = static_cast<std::size_t>(
      std::llround(duration_s * sample_rate_hz));
  out.samples.resize(n);

  // Box-Muller over the raw engine output keeps the stream identical
  // across standard library implementations.
  std::mt19937_64 rng(seed);
  auto uniform = [&rng]() {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  };
  for (std::size_t i = 0; i < n; i += 2) {
    double u1 = uniform(), u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    out.samples[i] = r * std::cos(a);
    if (i + 1 < n) out.samples[i + 1] = r * std::sin(a);
  }

  double target_rms = std::pow(10.0, level_db / 20.0);
  double measured = rms(out.samples);
  if (measured > 0.0) {
    double g = target_rms / measured;
    for (double& s : out.samples) s *= g;
  }
  return out;
}

ConditionOutput apply_condition(const AudioClip& clip,
                                const ConditionSpec& spec) {
  ConditionOutput result;
  switch (spec.variant) {
    case ConditionVariant::kNatural:
      result.clip = clip;
      break;
    case ConditionVariant::kLexical:
      result.clip = make_lexical(clip);
      break;
    case ConditionVariant::kProsodic:
      result.clip = low_pass(clip, spec.cutoff_hz);
      break;
    case ConditionVariant::kNoise:
      result.clip = white_noise_like(clip.duration_s(), clip.sample_rate_hz,
                                     spec.noise_seed, spec.noise_level_db);
      // Match the input's sample count exactly, not just its duration.
      result.clip.samples.resize(clip.samples.size(), 0.0);
      break;
  }
  result.peak_gain = peak_normalize(result.clip);
  return result;
}

}  // namespace prosoqa

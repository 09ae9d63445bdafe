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

// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion pins its tolerances inline.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "prosoqa/condition.hpp"
#include "prosoqa/eval.hpp"
#include "prosoqa/harness.hpp"
#include "prosoqa/units.hpp"
#include "support/corpus.hpp"
#include "support/signals.hpp"

using namespace prosoqa;
namespace ts = prosoqa::testsupport;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  std::string name;
  std::function<std::string()> run;  // empty string = pass, else reason
};

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

// Frame-counting oracle: a 20 ms frame belongs to a span when its midpoint
// lies inside the span.
struct FrameMetrics {
  double ff1 = 0.0, aos = 0.0;
};

FrameMetrics frame_oracle(const TimeSpan& pred, const TimeSpan& gold,
                          double frame_s = 0.020) {
  double horizon = std::max(pred.end_s, gold.end_s) + frame_s;
  long n = static_cast<long>(std::ceil(horizon / frame_s));
  long in_pred = 0, in_gold = 0, in_both = 0;
  for (long f = 0; f < n; ++f) {
    double mid = (static_cast<double>(f) + 0.5) * frame_s;
    bool p = mid >= pred.start_s && mid < pred.end_s;
    bool g = mid >= gold.start_s && mid < gold.end_s;
    in_pred += p;
    in_gold += g;
    in_both += p && g;
  }
  FrameMetrics m;
  if (in_pred > 0 && in_gold > 0 && in_both > 0) {
    double prec = static_cast<double>(in_both) / static_cast<double>(in_pred);
    double rec = static_cast<double>(in_both) / static_cast<double>(in_gold);
    m.ff1 = 2.0 * prec * rec / (prec + rec);
  }
  long uni = in_pred + in_gold - in_both;
  if (uni > 0) m.aos = static_cast<double>(in_both) / static_cast<double>(uni);
  return m;
}

std::string check(bool ok, const std::string& why) { return ok ? "" : why; }

fs::path work_dir() {
  fs::path dir = fs::temp_directory_path() / "prosoqa-acceptance";
  fs::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------------------

std::string criterion_metric_oracle() {
  // Hand cases must match exactly.
  SpanScore hand = ff1({0, 10}, {{5, 15}});
  if (hand.ff1 != 0.5 || hand.precision != 0.5 || hand.recall != 0.5) {
    return "hand FF1 case mismatch";
  }
  double hand_aos = aos({0, 10}, {{5, 15}});
  if (std::abs(hand_aos - 1.0 / 3.0) > 1e-15) return "hand AOS case mismatch";

  std::mt19937_64 rng(2026);
  for (int trial = 0; trial < 10000; ++trial) {
    TimeSpan pred{uniform(rng, 0, 30), 0};
    pred.end_s = pred.start_s + uniform(rng, 2, 12);
    TimeSpan gold{uniform(rng, 0, 30), 0};
    gold.end_s = gold.start_s + uniform(rng, 2, 12);

    double f_cont = ff1(pred, {gold}).ff1;
    double a_cont = aos(pred, {gold});
    FrameMetrics frame = frame_oracle(pred, gold);
    if (std::abs(f_cont - frame.ff1) > 0.02) {
      return "FF1 deviates from frame oracle by " +
             std::to_string(std::abs(f_cont - frame.ff1));
    }
    if (std::abs(a_cont - frame.aos) > 0.02) {
      return "AOS deviates from frame oracle by " +
             std::to_string(std::abs(a_cont - frame.aos));
    }
  }
  return "";
}

std::string criterion_metric_algebra() {
  std::mt19937_64 rng(4096);
  for (int trial = 0; trial < 10000; ++trial) {
    TimeSpan pred{uniform(rng, 0, 30), 0};
    pred.end_s = pred.start_s + uniform(rng, 0, 12);
    TimeSpan gold{uniform(rng, 0, 30), 0};
    gold.end_s = gold.start_s + uniform(rng, 0, 12);
    double f = ff1(pred, {gold}).ff1;
    double a = aos(pred, {gold});
    if (!(a >= 0.0 && a <= f + 1e-12 && f <= 1.0 + 1e-12)) {
      return "0 <= AOS <= FF1 <= 1 violated";
    }
  }
  // Identity and disjoint extremes.
  if (ff1({1, 4}, {{1, 4}}).ff1 != 1.0 || aos({1, 4}, {{1, 4}}) != 1.0) {
    return "identity spans must score 1";
  }
  if (ff1({0, 1}, {{2, 3}}).ff1 != 0.0 || aos({0, 1}, {{2, 3}}) != 0.0) {
    return "disjoint spans must score 0";
  }
  return "";
}

std::string check_lexical_flatness(const AudioClip& clip) {
  PitchContour p_in = estimate_f0(clip);
  IntensityContour i_in = intensity_contour(clip);
  UtteranceMeans means = utterance_means(p_in, i_in);

  AudioClip out = make_lexical(clip);
  if (out.samples.size() != clip.samples.size()) {
    return "duration changed";
  }
  PitchContour p = estimate_f0(out);
  if (p.voiced_count() == 0) return "output fully unvoiced";
  if (p.voiced_std_hz() > 5.0) {
    return "voiced F0 std " + std::to_string(p.voiced_std_hz()) + " > 5 Hz";
  }
  if (std::abs(p.voiced_mean_hz() - means.mean_f0_hz) > 5.0) {
    return "voiced F0 mean off by " +
           std::to_string(std::abs(p.voiced_mean_hz() - means.mean_f0_hz));
  }

  IntensityContour oc = intensity_contour(out);
  double threshold = i_in.peak_db() - kSilenceRangeDb;
  // Non-silent frames, excluding 50 ms at each edge of every non-silent
  // stretch (and the clip ends).
  std::vector<bool> loud(i_in.level_db.size());
  for (std::size_t i = 0; i < loud.size(); ++i) {
    loud[i] = i_in.level_db[i] >= threshold;
  }
  const double margin_s = 0.05;
  for (std::size_t i = 0; i < loud.size(); ++i) {
    if (!loud[i]) continue;
    double w0 = oc.grid.frame_start_s(static_cast<int>(i));
    double w1 = w0 + oc.grid.window_s;
    if (w0 < margin_s || w1 > clip.duration_s() - margin_s) continue;
    bool near_edge = false;
    for (std::size_t j = 0; j < loud.size(); ++j) {
      if (loud[j]) continue;
      double s0 = oc.grid.frame_start_s(static_cast<int>(j));
      double s1 = s0 + oc.grid.window_s;
      if (w0 < s1 + margin_s && s0 < w1 + margin_s) {
        near_edge = true;
        break;
      }
    }
    if (near_edge) continue;
    double dev = std::abs(oc.level_db[i] - means.mean_level_db);
    if (dev > 1.5) {
      return "frame level off by " + std::to_string(dev) + " dB at " +
             std::to_string(w0) + " s";
    }
  }
  return "";
}

std::string criterion_lexical_flatness() {
  std::mt19937_64 rng(808);
  // 30 synthetic vibrato + AM tones.
  for (int i = 0; i < 30; ++i) {
    double f0 = uniform(rng, 150, 320);
    double depth = uniform(rng, 8, 25);
    double vib_rate = uniform(rng, 2, 6);
    AudioClip c = ts::vibrato_tone(f0, depth, vib_rate, 2.0, 0.7);
    double am_rate = uniform(rng, 0.8, 2.5);
    for (std::size_t s = 0; s < c.samples.size(); ++s) {
      double t = static_cast<double>(s) / c.sample_rate_hz;
      c.samples[s] *=
          0.6 + 0.3 * std::sin(2.0 * std::numbers::pi * am_rate * t);
    }
    std::string err = check_lexical_flatness(c);
    if (!err.empty()) return "tone clip " + std::to_string(i) + ": " + err;
  }
  // Speech-like clips (formant-synthesized stand-ins).
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    AudioClip c = ts::speech_like(seed, 2.5);
    std::string err = check_lexical_flatness(c);
    if (!err.empty()) {
      return "speech-like clip " + std::to_string(seed) + ": " + err;
    }
  }
  return "";
}

std::string criterion_prosodic_filter() {
  AudioClip probe_hi = ts::sine(1000.0, 1.0, 0.5);
  AudioClip out_hi = low_pass(probe_hi, 300.0);
  double atten = rms_db(probe_hi.samples) - rms_db(out_hi.samples);
  if (atten < 60.0) {
    return "1 kHz probe attenuated only " + std::to_string(atten) + " dB";
  }
  AudioClip probe_lo = ts::sine(100.0, 1.0, 0.5);
  AudioClip out_lo = low_pass(probe_lo, 300.0);
  double dev = std::abs(rms_db(probe_lo.samples) - rms_db(out_lo.samples));
  if (dev > 1.0) {
    return "100 Hz probe deviates " + std::to_string(dev) + " dB";
  }

  const std::vector<double> cutoffs = {50,  100, 200,  300,  400,  500,
                                       800, 1200, 1800, 2400, 3000};
  AudioClip noise = white_noise_like(1.0, 16000, 99, -20.0);
  std::vector<AudioClip> filtered;
  for (double c : cutoffs) filtered.push_back(low_pass(noise, c));

  // Idempotence: re-filtering changes band energies by <= 0.5 dB.
  for (std::size_t i = 0; i < cutoffs.size(); ++i) {
    AudioClip twice = low_pass(filtered[i], cutoffs[i]);
    double e1 = band_energy(filtered[i], 0.0, cutoffs[i]);
    double e2 = band_energy(twice, 0.0, cutoffs[i]);
    if (std::abs(10.0 * std::log10(e2 / e1)) > 0.5) {
      return "idempotence broken at cutoff " + std::to_string(cutoffs[i]);
    }
  }
  // Monotonicity (+1 dB slack) on absolute energy above the larger cutoff.
  auto abs_energy_above = [](const AudioClip& clip, double f) {
    double total = 0.0;
    for (double s : clip.samples) total += s * s;
    return total * band_energy(clip, f, clip.nyquist_hz());
  };
  for (std::size_t i = 0; i < cutoffs.size(); ++i) {
    for (std::size_t j = i + 1; j < cutoffs.size(); ++j) {
      double tight = abs_energy_above(filtered[i], cutoffs[j]);
      double loose = abs_energy_above(filtered[j], cutoffs[j]);
      if (tight > loose * std::pow(10.0, 0.1) + 1e-12) {
        return "monotonicity broken between " + std::to_string(cutoffs[i]) +
               " and " + std::to_string(cutoffs[j]);
      }
    }
  }
  return "";
}

std::string criterion_determinism() {
  fs::path dir = work_dir() / "determinism";
  fs::create_directories(dir);
  ts::CorpusConfig ccfg;
  ccfg.n_items = 8;
  Manifest manifest = ts::build_tone_corpus(dir / "corpus", ccfg);

  ExperimentConfig cfg;
  cfg.k = 16;
  cfg.cache_dir = dir / "cache";
  cfg.predictor.candidate_lengths = {4, 7, 10};
  cfg.seeds = {0, 1, 2};
  ExperimentResult r1 = run_experiment(cfg, manifest);
  ExperimentResult r2 = run_experiment(cfg, manifest);
  if (r1.results_row != r2.results_row) {
    return "results rows differ between identical runs";
  }

  AudioClip n1 = white_noise_like(1.0, 16000, 5);
  AudioClip n2 = white_noise_like(1.0, 16000, 5);
  if (n1.samples != n2.samples) return "white_noise_like not seed-deterministic";

  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    for (std::size_t n : {std::size_t{2}, std::size_t{5}, std::size_t{50}}) {
      auto perm = derangement(n, seed);
      auto again = derangement(n, seed);
      if (perm != again) return "derangement not seed-deterministic";
      for (std::size_t i = 0; i < n; ++i) {
        if (perm[i] == i) {
          return "fixed point at n=" + std::to_string(n) +
                 " seed=" + std::to_string(seed);
        }
      }
    }
  }
  return "";
}

std::string criterion_kmeans() {
  // Inertia non-increasing across 20 seeded runs.
  std::mt19937_64 rng(31337);
  FeatureMatrix data;
  data.grid = FrameGrid{0.025, 0.020, 600};
  data.dim = 6;
  data.values.resize(600 * 6);
  for (auto& v : data.values) v = uniform(rng, -4, 4);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::vector<double> trace;
    train_kmeans_traced(data, 10, seed, 60, 0.0, &trace);
    for (std::size_t i = 1; i < trace.size(); ++i) {
      if (trace[i] > trace[i - 1] + 1e-9) {
        return "inertia increased at seed " + std::to_string(seed);
      }
    }
  }

  // Two tight clouds recovered within 1e-6 of the closed-form means.
  const int per_cloud = 300, dim = 3;
  FeatureMatrix clouds;
  clouds.grid = FrameGrid{0.025, 0.020, 2 * per_cloud};
  clouds.dim = dim;
  std::vector<double> mean_a(dim, 0.0), mean_b(dim, 0.0);
  for (int i = 0; i < 2 * per_cloud; ++i) {
    bool second = i >= per_cloud;
    for (int d = 0; d < dim; ++d) {
      double v = (second ? 8.0 : -8.0) + 0.005 * uniform(rng, -1, 1);
      clouds.values.push_back(v);
      (second ? mean_b : mean_a)[static_cast<std::size_t>(d)] += v / per_cloud;
    }
  }
  Codebook cb = train_kmeans(clouds, 2, 11, 100, 1e-12);
  const double* lo = cb.centroid(0)[0] < cb.centroid(1)[0] ? cb.centroid(0)
                                                           : cb.centroid(1);
  const double* hi = cb.centroid(0)[0] < cb.centroid(1)[0] ? cb.centroid(1)
                                                           : cb.centroid(0);
  for (int d = 0; d < dim; ++d) {
    if (std::abs(lo[d] - mean_a[static_cast<std::size_t>(d)]) > 1e-6 ||
        std::abs(hi[d] - mean_b[static_cast<std::size_t>(d)]) > 1e-6) {
      return "cloud means not recovered within 1e-6";
    }
  }

  // quantize vs exhaustive oracle on 10,000 random frames.
  FeatureMatrix frames;
  frames.grid = FrameGrid{0.025, 0.020, 10000};
  frames.dim = 5;
  frames.values.resize(10000 * 5);
  for (auto& v : frames.values) v = uniform(rng, -3, 3);
  FeatureMatrix train;
  train.grid = FrameGrid{0.025, 0.020, 400};
  train.dim = 5;
  train.values.resize(400 * 5);
  for (auto& v : train.values) v = uniform(rng, -3, 3);
  Codebook book = train_kmeans(train, 24, 3);
  UnitSequence seq = quantize(frames, book);
  for (int i = 0; i < frames.n_frames(); ++i) {
    double best = 1e300;
    int best_c = 0;
    for (int c = 0; c < book.k; ++c) {
      double acc = 0.0;
      for (int d = 0; d < 5; ++d) {
        double diff = frames.at(i, d) - book.centroid(c)[d];
        acc += diff * diff;
      }
      if (acc < best) {
        best = acc;
        best_c = c;
      }
    }
    if (seq.units[static_cast<std::size_t>(i)] != best_c) {
      return "quantize disagrees with the oracle at frame " + std::to_string(i);
    }
  }
  return "";
}

std::string criterion_dedup() {
  std::mt19937_64 rng(515);
  for (int trial = 0; trial < 1000; ++trial) {
    UnitSequence seq;
    std::size_t n = rng() % 80;
    for (std::size_t i = 0; i < n; ++i) {
      seq.units.push_back(static_cast<int>(rng() % 6));
    }
    DedupUnitSequence d = deduplicate(seq);
    if (expand(d) != seq.units) return "expand(dedup(s)) != s";
    UnitSequence again;
    again.units = d.units;
    if (deduplicate(again).units != d.units) return "dedup not idempotent";
  }
  UnitSequence fix;
  fix.units = {3, 3, 3, 3, 5};
  if (repetition_stats(fix).fraction_runs_gt3 != 0.5) {
    return "repetition fixture {3,3,3,3,5} != 0.5";
  }
  UnitSequence none;
  none.units = {1, 2, 3};
  if (repetition_stats(none).fraction_runs_gt3 != 0.0) {
    return "no-repeat fixture != 0";
  }
  UnitSequence all;
  all.units.assign(10, 7);
  if (repetition_stats(all).fraction_runs_gt3 != 1.0) {
    return "single-run fixture != 1";
  }
  return "";
}

std::string criterion_desk_scale() {
  fs::path dir = work_dir() / "desk-scale";
  fs::create_directories(dir);
  ts::CorpusConfig ccfg;
  ccfg.n_items = 200;
  ccfg.seed = 12;
  Manifest manifest = ts::build_tone_corpus(dir / "corpus", ccfg);

  ExperimentConfig cfg;
  cfg.k = 32;
  cfg.cache_dir = dir / "cache";
  cfg.predictor.candidate_lengths = {4, 7, 10};
  cfg.seeds = {0};

  ExperimentResult natural = run_experiment(cfg, manifest);

  ExperimentConfig noise_cfg = cfg;
  noise_cfg.train_spec.variant = ConditionVariant::kNoise;
  noise_cfg.test_spec.variant = ConditionVariant::kNoise;
  ExperimentResult noise = run_experiment(noise_cfg, manifest);

  double gap = natural.eval.mean_ff1_pct - noise.eval.mean_ff1_pct;
  if (gap < 20.0) {
    return "natural (" + std::to_string(natural.eval.mean_ff1_pct) +
           ") beats noise (" + std::to_string(noise.eval.mean_ff1_pct) +
           ") by only " + std::to_string(gap) + " FF1 points";
  }

  Manifest reassigned = shuffle_pairs(manifest, 17);
  ExperimentResult shuffled = run_experiment(cfg, reassigned);
  double drop = natural.eval.mean_ff1_pct - shuffled.eval.mean_ff1_pct;
  if (drop < 10.0) {
    return "random pairing dropped FF1 by only " + std::to_string(drop) +
           " points (shuffled " + std::to_string(shuffled.eval.mean_ff1_pct) +
           ")";
  }
  return "";
}

}  // namespace

int main() {
  std::vector<Criterion> criteria = {
      {"1 metric oracle equivalence (10k pairs, tol 0.02, hand cases exact)",
       criterion_metric_oracle},
      {"2 metric algebra (0 <= AOS <= FF1 <= 1, identity, disjoint)",
       criterion_metric_algebra},
      {"3 lexical flatness (F0 std <= 5 Hz, mean +-5 Hz, level +-1.5 dB)",
       criterion_lexical_flatness},
      {"4 prosodic filtering (>=60 dB stop, <=1 dB pass, idempotent, monotone)",
       criterion_prosodic_filter},
      {"5 pipeline determinism (byte-identical rows, seeded noise/shuffle)",
       criterion_determinism},
      {"6 k-means correctness (monotone inertia, cloud recovery, oracle)",
       criterion_kmeans},
      {"7 dedup round-trip (1000 sequences, idempotence, fixtures)",
       criterion_dedup},
      {"8 desk-scale analogue (natural - noise >= 20 FF1, shuffle drop >= 10)",
       criterion_desk_scale},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    std::string err;
    try {
      err = c.run();
    } catch (const std::exception& e) {
      err = std::string("exception: ") + e.what();
    }
    auto dt = std::chrono::duration<double>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
    if (err.empty()) {
      std::printf("[PASS] criterion %s (%.1f s)\n", c.name.c_str(), dt);
    } else {
      std::printf("[FAIL] criterion %s (%.1f s): %s\n", c.name.c_str(), dt,
                  err.c_str());
      ++failures;
    }
  }
  return failures == 0 ? 0 : 1;
}

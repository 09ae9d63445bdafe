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

#ifndef PROSOQA_CONDITION_HPP
#define PROSOQA_CONDITION_HPP

#include <cstdint>
#include <string>

#include "prosoqa/audio.hpp"
#include "prosoqa/prosody.hpp"

namespace prosoqa {

class ConditionError : public std::runtime_error {
 public:
  explicit ConditionError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class ConditionVariant { kNatural, kLexical, kProsodic, kNoise };

std::string to_string(ConditionVariant v);
ConditionVariant variant_from_string(const std::string& s);

struct ConditionSpec {
  ConditionVariant variant = ConditionVariant::kNatural;
  double cutoff_hz = 300.0;        // prosodic only
  std::uint64_t noise_seed = 0;    // noise only
  double noise_level_db = -26.0;   // noise only

  // Stable textual form, used in cache keys and sidecar metadata.
  std::string key() const;
};

// Pitch-synchronous overlap-add resynthesis toward a constant F0 target.
// Voiced regions (per the YIN contour) are re-marked at the target period;
// unvoiced regions pass through. Duration is preserved exactly.
AudioClip flatten_pitch(const AudioClip& clip, double target_f0_hz,
                        const PitchConfig& cfg = {});

// Per-frame gain toward the target level, linearly interpolated between
// frame centers, smoothed with a 50 ms moving average and capped at
// +-20 dB. Silent frames keep unity gain.
AudioClip flatten_intensity(const AudioClip& clip, double target_level_db);

// flatten_pitch then flatten_intensity, both targeting the input's
// utterance means.
AudioClip make_lexical(const AudioClip& clip, const PitchConfig& cfg = {});

// Linear-phase windowed-sinc FIR (Kaiser, >=60 dB stopband), group delay
// compensated, edges padded by AR extrapolation. Output length equals input.
AudioClip low_pass(const AudioClip& clip, double cutoff_hz);

// Seeded i.i.d. Gaussian noise scaled to the requested RMS level.
AudioClip white_noise_like(double duration_s, int sample_rate_hz,
                           std::uint64_t seed, double level_db = -26.0);

struct ConditionOutput {
  AudioClip clip;
  double peak_gain = 1.0;  // normalization applied after the transform
};

ConditionOutput apply_condition(const AudioClip& clip,
                                const ConditionSpec& spec);

}  // namespace prosoqa

#endif  // PROSOQA_CONDITION_HPP

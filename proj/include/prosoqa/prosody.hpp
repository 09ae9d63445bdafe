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

#ifndef PROSOQA_PROSODY_HPP
#define PROSOQA_PROSODY_HPP

#include <optional>
#include <string>
#include <vector>

#include "prosoqa/audio.hpp"

namespace prosoqa {

class ProsodyError : public std::runtime_error {
 public:
  explicit ProsodyError(const std::string& msg) : std::runtime_error(msg) {}
};

struct PitchConfig {
  double f0_floor_hz = 60.0;
  double f0_ceil_hz = 400.0;
  // YIN cumulative-mean-normalized difference threshold for voicing.
  double aperiodicity_threshold = 0.15;
  double window_s = 0.040;
  double hop_s = 0.010;
};

constexpr double kIntensityFloorDb = -120.0;
// Frames this far below the clip's peak frame level count as silence.
constexpr double kSilenceRangeDb = 40.0;

struct PitchContour {
  FrameGrid grid;
  std::vector<std::optional<double>> f0_hz;  // absent = unvoiced

  int voiced_count() const;
  // Mean / sample std over voiced frames; throws when fully unvoiced.
  double voiced_mean_hz() const;
  double voiced_std_hz() const;
};

struct IntensityContour {
  FrameGrid grid;
  std::vector<double> level_db;  // clamped to kIntensityFloorDb

  double peak_db() const;
};

// YIN: difference function, cumulative mean normalization, parabolic
// interpolation of the selected lag. Frames whose best normalized
// difference exceeds the threshold are unvoiced.
PitchContour estimate_f0(const AudioClip& clip, const PitchConfig& cfg = {});

IntensityContour intensity_contour(const AudioClip& clip,
                                   double window_s = 0.040,
                                   double hop_s = 0.010);

struct UtteranceMeans {
  double mean_f0_hz;
  double mean_level_db;
};

// Mean F0 over voiced frames and mean level over non-silent frames
// (frames within kSilenceRangeDb of the peak frame level).
UtteranceMeans utterance_means(const PitchContour& pitch,
                               const IntensityContour& intensity);

// Tab-separated dump: frame_start_s, f0_hz or NA, level_db.
std::string dump_contours(const PitchContour& pitch,
                          const IntensityContour& intensity);

}  // namespace prosoqa

#endif  // PROSOQA_PROSODY_HPP

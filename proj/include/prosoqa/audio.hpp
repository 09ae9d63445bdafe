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

#ifndef PROSOQA_AUDIO_HPP
#define PROSOQA_AUDIO_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace prosoqa {

constexpr int kCanonicalSampleRateHz = 16000;

class AudioError : public std::runtime_error {
 public:
  explicit AudioError(const std::string& msg) : std::runtime_error(msg) {}
};

class UnsupportedEncodingError : public AudioError {
 public:
  explicit UnsupportedEncodingError(const std::string& msg) : AudioError(msg) {}
};

class MultiChannelError : public AudioError {
 public:
  explicit MultiChannelError(const std::string& msg) : AudioError(msg) {}
};

class TruncatedFileError : public AudioError {
 public:
  explicit TruncatedFileError(const std::string& msg) : AudioError(msg) {}
};

// Mono sample buffer. Samples are real amplitudes, nominal range [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate_hz = kCanonicalSampleRateHz;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
  double nyquist_hz() const { return 0.5 * sample_rate_hz; }
  bool empty() const { return samples.empty(); }

  // Throws AudioError when a sample is non-finite or the rate is below 8 kHz.
  void validate() const;
};

// Uniform analysis grid: frame i covers [i*hop_s, i*hop_s + window_s).
struct FrameGrid {
  double window_s = 0.040;
  double hop_s = 0.010;
  int n_frames = 0;

  static FrameGrid cover(double duration_s, double window_s, double hop_s);

  double frame_start_s(int i) const { return i * hop_s; }
  double frame_center_s(int i) const { return i * hop_s + 0.5 * window_s; }
  int index_of_start(double start_s) const {
    return static_cast<int>(std::lround(start_s / hop_s));
  }
};

enum class WavEncoding { kPcm16, kFloat32 };

AudioClip read_wav(const std::string& path);
void write_wav(const AudioClip& clip, const std::string& path,
               WavEncoding encoding = WavEncoding::kPcm16);

// Fraction of periodogram energy within [f_lo_hz, f_hi_hz). The band is
// half-open except that f_hi == Nyquist closes it, so disjoint bands covering
// [0, Nyquist] sum to 1. Throws AudioError on an empty or silent clip.
double band_energy(const AudioClip& clip, double f_lo_hz, double f_hi_hz);

// In-place radix-2 FFT; input is zero-padded by callers as needed.
void fft(std::vector<std::complex<double>>& data, bool inverse = false);
std::size_t next_pow2(std::size_t n);

// Windowed-sinc sample-rate conversion (Kaiser window, fixed quality).
// Returns the clip unchanged if the rate already matches.
AudioClip resample(const AudioClip& clip, int target_rate_hz);

double rms(const std::vector<double>& samples);
double rms_db(const std::vector<double>& samples, double floor_db = -120.0);

// Scales the clip so that max |sample| == 1 when it exceeds 1.
// Returns the applied gain (1.0 when no scaling was needed).
double peak_normalize(AudioClip& clip);

}  // namespace prosoqa

#endif  // PROSOQA_AUDIO_HPP

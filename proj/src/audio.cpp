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

#include "prosoqa/audio.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numbers>

namespace prosoqa {

void AudioClip::validate() const {
  if (sample_rate_hz < 8000) {
    throw AudioError("sample rate must be >= 8000 Hz, got " +
                     std::to_string(sample_rate_hz));
  }
  for (double s : samples) {
    if (!std::isfinite(s)) throw AudioError("non-finite sample in clip");
  }
}

FrameGrid FrameGrid::cover(double duration_s, double window_s, double hop_s) {
  if (hop_s <= 0 || hop_s > window_s) {
    throw std::invalid_argument("FrameGrid requires 0 < hop_s <= window_s");
  }
  FrameGrid g;
  g.window_s = window_s;
  g.hop_s = hop_s;
  if (duration_s >= window_s) {
    // Tiny epsilon guards against 1.0/0.02 style float droop at exact fits.
    g.n_frames =
        static_cast<int>(std::floor((duration_s - window_s) / hop_s + 1e-9)) + 1;
  } else {
    g.n_frames = 0;
  }
  return g;
}

namespace {

struct RiffReader {
  std::vector<char> bytes;
  std::size_t pos = 0;

  void need(std::size_t n, const char* what) {
    if (pos + n > bytes.size()) {
      throw TruncatedFileError(std::string("truncated WAV: ") + what);
    }
  }
  uint32_t u32() {
    need(4, "u32");
    uint32_t v;
    std::memcpy(&v, bytes.data() + pos, 4);
    pos += 4;
    return v;
  }
  uint16_t u16() {
    need(2, "u16");
    uint16_t v;
    std::memcpy(&v, bytes.data() + pos, 2);
    pos += 2;
    return v;
  }
  std::string tag() {
    need(4, "chunk tag");
    std::string t(bytes.data() + pos, 4);
    pos += 4;
    return t;
  }
};

void put_u32(std::vector<char>& out, uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.insert(out.end(), b, b + 4);
}
void put_u16(std::vector<char>& out, uint16_t v) {
  char b[2];
  std::memcpy(b, &v, 2);
  out.insert(out.end(), b, b + 2);
}

}  // namespace

AudioClip read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AudioError("cannot open WAV file: " + path);
  RiffReader r;
  r.bytes.assign(std::istreambuf_iterator<char>(in),
                 std::istreambuf_iterator<char>());

  if (r.tag() != "RIFF") throw UnsupportedEncodingError("not a RIFF file");
  r.u32();  // declared size, unreliable in the wild
  if (r.tag() != "WAVE") throw UnsupportedEncodingError("not a WAVE file");

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  AudioClip clip;

  while (r.pos < r.bytes.size()) {
    if (r.pos + 8 > r.bytes.size()) {
      throw TruncatedFileError("dangling bytes after last chunk");
    }
    std::string id = r.tag();
    uint32_t size = r.u32();
    if (id == "fmt ") {
      r.need(size, "fmt chunk");
      std::size_t fmt_end = r.pos + size;
      format = r.u16();
      channels = r.u16();
      rate = r.u32();
      r.u32();  // byte rate
      r.u16();  // block align
      bits = r.u16();
      r.pos = fmt_end;
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw UnsupportedEncodingError("data chunk before fmt");
      if (channels != 1) {
        throw MultiChannelError("expected mono, got " +
                                std::to_string(channels) + " channels");
      }
      r.need(size, "data chunk");
      const char* p = r.bytes.data() + r.pos;
      if (format == 1 && bits == 16) {
        std::size_t n = size / 2;
        clip.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          int16_t v;
          std::memcpy(&v, p + 2 * i, 2);
          clip.samples[i] = v / 32768.0;
        }
      } else if (format == 3 && bits == 32) {
        std::size_t n = size / 4;
        clip.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          float v;
          std::memcpy(&v, p + 4 * i, 4);
          clip.samples[i] = v;
        }
      } else {
        throw UnsupportedEncodingError(
            "unsupported encoding: format=" + std::to_string(format) +
            " bits=" + std::to_string(bits));
      }
      clip.sample_rate_hz = static_cast<int>(rate);
      clip.validate();
      return clip;
    } else {
      r.need(size, "chunk body");
      r.pos += size + (size & 1);  // chunks are word-aligned
    }
  }
  if (!have_fmt) throw UnsupportedEncodingError("missing fmt chunk");
  throw TruncatedFileError("missing data chunk");
}

void write_wav(const AudioClip& clip, const std::string& path,
               WavEncoding encoding) {
  clip.validate();
  const bool pcm16 = encoding == WavEncoding::kPcm16;
  const uint32_t bytes_per_sample = pcm16 ? 2 : 4;
  const uint32_t data_size =
      static_cast<uint32_t>(clip.samples.size()) * bytes_per_sample;

  std::vector<char> out;
  out.reserve(44 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, pcm16 ? 1 : 3);
  put_u16(out, 1);
  put_u32(out, static_cast<uint32_t>(clip.sample_rate_hz));
  put_u32(out, static_cast<uint32_t>(clip.sample_rate_hz) * bytes_per_sample);
  put_u16(out, static_cast<uint16_t>(bytes_per_sample));
  put_u16(out, pcm16 ? 16 : 32);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_size);

  for (double s : clip.samples) {
    if (pcm16) {
      double clamped = std::clamp(s, -1.0, 1.0);
      auto v = static_cast<int16_t>(
          std::clamp(std::lround(clamped * 32768.0), -32768L, 32767L));
      char b[2];
      std::memcpy(b, &v, 2);
      out.insert(out.end(), b, b + 2);
    } else {
      float v = static_cast<float>(s);
      char b[4];
      std::memcpy(b, &v, 4);
      out.insert(out.end(), b, b + 4);
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw AudioError("cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw AudioError("write failed: " + path);
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft(std::vector<std::complex<double>>& data, bool inverse) {
  const std::size_t n = data.size();
  if (n == 0 || (n & (n - 1)) != 0) {
    throw std::invalid_argument("fft size must be a power of two");
  }
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * std::numbers::pi / static_cast<double>(len) *
                 (inverse ? 1.0 : -1.0);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = data[i + k];
        std::complex<double> v = data[i + k + len / 2] * w;
        data[i + k] = u + v;
        data[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    for (auto& x : data) x /= static_cast<double>(n);
  }
}

double band_energy(const AudioClip& clip, double f_lo_hz, double f_hi_hz) {
  if (clip.empty()) throw AudioError("band_energy on empty clip");
  const double nyquist = clip.nyquist_hz();
  if (f_lo_hz < 0 || f_hi_hz <= f_lo_hz || f_hi_hz > nyquist + 1e-9) {
    throw std::invalid_argument("band must satisfy 0 <= lo < hi <= Nyquist");
  }

  std::size_t n = next_pow2(clip.samples.size());
  std::vector<std::complex<double>> spec(n);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    spec[i] = clip.samples[i];
  }
  fft(spec);

  // One-sided periodogram over bins 0..n/2.
  double total = 0.0, band = 0.0;
  const double bin_hz = static_cast<double>(clip.sample_rate_hz) / n;
  const bool closes_at_nyquist = f_hi_hz >= nyquist - 1e-9;
  for (std::size_t b = 0; b <= n / 2; ++b) {
    double p = std::norm(spec[b]);
    total += p;
    double f = b * bin_hz;
    bool in_band = closes_at_nyquist ? (f >= f_lo_hz && f <= f_hi_hz + 1e-9)
                                     : (f >= f_lo_hz && f < f_hi_hz);
    if (in_band) band += p;
  }
  if (total <= 0.0) throw AudioError("band_energy on silent clip (no energy)");
  return band / total;
}

namespace {

double bessel_i0(double x) {
  // Series form; converges fast for the beta values used here.
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

}  // namespace

AudioClip resample(const AudioClip& clip, int target_rate_hz) {
  clip.validate();
  if (target_rate_hz < 8000) {
    throw AudioError("target rate must be >= 8000 Hz");
  }
  if (clip.sample_rate_hz == target_rate_hz) return clip;

  const double ratio =
      static_cast<double>(target_rate_hz) / clip.sample_rate_hz;
  const std::size_t out_len = static_cast<std::size_t>(
      std::llround(clip.samples.size() * ratio));

  // Fixed quality: Kaiser beta 8 (~80 dB), 32 zero crossings per side.
  const double beta = 8.0;
  const double i0_beta = bessel_i0(beta);
  const double cutoff = 0.47 * std::min(1.0, ratio);  // in input-rate cycles
  const int half_width = static_cast<int>(
      std::ceil(32.0 / std::min(1.0, ratio)));

  AudioClip out;
  out.sample_rate_hz = target_rate_hz;
  out.samples.resize(out_len, 0.0);
  const auto& x = clip.samples;
  const auto n_in = static_cast<long>(x.size());

  for (std::size_t i = 0; i < out_len; ++i) {
    double t = static_cast<double>(i) / ratio;  // position in input samples
    long center = static_cast<long>(std::floor(t));
    double acc = 0.0;
    for (long j = center - half_width; j <= center + half_width + 1; ++j) {
      if (j < 0 || j >= n_in) continue;
      double d = t - static_cast<double>(j);
      double u = d / (half_width + 1);
      if (u <= -1.0 || u >= 1.0) continue;
      double w = bessel_i0(beta * std::sqrt(1.0 - u * u)) / i0_beta;
      acc += x[static_cast<std::size_t>(j)] * 2.0 * cutoff *
             sinc(2.0 * cutoff * d) * w;
    }
    out.samples[i] = acc;
  }
  return out;
}

double rms(const std::vector<double>& samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (double s : samples) acc += s * s;
  return std::sqrt(acc / samples.size());
}

double rms_db(const std::vector<double>& samples, double floor_db) {
  double r = rms(samples);
  if (r <= 0.0) return floor_db;
  return std::max(floor_db, 20.0 * std::log10(r));
}

double peak_normalize(AudioClip& clip) {
  double peak = 0.0;
  for (double s : clip.samples) peak = std::max(peak, std::abs(s));
  if (peak <= 1.0) return 1.0;
  double gain = 1.0 / peak;
  for (double& s : clip.samples) s *= gain;
  return gain;
}

}  // namespace prosoqa

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

#include "prosoqa/units.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

namespace prosoqa {

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

}  // namespace

FeatureMatrix extract_features(const AudioClip& clip,
                               const FeatureConfig& cfg) {
  clip.validate();
  if (clip.duration_s() < cfg.window_s) {
    throw UnitsError("clip shorter than one feature window");
  }
  const int fs = clip.sample_rate_hz;
  const int win = static_cast<int>(std::lround(cfg.window_s * fs));
  const int hop = static_cast<int>(std::lround(cfg.hop_s * fs));
  const std::size_t nfft = next_pow2(static_cast<std::size_t>(win));
  const std::size_t n_bins = nfft / 2 + 1;

  // Triangular mel filterbank over [0, Nyquist].
  const double nyquist = clip.nyquist_hz();
  std::vector<double> edges(static_cast<std::size_t>(cfg.n_mels) + 2);
  const double mel_hi = hz_to_mel(nyquist);
  for (std::size_t m = 0; m < edges.size(); ++m) {
    edges[m] = mel_to_hz(mel_hi * static_cast<double>(m) / (cfg.n_mels + 1));
  }
  const double bin_hz = static_cast<double>(fs) / nfft;

  std::vector<double> hann(static_cast<std::size_t>(win));
  for (int j = 0; j < win; ++j) {
    hann[static_cast<std::size_t>(j)] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * j / (win - 1));
  }

  FeatureMatrix out;
  out.grid = FrameGrid::cover(clip.duration_s(), cfg.window_s, cfg.hop_s);
  out.dim = cfg.n_mels;
  out.values.resize(static_cast<std::size_t>(out.grid.n_frames) * cfg.n_mels);

  std::vector<std::complex<double>> spec(nfft);
  std::vector<double> power(n_bins);
  for (int i = 0; i < out.grid.n_frames; ++i) {
    const double* x = clip.samples.data() + static_cast<std::size_t>(i) * hop;
    std::fill(spec.begin(), spec.end(), std::complex<double>(0.0));
    for (int j = 0; j < win; ++j) {
      spec[static_cast<std::size_t>(j)] = x[j] * hann[static_cast<std::size_t>(j)];
    }
    fft(spec);
    for (std::size_t b = 0; b < n_bins; ++b) power[b] = std::norm(spec[b]);

    for (int m = 0; m < cfg.n_mels; ++m) {
      double lo = edges[static_cast<std::size_t>(m)];
      double mid = edges[static_cast<std::size_t>(m) + 1];
      double hi = edges[static_cast<std::size_t>(m) + 2];
      double acc = 0.0;
      for (std::size_t b = 0; b < n_bins; ++b) {
        double f = b * bin_hz;
        if (f <= lo || f >= hi) continue;
        double w = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
        acc += w * power[b];
      }
      out.values[static_cast<std::size_t>(i) * cfg.n_mels + m] =
          std::log(std::max(acc, cfg.log_floor));
    }
  }
  return out;
}

namespace {

double sq_dist(const double* a, const double* b, int dim) {
  double acc = 0.0;
  for (int d = 0; d < dim; ++d) {
    double diff = a[d] - b[d];
    acc += diff * diff;
  }
  return acc;
}

// Engine-output uniform in [0,1); avoids std::uniform_real_distribution so
// streams are identical across standard libraries.
double uniform01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

Codebook train_kmeans_traced(const FeatureMatrix& features, int k,
                             std::uint64_t seed, int max_iters, double tol,
                             std::vector<double>* inertia_trace) {
  const int n = features.n_frames();
  const int dim = features.dim;
  if (k < 1) throw UnitsError("k must be >= 1");
  if (n < k) {
    throw UnitsError("fewer samples (" + std::to_string(n) + ") than k (" +
                     std::to_string(k) + ")");
  }

  Codebook cb;
  cb.k = k;
  cb.dim = dim;
  cb.seed = seed;
  cb.centroids.resize(static_cast<std::size_t>(k) * dim);
  std::mt19937_64 rng(seed);

  auto row = [&](int i) {
    return features.values.data() + static_cast<std::size_t>(i) * dim;
  };
  auto centroid = [&](int c) {
    return cb.centroids.data() + static_cast<std::size_t>(c) * dim;
  };

  // k-means++ seeding.
  int first = static_cast<int>(uniform01(rng) * n);
  std::copy(row(first), row(first) + dim, cb.centroids.begin());
  std::vector<double> min_d(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    min_d[static_cast<std::size_t>(i)] = sq_dist(row(i), centroid(0), dim);
  }
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : min_d) total += d;
    int pick;
    if (total <= 0.0) {
      pick = static_cast<int>(uniform01(rng) * n);
    } else {
      double target = uniform01(rng) * total;
      double run = 0.0;
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        run += min_d[static_cast<std::size_t>(i)];
        if (run >= target) {
          pick = i;
          break;
        }
      }
    }
    std::copy(row(pick), row(pick) + dim,
              cb.centroids.begin() + static_cast<std::size_t>(c) * dim);
    for (int i = 0; i < n; ++i) {
      min_d[static_cast<std::size_t>(i)] =
          std::min(min_d[static_cast<std::size_t>(i)],
                   sq_dist(row(i), centroid(c), dim));
    }
  }

  // Lloyd iterations.
  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  std::vector<double> sums(static_cast<std::size_t>(k) * dim);
  std::vector<int> counts(static_cast<std::size_t>(k));
  double prev_inertia = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < max_iters; ++iter) {
    double inertia = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_c = 0;
      for (int c = 0; c < k; ++c) {
        double d = sq_dist(row(i), centroid(c), dim);
        if (d < best) {
          best = d;
          best_c = c;
        }
      }
      assign[static_cast<std::size_t>(i)] = best_c;
      inertia += best;
    }
    if (inertia_trace) inertia_trace->push_back(inertia);
    cb.inertia = inertia;

    bool converged =
        prev_inertia < std::numeric_limits<double>::infinity() &&
        (prev_inertia - inertia) <= tol * std::max(prev_inertia, 1e-300);
    if (converged || iter == max_iters - 1) break;
    prev_inertia = inertia;

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) {
      int c = assign[static_cast<std::size_t>(i)];
      const double* r = row(i);
      double* s = sums.data() + static_cast<std::size_t>(c) * dim;
      for (int d = 0; d < dim; ++d) s[d] += r[d];
      ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) continue;
      const double* s = sums.data() + static_cast<std::size_t>(c) * dim;
      double* ctr = cb.centroids.data() + static_cast<std::size_t>(c) * dim;
      for (int d = 0; d < dim; ++d) {
        ctr[d] = s[d] / counts[static_cast<std::size_t>(c)];
      }
    }

    // Repair empty clusters: steal the point farthest from its centroid.
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      double worst = -1.0;
      int worst_i = 0;
      for (int i = 0; i < n; ++i) {
        int a = assign[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(a)] <= 1) continue;
        double d = sq_dist(row(i), centroid(a), dim);
        if (d > worst) {
          worst = d;
          worst_i = i;
        }
      }
      int old = assign[static_cast<std::size_t>(worst_i)];
      --counts[static_cast<std::size_t>(old)];
      counts[static_cast<std::size_t>(c)] = 1;
      assign[static_cast<std::size_t>(worst_i)] = c;
      std::copy(row(worst_i), row(worst_i) + dim,
                cb.centroids.begin() + static_cast<std::size_t>(c) * dim);
    }
  }
  return cb;
}

Codebook train_kmeans(const FeatureMatrix& features, int k, std::uint64_t seed,
                      int max_iters, double tol) {
  return train_kmeans_traced(features, k, seed, max_iters, tol, nullptr);
}

UnitSequence quantize(const FeatureMatrix& features, const Codebook& codebook) {
  if (features.dim != codebook.dim) {
    throw UnitsError("feature dim " + std::to_string(features.dim) +
                     " does not match codebook dim " +
                     std::to_string(codebook.dim));
  }
  UnitSequence out;
  out.grid = features.grid;
  out.units.resize(static_cast<std::size_t>(features.n_frames()));
  for (int i = 0; i < features.n_frames(); ++i) {
    const double* r =
        features.values.data() + static_cast<std::size_t>(i) * features.dim;
    double best = std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (int c = 0; c < codebook.k; ++c) {
      double d = sq_dist(r, codebook.centroid(c), codebook.dim);
      if (d < best) {  // strict: ties stay with the lowest id
        best = d;
        best_c = c;
      }
    }
    out.units[static_cast<std::size_t>(i)] = best_c;
  }
  return out;
}

DedupUnitSequence deduplicate(const UnitSequence& units) {
  DedupUnitSequence out;
  out.grid = units.grid;
  const auto& u = units.units;
  std::size_t i = 0;
  while (i < u.size()) {
    std::size_t j = i;
    while (j < u.size() && u[j] == u[i]) ++j;
    out.units.push_back(u[i]);
    out.run_lengths.push_back(static_cast<int>(j - i));
    out.start_frames.push_back(static_cast<int>(i));
    i = j;
  }
  return out;
}

std::vector<int> expand(const DedupUnitSequence& dedup) {
  std::vector<int> out;
  for (std::size_t t = 0; t < dedup.units.size(); ++t) {
    out.insert(out.end(), static_cast<std::size_t>(dedup.run_lengths[t]),
               dedup.units[t]);
  }
  return out;
}

RepetitionStats repetition_stats(const UnitSequence& units) {
  if (units.units.empty()) throw UnitsError("empty unit sequence");
  DedupUnitSequence dedup = deduplicate(units);
  RepetitionStats stats;
  int gt3 = 0;
  for (int len : dedup.run_lengths) {
    ++stats.run_length_histogram[len];
    if (len > 3) ++gt3;
  }
  stats.fraction_runs_gt3 =
      static_cast<double>(gt3) / static_cast<double>(dedup.run_lengths.size());
  return stats;
}

namespace {
constexpr char kCodebookMagic[4] = {'P', 'Q', 'C', 'B'};
constexpr std::uint32_t kCodebookVersion = 1;
}  // namespace

void save_codebook(const Codebook& codebook, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw UnitsError("cannot open for writing: " + path);
  f.write(kCodebookMagic, 4);
  auto put_u32 = [&f](std::uint32_t v) {
    f.write(reinterpret_cast<const char*>(&v), 4);
  };
  put_u32(kCodebookVersion);
  put_u32(static_cast<std::uint32_t>(codebook.k));
  put_u32(static_cast<std::uint32_t>(codebook.dim));
  f.write(reinterpret_cast<const char*>(&codebook.seed), 8);
  for (double v : codebook.centroids) {
    float x = static_cast<float>(v);
    f.write(reinterpret_cast<const char*>(&x), 4);
  }
  if (!f) throw UnitsError("write failed: " + path);
}

Codebook load_codebook(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UnitsError("cannot open codebook: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kCodebookMagic, 4) != 0) {
    throw UnitsError("bad codebook magic: " + path);
  }
  auto get_u32 = [&f, &path]() {
    std::uint32_t v;
    f.read(reinterpret_cast<char*>(&v), 4);
    if (!f) throw UnitsError("truncated codebook: " + path);
    return v;
  };
  std::uint32_t version = get_u32();
  if (version != kCodebookVersion) {
    throw UnitsError("unsupported codebook version " + std::to_string(version));
  }
  Codebook cb;
  cb.k = static_cast<int>(get_u32());
  cb.dim = static_cast<int>(get_u32());
  f.read(reinterpret_cast<char*>(&cb.seed), 8);
  cb.centroids.resize(static_cast<std::size_t>(cb.k) * cb.dim);
  for (double& v : cb.centroids) {
    float x;
    f.read(reinterpret_cast<char*>(&x), 4);
    v = x;
  }
  if (!f) throw UnitsError("truncated codebook: " + path);
  return cb;
}

}  // namespace prosoqa

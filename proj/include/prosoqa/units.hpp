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

#ifndef PROSOQA_UNITS_HPP
#define PROSOQA_UNITS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "prosoqa/audio.hpp"

namespace prosoqa {

class UnitsError : public std::runtime_error {
 public:
  explicit UnitsError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FeatureConfig {
  int n_mels = 40;
  double window_s = 0.025;
  double hop_s = 0.020;  // 50 frames/s
  double log_floor = 1e-10;
};

struct FeatureMatrix {
  FrameGrid grid;
  int dim = 0;
  std::vector<double> values;  // row-major, n_frames x dim

  double at(int frame, int d) const {
    return values[static_cast<std::size_t>(frame) * dim + d];
  }
  int n_frames() const { return grid.n_frames; }
};

struct Codebook {
  int k = 0;
  int dim = 0;
  std::vector<double> centroids;  // row-major, k x dim
  std::uint64_t seed = 0;
  double inertia = 0.0;

  const double* centroid(int c) const {
    return centroids.data() + static_cast<std::size_t>(c) * dim;
  }
};

struct UnitSequence {
  FrameGrid grid;
  std::vector<int> units;  // per-frame cluster id in [0, k)
};

struct DedupUnitSequence {
  FrameGrid grid;
  std::vector<int> units;         // no two consecutive ids equal
  std::vector<int> run_lengths;   // per-token frame counts
  std::vector<int> start_frames;  // per-token first frame index

  std::size_t size() const { return units.size(); }
  double token_start_s(std::size_t i) const {
    return grid.frame_start_s(start_frames[i]);
  }
};

// Log-mel filterbank energies, the desk-scale frame representation.
FeatureMatrix extract_features(const AudioClip& clip,
                               const FeatureConfig& cfg = {});

// k-means++ seeding followed by Lloyd iterations. Empty clusters are
// repaired by stealing the point farthest from its assigned centroid.
// Deterministic per seed.
Codebook train_kmeans(const FeatureMatrix& features, int k,
                      std::uint64_t seed, int max_iters = 100,
                      double tol = 1e-6);

// Returns per-iteration inertia values alongside the codebook (for
// monotonicity checks); same algorithm as train_kmeans.
Codebook train_kmeans_traced(const FeatureMatrix& features, int k,
                             std::uint64_t seed, int max_iters, double tol,
                             std::vector<double>* inertia_trace);

// Nearest centroid by squared Euclidean distance; ties go to the lowest id.
UnitSequence quantize(const FeatureMatrix& features, const Codebook& codebook);

DedupUnitSequence deduplicate(const UnitSequence& units);

// Inverse of deduplicate: repeats each token by its run length.
std::vector<int> expand(const DedupUnitSequence& dedup);

struct RepetitionStats {
  double fraction_runs_gt3 = 0.0;
  std::map<int, int> run_length_histogram;
};

RepetitionStats repetition_stats(const UnitSequence& units);

// Binary codebook file: magic, version, k, dim, seed + float32 centroids.
void save_codebook(const Codebook& codebook, const std::string& path);
Codebook load_codebook(const std::string& path);

}  // namespace prosoqa

#endif  // PROSOQA_UNITS_HPP

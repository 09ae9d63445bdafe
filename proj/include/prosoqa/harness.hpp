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

#ifndef PROSOQA_HARNESS_HPP
#define PROSOQA_HARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "prosoqa/condition.hpp"
#include "prosoqa/eval.hpp"
#include "prosoqa/units.hpp"

namespace prosoqa {

class HarnessError : public std::runtime_error {
 public:
  explicit HarnessError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ManifestRecord {
  std::string id;
  std::string question_audio;
  std::string document_audio;
  std::vector<TimeSpan> gold_spans;
  std::string split = "test";
  // Set by shuffle_pairs: the gold spans travel with the document but are
  // not meaningful for the reassigned question.
  bool shuffled = false;
};

struct Manifest {
  std::vector<ManifestRecord> records;
};

// One JSON object per line. Rejects duplicate ids and invalid spans,
// reporting the offending line.
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& manifest,
                   const std::filesystem::path& path);

// Applies the condition to every referenced clip and rewrites paths into
// the cache. Cache keys are (content hash, spec); hits skip the transform.
Manifest materialize_condition(const Manifest& manifest,
                               const ConditionSpec& spec,
                               const std::filesystem::path& cache_dir,
                               int n_workers = 4);

struct MixSource {
  Manifest manifest;
  double fraction = 0.0;
  std::string tag;  // id suffix keeping merged ids unique
};

Manifest mix_manifests(const Manifest& primary,
                       const std::vector<MixSource>& others,
                       std::uint64_t seed);

// Reassigns documents (and their gold spans) by a seeded derangement.
Manifest shuffle_pairs(const Manifest& manifest, std::uint64_t seed);

struct ExperimentConfig {
  ConditionSpec train_spec;
  ConditionSpec test_spec;
  int k = 64;
  std::uint64_t kmeans_seed = 0;
  int kmeans_max_iters = 50;
  double kmeans_tol = 1e-4;
  FeatureConfig features;
  PredictorConfig predictor;
  std::vector<std::uint64_t> seeds = {0};
  std::filesystem::path cache_dir;
  int n_workers = 4;
};

struct ExperimentResult {
  EvalResult eval;
  // condition_train<TAB>condition_test<TAB>ff1_mean<TAB>ff1_std<TAB>
  // aos_mean<TAB>aos_std
  std::string results_row;
};

// materialize -> features -> codebook on train-split documents ->
// quantize -> dedup -> predict per seed -> evaluate.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const Manifest& manifest);

std::string results_table_header();

struct SweepConfig {
  std::vector<double> cutoffs_hz = {50,  100, 200,  300,  400,  500,
                                    800, 1200, 1800, 2400, 3000};
  ExperimentConfig base;
};

struct SweepRow {
  double cutoff_hz = 0.0;
  double ff1_mean = 0.0, ff1_std = 0.0;
  double aos_mean = 0.0, aos_std = 0.0;
  std::string error;  // non-empty when this cutoff failed
};

// One prosodic-x-prosodic run per cutoff; failures yield a row with the
// error column set instead of aborting the sweep.
std::vector<SweepRow> sweep_cutoff(const SweepConfig& sweep,
                                   const Manifest& manifest);

std::string sweep_table(const std::vector<SweepRow>& rows);

// FNV-1a 64 over a byte buffer; stable across platforms.
std::uint64_t content_hash(const std::string& bytes);
std::uint64_t file_content_hash(const std::filesystem::path& path);

}  // namespace prosoqa

#endif  // PROSOQA_HARNESS_HPP

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

#ifndef PROSOQA_EVAL_HPP
#define PROSOQA_EVAL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "prosoqa/units.hpp"

namespace prosoqa {

class EvalError : public std::runtime_error {
 public:
  explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TimeSpan {
  double start_s = 0.0;
  double end_s = 0.0;

  double length_s() const { return end_s - start_s; }
  bool valid() const { return start_s >= 0.0 && start_s <= end_s; }
};

// Overlap in seconds: max(0, min(ends) - max(starts)).
double overlap(const TimeSpan& a, const TimeSpan& b);

struct SpanScore {
  double ff1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

// Frame-level F1 in continuous time against the best-matching gold span.
SpanScore ff1(const TimeSpan& pred, const std::vector<TimeSpan>& golds);

// Intersection-over-union against the best-matching gold span.
double aos(const TimeSpan& pred, const std::vector<TimeSpan>& golds);

struct ItemResult {
  std::string id;
  double ff1 = 0.0;
  double aos = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct EvalResult {
  std::vector<ItemResult> per_item;  // last seed's items, ordered by id
  double mean_ff1_pct = 0.0;
  double std_ff1_pct = 0.0;
  double mean_aos_pct = 0.0;
  double std_aos_pct = 0.0;
  int n_items = 0;
  int n_seeds = 0;
};

struct EvalItem {
  std::string id;
  std::vector<TimeSpan> gold_spans;
};

// Per-seed corpus means of FF1/AOS x100, then mean and sample std across
// seeds. predictions_per_seed[s][i] answers items[i] under seed s.
EvalResult evaluate_set(
    const std::vector<EvalItem>& items,
    const std::vector<std::vector<TimeSpan>>& predictions_per_seed);

// Seeded derangement of [0, n): position i receives element perm[i] and
// perm[i] != i for all i (Sattolo's algorithm, a single cycle).
std::vector<std::size_t> derangement(std::size_t n, std::uint64_t seed);

struct PredictorConfig {
  int ngram_max = 3;
  std::vector<int> candidate_lengths = {10, 20, 40};  // dedup tokens
};

// Slides candidate windows over the document tokens; window score is
// sum over n of n * (shared n-grams, capped by question multiplicity).
// Ties go to the earliest start; an all-zero scan falls back to a centered
// window of the median candidate length.
TimeSpan predict_span(const DedupUnitSequence& question_units,
                      const DedupUnitSequence& document_units,
                      double document_duration_s,
                      const PredictorConfig& cfg = {});

}  // namespace prosoqa

#endif  // PROSOQA_EVAL_HPP

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

#include "prosoqa/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace prosoqa {

double overlap(const TimeSpan& a, const TimeSpan& b) {
  return std::max(0.0, std::min(a.end_s, b.end_s) -
                           std::max(a.start_s, b.start_s));
}

namespace {

SpanScore score_pair(const TimeSpan& pred, const TimeSpan& gold) {
  SpanScore s;
  double ov = overlap(pred, gold);
  if (ov <= 0.0) {
    // Zero-length pred meeting a zero-length gold at the same instant is a
    // perfect degenerate match.
    if (pred.length_s() == 0.0 && gold.length_s() == 0.0 &&
        pred.start_s == gold.start_s) {
      return {1.0, 1.0, 1.0};
    }
    return s;
  }
  s.precision = pred.length_s() > 0.0 ? ov / pred.length_s() : 1.0;
  s.recall = gold.length_s() > 0.0 ? ov / gold.length_s() : 1.0;
  s.ff1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

}  // namespace

SpanScore ff1(const TimeSpan& pred, const std::vector<TimeSpan>& golds) {
  if (golds.empty()) throw EvalError("empty gold span list");
  SpanScore best;
  for (const TimeSpan& g : golds) {
    SpanScore s = score_pair(pred, g);
    if (s.ff1 > best.ff1 ||
        (s.ff1 == 0.0 && best.ff1 == 0.0 && s.precision > best.precision)) {
      best = s;
    }
  }
  return best;
}

double aos(const TimeSpan& pred, const std::vector<TimeSpan>& golds) {
  if (golds.empty()) throw EvalError("empty gold span list");
  double best = 0.0;
  for (const TimeSpan& g : golds) {
    double ov = overlap(pred, g);
    double uni = pred.length_s() + g.length_s() - ov;
    if (uni <= 0.0) {
      // Both spans are points; identical points count as full overlap.
      if (pred.start_s == g.start_s) best = std::max(best, 1.0);
      continue;
    }
    best = std::max(best, ov / uni);
  }
  return best;
}

EvalResult evaluate_set(
    const std::vector<EvalItem>& items,
    const std::vector<std::vector<TimeSpan>>& predictions_per_seed) {
  if (items.empty()) throw EvalError("empty item set");
  if (predictions_per_seed.empty()) throw EvalError("no prediction seeds");
  for (const auto& preds : predictions_per_seed) {
    if (preds.size() != items.size()) {
      throw EvalError("missing predictions: expected " +
                      std::to_string(items.size()) + ", got " +
                      std::to_string(preds.size()));
    }
  }

  EvalResult result;
  result.n_items = static_cast<int>(items.size());
  result.n_seeds = static_cast<int>(predictions_per_seed.size());

  std::vector<double> seed_ff1, seed_aos;
  for (const auto& preds : predictions_per_seed) {
    double sum_ff1 = 0.0, sum_aos = 0.0;
    std::vector<ItemResult> per_item;
    per_item.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      SpanScore s = ff1(preds[i], items[i].gold_spans);
      double a = aos(preds[i], items[i].gold_spans);
      sum_ff1 += s.ff1;
      sum_aos += a;
      per_item.push_back({items[i].id, s.ff1, a, s.precision, s.recall});
    }
    seed_ff1.push_back(100.0 * sum_ff1 / static_cast<double>(items.size()));
    seed_aos.push_back(100.0 * sum_aos / static_cast<double>(items.size()));
    result.per_item = std::move(per_item);
  }
  std::sort(result.per_item.begin(), result.per_item.end(),
            [](const ItemResult& a, const ItemResult& b) { return a.id < b.id; });

  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto sample_std = [&](const std::vector<double>& v, double m) {
    if (v.size() < 2) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
  };
  result.mean_ff1_pct = mean(seed_ff1);
  result.std_ff1_pct = sample_std(seed_ff1, result.mean_ff1_pct);
  result.mean_aos_pct = mean(seed_aos);
  result.std_aos_pct = sample_std(seed_aos, result.mean_aos_pct);
  return result;
}

std::vector<std::size_t> derangement(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw EvalError("derangement needs at least 2 items");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  // Sattolo's algorithm: one n-cycle, hence no fixed points.
  for (std::size_t i = n - 1; i > 0; --i) {
    std::size_t j = static_cast<std::size_t>(
        (static_cast<double>(rng() >> 11) * 0x1.0p-53) * static_cast<double>(i));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

namespace {

// Multiset of n-grams keyed by token ids.
using NgramCounts = std::map<std::vector<int>, int>;

NgramCounts count_ngrams(const std::vector<int>& tokens, std::size_t begin,
                         std::size_t end, int n) {
  NgramCounts counts;
  if (end - begin < static_cast<std::size_t>(n)) return counts;
  for (std::size_t i = begin; i + n <= end; ++i) {
    std::vector<int> key(tokens.begin() + static_cast<long>(i),
                         tokens.begin() + static_cast<long>(i + n));
    ++counts[key];
  }
  return counts;
}

}  // namespace

TimeSpan predict_span(const DedupUnitSequence& question_units,
                      const DedupUnitSequence& document_units,
                      double document_duration_s, const PredictorConfig& cfg) {
  if (question_units.units.empty() || document_units.units.empty()) {
    throw EvalError("empty unit sequence");
  }
  const std::vector<int>& doc = document_units.units;
  const std::size_t n_tokens = doc.size();

  std::vector<NgramCounts> question_ngrams;
  for (int n = 1; n <= cfg.ngram_max; ++n) {
    question_ngrams.push_back(
        count_ngrams(question_units.units, 0, question_units.units.size(), n));
  }

  auto window_span = [&](std::size_t begin, std::size_t len) {
    TimeSpan s;
    s.start_s = document_units.token_start_s(begin);
    s.end_s = begin + len < n_tokens
                  ? document_units.token_start_s(begin + len)
                  : document_duration_s;
    return s;
  };

  double best_score = 0.0;
  bool have_best = false;
  std::size_t best_begin = 0, best_len = 0;

  for (int raw_len : cfg.candidate_lengths) {
    std::size_t len = std::min<std::size_t>(
        static_cast<std::size_t>(std::max(1, raw_len)), n_tokens);
    for (std::size_t begin = 0; begin + len <= n_tokens; ++begin) {
      double score = 0.0;
      for (int n = 1; n <= cfg.ngram_max; ++n) {
        const NgramCounts& q = question_ngrams[static_cast<std::size_t>(n - 1)];
        if (q.empty()) continue;
        NgramCounts w = count_ngrams(doc, begin, begin + len, n);
        for (const auto& [key, count] : w) {
          auto it = q.find(key);
          if (it != q.end()) score += n * std::min(count, it->second);
        }
      }
      if (score <= 0.0) continue;
      bool better = !have_best || score > best_score ||
                    (score == best_score &&
                     (begin < best_begin ||
                      (begin == best_begin && len < best_len)));
      if (better) {
        have_best = true;
        best_score = score;
        best_begin = begin;
        best_len = len;
      }
    }
  }

  if (!have_best) {
    // Fallback: centered window of the median candidate length.
    std::vector<int> lengths = cfg.candidate_lengths;
    std::sort(lengths.begin(), lengths.end());
    std::size_t len = std::min<std::size_t>(
        static_cast<std::size_t>(std::max(1, lengths[lengths.size() / 2])),
        n_tokens);
    best_begin = (n_tokens - len) / 2;
    best_len = len;
  }
  return window_span(best_begin, best_len);
}

}  // namespace prosoqa

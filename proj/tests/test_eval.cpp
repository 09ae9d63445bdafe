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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "prosoqa/eval.hpp"

using namespace prosoqa;

TEST_CASE("overlap fixtures") {
  CHECK(overlap({0, 10}, {5, 15}) == 5.0);
  CHECK(overlap({0, 4}, {5, 9}) == 0.0);
  CHECK(overlap({2, 4}, {0, 10}) == 2.0);
}

TEST_CASE("ff1 fixtures") {
  SpanScore identity = ff1({0, 10}, {{0, 10}});
  CHECK(identity.ff1 == doctest::Approx(1.0));

  SpanScore half = ff1({0, 10}, {{5, 15}});
  CHECK(half.precision == doctest::Approx(0.5));
  CHECK(half.recall == doctest::Approx(0.5));
  CHECK(half.ff1 == doctest::Approx(0.5));

  CHECK(ff1({0, 4}, {{5, 9}}).ff1 == 0.0);
  CHECK_THROWS_AS(ff1({0, 1}, {}), EvalError);
}

TEST_CASE("ff1 degenerate zero-length match") {
  SpanScore s = ff1({3, 3}, {{3, 3}});
  CHECK(s.ff1 == 1.0);
  CHECK(ff1({3, 3}, {{4, 4}}).ff1 == 0.0);
}

TEST_CASE("aos fixtures") {
  CHECK(aos({0, 10}, {{0, 10}}) == doctest::Approx(1.0));
  CHECK(aos({0, 10}, {{5, 15}}) == doctest::Approx(5.0 / 15.0));
  CHECK(aos({0, 4}, {{5, 9}}) == 0.0);
  CHECK_THROWS_AS(aos({0, 1}, {}), EvalError);
}

TEST_CASE("multiple golds: metrics take the best match") {
  std::vector<TimeSpan> golds = {{100, 110}, {0, 10}, {50, 60}};
  CHECK(ff1({0, 10}, golds).ff1 == doctest::Approx(1.0));
  CHECK(aos({49, 60}, golds) == doctest::Approx(10.0 / 11.0));
}

TEST_CASE("metric algebra on random pairs: 0 <= AOS <= FF1 <= 1 and symmetry") {
  std::mt19937_64 rng(17);
  auto uniform = [&rng](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  };
  for (int trial = 0; trial < 5000; ++trial) {
    TimeSpan a{uniform(0, 30), 0};
    a.end_s = a.start_s + uniform(0, 10);
    TimeSpan b{uniform(0, 30), 0};
    b.end_s = b.start_s + uniform(0, 10);
    double f = ff1(a, {b}).ff1;
    double o = aos(a, {b});
    CHECK(o >= 0.0);
    CHECK(o <= f + 1e-12);
    CHECK(f <= 1.0 + 1e-12);
    // Symmetric under swapping pred and gold.
    CHECK(ff1(b, {a}).ff1 == doctest::Approx(f));
    CHECK(aos(b, {a}) == doctest::Approx(o));
  }
}

TEST_CASE("evaluate_set single item, identical spans") {
  std::vector<EvalItem> items = {{"a", {{1, 3}}}};
  EvalResult r = evaluate_set(items, {{{1, 3}}});
  CHECK(r.mean_ff1_pct == doctest::Approx(100.0));
  CHECK(r.std_ff1_pct == 0.0);
  CHECK(r.n_items == 1);
  CHECK(r.n_seeds == 1);
}

TEST_CASE("evaluate_set across seeds uses sample std") {
  // Two seeds: corpus FF1 0.2 and 0.4 -> mean 30.00, std 14.14.
  std::vector<EvalItem> items = {{"a", {{0, 10}}}};
  // FF1 0.2: pred [0, 90] against gold [0, 10] -> P 1/9, R 1 -> 0.2.
  // FF1 0.4: pred [0, 40] -> P 0.25, R 1 -> 0.4.
  EvalResult r = evaluate_set(items, {{{0, 90}}, {{0, 40}}});
  CHECK(r.mean_ff1_pct == doctest::Approx(30.0).epsilon(1e-9));
  CHECK(r.std_ff1_pct == doctest::Approx(14.1421356).epsilon(1e-6));
}

TEST_CASE("evaluate_set rejects missing predictions and empty sets") {
  std::vector<EvalItem> items = {{"a", {{0, 1}}}, {"b", {{0, 1}}}};
  CHECK_THROWS_AS(evaluate_set(items, {{{0, 1}}}), EvalError);
  CHECK_THROWS_AS(evaluate_set({}, {}), EvalError);
}

TEST_CASE("evaluate_set is invariant to item order") {
  std::vector<EvalItem> items = {{"a", {{0, 2}}}, {"b", {{5, 9}}}};
  std::vector<TimeSpan> preds = {{0, 1}, {5, 7}};
  EvalResult fwd = evaluate_set(items, {preds});
  std::vector<EvalItem> rev = {items[1], items[0]};
  std::vector<TimeSpan> rev_preds = {preds[1], preds[0]};
  EvalResult bwd = evaluate_set(rev, {rev_preds});
  CHECK(fwd.mean_ff1_pct == doctest::Approx(bwd.mean_ff1_pct));
  CHECK(fwd.mean_aos_pct == doctest::Approx(bwd.mean_aos_pct));
  REQUIRE(fwd.per_item.size() == bwd.per_item.size());
  for (std::size_t i = 0; i < fwd.per_item.size(); ++i) {
    CHECK(fwd.per_item[i].id == bwd.per_item[i].id);
  }
}

TEST_CASE("derangement: no fixed points, deterministic, n=2 swap") {
  auto two = derangement(2, 123);
  CHECK(two == std::vector<std::size_t>{1, 0});

  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (std::size_t n : {2, 3, 5, 17, 50}) {
      auto perm = derangement(n, seed);
      std::set<std::size_t> seen(perm.begin(), perm.end());
      CHECK(seen.size() == n);
      for (std::size_t i = 0; i < n; ++i) CHECK(perm[i] != i);
    }
  }
  CHECK(derangement(10, 5) == derangement(10, 5));
  CHECK_THROWS_AS(derangement(1, 0), EvalError);
}

namespace {

DedupUnitSequence make_dedup(const std::vector<int>& tokens, double hop_s = 0.02) {
  DedupUnitSequence d;
  d.grid = FrameGrid{hop_s, hop_s, static_cast<int>(tokens.size())};
  d.units = tokens;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    d.run_lengths.push_back(1);
    d.start_frames.push_back(static_cast<int>(i));
  }
  return d;
}

// Independent window scorer used as the oracle for predict_span.
double oracle_score(const std::vector<int>& question,
                    const std::vector<int>& window, int ngram_max) {
  double score = 0.0;
  for (int n = 1; n <= ngram_max; ++n) {
    std::vector<std::vector<int>> q_grams;
    for (std::size_t i = 0; i + n <= question.size(); ++i) {
      q_grams.emplace_back(question.begin() + static_cast<long>(i),
                           question.begin() + static_cast<long>(i + n));
    }
    std::vector<bool> used(q_grams.size(), false);
    for (std::size_t i = 0; i + n <= window.size(); ++i) {
      std::vector<int> g(window.begin() + static_cast<long>(i),
                         window.begin() + static_cast<long>(i + n));
      for (std::size_t q = 0; q < q_grams.size(); ++q) {
        if (!used[q] && q_grams[q] == g) {
          used[q] = true;
          score += n;
          break;
        }
      }
    }
  }
  return score;
}

}  // namespace

TEST_CASE("predict_span finds a verbatim planted question") {
  std::mt19937_64 rng(31);
  std::vector<int> question;
  for (int i = 0; i < 12; ++i) question.push_back(100 + i);
  std::vector<int> doc;
  for (int i = 0; i < 25; ++i) doc.push_back(static_cast<int>(rng() % 50));
  std::size_t plant_at = doc.size();
  doc.insert(doc.end(), question.begin(), question.end());
  for (int i = 0; i < 25; ++i) doc.push_back(static_cast<int>(rng() % 50));

  DedupUnitSequence d = make_dedup(doc);
  double duration = 0.02 * static_cast<double>(doc.size());
  TimeSpan gold{0.02 * static_cast<double>(plant_at),
                0.02 * static_cast<double>(plant_at + question.size())};

  PredictorConfig cfg;
  cfg.candidate_lengths = {6, 12};
  TimeSpan pred = predict_span(make_dedup(question), d, duration, cfg);
  CHECK(ff1(pred, {gold}).ff1 >= 0.9);

  // With an oversized candidate in the mix, a longer window can tie on
  // score and win on earliest start; the plant must still be covered.
  cfg.candidate_lengths = {6, 12, 24};
  TimeSpan wide = predict_span(make_dedup(question), d, duration, cfg);
  CHECK(ff1(wide, {gold}).recall == doctest::Approx(1.0));
  CHECK(ff1(wide, {gold}).ff1 >= 0.6);
}

TEST_CASE("predict_span falls back to a centered window") {
  std::vector<int> question = {1, 2, 3};
  std::vector<int> doc(40, 99);  // no shared units
  DedupUnitSequence d = make_dedup(doc);
  PredictorConfig cfg;  // median candidate length 20
  TimeSpan pred = predict_span(make_dedup(question), d, 0.8, cfg);
  CHECK(pred.start_s == doctest::Approx(0.02 * 10));
  CHECK(pred.end_s == doctest::Approx(0.02 * 30));
}

TEST_CASE("predict_span matches the exhaustive window oracle") {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> question, doc;
    for (int i = 0; i < 8; ++i) question.push_back(static_cast<int>(rng() % 6));
    for (int i = 0; i < 60; ++i) doc.push_back(static_cast<int>(rng() % 6));

    PredictorConfig cfg;
    cfg.candidate_lengths = {5, 10};
    DedupUnitSequence dd = make_dedup(doc);
    double duration = 0.02 * static_cast<double>(doc.size());
    TimeSpan pred = predict_span(make_dedup(question), dd, duration, cfg);

    // Oracle: best score over every window, earliest start, shortest length.
    double best = 0.0;
    std::size_t best_begin = 0, best_len = 0;
    bool found = false;
    for (int len : cfg.candidate_lengths) {
      for (std::size_t b = 0; b + len <= doc.size(); ++b) {
        std::vector<int> window(doc.begin() + static_cast<long>(b),
                                doc.begin() + static_cast<long>(b + len));
        double s = oracle_score(question, window, cfg.ngram_max);
        if (s <= 0) continue;
        bool better =
            !found || s > best ||
            (s == best && (b < best_begin ||
                           (b == best_begin &&
                            static_cast<std::size_t>(len) < best_len)));
        if (better) {
          found = true;
          best = s;
          best_begin = b;
          best_len = static_cast<std::size_t>(len);
        }
      }
    }
    REQUIRE(found);
    CHECK(pred.start_s == doctest::Approx(0.02 * static_cast<double>(best_begin)));
    CHECK(pred.end_s ==
          doctest::Approx(0.02 * static_cast<double>(best_begin + best_len)));
  }
}

TEST_CASE("predict_span rejects empty inputs") {
  DedupUnitSequence empty;
  DedupUnitSequence d = make_dedup({1, 2, 3});
  CHECK_THROWS_AS(predict_span(empty, d, 1.0), EvalError);
  CHECK_THROWS_AS(predict_span(d, empty, 1.0), EvalError);
}

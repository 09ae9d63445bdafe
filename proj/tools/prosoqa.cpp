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

// prosoqa: desk-scale prosody ablation experiments from the command line.
//
//   prosoqa condition      apply a condition to every clip in a manifest
//   prosoqa units          train or inspect a discrete unit codebook
//   prosoqa predict        predict answer spans for a manifest
//   prosoqa eval           score a predictions file against gold spans
//   prosoqa sweep          run the low-pass cutoff sweep
//   prosoqa mix            mix items from secondary manifests into one
//   prosoqa shuffle-pairs  derange question/document pairings
//   prosoqa run            full condition x condition experiment cell

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "prosoqa/condition.hpp"
#include "prosoqa/eval.hpp"
#include "prosoqa/harness.hpp"
#include "prosoqa/units.hpp"

namespace fs = std::filesystem;
using namespace prosoqa;

namespace {

fs::path default_cache_dir() {
  if (const char* env = std::getenv("PROSOQA_CACHE_DIR")) return env;
  return fs::temp_directory_path() / "prosoqa-cache";
}

ConditionSpec make_spec(const std::string& variant, double cutoff_hz,
                        std::uint64_t noise_seed) {
  ConditionSpec spec;
  spec.variant = variant_from_string(variant);
  spec.cutoff_hz = cutoff_hz;
  spec.noise_seed = noise_seed;
  return spec;
}

FeatureMatrix features_for(const fs::path& path) {
  AudioClip clip = read_wav(path);
  if (clip.sample_rate_hz != kCanonicalSampleRateHz) {
    clip = resample(clip, kCanonicalSampleRateHz);
  }
  return extract_features(clip);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << text;
}

struct PredictionLine {
  std::string id;
  std::uint64_t seed;
  TimeSpan span;
};

std::vector<PredictionLine> load_predictions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<PredictionLine> lines;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    PredictionLine p;
    if (!(ss >> p.id >> p.seed >> p.span.start_s >> p.span.end_s)) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected 'id seed start end'");
    }
    lines.push_back(p);
  }
  return lines;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale spoken question answering experiments"};
  app.require_subcommand(1);

  // ---- condition -----------------------------------------------------
  auto* cond = app.add_subcommand(
      "condition", "Apply a listening condition to every clip in a manifest");
  std::string cond_manifest, cond_variant = "natural", cond_out;
  std::string cond_cache = default_cache_dir().string();
  double cond_cutoff = 300.0;
  std::uint64_t cond_seed = 0;
  int cond_workers = 4;
  cond->add_option("--manifest", cond_manifest, "Input manifest (JSONL)")
      ->required();
  cond->add_option("--variant", cond_variant,
                   "natural | lexical | prosodic | noise");
  cond->add_option("--cutoff-hz", cond_cutoff, "Prosodic low-pass cutoff");
  cond->add_option("--seed", cond_seed, "Noise seed");
  cond->add_option("--cache-dir", cond_cache, "Materialization cache");
  cond->add_option("--workers", cond_workers, "Worker threads");
  cond->add_option("--out", cond_out, "Output manifest path")->required();

  // ---- units ---------------------------------------------------------
  auto* units_cmd = app.add_subcommand(
      "units", "Train a codebook, quantize a manifest, or print unit stats");
  std::string units_action = "train";
  std::string units_manifest, units_codebook, units_out;
  int units_k = 64;
  std::uint64_t units_seed = 0;
  bool units_dedup = false;
  units_cmd->add_option("--action", units_action, "train | quantize | stats");
  units_cmd->add_option("--manifest", units_manifest, "Manifest (JSONL)")
      ->required();
  units_cmd->add_option("--codebook", units_codebook,
                        "Codebook path (output for train, input otherwise)");
  units_cmd->add_option("--k", units_k, "Codebook size");
  units_cmd->add_option("--seed", units_seed, "k-means seed");
  units_cmd->add_flag("--dedup", units_dedup,
                      "Collapse consecutive repeats when quantizing");
  units_cmd->add_option("--out", units_out, "Output file (quantize)");

  // ---- predict -------------------------------------------------------
  auto* predict = app.add_subcommand(
      "predict", "Predict answer spans with the n-gram window matcher");
  std::string pred_manifest, pred_codebook, pred_out;
  predict->add_option("--manifest", pred_manifest, "Manifest (JSONL)")
      ->required();
  predict->add_option("--codebook", pred_codebook, "Trained codebook")
      ->required();
  predict->add_option("--out", pred_out, "Predictions file ('id seed start end')")
      ->required();

  // ---- eval ----------------------------------------------------------
  auto* eval_cmd = app.add_subcommand(
      "eval", "Score a predictions file against manifest gold spans");
  std::string eval_manifest, eval_preds, eval_out;
  eval_cmd->add_option("--manifest", eval_manifest, "Manifest (JSONL)")
      ->required();
  eval_cmd->add_option("--predictions", eval_preds,
                       "Predictions ('id seed start end' per line)")
      ->required();
  eval_cmd->add_option("--out", eval_out, "Optional per-item TSV output");

  // ---- sweep ---------------------------------------------------------
  auto* sweep = app.add_subcommand(
      "sweep", "Low-pass cutoff sweep (prosodic x prosodic per cutoff)");
  std::string sweep_manifest, sweep_out;
  std::string sweep_cache = default_cache_dir().string();
  std::vector<double> sweep_cutoffs;
  int sweep_k = 64;
  std::vector<std::uint64_t> sweep_seeds = {0};
  sweep->add_option("--manifest", sweep_manifest, "Manifest (JSONL)")
      ->required();
  sweep->add_option("--cutoffs-hz", sweep_cutoffs,
                    "Ascending cutoff list (default 50..3000)");
  sweep->add_option("--k", sweep_k, "Codebook size");
  sweep->add_option("--seeds", sweep_seeds, "Evaluation seeds");
  sweep->add_option("--cache-dir", sweep_cache, "Materialization cache");
  sweep->add_option("--out", sweep_out, "Optional table output path");

  // ---- mix -----------------------------------------------------------
  auto* mix = app.add_subcommand(
      "mix", "Mix a fraction of items from other manifests into a primary");
  std::string mix_primary, mix_out;
  std::vector<std::string> mix_others;
  std::uint64_t mix_seed = 0;
  mix->add_option("--manifest", mix_primary, "Primary manifest")->required();
  mix->add_option("--with", mix_others,
                  "Secondary source as PATH:FRACTION:TAG (repeatable)")
      ->required();
  mix->add_option("--seed", mix_seed, "Sampling seed");
  mix->add_option("--out", mix_out, "Output manifest path")->required();

  // ---- shuffle-pairs -------------------------------------------------
  auto* shuffle = app.add_subcommand(
      "shuffle-pairs", "Reassign documents to questions by a derangement");
  std::string shuf_manifest, shuf_out;
  std::uint64_t shuf_seed = 0;
  shuffle->add_option("--manifest", shuf_manifest, "Manifest (JSONL)")
      ->required();
  shuffle->add_option("--seed", shuf_seed, "Derangement seed");
  shuffle->add_option("--out", shuf_out, "Output manifest path")->required();

  // ---- run -----------------------------------------------------------
  auto* run = app.add_subcommand(
      "run", "One experiment cell: materialize, train, predict, evaluate");
  std::string run_manifest, run_train = "natural", run_test = "natural";
  std::string run_cache = default_cache_dir().string(), run_out;
  double run_cutoff = 300.0;
  int run_k = 64;
  std::vector<std::uint64_t> run_seeds = {0};
  int run_workers = 4;
  run->add_option("--manifest", run_manifest, "Manifest (JSONL)")->required();
  run->add_option("--train-condition", run_train, "Training-side condition");
  run->add_option("--test-condition", run_test, "Test-side condition");
  run->add_option("--cutoff-hz", run_cutoff, "Prosodic low-pass cutoff");
  run->add_option("--k", run_k, "Codebook size");
  run->add_option("--seeds", run_seeds, "Evaluation seeds");
  run->add_option("--cache-dir", run_cache, "Materialization cache");
  run->add_option("--workers", run_workers, "Worker threads");
  run->add_option("--out", run_out, "Optional results table output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cond->parsed()) {
      Manifest manifest = load_manifest(cond_manifest);
      ConditionSpec spec = make_spec(cond_variant, cond_cutoff, cond_seed);
      Manifest out =
          materialize_condition(manifest, spec, cond_cache, cond_workers);
      save_manifest(out, cond_out);
      std::printf("wrote %zu records to %s\n", out.records.size(),
                  cond_out.c_str());
    } else if (units_cmd->parsed()) {
      Manifest manifest = load_manifest(units_manifest);
      if (units_action == "train") {
        if (units_codebook.empty()) {
          throw std::runtime_error("--codebook is required for train");
        }
        FeatureMatrix pooled;
        for (const auto& rec : manifest.records) {
          FeatureMatrix f = features_for(rec.document_audio);
          if (pooled.dim == 0) {
            pooled = f;
          } else {
            pooled.values.insert(pooled.values.end(), f.values.begin(),
                                 f.values.end());
            pooled.grid.n_frames += f.grid.n_frames;
          }
        }
        Codebook cb = train_kmeans(pooled, units_k, units_seed);
        save_codebook(cb, units_codebook);
        std::printf("trained k=%d on %d frames, inertia %.4f -> %s\n", cb.k,
                    pooled.n_frames(), cb.inertia, units_codebook.c_str());
      } else if (units_action == "quantize") {
        Codebook cb = load_codebook(units_codebook);
        std::ostringstream out;
        for (const auto& rec : manifest.records) {
          UnitSequence seq = quantize(features_for(rec.document_audio), cb);
          out << rec.id;
          if (units_dedup) {
            for (int u : deduplicate(seq).units) out << ' ' << u;
          } else {
            for (int u : seq.units) out << ' ' << u;
          }
          out << '\n';
        }
        if (units_out.empty()) {
          std::cout << out.str();
        } else {
          write_text(units_out, out.str());
        }
      } else if (units_action == "stats") {
        Codebook cb = load_codebook(units_codebook);
        double frac_sum = 0.0;
        std::map<int, int> histogram;
        for (const auto& rec : manifest.records) {
          UnitSequence seq = quantize(features_for(rec.document_audio), cb);
          RepetitionStats st = repetition_stats(seq);
          frac_sum += st.fraction_runs_gt3;
          for (const auto& [len, count] : st.run_length_histogram) {
            histogram[len] += count;
          }
        }
        std::printf("mean fraction of runs longer than 3 frames: %.4f\n",
                    frac_sum / static_cast<double>(manifest.records.size()));
        for (const auto& [len, count] : histogram) {
          std::printf("run_length %d\tcount %d\n", len, count);
        }
      } else {
        throw std::runtime_error("unknown units action: " + units_action);
      }
    } else if (predict->parsed()) {
      Manifest manifest = load_manifest(pred_manifest);
      Codebook cb = load_codebook(pred_codebook);
      std::ostringstream out;
      for (const auto& rec : manifest.records) {
        AudioClip doc = read_wav(rec.document_audio);
        if (doc.sample_rate_hz != kCanonicalSampleRateHz) {
          doc = resample(doc, kCanonicalSampleRateHz);
        }
        DedupUnitSequence q =
            deduplicate(quantize(features_for(rec.question_audio), cb));
        DedupUnitSequence d = deduplicate(quantize(extract_features(doc), cb));
        TimeSpan span = predict_span(q, d, doc.duration_s());
        out << rec.id << " 0 " << span.start_s << ' ' << span.end_s << '\n';
      }
      write_text(pred_out, out.str());
      std::printf("wrote %zu predictions to %s\n", manifest.records.size(),
                  pred_out.c_str());
    } else if (eval_cmd->parsed()) {
      Manifest manifest = load_manifest(eval_manifest);
      std::vector<EvalItem> items;
      std::map<std::string, std::size_t> index;
      for (const auto& rec : manifest.records) {
        index[rec.id] = items.size();
        items.push_back({rec.id, rec.gold_spans});
      }
      std::map<std::uint64_t, std::vector<TimeSpan>> by_seed;
      for (const auto& p : load_predictions(eval_preds)) {
        auto it = index.find(p.id);
        if (it == index.end()) {
          throw std::runtime_error("prediction for unknown id: " + p.id);
        }
        auto& spans = by_seed[p.seed];
        spans.resize(items.size());
        spans[it->second] = p.span;
      }
      std::vector<std::vector<TimeSpan>> per_seed;
      for (auto& [seed, spans] : by_seed) per_seed.push_back(spans);
      EvalResult result = evaluate_set(items, per_seed);
      std::printf("items %d seeds %d\n", result.n_items, result.n_seeds);
      std::printf("FF1 %.2f +- %.2f\nAOS %.2f +- %.2f\n", result.mean_ff1_pct,
                  result.std_ff1_pct, result.mean_aos_pct,
                  result.std_aos_pct);
      if (!eval_out.empty()) {
        std::ostringstream tsv;
        tsv << "id\tff1\taos\tprecision\trecall\n";
        for (const auto& item : result.per_item) {
          char buf[160];
          std::snprintf(buf, sizeof buf, "%s\t%.4f\t%.4f\t%.4f\t%.4f\n",
                        item.id.c_str(), item.ff1, item.aos, item.precision,
                        item.recall);
          tsv << buf;
        }
        write_text(eval_out, tsv.str());
      }
    } else if (sweep->parsed()) {
      Manifest manifest = load_manifest(sweep_manifest);
      SweepConfig cfg;
      if (!sweep_cutoffs.empty()) cfg.cutoffs_hz = sweep_cutoffs;
      cfg.base.k = sweep_k;
      cfg.base.seeds = sweep_seeds;
      cfg.base.cache_dir = sweep_cache;
      std::vector<SweepRow> rows = sweep_cutoff(cfg, manifest);
      std::string table = sweep_table(rows);
      std::cout << table;
      if (!sweep_out.empty()) write_text(sweep_out, table);
    } else if (mix->parsed()) {
      Manifest primary = load_manifest(mix_primary);
      std::vector<MixSource> sources;
      for (const std::string& spec : mix_others) {
        auto c1 = spec.find(':');
        auto c2 = spec.rfind(':');
        if (c1 == std::string::npos || c2 == c1) {
          throw std::runtime_error("expected PATH:FRACTION:TAG, got " + spec);
        }
        MixSource src;
        src.manifest = load_manifest(spec.substr(0, c1));
        src.fraction = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
        src.tag = spec.substr(c2 + 1);
        sources.push_back(std::move(src));
      }
      Manifest mixed = mix_manifests(primary, sources, mix_seed);
      save_manifest(mixed, mix_out);
      std::printf("wrote %zu records to %s\n", mixed.records.size(),
                  mix_out.c_str());
    } else if (shuffle->parsed()) {
      Manifest manifest = load_manifest(shuf_manifest);
      Manifest out = shuffle_pairs(manifest, shuf_seed);
      save_manifest(out, shuf_out);
      std::printf("wrote %zu records to %s\n", out.records.size(),
                  shuf_out.c_str());
    } else if (run->parsed()) {
      Manifest manifest = load_manifest(run_manifest);
      ExperimentConfig cfg;
      cfg.train_spec = make_spec(run_train, run_cutoff, 0);
      cfg.test_spec = make_spec(run_test, run_cutoff, 0);
      cfg.k = run_k;
      cfg.seeds = run_seeds;
      cfg.cache_dir = run_cache;
      cfg.n_workers = run_workers;
      ExperimentResult result = run_experiment(cfg, manifest);
      std::string table =
          results_table_header() + "\n" + result.results_row + "\n";
      std::cout << table;
      if (!run_out.empty()) write_text(run_out, table);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

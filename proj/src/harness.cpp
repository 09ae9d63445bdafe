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

#include "prosoqa/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace prosoqa {

namespace fs = std::filesystem;
using nlohmann::json;

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw HarnessError("cannot open manifest: " + path.string());

  Manifest manifest;
  std::set<std::string> seen_ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw HarnessError("manifest parse error at line " +
                         std::to_string(line_no) + ": " + e.what());
    }
    ManifestRecord r;
    try {
      r.id = rec.at("id").get<std::string>();
      r.question_audio = rec.at("question_audio").get<std::string>();
      r.document_audio = rec.at("document_audio").get<std::string>();
      for (const auto& span : rec.at("gold_spans")) {
        TimeSpan s{span.at(0).get<double>(), span.at(1).get<double>()};
        if (!s.valid()) {
          throw HarnessError("invalid span [" + std::to_string(s.start_s) +
                             ", " + std::to_string(s.end_s) + "] at line " +
                             std::to_string(line_no));
        }
        r.gold_spans.push_back(s);
      }
      if (rec.contains("split")) r.split = rec["split"].get<std::string>();
      if (rec.contains("shuffled")) r.shuffled = rec["shuffled"].get<bool>();
    } catch (const json::exception& e) {
      throw HarnessError("manifest field error at line " +
                         std::to_string(line_no) + ": " + e.what());
    }
    if (r.gold_spans.empty()) {
      throw HarnessError("record without gold spans at line " +
                         std::to_string(line_no));
    }
    if (!seen_ids.insert(r.id).second) {
      throw HarnessError("duplicate id '" + r.id + "' at line " +
                         std::to_string(line_no));
    }
    manifest.records.push_back(std::move(r));
  }
  return manifest;
}

void save_manifest(const Manifest& manifest, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw HarnessError("cannot write manifest: " + path.string());
  for (const auto& r : manifest.records) {
    json rec;
    rec["id"] = r.id;
    rec["question_audio"] = r.question_audio;
    rec["document_audio"] = r.document_audio;
    json spans = json::array();
    for (const auto& s : r.gold_spans) spans.push_back({s.start_s, s.end_s});
    rec["gold_spans"] = spans;
    rec["split"] = r.split;
    if (r.shuffled) rec["shuffled"] = true;
    out << rec.dump() << '\n';
  }
}

std::uint64_t content_hash(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t file_content_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw HarnessError("cannot read: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return content_hash(bytes);
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

// Transforms one clip into the cache; returns the cached path. Writers go
// through a temp file + rename so concurrent callers never see partial files.
fs::path materialize_one(const fs::path& src, const ConditionSpec& spec,
                         const fs::path& cache_dir) {
  std::uint64_t h = file_content_hash(src);
  std::string stem = hex64(h) + "-" + spec.key();
  fs::path wav_path = cache_dir / (stem + ".wav");
  fs::path meta_path = cache_dir / (stem + ".json");
  if (fs::exists(wav_path) && fs::exists(meta_path)) return wav_path;

  AudioClip clip = read_wav(src.string());
  if (clip.sample_rate_hz != kCanonicalSampleRateHz) {
    clip = resample(clip, kCanonicalSampleRateHz);
  }
  ConditionSpec file_spec = spec;
  if (spec.variant == ConditionVariant::kNoise) {
    // Distinct noise per source file, still deterministic per (file, seed).
    file_spec.noise_seed ^= h;
  }
  ConditionOutput out = apply_condition(clip, file_spec);

  fs::path tmp_wav = cache_dir / (stem + ".wav.tmp");
  write_wav(out.clip, tmp_wav.string(), WavEncoding::kFloat32);

  json meta;
  meta["source"] = src.string();
  meta["condition"] = spec.key();
  meta["peak_gain"] = out.peak_gain;
  meta["sample_rate_hz"] = out.clip.sample_rate_hz;
  meta["n_samples"] = out.clip.samples.size();
  fs::path tmp_meta = cache_dir / (stem + ".json.tmp");
  {
    std::ofstream m(tmp_meta, std::ios::trunc);
    m << meta.dump(2) << '\n';
  }
  fs::rename(tmp_wav, wav_path);
  fs::rename(tmp_meta, meta_path);
  return wav_path;
}

}  // namespace

Manifest materialize_condition(const Manifest& manifest,
                               const ConditionSpec& spec,
                               const fs::path& cache_dir, int n_workers) {
  fs::create_directories(cache_dir);

  // Unique source paths; question and document may share audio.
  std::vector<fs::path> sources;
  std::map<std::string, std::size_t> index;
  for (const auto& r : manifest.records) {
    for (const std::string& p : {r.question_audio, r.document_audio}) {
      if (index.emplace(p, sources.size()).second) sources.emplace_back(p);
    }
  }

  std::vector<fs::path> cached(sources.size());
  std::vector<std::string> errors(sources.size());
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= sources.size()) return;
      try {
        cached[i] = materialize_one(sources[i], spec, cache_dir);
      } catch (const std::exception& e) {
        errors[i] = sources[i].string() + ": " + e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  int threads = std::max(1, std::min<int>(n_workers,
                                          static_cast<int>(sources.size())));
  for (int t = 0; t < threads; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();

  std::string all_errors;
  for (const auto& e : errors) {
    if (!e.empty()) all_errors += (all_errors.empty() ? "" : "; ") + e;
  }
  if (!all_errors.empty()) {
    throw HarnessError("materialization failures: " + all_errors);
  }

  Manifest out = manifest;
  for (auto& r : out.records) {
    r.question_audio = cached[index.at(r.question_audio)].string();
    r.document_audio = cached[index.at(r.document_audio)].string();
  }
  return out;
}

Manifest mix_manifests(const Manifest& primary,
                       const std::vector<MixSource>& others,
                       std::uint64_t seed) {
  Manifest out = primary;
  std::mt19937_64 rng(seed);
  for (const auto& src : others) {
    if (src.fraction < 0.0 || src.fraction > 1.0) {
      throw HarnessError("mix fraction must be in [0, 1]");
    }
    const std::size_t n = src.manifest.records.size();
    auto take = static_cast<std::size_t>(
        std::floor(src.fraction * static_cast<double>(n)));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i) {
      auto j = static_cast<std::size_t>(
          (static_cast<double>(rng() >> 11) * 0x1.0p-53) *
          static_cast<double>(i));
      std::swap(order[i - 1], order[j]);
    }
    order.resize(take);
    std::sort(order.begin(), order.end());  // keep source order stable
    for (std::size_t i : order) {
      ManifestRecord r = src.manifest.records[i];
      r.id += "-" + src.tag;
      out.records.push_back(std::move(r));
    }
  }
  return out;
}

Manifest shuffle_pairs(const Manifest& manifest, std::uint64_t seed) {
  const std::size_t n = manifest.records.size();
  if (n < 2) throw HarnessError("shuffle_pairs needs at least 2 items");
  std::vector<std::size_t> perm = derangement(n, seed);
  Manifest out = manifest;
  for (std::size_t i = 0; i < n; ++i) {
    out.records[i].document_audio = manifest.records[perm[i]].document_audio;
    out.records[i].gold_spans = manifest.records[perm[i]].gold_spans;
    out.records[i].shuffled = true;
  }
  return out;
}

namespace {

std::string format_row(const std::string& train, const std::string& test,
                       const EvalResult& eval) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s\t%s\t%.2f\t%.2f\t%.2f\t%.2f",
                train.c_str(), test.c_str(), eval.mean_ff1_pct,
                eval.std_ff1_pct, eval.mean_aos_pct, eval.std_aos_pct);
  return buf;
}

struct QuantizedItem {
  DedupUnitSequence question;
  DedupUnitSequence document;
  double document_duration_s = 0.0;
};

QuantizedItem quantize_item(const ManifestRecord& rec, const Codebook& cb,
                            const FeatureConfig& fcfg) {
  QuantizedItem item;
  AudioClip q = read_wav(rec.question_audio);
  AudioClip d = read_wav(rec.document_audio);
  item.question = deduplicate(quantize(extract_features(q, fcfg), cb));
  item.document = deduplicate(quantize(extract_features(d, fcfg), cb));
  item.document_duration_s = d.duration_s();
  return item;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const Manifest& manifest) {
  if (config.seeds.empty()) throw HarnessError("seeds list must be non-empty");
  if (config.k < 1) throw HarnessError("k must be >= 1");
  if (manifest.records.empty()) throw HarnessError("empty manifest");

  fs::path cache = config.cache_dir.empty() ? fs::path(".prosoqa-cache")
                                            : config.cache_dir;

  // Split selection: codebook trains on train-split documents, evaluation
  // runs on test-split items; either side falls back to all records.
  Manifest train_split, test_split;
  for (const auto& r : manifest.records) {
    if (r.split == "train") train_split.records.push_back(r);
    if (r.split == "test") test_split.records.push_back(r);
  }
  if (train_split.records.empty()) train_split = manifest;
  if (test_split.records.empty()) test_split = manifest;

  Manifest train_mat;
  try {
    train_mat = materialize_condition(train_split, config.train_spec, cache,
                                      config.n_workers);
  } catch (const std::exception& e) {
    throw HarnessError(std::string("stage materialize-train: ") + e.what());
  }

  // Codebook over all train-side document frames.
  Codebook codebook;
  try {
    FeatureMatrix pooled;
    pooled.dim = config.features.n_mels;
    std::set<std::string> seen;
    for (const auto& r : train_mat.records) {
      if (!seen.insert(r.document_audio).second) continue;
      AudioClip d = read_wav(r.document_audio);
      FeatureMatrix f = extract_features(d, config.features);
      pooled.values.insert(pooled.values.end(), f.values.begin(),
                           f.values.end());
      pooled.grid.n_frames += f.grid.n_frames;
    }
    pooled.grid.window_s = config.features.window_s;
    pooled.grid.hop_s = config.features.hop_s;
    codebook = train_kmeans(pooled, config.k, config.kmeans_seed,
                            config.kmeans_max_iters, config.kmeans_tol);
  } catch (const std::exception& e) {
    throw HarnessError(std::string("stage train-codebook: ") + e.what());
  }

  std::vector<EvalItem> items;
  items.reserve(test_split.records.size());
  for (const auto& r : test_split.records) {
    items.push_back({r.id, r.gold_spans});
  }

  std::vector<std::vector<TimeSpan>> predictions_per_seed;
  const bool seed_varies =
      config.test_spec.variant == ConditionVariant::kNoise;
  try {
    for (std::size_t si = 0; si < config.seeds.size(); ++si) {
      if (si > 0 && !seed_varies) {
        predictions_per_seed.push_back(predictions_per_seed.back());
        continue;
      }
      ConditionSpec test_spec = config.test_spec;
      if (seed_varies) test_spec.noise_seed += config.seeds[si];
      Manifest test_mat = materialize_condition(test_split, test_spec, cache,
                                                config.n_workers);
      std::vector<TimeSpan> preds;
      preds.reserve(test_mat.records.size());
      for (const auto& r : test_mat.records) {
        QuantizedItem item = quantize_item(r, codebook, config.features);
        preds.push_back(predict_span(item.question, item.document,
                                     item.document_duration_s,
                                     config.predictor));
      }
      predictions_per_seed.push_back(std::move(preds));
    }
  } catch (const std::exception& e) {
    throw HarnessError(std::string("stage predict: ") + e.what());
  }

  ExperimentResult result;
  try {
    result.eval = evaluate_set(items, predictions_per_seed);
  } catch (const std::exception& e) {
    throw HarnessError(std::string("stage evaluate: ") + e.what());
  }
  result.results_row =
      format_row(to_string(config.train_spec.variant),
                 to_string(config.test_spec.variant), result.eval);
  return result;
}

std::string results_table_header() {
  return "condition_train\tcondition_test\tff1_mean\tff1_std\taos_mean\taos_std";
}

std::vector<SweepRow> sweep_cutoff(const SweepConfig& sweep,
                                   const Manifest& manifest) {
  for (std::size_t i = 1; i < sweep.cutoffs_hz.size(); ++i) {
    if (sweep.cutoffs_hz[i] <= sweep.cutoffs_hz[i - 1]) {
      throw HarnessError("cutoff list must be strictly increasing");
    }
  }
  for (double c : sweep.cutoffs_hz) {
    if (c >= 0.5 * kCanonicalSampleRateHz) {
      throw HarnessError("cutoff " + std::to_string(c) + " >= Nyquist");
    }
  }

  std::vector<SweepRow> rows;
  for (double cutoff : sweep.cutoffs_hz) {
    SweepRow row;
    row.cutoff_hz = cutoff;
    ExperimentConfig cfg = sweep.base;
    cfg.train_spec.variant = ConditionVariant::kProsodic;
    cfg.train_spec.cutoff_hz = cutoff;
    cfg.test_spec = cfg.train_spec;
    try {
      ExperimentResult res = run_experiment(cfg, manifest);
      row.ff1_mean = res.eval.mean_ff1_pct;
      row.ff1_std = res.eval.std_ff1_pct;
      row.aos_mean = res.eval.mean_aos_pct;
      row.aos_std = res.eval.std_aos_pct;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_table(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "cutoff_hz\tff1_mean\tff1_std\taos_mean\taos_std\terror\n";
  for (const auto& r : rows) {
    char buf[200];
    std::snprintf(buf, sizeof(buf), "%.0f\t%.2f\t%.2f\t%.2f\t%.2f\t%s\n",
                  r.cutoff_hz, r.ff1_mean, r.ff1_std, r.aos_mean, r.aos_std,
                  r.error.c_str());
    os << buf;
  }
  return os.str();
}

}  // namespace prosoqa

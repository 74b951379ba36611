#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "leakdet/clustering.hpp"
#include "leakdet/config.hpp"
#include "leakdet/distance.hpp"
#include "leakdet/error.hpp"
#include "leakdet/random.hpp"
#include "leakdet/record.hpp"
#include "leakdet/signature.hpp"

namespace leakdet {

struct SampleSplit {
  std::vector<std::size_t> sample;     // in draw order
  std::vector<std::size_t> remainder;  // ascending
};

/// Uniform draw of `n` of `count` indices without replacement (partial
/// Fisher-Yates). For a fixed seed, the draw for n is a prefix of the draw
/// for any larger n.
inline SampleSplit sample_indices(std::size_t count, std::size_t n, std::uint64_t seed) {
  if (n < 1 || n > count) {
    throw std::invalid_argument("sample size " + std::to_string(n) + " outside [1, " + std::to_string(count) + "]");
  }
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) std::swap(order[i], order[i + rng.below(count - i)]);
  SampleSplit s;
  s.sample.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
  s.remainder.assign(order.begin() + static_cast<std::ptrdiff_t>(n), order.end());
  std::sort(s.remainder.begin(), s.remainder.end());
  return s;
}

template <class T>
std::pair<std::vector<T>, std::vector<T>> sample_suspicious(std::span<const T> suspicious, std::size_t n,
                                                            std::uint64_t seed) {
  const auto split = sample_indices(suspicious.size(), n, seed);
  std::pair<std::vector<T>, std::vector<T>> out;
  for (auto i : split.sample) out.first.push_back(suspicious[i]);
  for (auto i : split.remainder) out.second.push_back(suspicious[i]);
  return out;
}

struct EvalReport {
  std::size_t n_sample = 0;
  std::size_t total_sensitive = 0;
  std::size_t total_normal = 0;
  std::size_t detected_sensitive = 0;
  std::size_t undetected_sensitive = 0;
  std::size_t detected_normal = 0;
  double tp_pct = 0.0;
  double fn_pct = 0.0;
  double fp_pct = 0.0;
  std::size_t signature_count = 0;
  std::uint64_t seed = 0;
  PipelineConfig config;
};

/// Detection rates over the sensitive records left out of sampling and the
/// normal group. Denominators follow the original protocol: N is subtracted
/// from both group sizes.
inline EvalReport evaluate(std::span<const ConjunctionSignature> sigs, std::span<const HttpRecord> sensitive_remainder,
                           std::span<const HttpRecord> normal, std::size_t n) {
  EvalReport r;
  r.n_sample = n;
  r.total_sensitive = sensitive_remainder.size() + n;
  r.total_normal = normal.size();
  r.signature_count = sigs.size();
  if (sensitive_remainder.empty()) throw EvaluationError("no sensitive records outside the sample");
  if (normal.size() <= n) throw EvaluationError("normal group size minus N is not positive");

  const Detector detector(sigs);
  for (const auto& rec : sensitive_remainder) {
    (detector.check(rec).detected() ? r.detected_sensitive : r.undetected_sensitive) += 1;
  }
  for (const auto& rec : normal) {
    if (detector.check(rec).detected()) ++r.detected_normal;
  }
  const double sens_denominator = static_cast<double>(r.total_sensitive - n);
  r.tp_pct = 100.0 * static_cast<double>(r.detected_sensitive) / sens_denominator;
  r.fn_pct = 100.0 * static_cast<double>(r.undetected_sensitive) / sens_denominator;
  r.fp_pct = 100.0 * static_cast<double>(r.detected_normal) / static_cast<double>(r.total_normal - n);
  return r;
}

/// Signatures produced from one sample.
struct GenerationResult {
  std::vector<ConjunctionSignature> signatures;
  Dendrogram dendrogram;
  FlatClusters clusters;
};

/// Distance matrix, clustering, cut and token extraction over `sample`.
inline GenerationResult generate_from_sample(std::span<const HttpRecord> sample, const PipelineConfig& cfg,
                                             std::function<void(const std::string&)> warn = {}) {
  GenerationResult g;
  if (sample.empty()) return g;
  const auto matrix = distance_matrix(sample, cfg.compressor_level, cfg.threads);
  g.dendrogram = agglomerate(matrix);
  g.clusters = cut(g.dendrogram, cfg.tau);
  SignatureConfig scfg;
  scfg.min_token_len = cfg.min_token_len;
  scfg.compressor_level = cfg.compressor_level;
  scfg.seed = cfg.seed;
  scfg.n_sample = sample.size();
  scfg.warn = std::move(warn);
  g.signatures = generate_signatures(g.clusters, sample, scfg);
  return g;
}

struct ExperimentRun {
  EvalReport report;
  std::vector<ConjunctionSignature> signatures;
  std::size_t sampled_matched_own = 0;  // sampled records matched by their own cluster's signature
  std::size_t sampled_in_signed_clusters = 0;
};

/// The full protocol for each N: label, split, sample, generate, evaluate.
inline std::vector<ExperimentRun> run_experiment(std::span<const HttpRecord> dataset, const DeviceProfile& profile,
                                                 std::span<const std::size_t> n_values, std::uint64_t seed,
                                                 const PipelineConfig& cfg,
                                                 std::function<void(const std::string&)> warn = {}) {
  const PayloadChecker checker(profile);
  std::vector<HttpRecord> suspicious, normal;
  for (const auto& rec : dataset) {
    HttpRecord r = rec;
    r.labels = checker.labels_for(r);
    (r.suspicious() ? suspicious : normal).push_back(std::move(r));
  }

  PipelineConfig effective = cfg;
  effective.seed = seed;
  effective.n_values.assign(n_values.begin(), n_values.end());

  std::vector<ExperimentRun> runs;
  for (auto n : n_values) {
    ExperimentRun run;
    std::vector<HttpRecord> sample, remainder;
    if (n == 0) {
      remainder = suspicious;
    } else {
      auto split = sample_suspicious<HttpRecord>(suspicious, n, seed);
      sample = std::move(split.first);
      remainder = std::move(split.second);
    }
    auto gen = generate_from_sample(sample, effective, warn);
    for (std::size_t c = 0, s = 0; c < gen.clusters.clusters.size(); ++c) {
      if (s >= gen.signatures.size() || gen.signatures[s].id() != signature_id_for_cluster(c)) continue;
      for (auto idx : gen.clusters.clusters[c]) {
        ++run.sampled_in_signed_clusters;
        if (matches(gen.signatures[s], sample[idx])) ++run.sampled_matched_own;
      }
      ++s;
    }
    run.report = evaluate(gen.signatures, remainder, normal, n);
    run.report.seed = seed;
    run.report.config = effective;
    run.signatures = std::move(gen.signatures);
    runs.push_back(std::move(run));
  }
  return runs;
}

// ---------------------------------------------------------------------------
// Output

inline std::string format_pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline std::string reports_to_csv(std::span<const EvalReport> reports) {
  std::string out = "n,tp_pct,fn_pct,fp_pct,detected_sensitive,undetected_sensitive,detected_normal\n";
  for (const auto& r : reports) {
    out += std::to_string(r.n_sample) + ',' + format_pct(r.tp_pct) + ',' + format_pct(r.fn_pct) + ',' +
           format_pct(r.fp_pct) + ',' + std::to_string(r.detected_sensitive) + ',' +
           std::to_string(r.undetected_sensitive) + ',' + std::to_string(r.detected_normal) + '\n';
  }
  return out;
}

inline nlohmann::ordered_json report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["n_sample"] = r.n_sample;
  j["total_sensitive"] = r.total_sensitive;
  j["total_normal"] = r.total_normal;
  j["detected_sensitive"] = r.detected_sensitive;
  j["undetected_sensitive"] = r.undetected_sensitive;
  j["detected_normal"] = r.detected_normal;
  j["tp_pct"] = r.tp_pct;
  j["fn_pct"] = r.fn_pct;
  j["fp_pct"] = r.fp_pct;
  j["signature_count"] = r.signature_count;
  j["seed"] = r.seed;
  j["config"] = config_to_json(r.config);
  return j;
}

}  // namespace leakdet

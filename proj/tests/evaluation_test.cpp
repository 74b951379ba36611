#include <gtest/gtest.h>

#include "leakdet/corpus.hpp"
#include "leakdet/evaluation.hpp"

using namespace leakdet;

namespace {

HttpRecord body_record(std::string body) {
  HttpRecord r;
  r.app_id = "a";
  r.dst_ip = Ipv4::from_octets(10, 0, 0, 1);
  r.dst_port = 80;
  r.host = "h.jp";
  r.request_line = "POST /x HTTP/1.1";
  r.body = std::move(body);
  return r;
}

std::vector<HttpRecord> small_corpus(std::size_t n, std::uint64_t seed) {
  auto spec = default_corpus_spec();
  spec.n_records = n;
  spec.seed = seed;
  return generate_corpus(spec);
}

}  // namespace

TEST(SampleSuspicious, FullSampleIsPermutation) {
  const std::vector<int> items = {5, 6, 7, 8, 9};
  auto [sample, rest] = sample_suspicious<int>(items, 5, 1);
  EXPECT_TRUE(rest.empty());
  std::sort(sample.begin(), sample.end());
  EXPECT_EQ(sample, items);
}

TEST(SampleSuspicious, DeterministicAndOrderPreserving) {
  std::vector<int> items(50);
  std::iota(items.begin(), items.end(), 0);
  const auto a = sample_suspicious<int>(items, 10, 42);
  const auto b = sample_suspicious<int>(items, 10, 42);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(std::is_sorted(a.second.begin(), a.second.end()));
  EXPECT_EQ(a.first.size() + a.second.size(), items.size());
  // Smaller samples are prefixes of larger ones under the same seed.
  const auto c = sample_suspicious<int>(items, 20, 42);
  EXPECT_TRUE(std::equal(a.first.begin(), a.first.end(), c.first.begin()));
}

TEST(SampleSuspicious, RangeChecked) {
  const std::vector<int> items = {1, 2, 3};
  EXPECT_THROW(sample_suspicious<int>(items, 0, 1), std::invalid_argument);
  EXPECT_THROW(sample_suspicious<int>(items, 4, 1), std::invalid_argument);
}

TEST(SampleSuspicious, UniformSingleDraw) {
  // 10,000 draws of one of five items; each near 20%. With p = 0.2 the
  // standard error is 0.4 points, so +/- 2 points is five sigma.
  const std::vector<int> items = {0, 1, 2, 3, 4};
  std::vector<int> counts(5, 0);
  for (std::uint64_t seed = 0; seed < 10000; ++seed) ++counts[sample_suspicious<int>(items, 1, seed).first[0]];
  for (int c : counts) EXPECT_NEAR(c / 100.0, 20.0, 2.0);
}

TEST(Evaluate, PerfectDetection) {
  const std::vector<HttpRecord> sens = {body_record("imei=1"), body_record("imei=1&x")};
  const std::vector<HttpRecord> normal = {body_record("a"), body_record("b"), body_record("c")};
  const std::vector<ConjunctionSignature> sigs = {ConjunctionSignature("s", {"imei=1"}, 2, {})};
  const auto r = evaluate(sigs, sens, normal, 1);
  EXPECT_EQ(r.tp_pct, 100.0);
  EXPECT_EQ(r.fn_pct, 0.0);
  EXPECT_EQ(r.fp_pct, 0.0);
}

TEST(Evaluate, HandBuiltConfusionSet) {
  // 8 sensitive records outside the sample, 6 detected; 100 normal, 2 detected; N = 2.
  std::vector<HttpRecord> sens, normal;
  for (int i = 0; i < 8; ++i) sens.push_back(body_record(i < 6 ? "leak" + std::to_string(i) : "quiet"));
  for (int i = 0; i < 100; ++i) normal.push_back(body_record(i < 2 ? "leak-ish" : "fine"));
  const std::vector<ConjunctionSignature> sigs = {ConjunctionSignature("s", {"leak"}, 2, {})};
  const auto r = evaluate(sigs, sens, normal, 2);
  EXPECT_EQ(r.total_sensitive, 10u);
  EXPECT_EQ(r.detected_sensitive, 6u);
  EXPECT_EQ(r.undetected_sensitive, 2u);
  EXPECT_EQ(r.detected_normal, 2u);
  EXPECT_NEAR(r.tp_pct, 75.00, 1e-9);
  EXPECT_NEAR(r.fn_pct, 25.00, 1e-9);
  EXPECT_NEAR(r.fp_pct, 200.0 / 98.0, 1e-9);
  EXPECT_NEAR(r.fp_pct, 2.04, 0.01);
}

TEST(Evaluate, ZeroDenominators) {
  const std::vector<HttpRecord> one = {body_record("x")};
  EXPECT_THROW(evaluate({}, {}, one, 0), EvaluationError);
  EXPECT_THROW(evaluate({}, one, one, 1), EvaluationError);
}

TEST(RunExperiment, ZeroSampleMeansNoSignatures) {
  const auto corpus = small_corpus(300, 3);
  const std::vector<std::size_t> ns = {0};
  const auto runs = run_experiment(corpus, default_profile(), ns, 1, PipelineConfig{});
  ASSERT_EQ(runs.size(), 1u);
  EXPECT_TRUE(runs[0].signatures.empty());
  EXPECT_EQ(runs[0].report.tp_pct, 0.0);
  EXPECT_EQ(runs[0].report.fn_pct, 100.0);
  EXPECT_EQ(runs[0].report.fp_pct, 0.0);
}

TEST(RunExperiment, AccountingSoundnessAndDeterminism) {
  const auto corpus = small_corpus(600, 8);
  const std::vector<std::size_t> ns = {10, 30, 60};
  const auto a = run_experiment(corpus, default_profile(), ns, 7, PipelineConfig{});
  const auto b = run_experiment(corpus, default_profile(), ns, 7, PipelineConfig{});
  std::vector<EvalReport> ra, rb;
  for (const auto& r : a) ra.push_back(r.report);
  for (const auto& r : b) rb.push_back(r.report);
  EXPECT_EQ(reports_to_csv(ra), reports_to_csv(rb));
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& r = a[i].report;
    EXPECT_EQ(r.n_sample, ns[i]);
    EXPECT_EQ(r.detected_sensitive + r.undetected_sensitive, r.total_sensitive - r.n_sample);
    EXPECT_NEAR(r.tp_pct + r.fn_pct, 100.0, 0.01);
    EXPECT_EQ(a[i].sampled_matched_own, a[i].sampled_in_signed_clusters);
    EXPECT_EQ(nlohmann::json(signatures_to_json(a[i].signatures)).dump(),
              nlohmann::json(signatures_to_json(b[i].signatures)).dump());
  }
}

TEST(RunExperiment, TrueAndFalsePositivesTrendWithN) {
  const auto corpus = small_corpus(2000, 42);
  const std::vector<std::size_t> ns = {10, 100, 250};
  const auto runs = run_experiment(corpus, default_profile(), ns, 42, PipelineConfig{});
  EXPECT_LE(runs.front().report.tp_pct, runs.back().report.tp_pct);
  EXPECT_GE(runs.back().report.tp_pct, 85.0);
  EXPECT_LE(runs.back().report.fp_pct, 5.0);
}

TEST(UnionMonotonicity, SupersetDetectsAtLeastAsMuch) {
  const auto corpus = small_corpus(400, 2);
  const std::vector<ConjunctionSignature> all = {
      ConjunctionSignature("a", {"imei="}, 1, {}), ConjunctionSignature("b", {"/mads/gma"}, 1, {}),
      ConjunctionSignature("c", {"utmwv=", "ja-jp"}, 1, {}), ConjunctionSignature("d", {"carrier="}, 1, {})};
  std::size_t prev = 0;
  for (std::size_t k = 0; k <= all.size(); ++k) {
    const std::span<const ConjunctionSignature> subset(all.data(), k);
    std::size_t detected = 0;
    for (const auto& v : detect(subset, corpus)) detected += v.detected();
    EXPECT_GE(detected, prev);
    prev = detected;
  }
}

TEST(Csv, Format) {
  EvalReport r;
  r.n_sample = 2;
  r.tp_pct = 75;
  r.fn_pct = 25;
  r.fp_pct = 200.0 / 98.0;
  r.detected_sensitive = 6;
  r.undetected_sensitive = 2;
  r.detected_normal = 2;
  const std::vector<EvalReport> rs = {r};
  EXPECT_EQ(reports_to_csv(rs),
            "n,tp_pct,fn_pct,fp_pct,detected_sensitive,undetected_sensitive,detected_normal\n"
            "2,75.0000,25.0000,2.0408,6,2,2\n");
  EXPECT_EQ(report_to_json(r)["tp_pct"], 75.0);
}

TEST(Config, FileOverlayAndValidation) {
  auto cfg = apply_config_json(PipelineConfig{}, nlohmann::json::parse(R"({"tau": 0.5, "seed": 7, "n_values": [10]})"));
  EXPECT_EQ(cfg.tau, 0.5);
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.n_values, (std::vector<std::size_t>{10}));
  EXPECT_EQ(cfg.min_token_len, 5u);
  EXPECT_THROW(apply_config_json(PipelineConfig{}, nlohmann::json::parse(R"({"bogus": 1})")), ParseError);
  EXPECT_THROW(apply_config_json(PipelineConfig{}, nlohmann::json::parse(R"({"tau": "x"})")), ParseError);
  cfg.compressor_level = 0;
  EXPECT_THROW(validate(cfg), ValidationError);
}

// leakdet: sensitive-information leak detection for mobile app HTTP traffic.
//
//   leakdet gen-corpus --spec spec.json --out corpus.jsonl
//   leakdet label      --in corpus.jsonl --profile profile.json --out labeled.jsonl
//   leakdet gensig     --in labeled.jsonl --n-sample 100 --out sigs.json
//   leakdet detect     --sigs sigs.json --in traffic.jsonl --out verdicts.jsonl
//   leakdet eval       --in corpus.jsonl --profile profile.json --out results.csv

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "leakdet/leakdet.hpp"

namespace fs = std::filesystem;
using namespace leakdet;

namespace {

constexpr int kOk = 0;
constexpr int kDetected = 1;
constexpr int kUsage = 2;

/// Input problems that end the command with status 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw UsageError("write failed: " + path);
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

std::vector<HttpRecord> read_records(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<HttpRecord> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    try {
      out.push_back(parse_record(line));
    } catch (const std::exception& e) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string records_to_jsonl(const std::vector<HttpRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += serialize_record(r);
    out += '\n';
  }
  return out;
}

DeviceProfile read_profile(const std::string& path) {
  try {
    return parse_profile(read_json(path));
  } catch (const ParseError& e) {
    throw UsageError(path + ": " + e.what());
  } catch (const ValidationError& e) {
    throw UsageError(path + ": " + e.what());
  }
}

/// Pipeline flags shared by the commands that run the pipeline.
struct PipelineFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_sample;
  std::optional<double> tau;
  std::optional<std::size_t> min_token_len;
  std::optional<unsigned> threads;
  std::optional<int> compressor_level;
  std::string profile_path;

  void add_to(CLI::App* cmd, bool with_n_sample) {
    cmd->add_option("--config", config_path, "JSON config file (flags override it)");
    cmd->add_option("--seed", seed, "Sampling seed");
    if (with_n_sample) cmd->add_option("--n-sample", n_sample, "Number of suspicious records sampled (N)");
    cmd->add_option("--tau", tau, "Dendrogram cut threshold");
    cmd->add_option("--min-token-len", min_token_len, "Shortest signature token in bytes");
    cmd->add_option("--threads", threads, "Worker threads for the distance matrix");
    cmd->add_option("--compressor-level", compressor_level, "DEFLATE level used by NCD (1-9)");
    cmd->add_option("--profile", profile_path, "Device profile JSON");
  }

  /// Defaults, then the config file, then explicit flags.
  PipelineConfig resolve() const {
    PipelineConfig cfg;
    if (!config_path.empty()) {
      try {
        cfg = apply_config_json(cfg, read_json(config_path));
      } catch (const ParseError& e) {
        throw UsageError(config_path + ": " + e.what());
      }
    }
    if (seed) cfg.seed = *seed;
    if (n_sample) cfg.n_sample = *n_sample;
    if (tau) cfg.tau = *tau;
    if (min_token_len) cfg.min_token_len = *min_token_len;
    if (threads) cfg.threads = *threads;
    if (compressor_level) cfg.compressor_level = *compressor_level;
    try {
      validate(cfg);
    } catch (const ValidationError& e) {
      throw UsageError(e.what());
    }
    return cfg;
  }
};

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

// ---------------------------------------------------------------------------

int cmd_gen_corpus(const std::string& spec_path, const std::string& out_path, const std::string& dump_spec_path) {
  if (!dump_spec_path.empty()) {
    write_file(dump_spec_path, corpus_spec_to_json(default_corpus_spec()).dump(2) + "\n");
    if (out_path.empty()) return kOk;
  }
  if (out_path.empty()) throw UsageError("--out is required");
  CorpusSpec spec;
  if (spec_path.empty()) {
    spec = default_corpus_spec();
  } else {
    try {
      spec = corpus_spec_from_json(read_json(spec_path));
    } catch (const SpecError& e) {
      throw UsageError(spec_path + ": " + e.what());
    }
  }
  std::vector<HttpRecord> records;
  try {
    records = generate_corpus(spec);
  } catch (const SpecError& e) {
    throw UsageError(e.what());
  }
  write_file(out_path, records_to_jsonl(records));
  return kOk;
}

int cmd_label(const std::string& in_path, const std::string& profile_path, const std::string& out_path) {
  const auto profile = read_profile(profile_path);
  auto records = read_records(in_path);
  const PayloadChecker checker(profile);
  for (auto& r : records) r.labels = checker.labels_for(r);
  write_file(out_path, records_to_jsonl(records));
  return kOk;
}

int cmd_gensig(const std::string& in_path, const PipelineFlags& flags, const std::string& out_path,
               const std::string& dendrogram_path) {
  const auto cfg = flags.resolve();
  auto records = read_records(in_path);
  if (!flags.profile_path.empty()) {
    const PayloadChecker checker(read_profile(flags.profile_path));
    for (auto& r : records) r.labels = checker.labels_for(r);
  }
  std::vector<HttpRecord> suspicious;
  for (auto& r : records) {
    if (r.suspicious()) suspicious.push_back(std::move(r));
  }
  if (cfg.n_sample < 1 || cfg.n_sample > suspicious.size()) {
    throw UsageError("--n-sample " + std::to_string(cfg.n_sample) + " outside [1, " +
                     std::to_string(suspicious.size()) + "] suspicious records");
  }
  auto sample = sample_suspicious<HttpRecord>(suspicious, cfg.n_sample, cfg.seed).first;
  const auto gen = generate_from_sample(sample, cfg, warn);
  write_file(out_path, signatures_to_json(gen.signatures).dump(2) + "\n");
  if (!dendrogram_path.empty()) write_file(dendrogram_path, dendrogram_to_json(gen.dendrogram).dump() + "\n");
  std::cerr << gen.signatures.size() << " signatures from " << gen.clusters.clusters.size() << " clusters\n";
  return kOk;
}

int cmd_detect(const std::string& sigs_path, const std::string& in_path, const std::string& out_path, bool signal) {
  std::vector<ConjunctionSignature> sigs;
  try {
    sigs = signatures_from_json(read_json(sigs_path));
  } catch (const std::exception& e) {
    throw UsageError(sigs_path + ": " + e.what());
  }
  const auto records = read_records(in_path);
  const auto verdicts = detect(sigs, records);
  std::string out;
  bool any = false;
  for (std::size_t i = 0; i < records.size(); ++i) {
    nlohmann::ordered_json j;
    j["index"] = i;
    j["app_id"] = records[i].app_id;
    j["detected"] = verdicts[i].detected();
    auto ids = nlohmann::ordered_json::array();
    for (auto s : verdicts[i].signatures) ids.push_back(sigs[s].id());
    j["signatures"] = std::move(ids);
    out += j.dump();
    out += '\n';
    any = any || verdicts[i].detected();
  }
  write_file(out_path, out);
  return signal && any ? kDetected : kOk;
}

int cmd_eval(const std::string& in_path, const PipelineFlags& flags, const std::string& out_path,
             const std::vector<std::size_t>& n_values_flag, const std::string& report_path,
             const std::string& sig_dir) {
  auto cfg = flags.resolve();
  if (!n_values_flag.empty()) cfg.n_values = n_values_flag;
  if (flags.profile_path.empty()) throw UsageError("--profile is required");
  const auto profile = read_profile(flags.profile_path);
  const auto records = read_records(in_path);

  std::vector<ExperimentRun> runs;
  try {
    runs = run_experiment(records, profile, cfg.n_values, cfg.seed, cfg, warn);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  } catch (const EvaluationError& e) {
    throw UsageError(e.what());
  }

  std::vector<EvalReport> reports;
  for (const auto& r : runs) reports.push_back(r.report);
  write_file(out_path, reports_to_csv(reports));
  if (!report_path.empty()) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) arr.push_back(report_to_json(r));
    write_file(report_path, arr.dump(2) + "\n");
  }
  if (!sig_dir.empty()) {
    fs::create_directories(sig_dir);
    for (const auto& r : runs) {
      const auto path = fs::path(sig_dir) / ("signatures_n" + std::to_string(r.report.n_sample) + ".json");
      write_file(path.string(), signatures_to_json(r.signatures).dump(2) + "\n");
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detect device-identifier leakage in mobile app HTTP traffic"};
  app.require_subcommand(1);

  std::string spec_path, out_path, in_path, profile_path, sigs_path, dendrogram_path, report_path, sig_dir,
      dump_spec_path;
  bool signal = false;
  std::vector<std::size_t> n_values;
  PipelineFlags gensig_flags, eval_flags;

  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic JSONL corpus");
  gen->add_option("--spec", spec_path, "Corpus spec JSON (built-in default when omitted)");
  gen->add_option("--out", out_path, "Output JSONL path");
  gen->add_option("--write-default-spec", dump_spec_path, "Write the built-in corpus spec to this path");

  auto* label = app.add_subcommand("label", "Label records by the payload check");
  label->add_option("--in", in_path, "Input JSONL")->required();
  label->add_option("--profile", profile_path, "Device profile JSON")->required();
  label->add_option("--out", out_path, "Output JSONL")->required();

  auto* gensig = app.add_subcommand("gensig", "Sample, cluster and extract conjunction signatures");
  gensig->add_option("--in", in_path, "Labeled JSONL (or pass --profile to label)")->required();
  gensig->add_option("--out", out_path, "Signature JSON")->required();
  gensig->add_option("--dendrogram", dendrogram_path, "Also write the dendrogram JSON");
  gensig_flags.add_to(gensig, true);

  auto* det = app.add_subcommand("detect", "Match signatures against records");
  det->add_option("--sigs", sigs_path, "Signature JSON")->required();
  det->add_option("--in", in_path, "Input JSONL")->required();
  det->add_option("--out", out_path, "Verdict JSONL")->required();
  det->add_flag("--signal", signal, "Exit with status 1 when any record is detected");

  auto* ev = app.add_subcommand("eval", "Run the sampling experiment and write TP/FN/FP as CSV");
  ev->add_option("--in", in_path, "Dataset JSONL")->required();
  ev->add_option("--out", out_path, "CSV output")->required();
  ev->add_option("--n-values", n_values, "Sample sizes N (comma separated)")->delimiter(',');
  ev->add_option("--report", report_path, "Also write the reports as JSON");
  ev->add_option("--sig-dir", sig_dir, "Also write the signatures for each N into this directory");
  eval_flags.add_to(ev, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*gen) return cmd_gen_corpus(spec_path, out_path, dump_spec_path);
    if (*label) return cmd_label(in_path, profile_path, out_path);
    if (*gensig) return cmd_gensig(in_path, gensig_flags, out_path, dendrogram_path);
    if (*det) return cmd_detect(sigs_path, in_path, out_path, signal);
    if (*ev) return cmd_eval(in_path, eval_flags, out_path, n_values, report_path, sig_dir);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return kUsage;
}

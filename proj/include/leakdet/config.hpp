#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "leakdet/error.hpp"

namespace leakdet {

/// Every tunable of the pipeline. Echoed into signature files and reports.
struct PipelineConfig {
  int compressor_level = 9;
  double tau = 1.0;
  std::size_t min_token_len = 5;
  std::uint64_t seed = 42;
  std::size_t n_sample = 100;
  std::vector<std::size_t> n_values = {50, 100, 150, 200, 250};
  unsigned threads = 1;
  double ncd_asymmetry_tolerance = 0.05;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

inline void validate(const PipelineConfig& c) {
  if (c.compressor_level < 1 || c.compressor_level > 9) throw ValidationError("compressor_level must be in [1, 9]");
  if (!(c.tau >= 0.0 && c.tau <= 6.0)) throw ValidationError("tau must be in [0, 6]");
  if (c.min_token_len < 1) throw ValidationError("min_token_len must be at least 1");
  if (c.threads < 1 || c.threads > 256) throw ValidationError("threads must be in [1, 256]");
  if (!(c.ncd_asymmetry_tolerance >= 0.0 && c.ncd_asymmetry_tolerance <= 1.0)) {
    throw ValidationError("ncd_asymmetry_tolerance must be in [0, 1]");
  }
}

inline nlohmann::ordered_json config_to_json(const PipelineConfig& c) {
  return {{"compressor_level", c.compressor_level},
          {"tau", c.tau},
          {"min_token_len", c.min_token_len},
          {"seed", c.seed},
          {"n_sample", c.n_sample},
          {"n_values", c.n_values},
          {"ncd_asymmetry_tolerance", c.ncd_asymmetry_tolerance}};
}

/// Overlays the keys present in `j` onto `base`. Unknown keys are errors.
inline PipelineConfig apply_config_json(PipelineConfig base, const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "compressor_level") base.compressor_level = value.get<int>();
      else if (key == "tau") base.tau = value.get<double>();
      else if (key == "min_token_len") base.min_token_len = value.get<std::size_t>();
      else if (key == "seed") base.seed = value.get<std::uint64_t>();
      else if (key == "n_sample") base.n_sample = value.get<std::size_t>();
      else if (key == "n_values") base.n_values = value.get<std::vector<std::size_t>>();
      else if (key == "threads") base.threads = value.get<unsigned>();
      else if (key == "ncd_asymmetry_tolerance") base.ncd_asymmetry_tolerance = value.get<double>();
      else throw ParseError("unknown config key: " + key);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid config value: ") + e.what());
  }
  return base;
}

}  // namespace leakdet

#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace relmatch {

inline constexpr const char* kVersion = "0.1.0";

/// Every tunable of a run. Defaults are the full-scale setup.
struct RunConfig {
  // Matcher dimensions.
  std::int64_t hidden = 1024;
  std::int64_t word_dim = 300;
  std::int64_t region_dim = 2048;
  std::int64_t relation_dim = 4096;
  std::int64_t k = 36;  // regions per image
  std::int64_t m = 36;  // relations kept per image
  std::int64_t max_len = 64;
  std::int64_t min_count = 1;

  // Matcher training.
  double lr1 = 0.0005;
  std::int64_t epochs1 = 10;
  double lr2 = 0.00005;
  std::int64_t epochs2 = 10;
  std::int64_t batch_size = 128;
  double margin = 0.2;
  double lambda_region = 9.0;
  double lambda_relation = 9.0;
  double epsilon = 1e-8;
  std::vector<double> sweep_lambdas = {1, 4, 9, 15, 20};

  // Captioner.
  std::int64_t cap_hidden = 64;
  std::int64_t cap_word_dim = 64;
  std::int64_t cap_attention_dim = 64;
  std::int64_t cap_feature_dim = 64;
  double cap_lr = 0.0005;
  std::int64_t cap_epochs = 10;
  std::int64_t cap_batch_size = 16;
  std::int64_t cap_max_len = 16;
  std::int64_t beam = 1;
  double scst_lr = 0.00005;
  std::int64_t scst_epochs = 1;

  // Synthetic data.
  std::int64_t synth_pairs = 32;
  std::int64_t synth_captions_per_image = 1;
  double synth_noise = 0.1;

  std::int64_t folds = 1;
  std::uint64_t seed = 0;
};

/// Reads `key = value` lines; `#` starts a comment. Missing keys keep their
/// defaults. Unknown keys, malformed lines and bad values are ConfigErrors
/// naming the key or line.
RunConfig parse_config(std::string_view text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Sets one key from its textual value.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

/// Rejects non-positive dimensions, negative epochs and similar.
void validate(const RunConfig& config);

nlohmann::ordered_json to_json(const RunConfig& config);

}  // namespace relmatch

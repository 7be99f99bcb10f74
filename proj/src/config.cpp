#include "relmatch/config.hpp"

#include "relmatch/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <variant>

namespace relmatch {
namespace {

using Field = std::variant<std::int64_t RunConfig::*, std::uint64_t RunConfig::*, double RunConfig::*,
                           std::vector<double> RunConfig::*>;

struct Entry {
  const char* key;
  Field field;
};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      {"hidden", &RunConfig::hidden},
      {"word_dim", &RunConfig::word_dim},
      {"region_dim", &RunConfig::region_dim},
      {"relation_dim", &RunConfig::relation_dim},
      {"k", &RunConfig::k},
      {"m", &RunConfig::m},
      {"max_len", &RunConfig::max_len},
      {"min_count", &RunConfig::min_count},
      {"lr1", &RunConfig::lr1},
      {"epochs1", &RunConfig::epochs1},
      {"lr2", &RunConfig::lr2},
      {"epochs2", &RunConfig::epochs2},
      {"batch_size", &RunConfig::batch_size},
      {"margin", &RunConfig::margin},
      {"lambda_region", &RunConfig::lambda_region},
      {"lambda_relation", &RunConfig::lambda_relation},
      {"epsilon", &RunConfig::epsilon},
      {"sweep_lambdas", &RunConfig::sweep_lambdas},
      {"cap_hidden", &RunConfig::cap_hidden},
      {"cap_word_dim", &RunConfig::cap_word_dim},
      {"cap_attention_dim", &RunConfig::cap_attention_dim},
      {"cap_feature_dim", &RunConfig::cap_feature_dim},
      {"cap_lr", &RunConfig::cap_lr},
      {"cap_epochs", &RunConfig::cap_epochs},
      {"cap_batch_size", &RunConfig::cap_batch_size},
      {"cap_max_len", &RunConfig::cap_max_len},
      {"beam", &RunConfig::beam},
      {"scst_lr", &RunConfig::scst_lr},
      {"scst_epochs", &RunConfig::scst_epochs},
      {"synth_pairs", &RunConfig::synth_pairs},
      {"synth_captions_per_image", &RunConfig::synth_captions_per_image},
      {"synth_noise", &RunConfig::synth_noise},
      {"folds", &RunConfig::folds},
      {"seed", &RunConfig::seed},
  };
  return table;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& value, const char* kind) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || value.empty()) {
    throw ConfigError("config key '" + key + "': expected " + kind + ", got '" + value + "'");
  }
  return out;
}

}  // namespace

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  for (const Entry& e : entries()) {
    if (key != e.key) continue;
    std::visit(
        [&](auto member) {
          using T = std::remove_reference_t<decltype(config.*member)>;
          if constexpr (std::is_same_v<T, std::vector<double>>) {
            std::vector<double> list;
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ',')) list.push_back(parse_number<double>(key, trim(item), "a number"));
            if (list.empty()) throw ConfigError("config key '" + key + "': expected a comma-separated list");
            config.*member = list;
          } else if constexpr (std::is_same_v<T, double>) {
            config.*member = parse_number<double>(key, value, "a number");
          } else {
            config.*member = parse_number<T>(key, value, "an integer");
          }
        },
        e.field);
    return;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

RunConfig parse_config(std::string_view text, const std::string& source) {
  RunConfig config;
  std::stringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value', got '" + body + "'");
    }
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": missing key");
    set_config_value(config, key, trim(body.substr(eq + 1)));
  }
  validate(config);
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

void validate(const RunConfig& c) {
  auto positive = [](const char* key, auto v) {
    if (!(v > 0)) throw ConfigError(std::string("config key '") + key + "' must be positive");
  };
  auto non_negative = [](const char* key, auto v) {
    if (!(v >= 0)) throw ConfigError(std::string("config key '") + key + "' must be non-negative");
  };
  positive("hidden", c.hidden);
  positive("word_dim", c.word_dim);
  positive("region_dim", c.region_dim);
  positive("relation_dim", c.relation_dim);
  positive("k", c.k);
  non_negative("m", c.m);
  positive("max_len", c.max_len);
  positive("min_count", c.min_count);
  non_negative("lr1", c.lr1);
  non_negative("epochs1", c.epochs1);
  non_negative("lr2", c.lr2);
  non_negative("epochs2", c.epochs2);
  if (c.batch_size < 2) throw ConfigError("config key 'batch_size' must be at least 2");
  non_negative("margin", c.margin);
  positive("lambda_region", c.lambda_region);
  positive("lambda_relation", c.lambda_relation);
  positive("epsilon", c.epsilon);
  for (double l : c.sweep_lambdas) positive("sweep_lambdas", l);
  positive("cap_hidden", c.cap_hidden);
  positive("cap_word_dim", c.cap_word_dim);
  positive("cap_attention_dim", c.cap_attention_dim);
  positive("cap_feature_dim", c.cap_feature_dim);
  non_negative("cap_lr", c.cap_lr);
  non_negative("cap_epochs", c.cap_epochs);
  positive("cap_batch_size", c.cap_batch_size);
  positive("cap_max_len", c.cap_max_len);
  positive("beam", c.beam);
  non_negative("scst_lr", c.scst_lr);
  non_negative("scst_epochs", c.scst_epochs);
  positive("synth_pairs", c.synth_pairs);
  positive("synth_captions_per_image", c.synth_captions_per_image);
  non_negative("synth_noise", c.synth_noise);
  positive("folds", c.folds);
}

nlohmann::ordered_json to_json(const RunConfig& config) {
  nlohmann::ordered_json j;
  for (const Entry& e : entries()) {
    std::visit([&](auto member) { j[e.key] = config.*member; }, e.field);
  }
  return j;
}

}  // namespace relmatch

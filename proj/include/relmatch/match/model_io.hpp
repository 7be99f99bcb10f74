#pragma once

#include "relmatch/data/checkpoint.hpp"
#include "relmatch/match/rscan.hpp"
#include "relmatch/text/vocabulary.hpp"

#include <filesystem>

namespace relmatch::match {

/// A trained matcher with its vocabulary and the free-form metadata it was
/// saved with (config echo, seed, version).
struct MatcherModel {
  MatcherParams params;
  text::Vocabulary vocabulary;
  nlohmann::json meta = nlohmann::json::object();
};

nlohmann::json hyper_to_json(const MatcherHyper& hyper);
MatcherHyper hyper_from_json(const nlohmann::json& j);

void save_matcher(const MatcherModel& model, const std::filesystem::path& path);
MatcherModel load_matcher(const std::filesystem::path& path);

}  // namespace relmatch::match

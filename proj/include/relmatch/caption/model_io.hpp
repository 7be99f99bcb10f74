#pragma once

#include "relmatch/caption/captioner.hpp"
#include "relmatch/data/checkpoint.hpp"

#include <filesystem>

namespace relmatch::caption {

struct CaptionerModel {
  CaptionerParams params;
  text::Vocabulary vocabulary;
  nlohmann::json meta = nlohmann::json::object();
};

void save_captioner(const CaptionerModel& model, const std::filesystem::path& path);
CaptionerModel load_captioner(const std::filesystem::path& path);

}  // namespace relmatch::caption

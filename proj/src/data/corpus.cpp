#include "relmatch/data/corpus.hpp"

#include "relmatch/error.hpp"

#include <json.hpp>

#include <fstream>

namespace relmatch::data {

std::vector<ImageCaptions> load_caption_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open caption corpus " + path.string());
  std::vector<ImageCaptions> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path.string() + ": " + e.what(), lineno);
    }
    if (!j.is_object() || !j.contains("image_id") || !j.contains("captions") || !j["captions"].is_array()) {
      throw ParseError(path.string() + ": expected {image_id, captions:[...]}", lineno);
    }
    ImageCaptions rec;
    const auto& id = j["image_id"];
    rec.image_id = id.is_string() ? id.get<std::string>() : id.dump();
    for (const auto& c : j["captions"]) {
      if (!c.is_string()) throw ParseError(path.string() + ": caption is not a string", lineno);
      rec.captions.push_back(c.get<std::string>());
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void save_caption_corpus(const std::vector<ImageCaptions>& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write caption corpus " + path.string());
  for (const auto& rec : corpus) {
    nlohmann::ordered_json j;
    j["image_id"] = rec.image_id;
    j["captions"] = rec.captions;
    out << j.dump() << '\n';
  }
}

std::vector<CaptionPair> flatten(const std::vector<ImageCaptions>& corpus) {
  std::vector<CaptionPair> out;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    for (const auto& c : corpus[i].captions) out.push_back({corpus[i].image_id, c, i});
  return out;
}

}  // namespace relmatch::data

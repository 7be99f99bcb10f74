#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace relmatch::data {

/// One line of a caption corpus: {"image_id": ..., "captions": [...]}.
struct ImageCaptions {
  std::string image_id;
  std::vector<std::string> captions;
  bool operator==(const ImageCaptions&) const = default;
};

/// Numeric image ids are read as their decimal text.
std::vector<ImageCaptions> load_caption_corpus(const std::filesystem::path& path);
void save_caption_corpus(const std::vector<ImageCaptions>& corpus, const std::filesystem::path& path);

struct CaptionPair {
  std::string image_id;
  std::string caption;
  std::size_t image_index = 0;
};

/// Every (image, caption) pair in corpus order.
std::vector<CaptionPair> flatten(const std::vector<ImageCaptions>& corpus);

}  // namespace relmatch::data

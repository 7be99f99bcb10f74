#include "relmatch/text/tokenize.hpp"

#include "relmatch/error.hpp"

#include <cctype>

namespace relmatch::text {

std::vector<std::string> tokenize(std::string_view caption) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : caption) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isspace(c)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else if (c < 0x80 && std::ispunct(c)) {
      continue;
    } else {
      cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  if (out.empty()) throw Error("caption is empty after tokenization: '" + std::string(caption) + "'");
  return out;
}

std::vector<std::string> tokenize(std::string_view caption, const Vocabulary& vocab) {
  auto tokens = tokenize(caption);
  for (auto& t : tokens) {
    if (!vocab.contains(t)) t = std::string(Vocabulary::kUnk);
  }
  return tokens;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

}  // namespace relmatch::text

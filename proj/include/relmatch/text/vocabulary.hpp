#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace relmatch::text {

using TokenId = Eigen::Index;

/// Dense token <-> index map. The four special tokens always occupy indices
/// 0..3 in the order below.
class Vocabulary {
 public:
  static constexpr std::string_view kPad = "<pad>";
  static constexpr std::string_view kUnk = "<unk>";
  static constexpr std::string_view kBos = "<bos>";
  static constexpr std::string_view kEos = "<eos>";
  static constexpr TokenId kPadId = 0;
  static constexpr TokenId kUnkId = 1;
  static constexpr TokenId kBosId = 2;
  static constexpr TokenId kEosId = 3;

  /// Specials only.
  Vocabulary();

  /// Specials followed by every token seen at least `min_count` times, most
  /// frequent first, ties in lexicographic order.
  static Vocabulary build(const std::vector<std::vector<std::string>>& sentences, std::size_t min_count = 1);

  /// One token per line, line number = index, specials first.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  bool contains(std::string_view token) const;
  /// Index of `token`, or kUnkId.
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;

  std::vector<TokenId> encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(const std::vector<TokenId>& ids) const;

  /// Adds a token if absent and returns its index.
  TokenId add(const std::string& token);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace relmatch::text

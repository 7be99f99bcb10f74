#include "relmatch/text/vocabulary.hpp"

#include "relmatch/error.hpp"

#include <algorithm>
#include <fstream>
#include <map>

namespace relmatch::text {

Vocabulary::Vocabulary() {
  for (std::string_view s : {kPad, kUnk, kBos, kEos}) add(std::string(s));
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& sentences, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : sentences)
    for (const auto& t : s) ++counts[t];

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary v;
  for (const auto& [tok, n] : ranked) {
    if (n >= min_count) v.add(tok);
  }
  return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary file " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  const std::string_view specials[] = {kPad, kUnk, kBos, kEos};
  if (lines.size() < 4) throw ParseError("vocabulary file lacks the special tokens", lines.size());
  for (std::size_t i = 0; i < 4; ++i) {
    if (lines[i] != specials[i]) {
      throw ParseError("expected special token " + std::string(specials[i]) + " on line " + std::to_string(i + 1), i);
    }
  }
  Vocabulary v;
  for (std::size_t i = 4; i < lines.size(); ++i) {
    if (lines[i].empty()) throw ParseError("empty token in vocabulary", i);
    if (v.contains(lines[i])) throw ParseError("duplicate token '" + lines[i] + "' in vocabulary", i);
    v.add(lines[i]);
  }
  return v;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write vocabulary file " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

bool Vocabulary::contains(std::string_view token) const { return index_.count(std::string(token)) > 0; }

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw Error("token index " + std::to_string(id) + " outside vocabulary of size " + std::to_string(size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<TokenId> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::vector<std::string> Vocabulary::decode(const std::vector<TokenId>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId i : ids) out.push_back(token(i));
  return out;
}

TokenId Vocabulary::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

}  // namespace relmatch::text

#include "relmatch/vrr/split.hpp"

#include "relmatch/error.hpp"
#include "relmatch/rng.hpp"
#include "relmatch/text/tokenize.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <set>

namespace relmatch::vrr {

PredicateList make_predicates(const std::vector<std::string>& phrases, std::string provenance) {
  if (phrases.empty()) throw ConfigError("predicate list is empty");
  PredicateList list;
  list.provenance = std::move(provenance);
  std::set<std::string> seen;
  for (const auto& p : phrases) {
    if (p.empty()) throw ConfigError("empty predicate phrase");
    if (std::any_of(p.begin(), p.end(), [](unsigned char c) { return std::isupper(c) != 0; })) {
      throw ConfigError("predicate phrase is not lowercase: " + p);
    }
    if (!seen.insert(p).second) throw ConfigError("duplicate predicate phrase: " + p);
    list.phrases.push_back(p);
    list.tokens.push_back(text::tokenize(p));
  }
  return list;
}

PredicateList builtin_predicates() { return make_predicates(builtin_predicate_phrases(), "builtin"); }

PredicateList load_predicates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open predicate list " + path.string());
  std::vector<std::string> phrases;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) phrases.push_back(line);
  }
  return make_predicates(phrases, path.string());
}

std::vector<std::string> match_predicates(std::string_view caption, const PredicateList& list) {
  const std::vector<std::string> words = text::tokenize(caption);
  std::vector<std::size_t> hits;
  for (std::size_t p = 0; p < list.size(); ++p) {
    const auto& phrase = list.tokens[p];
    if (std::search(words.begin(), words.end(), phrase.begin(), phrase.end()) != words.end()) hits.push_back(p);
  }
  std::stable_sort(hits.begin(), hits.end(),
                   [&](std::size_t a, std::size_t b) { return list.tokens[a].size() > list.tokens[b].size(); });
  std::vector<std::string> out;
  for (std::size_t p : hits) out.push_back(list.phrases[p]);
  return out;
}

SplitResult build_split(const std::vector<data::ImageCaptions>& corpus, const PredicateList& list,
                        std::uint64_t seed) {
  if (corpus.empty()) throw Error("build_split: empty corpus");
  Rng rng = substream(seed, "sampling");
  SplitResult out;
  out.split.seed = seed;
  out.summary.images_total = corpus.size();
  for (const auto& image : corpus) {
    if (image.captions.empty()) throw Error("build_split: image " + image.image_id + " has no captions");
    std::vector<std::size_t> candidates;
    std::vector<std::vector<std::string>> matches(image.captions.size());
    for (std::size_t c = 0; c < image.captions.size(); ++c) {
      matches[c] = match_predicates(image.captions[c], list);
      if (!matches[c].empty()) candidates.push_back(c);
    }
    if (candidates.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    const std::size_t chosen = candidates[pick(rng)];
    for (const auto& p : matches[chosen]) ++out.summary.histogram[p];
    out.split.entries.push_back({image.image_id, image.captions[chosen], matches[chosen]});
  }
  out.summary.images_selected = out.split.entries.size();
  return out;
}

void save_split(const VrrSplit& split, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write split " + path.string());
  for (const auto& e : split.entries) {
    nlohmann::ordered_json j;
    j["image_id"] = e.image_id;
    j["caption"] = e.caption;
    j["matched_predicates"] = e.matched_predicates;
    out << j.dump() << '\n';
  }
}

std::vector<SplitEntry> load_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open split " + path.string());
  std::vector<SplitEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("image_id").get<std::string>(), j.at("caption").get<std::string>(),
                     j.at("matched_predicates").get<std::vector<std::string>>()});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), lineno);
    }
  }
  return out;
}

nlohmann::ordered_json to_json(const SplitSummary& s) {
  nlohmann::ordered_json j;
  j["images_total"] = s.images_total;
  j["images_selected"] = s.images_selected;
  nlohmann::ordered_json hist = nlohmann::ordered_json::object();
  for (const auto& [p, n] : s.histogram) hist[p] = n;
  j["predicate_histogram"] = hist;
  return j;
}

}  // namespace relmatch::vrr

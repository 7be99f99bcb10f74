#pragma once

#include "relmatch/data/corpus.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace relmatch::vrr {

/// Ordered relation phrases, each also kept as its token sequence.
struct PredicateList {
  std::vector<std::string> phrases;
  std::vector<std::vector<std::string>> tokens;
  std::string provenance;

  std::size_t size() const { return phrases.size(); }
};

/// The packaged list of 164 semantic relation predicates.
const std::vector<std::string>& builtin_predicate_phrases();
PredicateList builtin_predicates();

/// Builds a list from phrases; rejects empty lists, empty or non-lowercase
/// phrases and duplicates.
PredicateList make_predicates(const std::vector<std::string>& phrases, std::string provenance);

/// One phrase per line; blank lines are ignored.
PredicateList load_predicates(const std::filesystem::path& path);

/// Every phrase whose tokens occur contiguously in the tokenized caption,
/// longest first (list order among equal lengths).
std::vector<std::string> match_predicates(std::string_view caption, const PredicateList& list);

struct SplitEntry {
  std::string image_id;
  std::string caption;
  std::vector<std::string> matched_predicates;
  bool operator==(const SplitEntry&) const = default;
};

struct VrrSplit {
  std::vector<SplitEntry> entries;
  std::uint64_t seed = 0;
};

struct SplitSummary {
  std::size_t images_total = 0;
  std::size_t images_selected = 0;
  /// Matches per predicate over the selected captions.
  std::map<std::string, std::size_t> histogram;
};

struct SplitResult {
  VrrSplit split;
  SplitSummary summary;
};

/// Keeps images with at least one matching caption and samples one matching
/// caption per image, uniformly, from the "sampling" substream of `seed`.
SplitResult build_split(const std::vector<data::ImageCaptions>& corpus, const PredicateList& list,
                        std::uint64_t seed);

/// JSON lines {image_id, caption, matched_predicates}.
void save_split(const VrrSplit& split, const std::filesystem::path& path);
std::vector<SplitEntry> load_split(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const SplitSummary& summary);

}  // namespace relmatch::vrr

#pragma once

#include "relmatch/text/vocabulary.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace relmatch::text {

/// Lowercases ASCII letters, deletes ASCII punctuation and splits on
/// whitespace. Throws if nothing is left.
std::vector<std::string> tokenize(std::string_view caption);

/// As above, with out-of-vocabulary tokens replaced by "<unk>".
std::vector<std::string> tokenize(std::string_view caption, const Vocabulary& vocab);

std::string join(const std::vector<std::string>& tokens);

}  // namespace relmatch::text

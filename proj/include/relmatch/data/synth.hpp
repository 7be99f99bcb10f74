#pragma once

#include "relmatch/data/corpus.hpp"
#include "relmatch/visual/features.hpp"

#include <cstdint>
#include <vector>

namespace relmatch::data {

struct SynthConfig {
  std::size_t pairs = 32;
  std::size_t captions_per_image = 1;
  Eigen::Index regions = 36;
  Eigen::Index relations = 36;
  Eigen::Index region_dim = 2048;
  Eigen::Index relation_dim = 4096;
  double noise = 0.1;
  std::uint64_t seed = 0;
};

/// Images paired with captions of the form "a objS PRED a objO". The first
/// two region rows of image i are noisy copies of the targets of objS and
/// objO, and its top relation row is a noisy copy of the target of PRED, so
/// the pairing is learnable. No two images share a (subject, object) pair.
struct SynthCorpus {
  std::vector<ImageCaptions> corpus;
  std::vector<visual::VisualFeatureSet> features;
};

SynthCorpus synth_corpus(const SynthConfig& config);

/// Predicates used for synthetic captions; each is also a relation predicate
/// of the split builder.
const std::vector<std::string>& synth_predicates();

}  // namespace relmatch::data

#pragma once

// Small random matcher setups shared by unit and acceptance tests.

#include "relmatch/match/rscan.hpp"
#include "relmatch/visual/features.hpp"

#include <vector>

namespace toy {

using namespace relmatch;

struct Setup {
  match::MatcherParams params;
  std::vector<visual::VisualFeatureSet> features;
  std::vector<std::vector<text::TokenId>> captions;

  std::vector<match::TrainingPair> batch() const {
    std::vector<match::TrainingPair> out;
    for (std::size_t i = 0; i < features.size(); ++i) out.push_back({&features[i], captions[i]});
    return out;
  }
};

/// Random parameters with non-zero gate biases, `pairs` images with k regions
/// and m relations (feature dim = h), and captions of 2..4 tokens.
inline Setup make_setup(std::uint64_t seed, Eigen::Index h, Eigen::Index k, Eigen::Index m, std::size_t pairs,
                        Eigen::Index word_dim = 300, Eigen::Index vocab = 10) {
  Rng rng(seed);
  Setup s;
  match::MatcherDims dims{vocab, word_dim, h, h, h};
  match::MatcherHyper hyper;
  hyper.lambda_region = 5.0;
  hyper.lambda_relation = 7.0;
  s.params = match::init_matcher(dims, hyper, rng);
  s.params.weights.fusion_bias(0, 0) = 0.3;
  s.params.weights.importance_bias(0, 0) = -0.2;
  for (auto* g : {&s.params.weights.text.forward, &s.params.weights.text.backward}) {
    g->input_bias = uniform_matrix(rng, 1, 3 * h, -0.1, 0.1);
    g->hidden_bias = uniform_matrix(rng, 1, 3 * h, -0.1, 0.1);
  }
  s.params.weights.visual.region_bias = uniform_matrix(rng, 1, h, -0.1, 0.1);
  s.params.weights.visual.relation_bias = uniform_matrix(rng, 1, h, -0.1, 0.1);
  std::uniform_int_distribution<text::TokenId> tok(4, vocab - 1);
  for (std::size_t i = 0; i < pairs; ++i) {
    s.features.push_back(visual::synth_features(seed * 1000 + i, k, m, h, h));
    std::vector<text::TokenId> c(2 + i % 3);
    for (auto& t : c) t = tok(rng);
    s.captions.push_back(c);
  }
  return s;
}

}  // namespace toy

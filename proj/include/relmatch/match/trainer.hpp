#pragma once

#include "relmatch/match/rscan.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace relmatch::match {

/// Two-stage constant learning rate: lr1 for epochs1 epochs, then lr2 for
/// epochs2 epochs.
struct LearningSchedule {
  double lr1 = 5e-4;
  int epochs1 = 10;
  double lr2 = 5e-5;
  int epochs2 = 10;

  int total_epochs() const { return epochs1 + epochs2; }
  double rate(int epoch) const { return epoch < epochs1 ? lr1 : lr2; }
};

struct MatcherTrainConfig {
  LearningSchedule schedule;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  /// Called after every epoch with the epoch index and mean step loss.
  std::function<void(int, double)> on_epoch;
};

/// A training caption: index into the feature list plus token ids.
struct EncodedPair {
  std::size_t image = 0;
  std::vector<text::TokenId> tokens;
};

struct MatcherTrainResult {
  MatcherParams params;
  std::vector<double> step_losses;
  std::vector<double> epoch_losses;
};

/// Adam over shuffled mini-batches with the hardest-negative triplet loss.
/// Batches are drawn from a "sampling" substream of the seed; a trailing
/// single-pair batch is merged into its predecessor.
MatcherTrainResult train_matcher(MatcherParams params, std::span<const visual::VisualFeatureSet> features,
                                 std::span<const EncodedPair> pairs, const MatcherTrainConfig& config);

}  // namespace relmatch::match

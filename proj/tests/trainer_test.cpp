#include "relmatch/diff/weights.hpp"
#include "relmatch/error.hpp"
#include "relmatch/match/trainer.hpp"

#include "toy.hpp"

#include <gtest/gtest.h>

using namespace relmatch;
using namespace relmatch::match;

namespace {

std::vector<EncodedPair> pairs_of(const toy::Setup& s) {
  std::vector<EncodedPair> out;
  for (std::size_t i = 0; i < s.captions.size(); ++i) out.push_back({i, s.captions[i]});
  return out;
}

bool same_weights(const MatcherWeights<Matrix>& a, const MatcherWeights<Matrix>& b) {
  const auto fa = diff::fields(a), fb = diff::fields(b);
  for (std::size_t i = 0; i < fa.size(); ++i)
    if (*fa[i] != *fb[i]) return false;
  return true;
}

}  // namespace

TEST(Schedule, FullScaleDefaults) {
  const LearningSchedule s;
  EXPECT_EQ(s.lr1, 0.0005);
  EXPECT_EQ(s.lr2, 0.00005);
  EXPECT_EQ(s.total_epochs(), 20);
  EXPECT_EQ(s.rate(9), 0.0005);
  EXPECT_EQ(s.rate(10), 0.00005);
}

TEST(TrainMatcher, ZeroLearningRateLeavesParamsAndLossFlat) {
  const toy::Setup s = toy::make_setup(1, 6, 3, 2, 4, 5, 10);
  MatcherTrainConfig cfg;
  cfg.schedule = {0.0, 2, 0.0, 1};
  cfg.batch_size = 4;
  const auto pairs = pairs_of(s);
  const MatcherTrainResult r = train_matcher(s.params, s.features, pairs, cfg);
  EXPECT_TRUE(same_weights(r.params.weights, s.params.weights));
  ASSERT_EQ(r.step_losses.size(), 3u);
  // Shuffling reorders the sum, so equality holds only up to rounding.
  for (double l : r.step_losses) EXPECT_NEAR(l, r.step_losses[0], 1e-12);
}

TEST(TrainMatcher, DeterministicGivenSeed) {
  const toy::Setup s = toy::make_setup(2, 6, 3, 2, 7, 5, 10);
  MatcherTrainConfig cfg;
  cfg.schedule = {1e-2, 2, 1e-3, 1};
  cfg.batch_size = 3;
  cfg.seed = 11;
  const auto pairs = pairs_of(s);
  const auto a = train_matcher(s.params, s.features, pairs, cfg);
  const auto b = train_matcher(s.params, s.features, pairs, cfg);
  EXPECT_EQ(a.step_losses, b.step_losses);
  EXPECT_TRUE(same_weights(a.params.weights, b.params.weights));
  // 7 pairs in batches of 3 → 3, 4 after merging the lone remainder.
  EXPECT_EQ(a.step_losses.size(), 6u);
  EXPECT_EQ(a.epoch_losses.size(), 3u);
}

TEST(TrainMatcher, ReducesLossOnToyData) {
  const toy::Setup s = toy::make_setup(3, 8, 3, 2, 4, 8, 10);
  MatcherTrainConfig cfg;
  cfg.schedule = {1e-2, 30, 1e-3, 0};
  cfg.batch_size = 4;
  const auto r = train_matcher(s.params, s.features, pairs_of(s), cfg);
  EXPECT_LT(r.epoch_losses.back(), r.epoch_losses.front());
}

TEST(TrainMatcher, RejectsEmptyCorpus) {
  const toy::Setup s = toy::make_setup(4, 4, 2, 1, 2, 4, 10);
  EXPECT_THROW(train_matcher(s.params, s.features, {}, {}), Error);
}

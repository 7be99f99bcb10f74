#include "relmatch/match/trainer.hpp"

#include "relmatch/diff/adam.hpp"
#include "relmatch/diff/weights.hpp"
#include "relmatch/error.hpp"

#include <algorithm>
#include <numeric>

namespace relmatch::match {

using namespace relmatch::diff;

MatcherTrainResult train_matcher(MatcherParams params, std::span<const visual::VisualFeatureSet> features,
                                 std::span<const EncodedPair> pairs, const MatcherTrainConfig& config) {
  if (pairs.empty()) throw Error("train_matcher: empty corpus");
  if (pairs.size() < 2) throw Error("train_matcher: need at least 2 pairs for hardest negatives");
  if (config.batch_size < 2) throw Error("train_matcher: batch size must be at least 2");
  if (config.schedule.epochs1 < 0 || config.schedule.epochs2 < 0) throw Error("train_matcher: negative epochs");
  for (const EncodedPair& p : pairs) {
    if (p.image >= features.size()) throw Error("train_matcher: pair refers to a missing image");
  }

  Rng rng = substream(config.seed, "sampling");
  AdamState adam;
  MatcherTrainResult result;
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < config.schedule.total_epochs(); ++epoch) {
    adam.config.learning_rate = config.schedule.rate(epoch);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<std::pair<std::size_t, std::size_t>> batches;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batches.emplace_back(start, std::min(order.size(), start + config.batch_size));
    }
    if (batches.size() > 1 && batches.back().second - batches.back().first < 2) {
      const auto last = batches.back();
      batches.pop_back();
      batches.back().second = last.second;
    }

    double epoch_total = 0.0;
    for (const auto& [begin, end] : batches) {
      std::vector<TrainingPair> batch;
      for (std::size_t i = begin; i < end; ++i) {
        const EncodedPair& p = pairs[order[i]];
        batch.push_back({&features[p.image], p.tokens});
      }
      Tape tape;
      const auto bound = bind(tape, params.weights);
      const Var loss = matcher_loss(bound, params.hyper, batch);
      tape.backward(loss);
      const auto grads = gradients(tape, bound);
      adam_step(adam, params.weights, grads);
      result.step_losses.push_back(loss.scalar());
      epoch_total += loss.scalar();
    }
    const double mean = epoch_total / static_cast<double>(batches.size());
    result.epoch_losses.push_back(mean);
    if (config.on_epoch) config.on_epoch(epoch, mean);
  }
  result.params = std::move(params);
  return result;
}

}  // namespace relmatch::match

#pragma once

#include "relmatch/caption/captioner.hpp"
#include "relmatch/metrics/cider.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace relmatch::caption {

/// A training caption with <bos>/<eos> markers and the index of its image.
struct CaptionExample {
  std::size_t image = 0;
  std::vector<TokenId> tokens;
};

struct CaptionTrainConfig {
  double learning_rate = 5e-4;
  int epochs = 10;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  /// Called after every epoch with the epoch index and mean batch loss.
  std::function<void(int, double)> on_epoch;
};

struct CaptionTrainResult {
  CaptionerParams params;
  std::vector<double> step_losses;
  std::vector<double> epoch_losses;
};

/// Adam on the batch-mean cross-entropy, batches shuffled on the "sampling"
/// substream of the seed.
CaptionTrainResult train_captioner(CaptionerParams params, std::span<const visual::VisualFeatureSet> features,
                                   std::span<const CaptionExample> examples, const CaptionTrainConfig& config);

/// Draws one token from exp(log_probs) (temperature 1).
TokenId sample_token(const Matrix& log_probs, Rng& rng);

/// One self-critical rollout for one image.
struct ScstRollout {
  Var surrogate;  // -(r(sample) - r(greedy)) * Σ log p(sample)
  std::vector<TokenId> sample;
  std::vector<TokenId> greedy;
  double sample_reward = 0.0;
  double greedy_reward = 0.0;
  double advantage = 0.0;
};

/// Samples a caption on the tape of `weights`, decodes greedily from
/// `values` (the same parameters as plain matrices) and scores both with
/// CIDEr-D against `references`.
ScstRollout scst_rollout(const CaptionerWeights<Var>& weights, const CaptionerParams& values,
                         const visual::VisualFeatureSet& features, const std::vector<metrics::Tokens>& references,
                         const metrics::CiderModel& model, const text::Vocabulary& vocab, Rng& rng, Index max_len);

struct ScstStats {
  double mean_sample_reward = 0.0;
  double mean_greedy_reward = 0.0;
};

struct ScstStep {
  Var loss;  // mean surrogate over the batch
  ScstStats stats;
};

/// Self-critical surrogate over a batch of images; references[i] belongs to
/// images[i].
ScstStep scst_step(const CaptionerWeights<Var>& weights, const CaptionerParams& values,
                   std::span<const visual::VisualFeatureSet* const> images,
                   std::span<const std::vector<metrics::Tokens>* const> references, const metrics::CiderModel& model,
                   const text::Vocabulary& vocab, Rng& rng, Index max_len);

struct ScstConfig {
  double learning_rate = 5e-5;
  int epochs = 1;
  std::size_t batch_size = 16;
  Index max_len = 16;
  std::uint64_t seed = 0;
  std::function<void(int, const ScstStats&)> on_epoch;
};

struct ScstResult {
  CaptionerParams params;
  std::vector<ScstStats> step_stats;
};

/// Self-critical fine-tuning; the CIDEr-D model is built from all references.
ScstResult scst_finetune(CaptionerParams params, std::span<const visual::VisualFeatureSet> features,
                         const std::vector<std::vector<metrics::Tokens>>& references, const text::Vocabulary& vocab,
                         const ScstConfig& config);

}  // namespace relmatch::caption

#include "relmatch/caption/training.hpp"

#include "relmatch/diff/adam.hpp"
#include "relmatch/diff/weights.hpp"
#include "relmatch/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace relmatch::caption {

using namespace relmatch::diff;

namespace {

std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t size) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t start = 0; start < n; start += size) out.emplace_back(start, std::min(n, start + size));
  return out;
}

}  // namespace

CaptionTrainResult train_captioner(CaptionerParams params, std::span<const visual::VisualFeatureSet> features,
                                   std::span<const CaptionExample> examples, const CaptionTrainConfig& config) {
  if (examples.empty()) throw Error("train_captioner: empty corpus");
  if (config.batch_size < 1) throw Error("train_captioner: batch size must be positive");
  if (config.epochs < 0) throw Error("train_captioner: negative epochs");
  for (const auto& e : examples)
    if (e.image >= features.size()) throw Error("train_captioner: caption refers to a missing image");

  Rng rng = substream(config.seed, "sampling");
  AdamState adam;
  adam.config.learning_rate = config.learning_rate;
  CaptionTrainResult result;
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const auto batches = batch_ranges(order.size(), config.batch_size);
    double total = 0.0;
    for (const auto& [begin, end] : batches) {
      Tape tape;
      const auto w = bind(tape, params);
      std::vector<Var> losses;
      for (std::size_t i = begin; i < end; ++i) {
        const CaptionExample& e = examples[order[i]];
        losses.push_back(xe_loss(w, prepare_image(w, features[e.image]), e.tokens));
      }
      const Var loss = scale(sum(concat_cols(losses)), 1.0 / static_cast<double>(losses.size()));
      tape.backward(loss);
      adam_step(adam, params, gradients(tape, w));
      result.step_losses.push_back(loss.scalar());
      total += loss.scalar();
    }
    const double mean = total / static_cast<double>(batches.size());
    result.epoch_losses.push_back(mean);
    if (config.on_epoch) config.on_epoch(epoch, mean);
  }
  result.params = std::move(params);
  return result;
}

TokenId sample_token(const Matrix& log_probs, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double cumulative = 0.0;
  for (Index v = 0; v < log_probs.cols(); ++v) {
    cumulative += std::exp(log_probs(0, v));
    if (u < cumulative) return v;
  }
  // Rounding left the cumulative mass just under u: take the last likely id.
  for (Index v = log_probs.cols() - 1; v > 0; --v)
    if (std::exp(log_probs(0, v)) > 0.0) return v;
  return 0;
}

ScstRollout scst_rollout(const CaptionerWeights<Var>& w, const CaptionerParams& values,
                         const visual::VisualFeatureSet& features, const std::vector<metrics::Tokens>& references,
                         const metrics::CiderModel& model, const text::Vocabulary& vocab, Rng& rng, Index max_len) {
  if (references.empty()) throw Error("scst: image has no reference captions");
  if (max_len < 1) throw Error("scst: max_len must be at least 1");
  Tape& tape = *w.embedding.tape();
  const ImageContext image = prepare_image(w, features);
  DecoderState state = initial_state(tape, values.attention_lstm.hidden.rows());
  ScstRollout out;
  std::vector<Var> chosen;
  TokenId prev = text::Vocabulary::kBosId;
  for (Index t = 0; t < max_len; ++t) {
    const StepOutput s = step(w, image, state, prev);
    const TokenId next = sample_token(s.log_probs.value(), rng);
    chosen.push_back(element(s.log_probs, 0, next));
    out.sample.push_back(next);
    if (next == text::Vocabulary::kEosId) break;
    state = s.state;
    prev = next;
  }
  out.greedy = decode_greedy(values, features, max_len).tokens;
  out.sample_reward = metrics::cider_d(caption_words(vocab, out.sample), references, model);
  out.greedy_reward = metrics::cider_d(caption_words(vocab, out.greedy), references, model);
  out.advantage = out.sample_reward - out.greedy_reward;
  out.surrogate = scale(sum(concat_cols(chosen)), -out.advantage);
  return out;
}

ScstStep scst_step(const CaptionerWeights<Var>& w, const CaptionerParams& values,
                   std::span<const visual::VisualFeatureSet* const> images,
                   std::span<const std::vector<metrics::Tokens>* const> references, const metrics::CiderModel& model,
                   const text::Vocabulary& vocab, Rng& rng, Index max_len) {
  if (images.empty()) throw Error("scst: empty batch");
  if (images.size() != references.size()) throw DimensionError("scst: one reference set per image");
  std::vector<Var> surrogates;
  ScstStep out;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const ScstRollout r = scst_rollout(w, values, *images[i], *references[i], model, vocab, rng, max_len);
    surrogates.push_back(r.surrogate);
    out.stats.mean_sample_reward += r.sample_reward;
    out.stats.mean_greedy_reward += r.greedy_reward;
  }
  const double n = static_cast<double>(images.size());
  out.stats.mean_sample_reward /= n;
  out.stats.mean_greedy_reward /= n;
  out.loss = scale(sum(concat_cols(surrogates)), 1.0 / n);
  return out;
}

ScstResult scst_finetune(CaptionerParams params, std::span<const visual::VisualFeatureSet> features,
                         const std::vector<std::vector<metrics::Tokens>>& references, const text::Vocabulary& vocab,
                         const ScstConfig& config) {
  if (features.empty()) throw Error("scst_finetune: no images");
  if (features.size() != references.size()) throw DimensionError("scst_finetune: one reference set per image");
  if (config.batch_size < 1) throw Error("scst_finetune: batch size must be positive");
  const metrics::CiderModel model(references);
  Rng order_rng = substream(config.seed, "sampling");
  Rng sample_rng = substream(config.seed, "scst");
  AdamState adam;
  adam.config.learning_rate = config.learning_rate;
  ScstResult result;
  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    ScstStats epoch_stats;
    const auto batches = batch_ranges(order.size(), config.batch_size);
    for (const auto& [begin, end] : batches) {
      std::vector<const visual::VisualFeatureSet*> imgs;
      std::vector<const std::vector<metrics::Tokens>*> refs;
      for (std::size_t i = begin; i < end; ++i) {
        imgs.push_back(&features[order[i]]);
        refs.push_back(&references[order[i]]);
      }
      Tape tape;
      const auto w = bind(tape, params);
      const ScstStep s = scst_step(w, params, imgs, refs, model, vocab, sample_rng, config.max_len);
      tape.backward(s.loss);
      adam_step(adam, params, gradients(tape, w));
      result.step_stats.push_back(s.stats);
      epoch_stats.mean_sample_reward += s.stats.mean_sample_reward / static_cast<double>(batches.size());
      epoch_stats.mean_greedy_reward += s.stats.mean_greedy_reward / static_cast<double>(batches.size());
    }
    if (config.on_epoch) config.on_epoch(epoch, epoch_stats);
  }
  result.params = std::move(params);
  return result;
}

}  // namespace relmatch::caption

#pragma once

#include "relmatch/diff/ops.hpp"
#include "relmatch/rng.hpp"
#include "relmatch/text/vocabulary.hpp"
#include "relmatch/visual/features.hpp"
#include "relmatch/visual/projector.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace relmatch::caption {

using diff::Matrix;
using diff::Tape;
using diff::Var;
using Eigen::Index;
using text::TokenId;

/// Four-gate LSTM with gates stacked as [input | forget | cell | output]:
///   c' = σ(f) ∘ c + σ(i) ∘ tanh(g),  h' = σ(o) ∘ tanh(c')
template <class T>
struct LstmWeights {
  T input;   // in x 4h
  T hidden;  // h x 4h
  T bias;    // 1 x 4h

  template <class F>
  void visit(F&& f, const std::string& p = {}) { visit_impl(*this, f, p); }
  template <class F>
  void visit(F&& f, const std::string& p = {}) const { visit_impl(*this, f, p); }

 private:
  template <class Self, class F>
  static void visit_impl(Self& s, F& f, const std::string& p) {
    f(p + "input", s.input);
    f(p + "hidden", s.hidden);
    f(p + "bias", s.bias);
  }
};

/// Additive attention: score_i = tanh(x_i W_x + h W_h) w.
template <class T>
struct AttentionWeights {
  T feature;  // d x a
  T hidden;   // h x a
  T score;    // a x 1

  template <class F>
  void visit(F&& f, const std::string& p = {}) { visit_impl(*this, f, p); }
  template <class F>
  void visit(F&& f, const std::string& p = {}) const { visit_impl(*this, f, p); }

 private:
  template <class Self, class F>
  static void visit_impl(Self& s, F& f, const std::string& p) {
    f(p + "feature", s.feature);
    f(p + "hidden", s.hidden);
    f(p + "score", s.score);
  }
};

template <class T>
struct CaptionerWeights {
  T embedding;                        // n_vocab x e
  visual::VisualEncoderWeights<T> visual;  // raw features -> d
  LstmWeights<T> attention_lstm;      // input [r̄; v̄; h²; emb]
  AttentionWeights<T> region_attention;
  AttentionWeights<T> relation_attention;
  LstmWeights<T> language_lstm;       // input [v̂; r̂; h¹]
  T output;                           // h x n_vocab
  T output_bias;                      // 1 x n_vocab

  template <class F>
  void visit(F&& f, const std::string& p = {}) { visit_impl(*this, f, p); }
  template <class F>
  void visit(F&& f, const std::string& p = {}) const { visit_impl(*this, f, p); }

 private:
  template <class Self, class F>
  static void visit_impl(Self& s, F& f, const std::string& p) {
    f(p + "embedding", s.embedding);
    s.visual.visit(f, p + "visual.");
    s.attention_lstm.visit(f, p + "attention_lstm.");
    s.region_attention.visit(f, p + "region_attention.");
    s.relation_attention.visit(f, p + "relation_attention.");
    s.language_lstm.visit(f, p + "language_lstm.");
    f(p + "output", s.output);
    f(p + "output_bias", s.output_bias);
  }
};

using CaptionerParams = CaptionerWeights<Matrix>;

struct CaptionerDims {
  Index vocab_size = 4;
  Index word_dim = 64;
  Index hidden = 64;
  Index attention_dim = 64;
  Index feature_dim = 64;  // joint size of projected regions and relations
  Index region_dim = 2048;
  Index relation_dim = 4096;
};

CaptionerDims dims_of(const CaptionerParams& params);

/// Embedding U(-0.1, 0.1), matrices Xavier-uniform, biases zero except the
/// LSTM forget gates, which start at 1.
CaptionerParams init_captioner(const CaptionerDims& dims, Rng& rng);

/// Projected image with its mean-pooled rows; relation parts are unset when
/// the image has no relations, and the pooled relation is then zero.
struct ImageContext {
  Var regions;    // k x d
  Var region_mean;  // 1 x d
  std::optional<Var> relations;
  Var relation_mean;  // 1 x d
};

ImageContext prepare_image(const CaptionerWeights<Var>& weights, const visual::VisualFeatureSet& features);

struct DecoderState {
  Var h1, c1, h2, c2;  // 1 x hidden each
  Index t = 0;
};

DecoderState initial_state(Tape& tape, Index hidden);

struct StepTrace {
  Matrix region_attention;    // k x 1
  Matrix relation_attention;  // m x 1, empty when m = 0
  Matrix attended_region;     // 1 x d, v̂_t
  Matrix attended_relation;   // 1 x d, r̂_t (zero when m = 0)
};

struct StepOutput {
  DecoderState state;
  Var log_probs;  // 1 x n_vocab
};

/// One decoder step from `prev` (the previous token, <bos> at t = 0).
StepOutput step(const CaptionerWeights<Var>& weights, const ImageContext& image, const DecoderState& state,
                TokenId prev, StepTrace* trace = nullptr);

/// Mean negative log-likelihood of tokens[1..] under teacher forcing.
/// `tokens` must start with <bos>, end with <eos> and hold at least 2 ids.
Var xe_loss(const CaptionerWeights<Var>& weights, const ImageContext& image, std::span<const TokenId> tokens);
double xe_loss_value(const CaptionerParams& params, const visual::VisualFeatureSet& features,
                     std::span<const TokenId> tokens);

/// Generated ids without <bos>; the trailing <eos> is included when emitted.
struct Decoded {
  std::vector<TokenId> tokens;
  double log_prob = 0.0;
};

/// Argmax per step, ties to the lowest id; stops after <eos> or max_len tokens.
Decoded decode_greedy(const CaptionerParams& params, const visual::VisualFeatureSet& features, Index max_len);

/// Beam search over summed log-probabilities; finished beams are kept as
/// they are. Ties go to the earlier beam, then the likelier step, then the
/// lower id.
Decoded decode_beam(const CaptionerParams& params, const visual::VisualFeatureSet& features, Index beam,
                    Index max_len);

/// Drops <bos>/<eos>/<pad> and joins the remaining tokens with spaces.
std::string caption_text(const text::Vocabulary& vocab, std::span<const TokenId> tokens);

/// Words of a generated caption for scoring (special tokens removed).
std::vector<std::string> caption_words(const text::Vocabulary& vocab, std::span<const TokenId> tokens);

/// <bos> + ids + <eos>.
std::vector<TokenId> with_markers(const std::vector<TokenId>& ids);

}  // namespace relmatch::caption

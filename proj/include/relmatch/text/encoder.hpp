#pragma once

#include "relmatch/diff/ops.hpp"
#include "relmatch/rng.hpp"
#include "relmatch/text/vocabulary.hpp"

#include <span>
#include <string>

namespace relmatch::text {

using diff::Matrix;
using diff::Var;

/// Standard GRU cell with gates stacked as [update | reset | candidate]:
///   z = σ(x Wz + bz + h Uz + cz)
///   r = σ(x Wr + br + h Ur + cr)
///   n = tanh(x Wn + bn + r ∘ (h Un + cn))
///   h' = (1 - z) ∘ n + z ∘ h
template <class T>
struct GruWeights {
  T input;        // in x 3h
  T hidden;       // h x 3h
  T input_bias;   // 1 x 3h
  T hidden_bias;  // 1 x 3h

  template <class F>
  void visit(F&& f, const std::string& p = {}) { visit_impl(*this, f, p); }
  template <class F>
  void visit(F&& f, const std::string& p = {}) const { visit_impl(*this, f, p); }

 private:
  template <class Self, class F>
  static void visit_impl(Self& s, F& f, const std::string& p) {
    f(p + "input", s.input);
    f(p + "hidden", s.hidden);
    f(p + "input_bias", s.input_bias);
    f(p + "hidden_bias", s.hidden_bias);
  }
};

template <class T>
struct TextEncoderWeights {
  T embedding;  // n_vocab x word_dim
  GruWeights<T> forward;
  GruWeights<T> backward;

  template <class F>
  void visit(F&& f, const std::string& p = {}) { visit_impl(*this, f, p); }
  template <class F>
  void visit(F&& f, const std::string& p = {}) const { visit_impl(*this, f, p); }

 private:
  template <class Self, class F>
  static void visit_impl(Self& s, F& f, const std::string& p) {
    f(p + "embedding", s.embedding);
    s.forward.visit(f, p + "gru_fwd.");
    s.backward.visit(f, p + "gru_bwd.");
  }
};

using TextEncoderParams = TextEncoderWeights<Matrix>;

struct TextEncoderConfig {
  Eigen::Index vocab_size = 4;
  Eigen::Index word_dim = 300;
  Eigen::Index hidden = 1024;
  Eigen::Index max_len = 64;
};

/// Per-word contextual vectors, n x h.
struct TextEncoding {
  Matrix words;
  std::string caption_id;
  Eigen::Index size() const { return words.rows(); }
};

/// W_e ~ U(-0.1, 0.1), GRU matrices Xavier-uniform, biases zero.
TextEncoderParams init_text_encoder(const TextEncoderConfig& config, Rng& rng);

/// Runs a GRU over the rows of `inputs` (n x in) from the top, returning the
/// stacked hidden states (n x h).
Var run_gru(const GruWeights<Var>& gru, Var inputs);

/// w_i = (h_fwd_i + h_bwd_i) / 2 for the embedded tokens; n x h. Sequences
/// longer than `max_len` are truncated with a warning on stderr.
Var encode_text(const TextEncoderWeights<Var>& weights, std::span<const TokenId> tokens,
                Eigen::Index max_len = 64);

/// Value-only encoding.
TextEncoding encode_text(const TextEncoderParams& params, std::span<const TokenId> tokens,
                         Eigen::Index max_len = 64, std::string caption_id = {});

}  // namespace relmatch::text

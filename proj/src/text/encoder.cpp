#include "relmatch/text/encoder.hpp"

#include "relmatch/diff/weights.hpp"
#include "relmatch/error.hpp"

#include <algorithm>
#include <iostream>
#include <vector>

namespace relmatch::text {

using namespace relmatch::diff;

namespace {

GruWeights<Matrix> init_gru(Index in, Index hidden, Rng& rng) {
  GruWeights<Matrix> g;
  g.input = xavier_matrix(rng, in, 3 * hidden);
  g.hidden = xavier_matrix(rng, hidden, 3 * hidden);
  g.input_bias = Matrix::Zero(1, 3 * hidden);
  g.hidden_bias = Matrix::Zero(1, 3 * hidden);
  return g;
}

}  // namespace

TextEncoderParams init_text_encoder(const TextEncoderConfig& config, Rng& rng) {
  if (config.vocab_size < 1 || config.word_dim < 1 || config.hidden < 1) {
    throw DimensionError("text encoder dimensions must be positive");
  }
  TextEncoderParams p;
  p.embedding = uniform_matrix(rng, config.vocab_size, config.word_dim, -0.1, 0.1);
  p.forward = init_gru(config.word_dim, config.hidden, rng);
  p.backward = init_gru(config.word_dim, config.hidden, rng);
  return p;
}

Var run_gru(const GruWeights<Var>& gru, Var inputs) {
  const Index h = gru.hidden.rows();
  if (gru.hidden.cols() != 3 * h || gru.input.cols() != 3 * h) {
    throw DimensionError("GRU weights: hidden " + shape_string(gru.hidden.value()) + ", input " +
                         shape_string(gru.input.value()));
  }
  Tape& tape = *inputs.tape();
  const Var projected = add(matmul(inputs, gru.input), gru.input_bias);  // n x 3h
  Var state = tape.constant(Matrix::Zero(1, h));
  std::vector<Var> states;
  states.reserve(static_cast<std::size_t>(inputs.rows()));
  for (Index t = 0; t < inputs.rows(); ++t) {
    const Var gx = row(projected, t);
    const Var gh = add(matmul(state, gru.hidden), gru.hidden_bias);
    const Var gates = sigmoid(add(slice(gx, 0, 1, 0, 2 * h), slice(gh, 0, 1, 0, 2 * h)));
    const Var update = slice(gates, 0, 1, 0, h);
    const Var reset = slice(gates, 0, 1, h, h);
    const Var candidate = tanh(add(slice(gx, 0, 1, 2 * h, h), mul(reset, slice(gh, 0, 1, 2 * h, h))));
    state = add(mul(rsub_scalar(1.0, update), candidate), mul(update, state));
    states.push_back(state);
  }
  return concat_rows(states);
}

Var encode_text(const TextEncoderWeights<Var>& weights, std::span<const TokenId> tokens, Index max_len) {
  if (tokens.empty()) throw Error("cannot encode an empty token sequence");
  if (max_len < 1) throw Error("max_len must be at least 1");
  if (static_cast<Index>(tokens.size()) > max_len) {
    std::cerr << "warning: caption of " << tokens.size() << " tokens truncated to " << max_len << "\n";
    tokens = tokens.first(static_cast<std::size_t>(max_len));
  }
  const Index vocab = weights.embedding.rows();
  for (TokenId t : tokens) {
    if (t < 0 || t >= vocab) {
      throw Error("token index " + std::to_string(t) + " outside vocabulary of size " + std::to_string(vocab));
    }
  }
  const Var embedded = gather_rows(weights.embedding, tokens);
  const Var fwd = run_gru(weights.forward, embedded);

  std::vector<Index> reversed_rows(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) reversed_rows[i] = static_cast<Index>(tokens.size() - 1 - i);
  const Var bwd_on_reversed = run_gru(weights.backward, gather_rows(embedded, reversed_rows));
  const Var bwd = gather_rows(bwd_on_reversed, reversed_rows);
  return scale(add(fwd, bwd), 0.5);
}

TextEncoding encode_text(const TextEncoderParams& params, std::span<const TokenId> tokens, Index max_len,
                         std::string caption_id) {
  Tape tape(false);
  const auto bound = bind(tape, params);
  return TextEncoding{encode_text(bound, tokens, max_len).value(), std::move(caption_id)};
}

}  // namespace relmatch::text

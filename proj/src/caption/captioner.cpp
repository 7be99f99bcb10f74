#include "relmatch/caption/captioner.hpp"

#include "relmatch/diff/weights.hpp"
#include "relmatch/error.hpp"

#include <algorithm>

namespace relmatch::caption {

using namespace relmatch::diff;

namespace {

LstmWeights<Matrix> init_lstm(Index in, Index hidden, Rng& rng) {
  LstmWeights<Matrix> w;
  w.input = xavier_matrix(rng, in, 4 * hidden);
  w.hidden = xavier_matrix(rng, hidden, 4 * hidden);
  w.bias = Matrix::Zero(1, 4 * hidden);
  w.bias.block(0, hidden, 1, hidden).setOnes();
  return w;
}

AttentionWeights<Matrix> init_attention(Index feature, Index hidden, Index att, Rng& rng) {
  return {xavier_matrix(rng, feature, att), xavier_matrix(rng, hidden, att), xavier_matrix(rng, att, 1)};
}

struct LstmOut {
  Var h, c;
};

LstmOut lstm(const LstmWeights<Var>& w, Var x, Var h, Var c) {
  const Index n = h.cols();
  const Var z = add(add(matmul(x, w.input), matmul(h, w.hidden)), w.bias);
  const Var i = sigmoid(slice(z, 0, 1, 0, n));
  const Var f = sigmoid(slice(z, 0, 1, n, n));
  const Var g = tanh(slice(z, 0, 1, 2 * n, n));
  const Var o = sigmoid(slice(z, 0, 1, 3 * n, n));
  const Var c2 = add(mul(f, c), mul(i, g));
  return {mul(o, tanh(c2)), c2};
}

struct AttendOut {
  Var weights;  // rows x 1
  Var vector;   // 1 x d
};

AttendOut attend(const AttentionWeights<Var>& w, Var rows, Var h) {
  const Var hidden = tanh(add(matmul(rows, w.feature), matmul(h, w.hidden)));
  const Var att = softmax_cols(matmul(hidden, w.score));
  return {att, matmul(transpose(att), rows)};
}

Index argmax_row(const Matrix& row) {
  Index best = 0;
  for (Index j = 1; j < row.cols(); ++j)
    if (row(0, j) > row(0, best)) best = j;
  return best;
}

}  // namespace

CaptionerDims dims_of(const CaptionerParams& p) {
  CaptionerDims d;
  d.vocab_size = p.embedding.rows();
  d.word_dim = p.embedding.cols();
  d.hidden = p.attention_lstm.hidden.rows();
  d.attention_dim = p.region_attention.score.rows();
  d.feature_dim = p.visual.region_proj.cols();
  d.region_dim = p.visual.region_proj.rows();
  d.relation_dim = p.visual.relation_proj.rows();
  return d;
}

CaptionerParams init_captioner(const CaptionerDims& d, Rng& rng) {
  if (d.vocab_size < 5 || d.word_dim < 1 || d.hidden < 1 || d.attention_dim < 1 || d.feature_dim < 1) {
    throw ConfigError("captioner dimensions must be positive and the vocabulary non-trivial");
  }
  CaptionerParams p;
  p.embedding = uniform_matrix(rng, d.vocab_size, d.word_dim, -0.1, 0.1);
  p.visual = visual::init_visual_encoder(d.region_dim, d.relation_dim, d.feature_dim, rng);
  p.attention_lstm = init_lstm(2 * d.feature_dim + d.hidden + d.word_dim, d.hidden, rng);
  p.region_attention = init_attention(d.feature_dim, d.hidden, d.attention_dim, rng);
  p.relation_attention = init_attention(d.feature_dim, d.hidden, d.attention_dim, rng);
  p.language_lstm = init_lstm(2 * d.feature_dim + d.hidden, d.hidden, rng);
  p.output = xavier_matrix(rng, d.hidden, d.vocab_size);
  p.output_bias = Matrix::Zero(1, d.vocab_size);
  return p;
}

ImageContext prepare_image(const CaptionerWeights<Var>& w, const visual::VisualFeatureSet& features) {
  const visual::ProjectedVars pv = visual::project(w.visual, features);
  ImageContext im;
  im.regions = pv.regions;
  im.region_mean = scale(sum_rows(pv.regions), 1.0 / static_cast<double>(pv.regions.rows()));
  if (pv.relations) {
    im.relations = pv.relations;
    im.relation_mean = scale(sum_rows(*pv.relations), 1.0 / static_cast<double>(pv.relations->rows()));
  } else {
    im.relation_mean = w.embedding.tape()->constant(Matrix::Zero(1, pv.regions.cols()));
  }
  return im;
}

DecoderState initial_state(Tape& tape, Index hidden) {
  const Matrix z = Matrix::Zero(1, hidden);
  return {tape.constant(z), tape.constant(z), tape.constant(z), tape.constant(z), 0};
}

StepOutput step(const CaptionerWeights<Var>& w, const ImageContext& image, const DecoderState& state, TokenId prev,
                StepTrace* trace) {
  if (prev < 0 || prev >= w.embedding.rows()) {
    throw Error("token id " + std::to_string(prev) + " outside vocabulary of " + std::to_string(w.embedding.rows()));
  }
  const Index ids[] = {prev};
  const Var emb = gather_rows(w.embedding, ids);
  const LstmOut top = lstm(w.attention_lstm, concat_cols({image.relation_mean, image.region_mean, state.h2, emb}),
                           state.h1, state.c1);
  const AttendOut region = attend(w.region_attention, image.regions, top.h);
  Var relation_vec = image.relation_mean;  // zeros when m = 0
  std::optional<AttendOut> relation;
  if (image.relations) {
    relation = attend(w.relation_attention, *image.relations, top.h);
    relation_vec = relation->vector;
  }
  const LstmOut lang = lstm(w.language_lstm, concat_cols({region.vector, relation_vec, top.h}), state.h2, state.c2);
  const Var logits = add(matmul(lang.h, w.output), w.output_bias);
  if (trace != nullptr) {
    trace->region_attention = region.weights.value();
    trace->relation_attention = relation ? relation->weights.value() : Matrix(0, 1);
    trace->attended_region = region.vector.value();
    trace->attended_relation = relation_vec.value();
  }
  return {{top.h, top.c, lang.h, lang.c, state.t + 1}, log_softmax_rows(logits)};
}

Var xe_loss(const CaptionerWeights<Var>& w, const ImageContext& image, std::span<const TokenId> tokens) {
  if (tokens.size() < 2) throw Error("xe_loss: caption needs at least <bos> and <eos>");
  if (tokens.front() != text::Vocabulary::kBosId || tokens.back() != text::Vocabulary::kEosId) {
    throw Error("xe_loss: caption must start with <bos> and end with <eos>");
  }
  Tape& tape = *w.embedding.tape();
  DecoderState state = initial_state(tape, w.attention_lstm.hidden.rows());
  std::vector<Var> nll;
  for (std::size_t t = 0; t + 1 < tokens.size(); ++t) {
    const StepOutput out = step(w, image, state, tokens[t]);
    const TokenId target = tokens[t + 1];
    if (target < 0 || target >= out.log_probs.cols()) throw Error("xe_loss: target token outside vocabulary");
    nll.push_back(element(out.log_probs, 0, target));
    state = out.state;
  }
  return scale(sum(concat_cols(nll)), -1.0 / static_cast<double>(nll.size()));
}

double xe_loss_value(const CaptionerParams& params, const visual::VisualFeatureSet& features,
                     std::span<const TokenId> tokens) {
  Tape tape(false);
  const auto w = bind(tape, params);
  return xe_loss(w, prepare_image(w, features), tokens).scalar();
}

Decoded decode_greedy(const CaptionerParams& params, const visual::VisualFeatureSet& features, Index max_len) {
  if (max_len < 1) throw Error("decode: max_len must be at least 1");
  Tape tape(false);
  const auto w = bind(tape, params);
  const ImageContext image = prepare_image(w, features);
  DecoderState state = initial_state(tape, params.attention_lstm.hidden.rows());
  Decoded out;
  TokenId prev = text::Vocabulary::kBosId;
  for (Index t = 0; t < max_len; ++t) {
    const StepOutput s = step(w, image, state, prev);
    const Matrix& lp = s.log_probs.value();
    const TokenId next = argmax_row(lp);
    out.tokens.push_back(next);
    out.log_prob += lp(0, next);
    if (next == text::Vocabulary::kEosId) break;
    state = s.state;
    prev = next;
  }
  return out;
}

Decoded decode_beam(const CaptionerParams& params, const visual::VisualFeatureSet& features, Index beam,
                    Index max_len) {
  if (max_len < 1) throw Error("decode: max_len must be at least 1");
  if (beam < 1) throw Error("decode: beam must be at least 1");
  Tape tape(false);
  const auto w = bind(tape, params);
  const ImageContext image = prepare_image(w, features);

  struct Hyp {
    Decoded decoded;
    DecoderState state;
    bool done = false;
  };
  struct Candidate {
    double score;
    std::size_t from;
    double step;    // log-prob of this step alone
    TokenId token;  // -1 carries a finished hypothesis over unchanged
  };
  // Rounding in `score` can merge distinct steps of one beam; the step
  // log-prob then decides, so beam = 1 follows the greedy argmax.
  auto before = [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.from != b.from) return a.from < b.from;
    if (a.step != b.step) return a.step > b.step;
    return a.token < b.token;
  };
  std::vector<Hyp> beams = {{{}, initial_state(tape, params.attention_lstm.hidden.rows()), false}};
  for (Index t = 0; t < max_len; ++t) {
    if (std::all_of(beams.begin(), beams.end(), [](const Hyp& h) { return h.done; })) break;
    std::vector<Candidate> cands;
    std::vector<std::optional<StepOutput>> outs(beams.size());
    for (std::size_t b = 0; b < beams.size(); ++b) {
      const Hyp& h = beams[b];
      if (h.done) {
        cands.push_back({h.decoded.log_prob, b, 0.0, -1});
        continue;
      }
      const TokenId prev = h.decoded.tokens.empty() ? text::Vocabulary::kBosId : h.decoded.tokens.back();
      outs[b] = step(w, image, h.state, prev);
      const Matrix& lp = outs[b]->log_probs.value();
      for (Index v = 0; v < lp.cols(); ++v) cands.push_back({h.decoded.log_prob + lp(0, v), b, lp(0, v), v});
    }
    std::sort(cands.begin(), cands.end(), before);
    std::vector<Hyp> next;
    for (std::size_t i = 0; i < cands.size() && static_cast<Index>(next.size()) < beam; ++i) {
      const Candidate& c = cands[i];
      if (c.token < 0) {
        next.push_back(beams[c.from]);
        continue;
      }
      Hyp h;
      h.decoded = beams[c.from].decoded;
      h.decoded.tokens.push_back(c.token);
      h.decoded.log_prob += outs[c.from]->log_probs.value()(0, c.token);
      h.state = outs[c.from]->state;
      h.done = c.token == text::Vocabulary::kEosId;
      next.push_back(std::move(h));
    }
    beams = std::move(next);
  }
  return beams.front().decoded;
}

std::vector<std::string> caption_words(const text::Vocabulary& vocab, std::span<const TokenId> tokens) {
  std::vector<std::string> words;
  for (TokenId t : tokens) {
    if (t == text::Vocabulary::kBosId || t == text::Vocabulary::kEosId || t == text::Vocabulary::kPadId) continue;
    words.push_back(vocab.token(t));
  }
  return words;
}

std::string caption_text(const text::Vocabulary& vocab, std::span<const TokenId> tokens) {
  std::string out;
  for (const auto& word : caption_words(vocab, tokens)) {
    if (!out.empty()) out += ' ';
    out += word;
  }
  return out;
}

std::vector<TokenId> with_markers(const std::vector<TokenId>& ids) {
  std::vector<TokenId> out;
  out.reserve(ids.size() + 2);
  out.push_back(text::Vocabulary::kBosId);
  out.insert(out.end(), ids.begin(), ids.end());
  out.push_back(text::Vocabulary::kEosId);
  return out;
}

}  // namespace relmatch::caption

#include "relmatch/match/rscan.hpp"

#include "relmatch/diff/weights.hpp"
#include "relmatch/error.hpp"

namespace relmatch::match {

using namespace relmatch::diff;

MatcherParams init_matcher(const MatcherDims& dims, const MatcherHyper& hyper, Rng& rng) {
  if (!(hyper.lambda_region > 0.0) || !(hyper.lambda_relation > 0.0)) {
    throw Error("softmax temperatures must be positive");
  }
  if (!(hyper.margin >= 0.0)) throw Error("margin must be non-negative");
  MatcherParams p;
  p.hyper = hyper;
  p.weights.text = text::init_text_encoder({dims.vocab_size, dims.word_dim, dims.hidden, hyper.max_len}, rng);
  p.weights.visual = visual::init_visual_encoder(dims.region_dim, dims.relation_dim, dims.hidden, rng);
  const double a = std::sqrt(6.0 / static_cast<double>(dims.hidden + 1));
  p.weights.fusion_weight = uniform_matrix(rng, dims.hidden, 1, -a, a);
  p.weights.fusion_bias = Matrix::Zero(1, 1);
  p.weights.importance_weight = uniform_matrix(rng, dims.hidden, 1, -a, a);
  p.weights.importance_bias = Matrix::Zero(1, 1);
  return p;
}

Var unit_rows(Var x, double epsilon) { return div(x, clamp_min(l2norm_rows(x), epsilon)); }

Var normalized_similarities_unit(Var unit_words, Var unit_rows, double epsilon) {
  if (unit_rows.rows() == 0) throw DimensionError("normalized_similarities: empty row set");
  if (unit_rows.cols() != unit_words.cols()) {
    throw DimensionError("normalized_similarities: rows are " + shape_string(unit_rows.value()) + " but words are " +
                         shape_string(unit_words.value()));
  }
  const Var cosine = matmul(unit_rows, transpose(unit_words));
  const Var clipped = relu(cosine);
  return div(clipped, clamp_min(l2norm_cols(clipped), epsilon));
}

Var normalized_similarities(Var words, Var rows, double epsilon) {
  return normalized_similarities_unit(unit_rows(words, epsilon), unit_rows(rows, epsilon), epsilon);
}

Attended attend(Var shat, Var rows, double lambda) {
  if (!(lambda > 0.0)) throw Error("attention temperature must be positive");
  if (shat.rows() != rows.rows()) {
    throw DimensionError("attend: scores are " + shape_string(shat.value()) + " for rows " +
                         shape_string(rows.value()));
  }
  const Var attention = softmax_cols(scale(shat, lambda));
  return {attention, matmul(transpose(attention), rows)};
}

namespace {

Var mix(Var gate, Var attended_relation, Var attended_region) {
  return add(mul(gate, attended_relation), mul(rsub_scalar(1.0, gate), attended_region));
}

Var word_gate(Var words, Var weight, Var bias) { return sigmoid(add(matmul(words, weight), bias)); }

}  // namespace

Fused fuse(std::optional<Var> attended_relation, Var attended_region, Var words, Var fusion_weight,
           Var fusion_bias) {
  if (!attended_relation) {
    Tape& t = *words.tape();
    return {attended_region, t.constant(Matrix::Zero(words.rows(), 1))};
  }
  const Var gate = word_gate(words, fusion_weight, fusion_bias);
  return {mix(gate, *attended_relation, attended_region), gate};
}

PreparedText prepare_text(Var words, const MatcherWeights<Var>& weights, const MatcherHyper& hyper) {
  PreparedText t;
  t.words = words;
  t.norms = clamp_min(l2norm_rows(words), hyper.epsilon);
  t.unit = div(words, t.norms);
  t.fusion_gate = word_gate(words, weights.fusion_weight, weights.fusion_bias);
  t.importance_gate = word_gate(words, weights.importance_weight, weights.importance_bias);
  return t;
}

PreparedImage prepare_image(const visual::ProjectedVars& projected, const MatcherHyper& hyper) {
  PreparedImage im;
  im.regions = projected.regions;
  im.region_unit = unit_rows(projected.regions, hyper.epsilon);
  if (projected.relations) {
    im.relations = projected.relations;
    im.relation_unit = unit_rows(*projected.relations, hyper.epsilon);
  }
  return im;
}

Var similarity(const PreparedImage& image, const PreparedText& text, const MatcherHyper& hyper,
               AttentionTrace* trace) {
  const Attended region = attend(normalized_similarities_unit(text.unit, image.region_unit, hyper.epsilon),
                                 image.regions, hyper.lambda_region);
  std::optional<Attended> relation;
  if (image.relations) {
    relation = attend(normalized_similarities_unit(text.unit, *image.relation_unit, hyper.epsilon),
                      *image.relations, hyper.lambda_relation);
  }

  Var attended = region.vectors;
  Var gate;
  if (relation) {
    gate = text.fusion_gate;
    attended = mix(gate, relation->vectors, region.vectors);
  } else {
    gate = text.words.tape()->constant(Matrix::Zero(text.words.rows(), 1));
  }

  const Var numer = sum_cols(mul(attended, text.words));
  const Var denom = mul(clamp_min(l2norm_rows(attended), hyper.epsilon), text.norms);
  const Var word_sim = div(numer, denom);
  const Var sim = sum(abs(mul(text.importance_gate, word_sim)));

  if (trace != nullptr) {
    trace->region_attention = region.attention.value();
    trace->attended_region = region.vectors.value();
    if (relation) {
      trace->relation_attention = relation->attention.value();
      trace->attended_relation = relation->vectors.value();
    } else {
      trace->relation_attention = Matrix(0, text.words.rows());
      trace->attended_relation = Matrix::Zero(text.words.rows(), text.words.cols());
    }
    trace->fusion_gate = gate.value();
    trace->attended = attended.value();
    trace->word_similarity = word_sim.value();
    trace->importance_gate = text.importance_gate.value();
  }
  return sim;
}

Var similarity(const visual::ProjectedVars& image, Var words, const MatcherWeights<Var>& weights,
               const MatcherHyper& hyper, AttentionTrace* trace) {
  return similarity(prepare_image(image, hyper), prepare_text(words, weights, hyper), hyper, trace);
}

HardestNegatives hardest_negatives(const Matrix& scores) {
  const Index b = scores.rows();
  if (b != scores.cols()) throw DimensionError("score grid must be square, got " + shape_string(scores));
  if (b < 2) throw Error("hardest-negative loss needs a batch of at least 2 pairs");
  HardestNegatives out;
  out.caption.assign(static_cast<std::size_t>(b), -1);
  out.image.assign(static_cast<std::size_t>(b), -1);
  for (Index i = 0; i < b; ++i) {
    Index best_c = -1, best_v = -1;
    for (Index j = 0; j < b; ++j) {
      if (j == i) continue;
      if (best_c < 0 || scores(i, j) > scores(i, best_c)) best_c = j;
      if (best_v < 0 || scores(j, i) > scores(best_v, i)) best_v = j;
    }
    out.caption[static_cast<std::size_t>(i)] = best_c;
    out.image[static_cast<std::size_t>(i)] = best_v;
  }
  return out;
}

Var triplet_loss_hardest(Var scores, double margin) {
  const HardestNegatives neg = hardest_negatives(scores.value());
  Var total = scores.tape()->constant(Matrix::Zero(1, 1));
  for (Index i = 0; i < scores.rows(); ++i) {
    const Var slack = rsub_scalar(margin, element(scores, i, i));
    const Var caption_term = relu(add(slack, element(scores, i, neg.caption[static_cast<std::size_t>(i)])));
    const Var image_term = relu(add(slack, element(scores, neg.image[static_cast<std::size_t>(i)], i)));
    total = add(add(total, caption_term), image_term);
  }
  return total;
}

Var similarity_grid(const MatcherWeights<Var>& weights, const MatcherHyper& hyper,
                    std::span<const TrainingPair> batch) {
  std::vector<PreparedImage> images;
  std::vector<PreparedText> texts;
  for (const TrainingPair& p : batch) {
    images.push_back(prepare_image(visual::project(weights.visual, *p.features), hyper));
    texts.push_back(prepare_text(text::encode_text(weights.text, p.tokens, hyper.max_len), weights, hyper));
  }
  std::vector<Var> rows;
  for (const PreparedImage& im : images) {
    std::vector<Var> cells;
    for (const PreparedText& t : texts) cells.push_back(similarity(im, t, hyper));
    rows.push_back(concat_cols(cells));
  }
  return concat_rows(rows);
}

Var matcher_loss(const MatcherWeights<Var>& weights, const MatcherHyper& hyper, std::span<const TrainingPair> batch) {
  if (batch.size() < 2) throw Error("hardest-negative loss needs a batch of at least 2 pairs");
  return triplet_loss_hardest(similarity_grid(weights, hyper, batch), hyper.margin);
}

double similarity_value(const MatcherParams& params, const visual::VisualFeatureSet& features,
                        std::span<const text::TokenId> tokens, AttentionTrace* trace) {
  Tape tape(false);
  const auto w = bind(tape, params.weights);
  const Var words = text::encode_text(w.text, tokens, params.hyper.max_len);
  return similarity(visual::project(w.visual, features), words, w, params.hyper, trace).scalar();
}

}  // namespace relmatch::match

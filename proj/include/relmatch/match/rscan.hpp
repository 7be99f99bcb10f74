#pragma once

#include "relmatch/diff/ops.hpp"
#include "relmatch/rng.hpp"
#include "relmatch/text/encoder.hpp"
#include "relmatch/visual/projector.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace relmatch::match {

using diff::Matrix;
using diff::Tape;
using diff::Var;
using Eigen::Index;

/// Every trainable tensor of the relation-aware matcher.
template <class T>
struct MatcherWeights {
  text::TextEncoderWeights<T> text;
  visual::VisualEncoderWeights<T> visual;
  T fusion_weight;      // h x 1, ω_vf
  T fusion_bias;        // 1 x 1, β_vf
  T importance_weight;  // h x 1, ω_impt
  T importance_bias;    // 1 x 1, β_impt

  template <class F>
  void visit(F&& f, const std::string& p = {}) { visit_impl(*this, f, p); }
  template <class F>
  void visit(F&& f, const std::string& p = {}) const { visit_impl(*this, f, p); }

 private:
  template <class Self, class F>
  static void visit_impl(Self& s, F& f, const std::string& p) {
    s.text.visit(f, p + "text.");
    s.visual.visit(f, p + "visual.");
    f(p + "fusion_weight", s.fusion_weight);
    f(p + "fusion_bias", s.fusion_bias);
    f(p + "importance_weight", s.importance_weight);
    f(p + "importance_bias", s.importance_bias);
  }
};

/// Non-trainable settings of the similarity head.
struct MatcherHyper {
  double lambda_region = 9.0;
  double lambda_relation = 9.0;
  double margin = 0.2;
  /// Floor of every norm in a denominator.
  double epsilon = 1e-8;
  Index max_len = 64;
};

struct MatcherDims {
  Index vocab_size = 4;
  Index word_dim = 300;
  Index hidden = 1024;
  Index region_dim = 2048;
  Index relation_dim = 4096;
};

struct MatcherParams {
  MatcherWeights<Matrix> weights;
  MatcherHyper hyper;
};

/// Gate biases start at zero so both gates open at 0.5.
MatcherParams init_matcher(const MatcherDims& dims, const MatcherHyper& hyper, Rng& rng);

/// Intermediate quantities of one image-caption similarity, per word j.
struct AttentionTrace {
  Matrix region_attention;    // k x n, columns sum to 1
  Matrix relation_attention;  // m x n, empty when m = 0
  Matrix attended_region;     // n x h
  Matrix attended_relation;   // n x h, zeros when m = 0
  Matrix fusion_gate;         // n x 1
  Matrix attended;            // n x h
  Matrix word_similarity;     // n x 1, R(a_j, w_j)
  Matrix importance_gate;     // n x 1
};

/// Rows scaled to unit length, zero rows stay zero.
Var unit_rows(Var x, double epsilon);

/// ŝ (rows x n): cosine of every row with every word, clipped at zero and
/// normalised down each column. A column with no positive entry is all zero.
Var normalized_similarities(Var words, Var rows, double epsilon);
Var normalized_similarities_unit(Var unit_words, Var unit_rows, double epsilon);

struct Attended {
  Var attention;  // rows x n
  Var vectors;    // n x h
};

/// Column softmax of λ ŝ and the attention-weighted sums of `rows`.
Attended attend(Var shat, Var rows, double lambda);

struct Fused {
  Var vectors;  // n x h
  Var gate;     // n x 1
};

/// g = σ(w ω_vf + β_vf); a = g a_rel + (1 - g) a_rgn. Without relations the
/// gate is forced to 0 and a = a_rgn.
Fused fuse(std::optional<Var> attended_relation, Var attended_region, Var words, Var fusion_weight,
           Var fusion_bias);

/// Caption-side quantities shared by every image it is compared against.
struct PreparedText {
  Var words;
  Var unit;
  Var norms;  // n x 1, floored at ε
  Var fusion_gate;
  Var importance_gate;
};

struct PreparedImage {
  Var regions;
  Var region_unit;
  std::optional<Var> relations;
  std::optional<Var> relation_unit;
};

PreparedText prepare_text(Var words, const MatcherWeights<Var>& weights, const MatcherHyper& hyper);
PreparedImage prepare_image(const visual::ProjectedVars& projected, const MatcherHyper& hyper);

/// sim(V, T) = Σ_j |g_impt(w_j) R(a_j, w_j)|, 1x1.
Var similarity(const PreparedImage& image, const PreparedText& text, const MatcherHyper& hyper,
               AttentionTrace* trace = nullptr);

/// Unprepared convenience form.
Var similarity(const visual::ProjectedVars& image, Var words, const MatcherWeights<Var>& weights,
               const MatcherHyper& hyper, AttentionTrace* trace = nullptr);

struct HardestNegatives {
  std::vector<Index> caption;  // for image i, hardest mismatched caption column
  std::vector<Index> image;    // for caption j, hardest mismatched image row
};

/// Argmax over off-diagonal entries; ties go to the lowest index.
HardestNegatives hardest_negatives(const Matrix& scores);

/// Hinge triplet loss over a B x B score grid whose diagonal holds the
/// positive pairs (rows images, columns captions), summed over the batch:
///   Σ_i [α - s_ii + s_i,T⁻]_+ + [α - s_ii + s_V⁻,i]_+
Var triplet_loss_hardest(Var scores, double margin);

/// One (image features, caption tokens) positive pair.
struct TrainingPair {
  const visual::VisualFeatureSet* features;
  std::span<const text::TokenId> tokens;
};

/// B x B similarity grid for a batch, rows images and columns captions.
Var similarity_grid(const MatcherWeights<Var>& weights, const MatcherHyper& hyper,
                    std::span<const TrainingPair> batch);

/// Full loss from token ids and raw features through the encoders.
Var matcher_loss(const MatcherWeights<Var>& weights, const MatcherHyper& hyper, std::span<const TrainingPair> batch);

/// Value-only similarity for evaluation.
double similarity_value(const MatcherParams& params, const visual::VisualFeatureSet& features,
                        std::span<const text::TokenId> tokens, AttentionTrace* trace = nullptr);

}  // namespace relmatch::match

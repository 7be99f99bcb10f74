#pragma once

#include "relmatch/diff/ops.hpp"
#include "relmatch/rng.hpp"
#include "relmatch/visual/features.hpp"

#include <optional>
#include <string>

namespace relmatch::visual {

using diff::Var;

/// Affine maps into the joint space, v = v̂ W_v + b_v and r = r̂ W_r + b_r on
/// row vectors (the projection matrices are stored input-dim x h).
template <class T>
struct VisualEncoderWeights {
  T region_proj;     // d_v x h
  T region_bias;     // 1 x h
  T relation_proj;   // d_r x h
  T relation_bias;   // 1 x h

  template <class F>
  void visit(F&& f, const std::string& p = {}) { visit_impl(*this, f, p); }
  template <class F>
  void visit(F&& f, const std::string& p = {}) const { visit_impl(*this, f, p); }

 private:
  template <class Self, class F>
  static void visit_impl(Self& s, F& f, const std::string& p) {
    f(p + "region_proj", s.region_proj);
    f(p + "region_bias", s.region_bias);
    f(p + "relation_proj", s.relation_proj);
    f(p + "relation_bias", s.relation_bias);
  }
};

using VisualEncoderParams = VisualEncoderWeights<Matrix>;

/// Xavier-uniform projections, zero biases.
VisualEncoderParams init_visual_encoder(Eigen::Index region_dim, Eigen::Index relation_dim, Eigen::Index hidden,
                                        Rng& rng);

/// Projected rows on a tape. `relations` is unset when the image has m = 0.
struct ProjectedVars {
  Var regions;
  std::optional<Var> relations;
};

struct ProjectedVisual {
  Matrix regions;    // k x h
  Matrix relations;  // m x h
};

ProjectedVars project(const VisualEncoderWeights<Var>& weights, const VisualFeatureSet& features);
ProjectedVisual project(const VisualEncoderParams& params, const VisualFeatureSet& features);

}  // namespace relmatch::visual

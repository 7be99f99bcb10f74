#include "relmatch/visual/projector.hpp"

#include "relmatch/diff/weights.hpp"
#include "relmatch/error.hpp"

namespace relmatch::visual {

using namespace relmatch::diff;

VisualEncoderParams init_visual_encoder(Index region_dim, Index relation_dim, Index hidden, Rng& rng) {
  if (region_dim < 1 || relation_dim < 1 || hidden < 1) throw DimensionError("visual encoder dims must be positive");
  VisualEncoderParams p;
  p.region_proj = xavier_matrix(rng, region_dim, hidden);
  p.region_bias = Matrix::Zero(1, hidden);
  p.relation_proj = xavier_matrix(rng, relation_dim, hidden);
  p.relation_bias = Matrix::Zero(1, hidden);
  return p;
}

ProjectedVars project(const VisualEncoderWeights<Var>& w, const VisualFeatureSet& features) {
  if (features.regions.cols() != w.region_proj.rows()) {
    throw DimensionError("region features of image " + features.image_id + " are " +
                         shape_string(features.regions) + " but region_proj is " +
                         shape_string(w.region_proj.value()));
  }
  Tape& tape = *w.region_proj.tape();
  ProjectedVars out;
  out.regions = add(matmul(tape.constant(features.regions), w.region_proj), w.region_bias);
  if (features.relations.rows() > 0) {
    if (features.relations.cols() != w.relation_proj.rows()) {
      throw DimensionError("relation features of image " + features.image_id + " are " +
                           shape_string(features.relations) + " but relation_proj is " +
                           shape_string(w.relation_proj.value()));
    }
    out.relations = add(matmul(tape.constant(features.relations), w.relation_proj), w.relation_bias);
  }
  return out;
}

ProjectedVisual project(const VisualEncoderParams& params, const VisualFeatureSet& features) {
  Tape tape(false);
  const auto bound = bind(tape, params);
  const ProjectedVars v = project(bound, features);
  ProjectedVisual out;
  out.regions = v.regions.value();
  out.relations = v.relations ? v.relations->value() : Matrix(0, params.region_proj.cols());
  return out;
}

}  // namespace relmatch::visual

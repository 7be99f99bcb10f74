#pragma once

// Randomised invariant checks on the similarity head, shared by the unit
// tests and the acceptance runner.

#include "relmatch/match/rscan.hpp"
#include "relmatch/visual/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace props {

using namespace relmatch;

struct Outcome {
  bool attention_sums = true;
  bool gates_open = true;
  bool sim_bounded = true;
  bool permutation = true;
  bool argmax_stable = true;
  std::string detail;

  bool ok() const { return attention_sums && gates_open && sim_bounded && permutation && argmax_stable; }
};

inline Eigen::Index argmax_col(const Eigen::MatrixXd& a, Eigen::Index j) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < a.rows(); ++i)
    if (a(i, j) > a(best, j)) best = i;
  return best;
}

inline visual::VisualFeatureSet permuted(const visual::VisualFeatureSet& f, Rng& rng) {
  visual::VisualFeatureSet g = f;
  std::vector<Eigen::Index> pr(static_cast<std::size_t>(f.regions.rows()));
  std::iota(pr.begin(), pr.end(), Eigen::Index{0});
  std::shuffle(pr.begin(), pr.end(), rng);
  for (std::size_t i = 0; i < pr.size(); ++i) g.regions.row(static_cast<Eigen::Index>(i)) = f.regions.row(pr[i]);
  std::vector<Eigen::Index> pl(static_cast<std::size_t>(f.relations.rows()));
  std::iota(pl.begin(), pl.end(), Eigen::Index{0});
  std::shuffle(pl.begin(), pl.end(), rng);
  for (std::size_t i = 0; i < pl.size(); ++i) {
    g.relations.row(static_cast<Eigen::Index>(i)) = f.relations.row(pl[i]);
    g.labels[i] = f.labels[static_cast<std::size_t>(pl[i])];
  }
  return g;
}

/// One random case: dims, temperatures, gate biases and caption all drawn
/// from `seed`.
inline Outcome check_case(std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<Eigen::Index> hd(2, 8), kd(1, 5), md(0, 4), nd(1, 5), tok(4, 9);
  std::uniform_real_distribution<double> lam(0.1, 50.0), bias(-3.0, 3.0);
  const Eigen::Index h = hd(rng), k = kd(rng), m = md(rng), n = nd(rng);
  match::MatcherHyper hyper;
  hyper.lambda_region = lam(rng);
  hyper.lambda_relation = lam(rng);
  match::MatcherParams p = match::init_matcher({10, 6, h, 5, 7}, hyper, rng);
  p.weights.fusion_bias(0, 0) = bias(rng);
  p.weights.importance_bias(0, 0) = bias(rng);
  const visual::VisualFeatureSet f = visual::synth_features(seed, k, m, 5, 7);
  std::vector<text::TokenId> caption(static_cast<std::size_t>(n));
  for (auto& t : caption) t = tok(rng);

  Outcome out;
  match::AttentionTrace tr;
  const double sim = match::similarity_value(p, f, caption, &tr);
  auto col_sums_ok = [](const Eigen::MatrixXd& att) {
    return att.rows() == 0 || (att.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-6;
  };
  out.attention_sums = col_sums_ok(tr.region_attention) && col_sums_ok(tr.relation_attention);
  auto open = [](const Eigen::MatrixXd& g) { return (g.array() > 0.0).all() && (g.array() < 1.0).all(); };
  // Without relations the fusion gate is pinned to 0 by design.
  out.gates_open = open(tr.importance_gate) && (m == 0 ? (tr.fusion_gate.array() == 0.0).all() : open(tr.fusion_gate));
  out.sim_bounded = sim >= 0.0 && sim <= static_cast<double>(n) && (tr.word_similarity.array().abs() <= 1.0 + 1e-12).all();

  const double sim_perm = match::similarity_value(p, permuted(f, rng), caption);
  out.permutation = std::abs(sim - sim_perm) <= 1e-10;

  match::MatcherParams q = p;
  q.hyper.lambda_region = lam(rng);
  q.hyper.lambda_relation = lam(rng);
  match::AttentionTrace tq;
  match::similarity_value(q, f, caption, &tq);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (argmax_col(tr.region_attention, j) != argmax_col(tq.region_attention, j)) out.argmax_stable = false;
    if (m > 0 && argmax_col(tr.relation_attention, j) != argmax_col(tq.relation_attention, j)) {
      out.argmax_stable = false;
    }
  }
  if (!out.ok()) {
    out.detail = "seed " + std::to_string(seed) + " h=" + std::to_string(h) + " k=" + std::to_string(k) +
                 " m=" + std::to_string(m) + " n=" + std::to_string(n) + " sim=" + std::to_string(sim) +
                 " perm=" + std::to_string(sim_perm);
  }
  return out;
}

}  // namespace props

#include "oracles.hpp"
#include "toy.hpp"
#include "properties.hpp"

#include "relmatch/diff/grad_check.hpp"
#include "relmatch/diff/weights.hpp"
#include "relmatch/error.hpp"
#include "relmatch/match/rscan.hpp"

#include <gtest/gtest.h>

using namespace relmatch;
using namespace relmatch::match;
using relmatch::diff::Tape;

namespace {

MatcherWeights<Var> gate_vars(Tape& t, const oracle::GateParams& g) {
  MatcherWeights<Var> w;
  w.fusion_weight = t.constant(g.fusion_weight);
  w.fusion_bias = t.constant(Matrix::Constant(1, 1, g.fusion_bias));
  w.importance_weight = t.constant(g.importance_weight);
  w.importance_bias = t.constant(Matrix::Constant(1, 1, g.importance_bias));
  return w;
}

oracle::GateParams random_gates(Rng& rng, Index h) {
  oracle::GateParams g;
  g.fusion_weight = gaussian_matrix(rng, h, 1).col(0);
  g.importance_weight = gaussian_matrix(rng, h, 1).col(0);
  g.fusion_bias = gaussian_matrix(rng, 1, 1)(0, 0);
  g.importance_bias = gaussian_matrix(rng, 1, 1)(0, 0);
  return g;
}

double sim_of(const Matrix& regions, const Matrix& relations, const Matrix& words, const oracle::GateParams& g,
              const MatcherHyper& hyper, AttentionTrace* trace = nullptr) {
  Tape t(false);
  visual::ProjectedVars v;
  v.regions = t.constant(regions);
  if (relations.rows() > 0) v.relations = t.constant(relations);
  const auto w = gate_vars(t, g);
  return similarity(v, t.constant(words), w, hyper, trace).scalar();
}

}  // namespace

TEST(NormalizedSimilarities, SelfRowScoresOne) {
  Tape t;
  Matrix w(1, 3);
  w << 0.3, -1.0, 2.0;
  const Matrix s = normalized_similarities(t.constant(w), t.constant(w), 1e-8).value();
  EXPECT_NEAR(s(0, 0), 1.0, 1e-15);
}

TEST(NormalizedSimilarities, NegativeColumnIsZeroNotNan) {
  Tape t;
  Matrix w(1, 2);
  w << 1.0, 0.0;
  Matrix rows(2, 2);
  rows << -1.0, 0.5, -2.0, -1.0;
  const Matrix s = normalized_similarities(t.constant(w), t.constant(rows), 1e-8).value();
  EXPECT_TRUE(s.isZero(0.0));
  // Zero vectors are guarded too.
  const Matrix z = normalized_similarities(t.constant(Matrix::Zero(1, 2)), t.constant(rows), 1e-8).value();
  EXPECT_TRUE(z.isZero(0.0));
}

TEST(NormalizedSimilarities, MatchesScriptedOracle) {
  Rng rng(1);
  Tape t;
  const Matrix rows = gaussian_matrix(rng, 3, 5), words = gaussian_matrix(rng, 2, 5);
  const Matrix s = normalized_similarities(t.constant(words), t.constant(rows), 1e-8).value();
  const auto expect = oracle::normalized_similarities(rows, words, 1e-8);
  for (int l = 0; l < 3; ++l)
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(s(l, j), expect[l][j], 1e-10);
}

TEST(Attend, SingleRowTakesAllWeight) {
  Tape t;
  Matrix row(1, 4);
  row << 1, 2, 3, 4;
  Matrix shat(1, 2);
  shat << 0.3, 0.0;
  const Attended a = attend(t.constant(shat), t.constant(row), 9.0);
  EXPECT_EQ(a.attention.value(), Matrix::Ones(1, 2));
  EXPECT_EQ(a.vectors.value().row(0), row.row(0));
  EXPECT_EQ(a.vectors.value().row(1), row.row(0));
}

TEST(Attend, LargeTemperatureApproachesHardAlignment) {
  Rng rng(2);
  Tape t;
  const Matrix rows = gaussian_matrix(rng, 4, 3);
  Matrix shat(4, 1);
  shat << 0.1, 0.9, 0.3, 0.2;
  const Matrix a = attend(t.constant(shat), t.constant(rows), 100.0).vectors.value();
  EXPECT_LT((a.row(0) - rows.row(1)).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Attend, MatchesScriptedSoftmax) {
  Rng rng(3);
  Tape t;
  const Matrix rows = gaussian_matrix(rng, 3, 4), words = gaussian_matrix(rng, 2, 4);
  const auto shat = oracle::normalized_similarities(rows, words, 1e-8);
  Matrix shat_m(3, 2);
  for (int l = 0; l < 3; ++l)
    for (int j = 0; j < 2; ++j) shat_m(l, j) = shat[l][j];
  const Attended a = attend(t.constant(shat_m), t.constant(rows), 4.0);
  const auto att = oracle::attention(shat, 4.0);
  for (int l = 0; l < 3; ++l)
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(a.attention.value()(l, j), att[l][j], 1e-12);
  EXPECT_LT((a.vectors.value() - oracle::attended(att, rows, 2)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Fuse, ZeroGateParamsGiveMidpoint) {
  Rng rng(4);
  Tape t;
  const Matrix rel = gaussian_matrix(rng, 2, 3), rgn = gaussian_matrix(rng, 2, 3), w = gaussian_matrix(rng, 2, 3);
  const Fused f = fuse(t.constant(rel), t.constant(rgn), t.constant(w), t.constant(Matrix::Zero(3, 1)),
                       t.constant(Matrix::Zero(1, 1)));
  EXPECT_TRUE(f.gate.value().isApprox(Matrix::Constant(2, 1, 0.5)));
  EXPECT_LT((f.vectors.value() - 0.5 * (rel + rgn)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Fuse, SaturatedGateSelectsRelations) {
  Rng rng(5);
  Tape t;
  const Matrix rel = gaussian_matrix(rng, 2, 3), rgn = gaussian_matrix(rng, 2, 3), w = gaussian_matrix(rng, 2, 3);
  const Fused f = fuse(t.constant(rel), t.constant(rgn), t.constant(w), t.constant(Matrix::Zero(3, 1)),
                       t.constant(Matrix::Constant(1, 1, 50.0)));
  EXPECT_LT((f.vectors.value() - rel).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Fuse, MatchesScriptedGate) {
  Rng rng(6);
  Tape t;
  const Matrix rel = gaussian_matrix(rng, 3, 4), rgn = gaussian_matrix(rng, 3, 4), w = gaussian_matrix(rng, 3, 4);
  const Matrix omega = gaussian_matrix(rng, 4, 1);
  const double beta = -0.3;
  const Fused f = fuse(t.constant(rel), t.constant(rgn), t.constant(w), t.constant(omega),
                       t.constant(Matrix::Constant(1, 1, beta)));
  for (int j = 0; j < 3; ++j) {
    const double g = oracle::logistic(w.row(j).dot(omega.col(0)) + beta);
    EXPECT_NEAR(f.gate.value()(j, 0), g, 1e-14);
    for (int d = 0; d < 4; ++d) EXPECT_NEAR(f.vectors.value()(j, d), g * rel(j, d) + (1 - g) * rgn(j, d), 1e-14);
  }
}

TEST(Fuse, NoRelationsRoutesToRegions) {
  Rng rng(7);
  Tape t;
  const Matrix rgn = gaussian_matrix(rng, 2, 3), w = gaussian_matrix(rng, 2, 3);
  const Fused f = fuse(std::nullopt, t.constant(rgn), t.constant(w), t.constant(Matrix::Ones(3, 1)),
                       t.constant(Matrix::Zero(1, 1)));
  EXPECT_EQ(f.vectors.value(), rgn);
  EXPECT_TRUE(f.gate.value().isZero(0.0));
}

TEST(Similarity, PerfectMatchScoresOne) {
  Rng rng(8);
  const Matrix w = gaussian_matrix(rng, 1, 4);
  oracle::GateParams g = random_gates(rng, 4);
  g.importance_weight.setZero();
  g.importance_bias = 50.0;
  EXPECT_NEAR(sim_of(w, Matrix(0, 4), w, g, MatcherHyper{}), 1.0, 1e-12);
}

TEST(Similarity, ClosedImportanceGateKillsScore) {
  Rng rng(9);
  oracle::GateParams g = random_gates(rng, 4);
  g.importance_weight.setZero();
  g.importance_bias = -50.0;
  const double s = sim_of(gaussian_matrix(rng, 3, 4), gaussian_matrix(rng, 2, 4), gaussian_matrix(rng, 5, 4), g,
                          MatcherHyper{});
  EXPECT_LT(s, 5 * 2e-22);
}

TEST(Similarity, MatchesLiteralOracleOnBatch) {
  Rng rng(10);
  MatcherHyper hyper;
  hyper.lambda_region = 4.0;
  hyper.lambda_relation = 6.0;
  const oracle::GateParams g = random_gates(rng, 6);
  std::vector<Matrix> regions, relations, words;
  for (int i = 0; i < 2; ++i) {
    regions.push_back(gaussian_matrix(rng, 3, 6));
    relations.push_back(gaussian_matrix(rng, 2, 6));
    words.push_back(gaussian_matrix(rng, 3 + i, 6));
  }
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double got = sim_of(regions[i], relations[i], words[j], g, hyper);
      const double want = oracle::similarity(regions[i], relations[i], words[j], g, 4.0, 6.0, hyper.epsilon);
      EXPECT_NEAR(got, want, 1e-8);
    }
  }
}

TEST(Similarity, TraceHoldsPerWordQuantities) {
  Rng rng(11);
  const oracle::GateParams g = random_gates(rng, 5);
  AttentionTrace tr;
  const double s = sim_of(gaussian_matrix(rng, 4, 5), gaussian_matrix(rng, 3, 5), gaussian_matrix(rng, 2, 5), g,
                          MatcherHyper{}, &tr);
  EXPECT_EQ(tr.region_attention.rows(), 4);
  EXPECT_EQ(tr.relation_attention.rows(), 3);
  EXPECT_EQ(tr.attended.rows(), 2);
  EXPECT_NEAR(tr.importance_gate.cwiseProduct(tr.word_similarity).cwiseAbs().sum(), s, 1e-14);
}

TEST(Triplet, SatisfiedMarginGivesZero) {
  Tape t;
  const Matrix s = Matrix::Identity(3, 3);
  EXPECT_EQ(triplet_loss_hardest(t.constant(s), 0.2).scalar(), 0.0);
}

TEST(Triplet, TiedScoresGiveTwiceMarginPerPair) {
  Tape t;
  const Matrix s = Matrix::Constant(4, 4, 0.7);
  EXPECT_NEAR(triplet_loss_hardest(t.constant(s), 0.2).scalar(), 4 * 2 * 0.2, 1e-15);
}

TEST(Triplet, MatchesExhaustiveSearch) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    Tape t;
    const Matrix s = uniform_matrix(rng, 3, 3, 0, 2);
    EXPECT_EQ(triplet_loss_hardest(t.constant(s), 0.2).scalar(), oracle::triplet_loss_bruteforce(s, 0.2));
  }
}

TEST(Triplet, TiesPickLowestIndex) {
  Matrix s = Matrix::Zero(3, 3);
  const HardestNegatives n = hardest_negatives(s);
  EXPECT_EQ(n.caption, (std::vector<Index>{1, 0, 0}));
  EXPECT_EQ(n.image, (std::vector<Index>{1, 0, 0}));
}

TEST(Triplet, SinglePairBatchIsAnError) {
  Tape t;
  EXPECT_THROW(triplet_loss_hardest(t.constant(Matrix::Ones(1, 1)), 0.2), Error);
}

TEST(MatcherGradient, FullLossPassesFiniteDifferences) {
  const toy::Setup s = toy::make_setup(21, 8, 3, 2, 2);
  std::function<Var(Tape&, const MatcherWeights<Var>&)> loss = [&](Tape&, const MatcherWeights<Var>& w) {
    return matcher_loss(w, s.params.hyper, s.batch());
  };
  diff::GradCheckOptions opt;
  opt.max_entries_per_param = 40;
  const auto report = diff::grad_check(loss, s.params.weights, opt);
  EXPECT_TRUE(report.passed) << report.max_rel_error << " " << report.worst_entry;
  EXPECT_GT(report.checked, 300u);
}

TEST(MatcherProperties, HoldOnRandomCases) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const props::Outcome o = props::check_case(seed);
    EXPECT_TRUE(o.attention_sums) << o.detail;
    EXPECT_TRUE(o.gates_open) << o.detail;
    EXPECT_TRUE(o.sim_bounded) << o.detail;
    EXPECT_TRUE(o.permutation) << o.detail;
    EXPECT_TRUE(o.argmax_stable) << o.detail;
  }
}

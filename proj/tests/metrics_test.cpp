#include "relmatch/error.hpp"
#include "relmatch/metrics/cider.hpp"
#include "relmatch/metrics/retrieval.hpp"
#include "relmatch/text/tokenize.hpp"

#include "toy.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace relmatch;
using namespace relmatch::metrics;

namespace {

// Exhaustive ranking: stable sort of candidate indices by descending score.
std::vector<Index> sorted_order(const Eigen::VectorXd& scores) {
  std::vector<Index> idx(static_cast<std::size_t>(scores.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return scores(a) > scores(b); });
  return idx;
}

double oracle_recall(const MatrixXd& grid, const std::vector<std::size_t>& gold, Index k, Direction dir) {
  int hits = 0, queries = 0;
  if (dir == Direction::TextToImage) {
    for (Index j = 0; j < grid.cols(); ++j, ++queries) {
      const auto order = sorted_order(grid.col(j));
      for (Index r = 0; r < k; ++r)
        if (order[static_cast<std::size_t>(r)] == static_cast<Index>(gold[static_cast<std::size_t>(j)])) ++hits;
    }
  } else {
    for (Index i = 0; i < grid.rows(); ++i, ++queries) {
      const auto order = sorted_order(grid.row(i).transpose());
      bool hit = false;
      for (Index r = 0; r < k; ++r) hit = hit || gold[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] ==
                                                     static_cast<std::size_t>(i);
      hits += hit ? 1 : 0;
    }
  }
  return static_cast<double>(hits) / queries;
}

std::vector<std::size_t> five_per_image(std::size_t images) {
  std::vector<std::size_t> gold;
  for (std::size_t i = 0; i < images; ++i)
    for (int c = 0; c < 5; ++c) gold.push_back(i);
  return gold;
}

Tokens toks(const std::string& s) { return text::tokenize(s); }

}  // namespace

TEST(Recall, IdentityGridIsPerfect) {
  const MatrixXd grid = MatrixXd::Identity(6, 6);
  const std::vector<std::size_t> gold = {0, 1, 2, 3, 4, 5};
  EXPECT_EQ(recall_at_k(grid, gold, 1, Direction::ImageToText), 1.0);
  EXPECT_EQ(recall_at_k(grid, gold, 1, Direction::TextToImage), 1.0);
}

TEST(Recall, ConstantGridTiesGoToLowerIndex) {
  const MatrixXd grid = MatrixXd::Constant(4, 4, 0.3);
  const std::vector<std::size_t> gold = {0, 1, 2, 3};
  EXPECT_DOUBLE_EQ(recall_at_k(grid, gold, 1, Direction::TextToImage), 0.25);
  EXPECT_DOUBLE_EQ(recall_at_k(grid, gold, 1, Direction::ImageToText), 0.25);
  EXPECT_EQ(gold_ranks(grid, gold, Direction::TextToImage), (std::vector<Index>{1, 2, 3, 4}));
}

TEST(Recall, MatchesExhaustiveSortOnRandomGrids) {
  Rng rng(5);
  const auto gold = five_per_image(10);
  for (int trial = 0; trial < 20; ++trial) {
    MatrixXd grid = uniform_matrix(rng, 10, 50, -1, 1);
    // Force some ties.
    grid(3, 7) = grid(3, 15);
    grid(2, 9) = grid(5, 9);
    for (Index k : {1, 5, 10}) {
      EXPECT_DOUBLE_EQ(recall_at_k(grid, gold, k, Direction::ImageToText),
                       oracle_recall(grid, gold, k, Direction::ImageToText));
      EXPECT_DOUBLE_EQ(recall_at_k(grid, gold, k, Direction::TextToImage),
                       oracle_recall(grid, gold, k, Direction::TextToImage));
    }
  }
}

TEST(Recall, MonotoneInKAndInvariantUnderIncreasingMaps) {
  Rng rng(6);
  const auto gold = five_per_image(8);
  const MatrixXd grid = uniform_matrix(rng, 8, 40, -1, 1);
  const MatrixXd warped = grid.array().exp() * 3.0 + 1.0;
  for (Direction d : {Direction::ImageToText, Direction::TextToImage}) {
    double prev = 0;
    for (Index k = 1; k <= 8; ++k) {
      const double r = recall_at_k(grid, gold, k, d);
      EXPECT_GE(r, prev);
      EXPECT_EQ(r, recall_at_k(warped, gold, k, d));
      prev = r;
    }
  }
  const RetrievalResult s = summarize(grid, gold);
  EXPECT_LE(s.text_to_image.r1, s.text_to_image.r5);
  EXPECT_LE(s.text_to_image.r5, s.text_to_image.r10);
}

TEST(Recall, KAboveCandidatesIsAnError) {
  const MatrixXd grid = MatrixXd::Identity(3, 3);
  const std::vector<std::size_t> gold = {0, 1, 2};
  EXPECT_THROW(recall_at_k(grid, gold, 4, Direction::TextToImage), Error);
  EXPECT_THROW(recall_at_k(grid, gold, 0, Direction::TextToImage), Error);
}

TEST(Recall, MedianRank) {
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 2, 10}), 3.0);
}

TEST(EvalRetrieval, GridMatchesPerCellSimilarityAndThreadCount) {
  const toy::Setup s = toy::make_setup(7, 6, 3, 2, 5, 5, 10);
  std::vector<match::EncodedPair> caps;
  for (std::size_t i = 0; i < 5; ++i) caps.push_back({i, s.captions[i]});
  const MatrixXd one = similarity_grid_values(s.params, s.features, caps, 1);
  const MatrixXd many = similarity_grid_values(s.params, s.features, caps, 4);
  EXPECT_EQ(one, many);
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 5; ++j)
      EXPECT_NEAR(one(i, j), match::similarity_value(s.params, s.features[i], s.captions[j]), 1e-12);
}

TEST(EvalRetrieval, SingletonFoldsAreTriviallyPerfectForTextToImage) {
  const toy::Setup s = toy::make_setup(8, 6, 3, 2, 4, 5, 10);
  std::vector<match::EncodedPair> caps;
  for (std::size_t i = 0; i < 4; ++i) caps.push_back({i, s.captions[i]});
  const FoldedRetrieval r = eval_retrieval(s.params, s.features, caps, 4);
  ASSERT_EQ(r.folds.size(), 4u);
  EXPECT_EQ(r.text_to_image.r1, 1.0);
  EXPECT_EQ(r.image_to_text.r1, 1.0);
}

TEST(EvalRetrieval, FoldMeanEqualsSeparateRuns) {
  const toy::Setup s = toy::make_setup(9, 6, 3, 2, 10, 5, 10);
  std::vector<match::EncodedPair> caps;
  for (std::size_t i = 0; i < 10; ++i) {
    caps.push_back({i, s.captions[i]});
    caps.push_back({i, s.captions[(i + 3) % 10]});
  }
  const FoldedRetrieval all = eval_retrieval(s.params, s.features, caps, 5);
  double i2t = 0, t2i = 0;
  for (std::size_t f = 0; f < 5; ++f) {
    const std::span<const visual::VisualFeatureSet> feats(s.features.data() + 2 * f, 2);
    std::vector<match::EncodedPair> sub;
    for (const auto& c : caps)
      if (c.image / 2 == f) sub.push_back({c.image - 2 * f, c.tokens});
    const FoldedRetrieval one = eval_retrieval(s.params, feats, sub, 1);
    i2t += one.image_to_text.r1;
    t2i += one.text_to_image.r1;
  }
  EXPECT_NEAR(all.image_to_text.r1, i2t / 5, 1e-15);
  EXPECT_NEAR(all.text_to_image.r1, t2i / 5, 1e-15);
}

TEST(EvalRetrieval, MissingImageIsAnError) {
  const toy::Setup s = toy::make_setup(10, 4, 2, 1, 2, 4, 10);
  const std::vector<match::EncodedPair> caps = {{0, s.captions[0]}, {5, s.captions[1]}};
  EXPECT_THROW(eval_retrieval(s.params, s.features, caps, 1), Error);
}

TEST(Cider, NgramCounts) {
  const NgramCounts c = count_ngrams(toks("a b a b"));
  EXPECT_EQ(c[0].at("a"), 2.0);
  EXPECT_EQ(c[1].at("a b"), 2.0);
  EXPECT_EQ(c[3].at("a b a b"), 1.0);
  EXPECT_EQ(c[3].size(), 1u);
}

TEST(Cider, HandComputedTwoDocumentFixture) {
  // Corpus: image A {"a cat on a mat"}, image B {"a dog on a rug"}; N = 2.
  // Candidate "a cat on a rug" for A, equal lengths so no penalty. With
  // L = log 2 the idf is 0 for "a", "on", "on a" (df 2) and L elsewhere:
  //   n=1: hyp {cat:L, rug:L}, ref {cat:L, mat:L} -> L^2 / 2L^2 = 1/2
  //   n=2: 4 bigrams, 3 weighted each side, 2 shared -> 2/3
  //   n=3: 3 trigrams each, 2 shared -> 2/3
  //   n=4: 2 four-grams each, 1 shared -> 1/2
  // mean = 7/12, times 10.
  const std::vector<std::vector<Tokens>> refs = {{toks("a cat on a mat")}, {toks("a dog on a rug")}};
  const CiderModel model(refs);
  EXPECT_EQ(model.corpus_size(), 2u);
  EXPECT_EQ(model.document_frequency("on a"), 2.0);
  EXPECT_NEAR(cider_d(toks("a cat on a rug"), refs[0], model), 70.0 / 12.0, 1e-6);
}

TEST(Cider, IdenticalCaptionScoresTen) {
  const std::vector<std::vector<Tokens>> refs = {{toks("a cat on a mat")}, {toks("a dog on a rug")}};
  const CiderModel model(refs);
  EXPECT_NEAR(cider_d(toks("a cat on a mat"), refs[0], model), 10.0, 1e-12);
}

TEST(Cider, LengthPenaltyApplies) {
  const std::vector<std::vector<Tokens>> refs = {{toks("a cat on a mat")}, {toks("a dog on a rug")}};
  const CiderModel model(refs);
  // A huge sigma switches the penalty off; one missing token costs exp(-1/72).
  const double s = cider_d(toks("a cat on a mat"), refs[0], model, 6.0);
  const double wide = cider_d(toks("a cat on a mat"), refs[0], model, 1e9);
  EXPECT_DOUBLE_EQ(s, wide);
  const double shorter = cider_d(toks("a cat on a"), refs[0], model, 6.0);
  const double shorter_wide = cider_d(toks("a cat on a"), refs[0], model, 1e9);
  EXPECT_NEAR(shorter / shorter_wide, std::exp(-1.0 / 72.0), 1e-12);
}

TEST(Cider, NoSharedTokensScoresZero) {
  const std::vector<std::vector<Tokens>> refs = {{toks("a cat on a mat")}, {toks("a dog on a rug")}};
  const CiderModel model(refs);
  EXPECT_EQ(cider_d(toks("three blue trucks"), refs[0], model), 0.0);
  EXPECT_EQ(cider_d({}, refs[0], model), 0.0);
}

TEST(Cider, MoreMatchesScoreAtLeastAsHigh) {
  const std::vector<std::vector<Tokens>> refs = {{toks("a man riding a brown horse")},
                                                 {toks("a dog sleeping on a couch")}};
  const CiderModel model(refs);
  const double fewer = cider_d(toks("a man riding a blue car"), refs[0], model);
  const double more = cider_d(toks("a man riding a brown car"), refs[0], model);
  EXPECT_GT(fewer, 0.0);
  EXPECT_GE(more, fewer);
}

TEST(Cider, SymmetricInReferenceOrderAndBounded) {
  Rng rng(12);
  const std::vector<std::string> words = {"a", "man", "dog", "on", "the", "grass", "riding", "red", "ball"};
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1), len(1, 8);
  auto sentence = [&] {
    Tokens t(len(rng));
    for (auto& w : t) w = words[pick(rng)];
    return t;
  };
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<Tokens>> refs(4);
    for (auto& r : refs) r = {sentence(), sentence(), sentence()};
    const CiderModel model(refs);
    const Tokens cand = sentence();
    const double s = cider_d(cand, refs[0], model);
    std::vector<Tokens> rev(refs[0].rbegin(), refs[0].rend());
    EXPECT_NEAR(s, cider_d(cand, rev, model), 1e-12);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 10.0 + 1e-12);
  }
}

#pragma once

#include "relmatch/match/rscan.hpp"
#include "relmatch/match/trainer.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <span>
#include <string>
#include <vector>

namespace relmatch::metrics {

using Eigen::Index;
using Eigen::MatrixXd;

enum class Direction { ImageToText, TextToImage };

/// 1-based rank of the best gold item for every query. Grid rows are images,
/// columns captions; caption_image[j] is the gold image of caption j. Equal
/// scores rank the lower candidate index first.
std::vector<Index> gold_ranks(const MatrixXd& grid, std::span<const std::size_t> caption_image, Direction dir);

/// Fraction of queries whose gold item is among the top K candidates.
/// Throws if K < 1 or K exceeds the number of candidates.
double recall_at_k(const MatrixXd& grid, std::span<const std::size_t> caption_image, Index k, Direction dir);

double median(std::vector<Index> ranks);

struct DirectionScores {
  double r1 = 0, r5 = 0, r10 = 0;
  double median_rank = 0;
};

struct RetrievalResult {
  MatrixXd grid;  // images x captions
  DirectionScores image_to_text;
  DirectionScores text_to_image;
};

/// Recalls at 1/5/10 in both directions. A K above the candidate count
/// counts every query as a hit.
RetrievalResult summarize(MatrixXd grid, std::span<const std::size_t> caption_image);

struct FoldedRetrieval {
  std::vector<RetrievalResult> folds;
  DirectionScores image_to_text;  // mean over folds
  DirectionScores text_to_image;
};

/// Worker count: RELMATCH_THREADS if set, else the hardware concurrency.
unsigned worker_count();

/// Value-only similarity grid over all images x captions.
MatrixXd similarity_grid_values(const match::MatcherParams& params,
                                std::span<const visual::VisualFeatureSet> features,
                                std::span<const match::EncodedPair> captions, unsigned threads = 0);

/// Splits the images into `folds` contiguous blocks, scores each block
/// against its own captions and averages the per-fold metrics.
FoldedRetrieval eval_retrieval(const match::MatcherParams& params, std::span<const visual::VisualFeatureSet> features,
                               std::span<const match::EncodedPair> captions, std::size_t folds, unsigned threads = 0);

nlohmann::ordered_json to_json(const DirectionScores& s);
nlohmann::ordered_json to_json(const FoldedRetrieval& r);

/// Aligned text table: one row per fold plus the mean.
std::string format_table(const FoldedRetrieval& r);

}  // namespace relmatch::metrics

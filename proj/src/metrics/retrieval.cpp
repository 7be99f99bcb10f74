#include "relmatch/metrics/retrieval.hpp"

#include "relmatch/diff/weights.hpp"
#include "relmatch/error.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <thread>

namespace relmatch::metrics {

using namespace relmatch::diff;

namespace {

void check_grid(const MatrixXd& grid, std::span<const std::size_t> caption_image) {
  if (static_cast<Index>(caption_image.size()) != grid.cols()) {
    throw DimensionError("retrieval: grid has " + std::to_string(grid.cols()) + " captions but " +
                         std::to_string(caption_image.size()) + " gold labels");
  }
  if (!grid.allFinite()) throw Error("retrieval: similarity grid is not finite");
  for (std::size_t img : caption_image)
    if (static_cast<Index>(img) >= grid.rows()) throw Error("retrieval: gold image index out of range");
}

// Candidates ranked strictly ahead of `gold` along a score vector.
template <class Scores>
Index rank_of(const Scores& scores, Index gold) {
  Index ahead = 0;
  for (Index c = 0; c < scores.size(); ++c) {
    if (scores(c) > scores(gold) || (scores(c) == scores(gold) && c < gold)) ++ahead;
  }
  return ahead + 1;
}

double recall_from_ranks(const std::vector<Index>& ranks, Index k) {
  Index hits = 0;
  for (Index r : ranks) hits += r <= k ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

DirectionScores scores_from_ranks(const std::vector<Index>& ranks) {
  return {recall_from_ranks(ranks, 1), recall_from_ranks(ranks, 5), recall_from_ranks(ranks, 10), median(ranks)};
}

struct TextValues {
  Matrix words, unit, norms, fusion_gate, importance_gate;
};
struct ImageValues {
  Matrix regions, region_unit;
  std::optional<Matrix> relations, relation_unit;
};

}  // namespace

std::vector<Index> gold_ranks(const MatrixXd& grid, std::span<const std::size_t> caption_image, Direction dir) {
  check_grid(grid, caption_image);
  std::vector<Index> ranks;
  if (dir == Direction::TextToImage) {
    for (Index j = 0; j < grid.cols(); ++j) {
      ranks.push_back(rank_of(grid.col(j), static_cast<Index>(caption_image[static_cast<std::size_t>(j)])));
    }
    return ranks;
  }
  for (Index i = 0; i < grid.rows(); ++i) {
    Index best = -1;
    for (Index j = 0; j < grid.cols(); ++j) {
      if (static_cast<Index>(caption_image[static_cast<std::size_t>(j)]) != i) continue;
      const Index r = rank_of(grid.row(i), j);
      if (best < 0 || r < best) best = r;
    }
    if (best < 0) throw Error("retrieval: image " + std::to_string(i) + " has no gold caption");
    ranks.push_back(best);
  }
  return ranks;
}

double recall_at_k(const MatrixXd& grid, std::span<const std::size_t> caption_image, Index k, Direction dir) {
  const Index candidates = dir == Direction::ImageToText ? grid.cols() : grid.rows();
  if (k < 1) throw Error("recall@K needs K >= 1");
  if (k > candidates) {
    throw Error("recall@" + std::to_string(k) + " exceeds the " + std::to_string(candidates) + " candidates");
  }
  return recall_from_ranks(gold_ranks(grid, caption_image, dir), k);
}

double median(std::vector<Index> ranks) {
  if (ranks.empty()) throw Error("median of an empty rank list");
  std::sort(ranks.begin(), ranks.end());
  const std::size_t n = ranks.size();
  if (n % 2 == 1) return static_cast<double>(ranks[n / 2]);
  return 0.5 * static_cast<double>(ranks[n / 2 - 1] + ranks[n / 2]);
}

RetrievalResult summarize(MatrixXd grid, std::span<const std::size_t> caption_image) {
  RetrievalResult r;
  r.image_to_text = scores_from_ranks(gold_ranks(grid, caption_image, Direction::ImageToText));
  r.text_to_image = scores_from_ranks(gold_ranks(grid, caption_image, Direction::TextToImage));
  r.grid = std::move(grid);
  return r;
}

unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("RELMATCH_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw ConfigError("RELMATCH_THREADS must be a positive integer");
    n = std::min<unsigned>(n, static_cast<unsigned>(v));
  }
  return n;
}

MatrixXd similarity_grid_values(const match::MatcherParams& params,
                                std::span<const visual::VisualFeatureSet> features,
                                std::span<const match::EncodedPair> captions, unsigned threads) {
  const match::MatcherHyper& hyper = params.hyper;
  std::vector<ImageValues> images;
  std::vector<TextValues> texts;
  {
    Tape tape(false);
    const auto w = bind(tape, params.weights);
    for (const auto& f : features) {
      const match::PreparedImage im = match::prepare_image(visual::project(w.visual, f), hyper);
      ImageValues v{im.regions.value(), im.region_unit.value(), {}, {}};
      if (im.relations) {
        v.relations = im.relations->value();
        v.relation_unit = im.relation_unit->value();
      }
      images.push_back(std::move(v));
    }
    for (const auto& c : captions) {
      if (c.image >= features.size()) throw Error("retrieval: caption refers to a missing image");
      const match::PreparedText t =
          match::prepare_text(text::encode_text(w.text, c.tokens, hyper.max_len), w, hyper);
      texts.push_back({t.words.value(), t.unit.value(), t.norms.value(), t.fusion_gate.value(),
                       t.importance_gate.value()});
    }
  }

  MatrixXd grid(static_cast<Index>(images.size()), static_cast<Index>(texts.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    Tape tape(false);
    for (std::size_t i = next++; i < images.size(); i = next++) {
      for (std::size_t j = 0; j < texts.size(); ++j) {
        tape.clear();
        match::PreparedImage im;
        im.regions = tape.constant(images[i].regions);
        im.region_unit = tape.constant(images[i].region_unit);
        if (images[i].relations) {
          im.relations = tape.constant(*images[i].relations);
          im.relation_unit = tape.constant(*images[i].relation_unit);
        }
        const TextValues& tv = texts[j];
        const match::PreparedText t{tape.constant(tv.words), tape.constant(tv.unit), tape.constant(tv.norms),
                                    tape.constant(tv.fusion_gate), tape.constant(tv.importance_gate)};
        grid(static_cast<Index>(i), static_cast<Index>(j)) = match::similarity(im, t, hyper).scalar();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads == 0 ? worker_count() : threads,
                                                     static_cast<unsigned>(std::max<std::size_t>(1, images.size()))));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return grid;
}

FoldedRetrieval eval_retrieval(const match::MatcherParams& params, std::span<const visual::VisualFeatureSet> features,
                               std::span<const match::EncodedPair> captions, std::size_t folds, unsigned threads) {
  const std::size_t n = features.size();
  if (folds < 1) throw Error("eval_retrieval: need at least one fold");
  if (folds > n) throw Error("eval_retrieval: more folds than images");
  for (const auto& c : captions)
    if (c.image >= n) throw Error("eval_retrieval: caption refers to a missing image");

  FoldedRetrieval out;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t lo = f * n / folds, hi = (f + 1) * n / folds;
    std::vector<match::EncodedPair> fold_caps;
    std::vector<std::size_t> gold;
    for (const auto& c : captions) {
      if (c.image < lo || c.image >= hi) continue;
      fold_caps.push_back({c.image - lo, c.tokens});
      gold.push_back(c.image - lo);
    }
    const MatrixXd grid = similarity_grid_values(params, features.subspan(lo, hi - lo), fold_caps, threads);
    out.folds.push_back(summarize(grid, gold));
  }
  auto mean = [&](auto pick) {
    DirectionScores m;
    for (const auto& r : out.folds) {
      const DirectionScores& s = pick(r);
      m.r1 += s.r1;
      m.r5 += s.r5;
      m.r10 += s.r10;
      m.median_rank += s.median_rank;
    }
    const double k = static_cast<double>(out.folds.size());
    m.r1 /= k;
    m.r5 /= k;
    m.r10 /= k;
    m.median_rank /= k;
    return m;
  };
  out.image_to_text = mean([](const RetrievalResult& r) -> const DirectionScores& { return r.image_to_text; });
  out.text_to_image = mean([](const RetrievalResult& r) -> const DirectionScores& { return r.text_to_image; });
  return out;
}

nlohmann::ordered_json to_json(const DirectionScores& s) {
  return {{"r1", s.r1}, {"r5", s.r5}, {"r10", s.r10}, {"median_rank", s.median_rank}};
}

nlohmann::ordered_json to_json(const FoldedRetrieval& r) {
  nlohmann::ordered_json j;
  j["folds"] = nlohmann::ordered_json::array();
  for (const auto& f : r.folds) {
    j["folds"].push_back({{"images", f.grid.rows()},
                          {"captions", f.grid.cols()},
                          {"image_to_text", to_json(f.image_to_text)},
                          {"text_to_image", to_json(f.text_to_image)}});
  }
  j["mean"] = {{"image_to_text", to_json(r.image_to_text)}, {"text_to_image", to_json(r.text_to_image)}};
  return j;
}

std::string format_table(const FoldedRetrieval& r) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-6s | %-26s | %-26s\n", "", "Sentence Retrieval", "Image Retrieval");
  out += line;
  std::snprintf(line, sizeof line, "%-6s | %6s %6s %6s %5s | %6s %6s %6s %5s\n", "fold", "r@1", "r@5", "r@10", "med",
                "r@1", "r@5", "r@10", "med");
  out += line;
  auto row = [&](const std::string& name, const DirectionScores& a, const DirectionScores& b) {
    std::snprintf(line, sizeof line, "%-6s | %6.1f %6.1f %6.1f %5.1f | %6.1f %6.1f %6.1f %5.1f\n", name.c_str(),
                  100 * a.r1, 100 * a.r5, 100 * a.r10, a.median_rank, 100 * b.r1, 100 * b.r5, 100 * b.r10,
                  b.median_rank);
    out += line;
  };
  for (std::size_t f = 0; f < r.folds.size(); ++f) {
    row(std::to_string(f + 1), r.folds[f].image_to_text, r.folds[f].text_to_image);
  }
  row("mean", r.image_to_text, r.text_to_image);
  return out;
}

}  // namespace relmatch::metrics

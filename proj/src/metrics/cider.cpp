#include "relmatch/metrics/cider.hpp"

#include "relmatch/error.hpp"

#include <cmath>
#include <set>

namespace relmatch::metrics {

namespace {

struct TfIdf {
  NgramCounts vec;
  std::array<double, 4> norm{};
  double length = 0;
};

TfIdf tfidf(const Tokens& tokens, const CiderModel& model) {
  TfIdf out;
  out.vec = count_ngrams(tokens);
  out.length = static_cast<double>(tokens.size());
  for (std::size_t n = 0; n < 4; ++n) {
    for (auto& [gram, v] : out.vec[n]) {
      v *= model.idf(gram);
      out.norm[n] += v * v;
    }
    out.norm[n] = std::sqrt(out.norm[n]);
  }
  return out;
}

}  // namespace

NgramCounts count_ngrams(const Tokens& tokens) {
  NgramCounts out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string gram;
    for (std::size_t n = 0; n < 4 && i + n < tokens.size(); ++n) {
      if (n > 0) gram += ' ';
      gram += tokens[i + n];
      out[n][gram] += 1.0;
    }
  }
  return out;
}

CiderModel::CiderModel(const std::vector<std::vector<Tokens>>& references) : corpus_size_(references.size()) {
  if (references.empty()) throw Error("CIDEr model needs a non-empty reference corpus");
  log_size_ = std::log(static_cast<double>(corpus_size_));
  for (const auto& refs : references) {
    std::set<std::string> seen;
    for (const auto& r : refs) {
      for (const auto& grams : count_ngrams(r))
        for (const auto& [gram, c] : grams) seen.insert(gram);
    }
    for (const auto& gram : seen) df_[gram] += 1.0;
  }
}

double CiderModel::document_frequency(const std::string& ngram) const {
  const auto it = df_.find(ngram);
  return it == df_.end() ? 0.0 : it->second;
}

double CiderModel::idf(const std::string& ngram) const {
  return log_size_ - std::log(std::max(1.0, document_frequency(ngram)));
}

double cider_d(const Tokens& candidate, const std::vector<Tokens>& references, const CiderModel& model,
               double sigma) {
  if (references.empty()) throw Error("CIDEr-D needs at least one reference");
  if (candidate.empty()) return 0.0;
  const TfIdf hyp = tfidf(candidate, model);
  std::array<double, 4> total{};
  for (const Tokens& ref_tokens : references) {
    const TfIdf ref = tfidf(ref_tokens, model);
    const double delta = hyp.length - ref.length;
    const double penalty = std::exp(-(delta * delta) / (2.0 * sigma * sigma));
    for (std::size_t n = 0; n < 4; ++n) {
      double val = 0.0;
      for (const auto& [gram, h] : hyp.vec[n]) {
        const auto it = ref.vec[n].find(gram);
        if (it != ref.vec[n].end()) val += std::min(h, it->second) * it->second;
      }
      if (hyp.norm[n] != 0.0 && ref.norm[n] != 0.0) val /= hyp.norm[n] * ref.norm[n];
      total[n] += val * penalty;
    }
  }
  const double mean = (total[0] + total[1] + total[2] + total[3]) / 4.0;
  return mean / static_cast<double>(references.size()) * 10.0;
}

double corpus_cider_d(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references) {
  if (candidates.size() != references.size()) throw DimensionError("corpus_cider_d: one candidate per image");
  const CiderModel model(references);
  double sum = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) sum += cider_d(candidates[i], references[i], model);
  return sum / static_cast<double>(candidates.size());
}

}  // namespace relmatch::metrics

#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

namespace relmatch::metrics {

using Tokens = std::vector<std::string>;

/// n-gram counts for n = 1..4, keyed by the space-joined n-gram.
using NgramCounts = std::array<std::map<std::string, double>, 4>;

NgramCounts count_ngrams(const Tokens& tokens);

/// Document frequencies of every n-gram over a reference corpus, where one
/// document is the reference set of one image.
class CiderModel {
 public:
  explicit CiderModel(const std::vector<std::vector<Tokens>>& references);

  std::size_t corpus_size() const { return corpus_size_; }
  double document_frequency(const std::string& ngram) const;
  /// log(N) - log(max(1, df)); unseen n-grams get log(N).
  double idf(const std::string& ngram) const;

 private:
  std::size_t corpus_size_ = 0;
  double log_size_ = 0.0;
  std::map<std::string, double> df_;
};

/// CIDEr-D of one candidate against its references: clipped tf-idf cosine per
/// n, Gaussian length penalty (sigma), mean over n = 1..4 and references,
/// times 10. An empty candidate scores 0.
double cider_d(const Tokens& candidate, const std::vector<Tokens>& references, const CiderModel& model,
               double sigma = 6.0);

/// Mean CIDEr-D over images, with the model built from `references`.
double corpus_cider_d(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references);

}  // namespace relmatch::metrics

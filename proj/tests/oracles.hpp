#pragma once

// Literal scalar-loop evaluations of the matcher equations. They share no
// code with the tape-based implementation and serve as test oracles.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline double dot_row(const MatrixXd& a, int i, const MatrixXd& b, int j) {
  double s = 0;
  for (int d = 0; d < a.cols(); ++d) s += a(i, d) * b(j, d);
  return s;
}

inline double row_norm(const MatrixXd& a, int i) { return std::sqrt(dot_row(a, i, a, i)); }

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// ŝ[row][word]: cosine, clip at zero, normalise over rows per word.
inline std::vector<std::vector<double>> normalized_similarities(const MatrixXd& rows, const MatrixXd& words,
                                                                double eps) {
  const int m = static_cast<int>(rows.rows()), n = static_cast<int>(words.rows());
  std::vector<std::vector<double>> s(m, std::vector<double>(n));
  for (int l = 0; l < m; ++l)
    for (int j = 0; j < n; ++j)
      s[l][j] = std::max(0.0, dot_row(rows, l, words, j) /
                                  (std::max(eps, row_norm(rows, l)) * std::max(eps, row_norm(words, j))));
  for (int j = 0; j < n; ++j) {
    double sq = 0;
    for (int l = 0; l < m; ++l) sq += s[l][j] * s[l][j];
    const double denom = std::max(eps, std::sqrt(sq));
    for (int l = 0; l < m; ++l) s[l][j] /= denom;
  }
  return s;
}

/// att[row][word] = exp(λ ŝ) / Σ_rows exp(λ ŝ)
inline std::vector<std::vector<double>> attention(const std::vector<std::vector<double>>& shat, double lambda) {
  const std::size_t m = shat.size(), n = shat.empty() ? 0 : shat[0].size();
  std::vector<std::vector<double>> att(m, std::vector<double>(n));
  for (std::size_t j = 0; j < n; ++j) {
    double z = 0;
    for (std::size_t l = 0; l < m; ++l) z += std::exp(lambda * shat[l][j]);
    for (std::size_t l = 0; l < m; ++l) att[l][j] = std::exp(lambda * shat[l][j]) / z;
  }
  return att;
}

/// a_j = Σ_rows att[row][j] * row
inline MatrixXd attended(const std::vector<std::vector<double>>& att, const MatrixXd& rows, int n) {
  MatrixXd a = MatrixXd::Zero(n, rows.cols());
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < rows.rows(); ++l)
      for (int d = 0; d < rows.cols(); ++d) a(j, d) += att[l][j] * rows(l, d);
  return a;
}

struct GateParams {
  VectorXd fusion_weight;
  double fusion_bias = 0;
  VectorXd importance_weight;
  double importance_bias = 0;
};

/// sim(V, T) = Σ_j |g_impt(w_j) * cos(a_j, w_j)| with
/// a_j = g_vf(w_j) a_rel_j + (1 - g_vf(w_j)) a_rgn_j.
inline double similarity(const MatrixXd& regions, const MatrixXd& relations, const MatrixXd& words,
                         const GateParams& g, double lambda_rgn, double lambda_rel, double eps) {
  const int n = static_cast<int>(words.rows());
  const MatrixXd a_rgn = attended(attention(normalized_similarities(regions, words, eps), lambda_rgn), regions, n);
  MatrixXd a_rel = MatrixXd::Zero(n, words.cols());
  const bool has_rel = relations.rows() > 0;
  if (has_rel) a_rel = attended(attention(normalized_similarities(relations, words, eps), lambda_rel), relations, n);
  double sim = 0;
  for (int j = 0; j < n; ++j) {
    double fz = g.fusion_bias, iz = g.importance_bias;
    for (int d = 0; d < words.cols(); ++d) {
      fz += g.fusion_weight(d) * words(j, d);
      iz += g.importance_weight(d) * words(j, d);
    }
    const double gvf = has_rel ? logistic(fz) : 0.0;
    const double gimpt = logistic(iz);
    MatrixXd a(1, words.cols());
    for (int d = 0; d < words.cols(); ++d) a(0, d) = gvf * a_rel(j, d) + (1.0 - gvf) * a_rgn(j, d);
    double num = 0, an = 0, wn = 0;
    for (int d = 0; d < words.cols(); ++d) {
      num += a(0, d) * words(j, d);
      an += a(0, d) * a(0, d);
      wn += words(j, d) * words(j, d);
    }
    const double r = num / (std::max(eps, std::sqrt(an)) * std::max(eps, std::sqrt(wn)));
    sim += std::abs(gimpt * r);
  }
  return sim;
}

/// Exhaustive hinge loss: for each positive, the worst hinge over every
/// mismatched caption and every mismatched image.
inline double triplet_loss_bruteforce(const MatrixXd& s, double margin) {
  double total = 0;
  for (int i = 0; i < s.rows(); ++i) {
    double worst_caption = 0, worst_image = 0;
    for (int j = 0; j < s.cols(); ++j) {
      if (j == i) continue;
      worst_caption = std::max(worst_caption, std::max(0.0, (margin - s(i, i)) + s(i, j)));
      worst_image = std::max(worst_image, std::max(0.0, (margin - s(i, i)) + s(j, i)));
    }
    total = total + worst_caption;
    total = total + worst_image;
  }
  return total;
}

}  // namespace oracle

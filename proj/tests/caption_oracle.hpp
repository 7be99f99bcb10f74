#pragma once

// Direct column-vector recurrence for the two-LSTM captioner, written with
// explicit loops and no tape, used as an oracle.

#include "relmatch/caption/captioner.hpp"

#include <cmath>
#include <vector>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// W stored in x 4h (row-vector convention); returns gate pre-activations.
inline VectorXd affine(const MatrixXd& w_in, const VectorXd& x, const MatrixXd& w_h, const VectorXd& h,
                       const MatrixXd& b) {
  VectorXd z(w_in.cols());
  for (int j = 0; j < w_in.cols(); ++j) {
    double s = b(0, j);
    for (int i = 0; i < x.size(); ++i) s += x(i) * w_in(i, j);
    for (int i = 0; i < h.size(); ++i) s += h(i) * w_h(i, j);
    z(j) = s;
  }
  return z;
}

inline void lstm(const relmatch::caption::LstmWeights<MatrixXd>& w, const VectorXd& x, VectorXd& h, VectorXd& c) {
  const int n = static_cast<int>(h.size());
  const VectorXd z = affine(w.input, x, w.hidden, h, w.bias);
  for (int j = 0; j < n; ++j) {
    const double i = sig(z(j)), f = sig(z(n + j)), g = std::tanh(z(2 * n + j)), o = sig(z(3 * n + j));
    c(j) = f * c(j) + i * g;
    h(j) = o * std::tanh(c(j));
  }
}

inline VectorXd attend(const relmatch::caption::AttentionWeights<MatrixXd>& w, const MatrixXd& rows,
                       const VectorXd& h) {
  const int k = static_cast<int>(rows.rows()), a = static_cast<int>(w.score.rows());
  std::vector<double> score(k);
  double mx = -1e300;
  for (int r = 0; r < k; ++r) {
    double s = 0;
    for (int u = 0; u < a; ++u) {
      double pre = 0;
      for (int d = 0; d < rows.cols(); ++d) pre += rows(r, d) * w.feature(d, u);
      for (int d = 0; d < h.size(); ++d) pre += h(d) * w.hidden(d, u);
      s += std::tanh(pre) * w.score(u, 0);
    }
    score[r] = s;
    mx = std::max(mx, s);
  }
  double z = 0;
  for (double s : score) z += std::exp(s - mx);
  VectorXd out = VectorXd::Zero(rows.cols());
  for (int r = 0; r < k; ++r) out += std::exp(score[r] - mx) / z * rows.row(r).transpose();
  return out;
}

/// Log-probabilities of every step of a teacher-forced rollout over `inputs`.
inline std::vector<VectorXd> rollout(const relmatch::caption::CaptionerParams& p,
                                     const relmatch::visual::VisualFeatureSet& f, const std::vector<long>& inputs) {
  const int d = static_cast<int>(p.visual.region_proj.cols()), hd = static_cast<int>(p.attention_lstm.hidden.rows());
  MatrixXd v(f.regions.rows(), d), r(f.relations.rows(), d);
  for (int i = 0; i < v.rows(); ++i)
    for (int j = 0; j < d; ++j) {
      double s = p.visual.region_bias(0, j);
      for (int q = 0; q < f.regions.cols(); ++q) s += f.regions(i, q) * p.visual.region_proj(q, j);
      v(i, j) = s;
    }
  for (int i = 0; i < r.rows(); ++i)
    for (int j = 0; j < d; ++j) {
      double s = p.visual.relation_bias(0, j);
      for (int q = 0; q < f.relations.cols(); ++q) s += f.relations(i, q) * p.visual.relation_proj(q, j);
      r(i, j) = s;
    }
  VectorXd vbar = VectorXd::Zero(d), rbar = VectorXd::Zero(d);
  for (int i = 0; i < v.rows(); ++i) vbar += v.row(i).transpose() / static_cast<double>(v.rows());
  for (int i = 0; i < r.rows(); ++i) rbar += r.row(i).transpose() / static_cast<double>(r.rows());

  VectorXd h1 = VectorXd::Zero(hd), c1 = h1, h2 = h1, c2 = h1;
  std::vector<VectorXd> out;
  for (long tok : inputs) {
    const VectorXd emb = p.embedding.row(tok).transpose();
    VectorXd x1(2 * d + hd + emb.size());
    x1 << rbar, vbar, h2, emb;
    lstm(p.attention_lstm, x1, h1, c1);
    const VectorXd vhat = attend(p.region_attention, v, h1);
    const VectorXd rhat = r.rows() > 0 ? attend(p.relation_attention, r, h1) : VectorXd::Zero(d);
    VectorXd x2(2 * d + hd);
    x2 << vhat, rhat, h1;
    lstm(p.language_lstm, x2, h2, c2);
    VectorXd logits(p.output.cols());
    for (int j = 0; j < logits.size(); ++j) {
      double s = p.output_bias(0, j);
      for (int i = 0; i < hd; ++i) s += h2(i) * p.output(i, j);
      logits(j) = s;
    }
    const double mx = logits.maxCoeff();
    double z = 0;
    for (int j = 0; j < logits.size(); ++j) z += std::exp(logits(j) - mx);
    out.push_back(logits.array() - mx - std::log(z));
  }
  return out;
}

}  // namespace oracle

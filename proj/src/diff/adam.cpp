#include "relmatch/diff/adam.hpp"

#include "relmatch/error.hpp"

#include <cmath>

namespace relmatch::diff {

void adam_step(AdamState& state, std::span<Matrix* const> params, std::span<const Matrix* const> grads) {
  if (params.size() != grads.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != grads[i]->rows() || params[i]->cols() != grads[i]->cols()) {
      throw DimensionError("adam_step: parameter " + std::to_string(i) + " is " + shape_string(*params[i]) +
                           " but its gradient is " + shape_string(*grads[i]));
    }
  }
  if (state.first_moment.empty()) {
    for (const Matrix* p : params) {
      state.first_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
      state.second_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  } else if (state.first_moment.size() != params.size()) {
    throw DimensionError("adam_step: optimizer state tracks " + std::to_string(state.first_moment.size()) +
                         " parameters, got " + std::to_string(params.size()));
  }

  state.step += 1;
  const AdamConfig& c = state.config;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    if (m.rows() != params[i]->rows() || m.cols() != params[i]->cols()) {
      throw DimensionError("adam_step: moment shape " + shape_string(m) + " differs from parameter " +
                           shape_string(*params[i]));
    }
    const Matrix& g = *grads[i];
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
    if (c.learning_rate == 0.0) continue;
    params[i]->array() -= c.learning_rate * (m.array() / bias1) / ((v.array() / bias2).sqrt() + c.epsilon);
  }
}

}  // namespace relmatch::diff

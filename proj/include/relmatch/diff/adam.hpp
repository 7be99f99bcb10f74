#pragma once

#include "relmatch/diff/tape.hpp"
#include "relmatch/diff/weights.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace relmatch::diff {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moments are allocated on the first step and then keep the parameter shapes.
struct AdamState {
  AdamConfig config;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::int64_t step = 0;
};

void adam_step(AdamState& state, std::span<Matrix* const> params, std::span<const Matrix* const> grads);

template <class W>
void adam_step(AdamState& state, W& params, const W& grads) {
  const auto p = fields(params);
  const auto g = fields(grads);
  adam_step(state, std::span<Matrix* const>(p), std::span<const Matrix* const>(g));
}

}  // namespace relmatch::diff

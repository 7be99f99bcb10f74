#pragma once

#include "relmatch/diff/tape.hpp"
#include "relmatch/diff/weights.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace relmatch::diff {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Relative error uses max(|analytic|, |numeric|, abs_floor) as denominator,
  /// so entries whose true gradient is at rounding level do not dominate.
  double abs_floor = 1e-6;
  /// 0 checks every entry; otherwise a seeded sample of at most this many
  /// entries per parameter array.
  std::size_t max_entries_per_param = 0;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::string worst_entry;
  std::size_t checked = 0;
  bool passed = true;
};

/// Builds a scalar loss on the tape from the bound parameters.
using LossBuilder = std::function<Var(Tape&, std::span<const Var>)>;

/// Compares tape gradients against central differences
/// (f(x+h) - f(x-h)) / 2h for each parameter entry.
GradCheckReport grad_check(const LossBuilder& loss, std::span<Matrix> params, std::span<const std::string> names,
                           const GradCheckOptions& options = {});

template <template <class> class W>
GradCheckReport grad_check(const std::function<Var(Tape&, const W<Var>&)>& loss, const W<Matrix>& params,
                           const GradCheckOptions& options = {}) {
  std::vector<Matrix> flat;
  for (const Matrix* m : fields(params)) flat.push_back(*m);
  const auto names = field_names(params);
  auto adapter = [&](Tape& tape, std::span<const Var> vars) {
    W<Var> bound;
    std::size_t i = 0;
    bound.visit([&](const std::string&, Var& v) { v = vars[i++]; });
    return loss(tape, bound);
  };
  return grad_check(adapter, flat, names, options);
}

}  // namespace relmatch::diff

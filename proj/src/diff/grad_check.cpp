#include "relmatch/diff/grad_check.hpp"

#include "relmatch/error.hpp"
#include "relmatch/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace relmatch::diff {
namespace {

double evaluate(const LossBuilder& loss, std::span<Matrix> params) {
  Tape tape(false);
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Matrix& p : params) vars.push_back(tape.constant(p));
  return loss(tape, vars).scalar();
}

}  // namespace

GradCheckReport grad_check(const LossBuilder& loss, std::span<Matrix> params, std::span<const std::string> names,
                           const GradCheckOptions& options) {
  if (!(options.step > 0.0)) throw Error("grad_check: step must be positive");

  std::vector<Matrix> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Matrix& p : params) vars.push_back(tape.variable(p));
    Var l = loss(tape, vars);
    tape.backward(l);
    for (const Var& v : vars) analytic.push_back(tape.grad(v));
  }

  Rng rng(options.seed);
  GradCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& x = params[p];
    std::vector<Index> entries(static_cast<std::size_t>(x.size()));
    std::iota(entries.begin(), entries.end(), Index{0});
    if (options.max_entries_per_param > 0 && entries.size() > options.max_entries_per_param) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(options.max_entries_per_param);
      std::sort(entries.begin(), entries.end());
    }
    for (Index e : entries) {
      // Column-major linear index, matching Eigen storage.
      double& slot = x.data()[e];
      const double saved = slot;
      slot = saved + options.step;
      const double up = evaluate(loss, params);
      slot = saved - options.step;
      const double down = evaluate(loss, params);
      slot = saved;

      const double numeric = (up - down) / (2.0 * options.step);
      const double exact = analytic[p].data()[e];
      const double abs_err = std::abs(numeric - exact);
      const double rel_err = abs_err / std::max({std::abs(numeric), std::abs(exact), options.abs_floor});
      report.checked += 1;
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (rel_err > report.max_rel_error) {
        report.max_rel_error = rel_err;
        const std::string name = p < names.size() ? names[p] : "param" + std::to_string(p);
        report.worst_entry = name + "[" + std::to_string(e % x.rows()) + "," + std::to_string(e / x.rows()) +
                             "] analytic=" + std::to_string(exact) + " numeric=" + std::to_string(numeric);
      }
    }
  }
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

}  // namespace relmatch::diff

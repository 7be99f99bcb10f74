#pragma once

#include "relmatch/diff/tape.hpp"

#include <string>
#include <vector>

/// Helpers for weight bundles templated on their storage type.
///
/// A bundle `W<Matrix>` holds parameter values and `W<Var>` the same fields
/// bound to a tape. Every bundle exposes `visit(f, prefix)` calling
/// `f(name, field)` in a fixed order; nested bundles forward with a dotted
/// prefix. The helpers below only rely on that order being identical for both
/// instantiations.
namespace relmatch::diff {

template <class W>
std::vector<Matrix*> fields(W& w) {
  std::vector<Matrix*> out;
  w.visit([&](const std::string&, Matrix& m) { out.push_back(&m); });
  return out;
}

template <class W>
std::vector<const Matrix*> fields(const W& w) {
  std::vector<const Matrix*> out;
  w.visit([&](const std::string&, const Matrix& m) { out.push_back(&m); });
  return out;
}

template <class W>
std::vector<std::string> field_names(const W& w) {
  std::vector<std::string> out;
  w.visit([&](const std::string& name, const auto&) { out.push_back(name); });
  return out;
}

template <class W>
std::size_t parameter_count(const W& w) {
  std::size_t n = 0;
  w.visit([&](const std::string&, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

/// Registers every field of `w` as a trainable leaf on `tape`.
template <template <class> class W>
W<Var> bind(Tape& tape, const W<Matrix>& w) {
  const auto values = fields(w);
  W<Var> out;
  std::size_t i = 0;
  out.visit([&](const std::string&, Var& v) { v = tape.variable(*values[i++]); });
  return out;
}

/// Gradients of every bound field after tape.backward().
template <template <class> class W>
W<Matrix> gradients(Tape& tape, const W<Var>& bound) {
  std::vector<Matrix> grads;
  bound.visit([&](const std::string&, const Var& v) { grads.push_back(tape.grad(v)); });
  W<Matrix> out;
  std::size_t i = 0;
  out.visit([&](const std::string&, Matrix& m) { m = std::move(grads[i++]); });
  return out;
}

}  // namespace relmatch::diff

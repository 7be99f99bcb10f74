#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace relmatch::diff {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while its tape lives
/// and has not been cleared.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

std::string shape_string(const Matrix& m);

/// Reverse-mode tape. Nodes are appended in evaluation order, so the node list
/// is already a topological order and backward is a single reverse sweep.
///
/// A tape built with `record = false` evaluates values only; no closures are
/// stored and backward() is an error. That mode is used for evaluation grids
/// and finite-difference probes.
///
/// backward() may be called more than once on the same recording: every call
/// resets all gradients first, so repeated calls yield identical results.
class Tape {
 public:
  /// Receives the upstream gradient of the node and accumulates into inputs
  /// through Tape::accumulate.
  using BackwardFn = std::function<void(Tape&, const Matrix&)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  /// Trainable leaf; receives a gradient.
  Var variable(Matrix value);
  /// Non-trainable leaf.
  Var constant(Matrix value);

  /// Appends a node computed from `inputs`. `backward` is dropped when the
  /// tape does not record or no input requires a gradient. This is also the
  /// extension point for ops defined outside this library.
  Var push(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var push(Matrix value, const std::vector<Var>& inputs, BackwardFn backward);

  void backward(Var loss);

  /// Gradient of a node after backward(); zeros if the node was unreachable.
  const Matrix& grad(Var v);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  void accumulate(std::size_t id, const Matrix& g);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    bool requires_grad = false;
  };

  void check_owned(Var v) const;

  std::vector<Node> nodes_;
  bool record_;
};

}  // namespace relmatch::diff

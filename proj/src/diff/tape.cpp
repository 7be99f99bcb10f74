#include "relmatch/diff/tape.hpp"

#include "relmatch/error.hpp"

#include <sstream>

namespace relmatch::diff {

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw Error("access to an unbound Var");
  return tape_->value(id_);
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw DimensionError("expected a 1x1 value, got " + shape_string(v));
  return v(0, 0);
}

std::string shape_string(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

Var Tape::variable(Matrix value) {
  if (!value.allFinite()) throw Error("non-finite value in variable of shape " + shape_string(value));
  nodes_.push_back(Node{std::move(value), Matrix(), nullptr, record_});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
  if (!value.allFinite()) throw Error("non-finite value in constant of shape " + shape_string(value));
  nodes_.push_back(Node{std::move(value), Matrix(), nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::push(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return push(std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Var Tape::push(Matrix value, const std::vector<Var>& inputs, BackwardFn backward) {
  bool needs = false;
  for (const Var& in : inputs) {
    check_owned(in);
    needs = needs || nodes_[in.id()].requires_grad;
  }
  if (!value.allFinite()) throw Error("operation produced a non-finite value of shape " + shape_string(value));
  needs = needs && record_;
  nodes_.push_back(Node{std::move(value), Matrix(), needs ? std::move(backward) : nullptr, needs});
  return Var(this, nodes_.size() - 1);
}

void Tape::check_owned(Var v) const {
  if (v.tape() != this) throw Error("Var belongs to a different tape");
  if (v.id() >= nodes_.size()) throw Error("stale Var (tape was cleared)");
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (g.rows() != n.value.rows() || g.cols() != n.value.cols()) {
    throw DimensionError("gradient shape " + shape_string(g) + " does not match value shape " +
                         shape_string(n.value));
  }
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var loss) {
  if (!record_) throw Error("backward on a tape that does not record");
  check_owned(loss);
  const Matrix& lv = nodes_[loss.id()].value;
  if (lv.size() != 1) throw DimensionError("backward needs a scalar loss, got " + shape_string(lv));

  for (Node& n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[loss.id()].requires_grad) return;
  nodes_[loss.id()].grad = Matrix::Ones(1, 1);

  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.size() == 0) continue;
    n.backward(*this, n.grad);
  }
}

const Matrix& Tape::grad(Var v) {
  check_owned(v);
  Node& n = nodes_[v.id()];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

}  // namespace relmatch::diff

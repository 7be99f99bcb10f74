#include "relmatch/diff/ops.hpp"

#include "relmatch/error.hpp"

#include <cmath>

namespace relmatch::diff {
namespace {

Tape& tape_of(Var a) {
  if (!a.valid()) throw Error("operation on an unbound Var");
  return *a.tape();
}

Tape& tape_of(Var a, Var b) {
  Tape& t = tape_of(a);
  if (b.tape() != &t) throw Error("operands live on different tapes");
  return t;
}

Index broadcast_dim(Index a, Index b, const char* op, const Matrix& x, const Matrix& y) {
  if (a == b || b == 1) return a;
  if (a == 1) return b;
  throw DimensionError(std::string(op) + ": cannot broadcast " + shape_string(x) + " with " +
                       shape_string(y));
}

Matrix expand(const Matrix& m, Index rows, Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  return m.replicate(rows / m.rows(), cols / m.cols());
}

Matrix reduce_to(const Matrix& g, Index rows, Index cols) {
  if (g.rows() == rows && g.cols() == cols) return g;
  Matrix out = g;
  if (rows == 1 && out.rows() != 1) out = out.colwise().sum().eval();
  if (cols == 1 && out.cols() != 1) out = out.rowwise().sum().eval();
  return out;
}

template <class Fwd, class BwdA, class BwdB>
Var binary(const char* name, Var a, Var b, Fwd fwd, BwdA da, BwdB db) {
  Tape& t = tape_of(a, b);
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  const Index r = broadcast_dim(x.rows(), y.rows(), name, x, y);
  const Index c = broadcast_dim(x.cols(), y.cols(), name, x, y);
  const bool same = x.rows() == y.rows() && x.cols() == y.cols();
  Matrix out = same ? fwd(x, y) : fwd(expand(x, r, c), expand(y, r, c));
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), {a, b}, [ia, ib, r, c, da, db](Tape& tp, const Matrix& g) {
    const Matrix& xv = tp.value(ia);
    const Matrix& yv = tp.value(ib);
    const Matrix xe = expand(xv, r, c);
    const Matrix ye = expand(yv, r, c);
    if (tp.requires_grad(ia)) tp.accumulate(ia, reduce_to(da(g, xe, ye), xv.rows(), xv.cols()));
    if (tp.requires_grad(ib)) tp.accumulate(ib, reduce_to(db(g, xe, ye), yv.rows(), yv.cols()));
  });
}

/// Elementwise unary op whose derivative is expressed through input and output.
template <class Fwd, class Deriv>
Var unary(Var a, Fwd fwd, Deriv deriv) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  const std::size_t io = t.size();
  return t.push(fwd(a.value()), {a}, [ia, io, deriv](Tape& tp, const Matrix& g) {
    tp.accumulate(ia, deriv(g, tp.value(ia), tp.value(io)));
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  if (x.cols() != y.rows()) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(x) + " * " + shape_string(y));
  }
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(x * y, {a, b}, [ia, ib](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(ia)) tp.accumulate(ia, g * tp.value(ib).transpose());
    if (tp.requires_grad(ib)) tp.accumulate(ib, tp.value(ia).transpose() * g);
  });
}

Var transpose(Var a) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  return t.push(a.value().transpose(), {a},
                [ia](Tape& tp, const Matrix& g) { tp.accumulate(ia, g.transpose()); });
}

Var add(Var a, Var b) {
  return binary(
      "add", a, b, [](const Matrix& x, const Matrix& y) -> Matrix { return x + y; },
      [](const Matrix& g, const Matrix&, const Matrix&) -> Matrix { return g; },
      [](const Matrix& g, const Matrix&, const Matrix&) -> Matrix { return g; });
}

Var sub(Var a, Var b) {
  return binary(
      "sub", a, b, [](const Matrix& x, const Matrix& y) -> Matrix { return x - y; },
      [](const Matrix& g, const Matrix&, const Matrix&) -> Matrix { return g; },
      [](const Matrix& g, const Matrix&, const Matrix&) -> Matrix { return -g; });
}

Var mul(Var a, Var b) {
  return binary(
      "mul", a, b, [](const Matrix& x, const Matrix& y) -> Matrix { return x.cwiseProduct(y); },
      [](const Matrix& g, const Matrix&, const Matrix& y) -> Matrix { return g.cwiseProduct(y); },
      [](const Matrix& g, const Matrix& x, const Matrix&) -> Matrix { return g.cwiseProduct(x); });
}

Var div(Var a, Var b) {
  return binary(
      "div", a, b, [](const Matrix& x, const Matrix& y) -> Matrix { return x.cwiseQuotient(y); },
      [](const Matrix& g, const Matrix&, const Matrix& y) -> Matrix { return g.cwiseQuotient(y); },
      [](const Matrix& g, const Matrix& x, const Matrix& y) -> Matrix {
        return (-g.cwiseProduct(x)).cwiseQuotient(y.cwiseProduct(y));
      });
}

Var add_scalar(Var a, double c) {
  return unary(
      a, [c](const Matrix& x) -> Matrix { return x.array() + c; },
      [](const Matrix& g, const Matrix&, const Matrix&) -> Matrix { return g; });
}

Var scale(Var a, double c) {
  return unary(
      a, [c](const Matrix& x) -> Matrix { return c * x; },
      [c](const Matrix& g, const Matrix&, const Matrix&) -> Matrix { return c * g; });
}

Var neg(Var a) { return scale(a, -1.0); }

Var rsub_scalar(double c, Var a) {
  return unary(
      a, [c](const Matrix& x) -> Matrix { return (c - x.array()).matrix(); },
      [](const Matrix& g, const Matrix&, const Matrix&) -> Matrix { return -g; });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](const Matrix& x) -> Matrix {
        return x.unaryExpr([](double v) {
          if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
          const double e = std::exp(v);
          return e / (1.0 + e);
        });
      },
      [](const Matrix& g, const Matrix&, const Matrix& y) -> Matrix {
        return g.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix()));
      });
}

Var tanh(Var a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.array().tanh().matrix(); },
      [](const Matrix& g, const Matrix&, const Matrix& y) -> Matrix {
        return g.cwiseProduct((1.0 - y.array().square()).matrix());
      });
}

Var exp(Var a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.array().exp().matrix(); },
      [](const Matrix& g, const Matrix&, const Matrix& y) -> Matrix { return g.cwiseProduct(y); });
}

Var log(Var a) {
  if ((a.value().array() <= 0.0).any()) throw Error("log of a non-positive value");
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.array().log().matrix(); },
      [](const Matrix& g, const Matrix& x, const Matrix&) -> Matrix { return g.cwiseQuotient(x); });
}

Var relu(Var a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.cwiseMax(0.0); },
      [](const Matrix& g, const Matrix& x, const Matrix&) -> Matrix {
        return (x.array() > 0.0).select(g, 0.0);
      });
}

Var abs(Var a) {
  return unary(
      a, [](const Matrix& x) -> Matrix { return x.cwiseAbs(); },
      [](const Matrix& g, const Matrix& x, const Matrix&) -> Matrix {
        return (x.array() > 0.0).select(g, (x.array() < 0.0).select(-g, 0.0));
      });
}

Var clamp_min(Var a, double floor) {
  return unary(
      a, [floor](const Matrix& x) -> Matrix { return x.cwiseMax(floor); },
      [floor](const Matrix& g, const Matrix& x, const Matrix&) -> Matrix {
        return (x.array() > floor).select(g, 0.0);
      });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  const Index r = a.rows(), c = a.cols();
  return t.push(Matrix::Constant(1, 1, a.value().sum()), {a}, [ia, r, c](Tape& tp, const Matrix& g) {
    tp.accumulate(ia, Matrix::Constant(r, c, g(0, 0)));
  });
}

Var mean(Var a) {
  if (a.value().size() == 0) throw DimensionError("mean of an empty array");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var sum_rows(Var a) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  const Index r = a.rows();
  return t.push(a.value().colwise().sum(), {a},
                [ia, r](Tape& tp, const Matrix& g) { tp.accumulate(ia, g.replicate(r, 1)); });
}

Var sum_cols(Var a) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  const Index c = a.cols();
  return t.push(a.value().rowwise().sum(), {a},
                [ia, c](Tape& tp, const Matrix& g) { tp.accumulate(ia, g.replicate(1, c)); });
}

namespace {

// d||x||/dx = x / ||x||, taken as 0 where the norm vanishes.
Matrix safe_inverse(const Matrix& n) {
  return n.unaryExpr([](double v) { return v > 0.0 ? 1.0 / v : 0.0; });
}

}  // namespace

Var l2norm(Var a) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  const std::size_t io = t.size();
  return t.push(Matrix::Constant(1, 1, a.value().norm()), {a}, [ia, io](Tape& tp, const Matrix& g) {
    const double n = tp.value(io)(0, 0);
    if (n > 0.0) tp.accumulate(ia, (g(0, 0) / n) * tp.value(ia));
  });
}

Var l2norm_rows(Var a) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  const std::size_t io = t.size();
  return t.push(a.value().rowwise().norm(), {a}, [ia, io](Tape& tp, const Matrix& g) {
    const Matrix w = g.cwiseProduct(safe_inverse(tp.value(io)));
    tp.accumulate(ia, tp.value(ia).array().colwise() * w.col(0).array());
  });
}

Var l2norm_cols(Var a) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  const std::size_t io = t.size();
  return t.push(a.value().colwise().norm(), {a}, [ia, io](Tape& tp, const Matrix& g) {
    const Matrix w = g.cwiseProduct(safe_inverse(tp.value(io)));
    tp.accumulate(ia, tp.value(ia).array().rowwise() * w.row(0).array());
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols of nothing");
  Tape& t = tape_of(parts[0]);
  const Index r = parts[0].rows();
  Index c = 0;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw Error("operands live on different tapes");
    if (p.rows() != r) {
      throw DimensionError("concat_cols: row counts differ, " + shape_string(parts[0].value()) + " vs " +
                           shape_string(p.value()));
    }
    c += p.cols();
  }
  Matrix out(r, c);
  std::vector<std::size_t> ids;
  std::vector<Index> offsets;
  Index off = 0;
  for (const Var& p : parts) {
    out.middleCols(off, p.cols()) = p.value();
    ids.push_back(p.id());
    offsets.push_back(off);
    off += p.cols();
  }
  return t.push(std::move(out), std::vector<Var>(parts.begin(), parts.end()),
                [ids, offsets](Tape& tp, const Matrix& g) {
                  for (std::size_t i = 0; i < ids.size(); ++i) {
                    if (!tp.requires_grad(ids[i])) continue;
                    tp.accumulate(ids[i], g.middleCols(offsets[i], tp.value(ids[i]).cols()));
                  }
                });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_rows of nothing");
  Tape& t = tape_of(parts[0]);
  const Index c = parts[0].cols();
  Index r = 0;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw Error("operands live on different tapes");
    if (p.cols() != c) {
      throw DimensionError("concat_rows: column counts differ, " + shape_string(parts[0].value()) + " vs " +
                           shape_string(p.value()));
    }
    r += p.rows();
  }
  Matrix out(r, c);
  std::vector<std::size_t> ids;
  std::vector<Index> offsets;
  Index off = 0;
  for (const Var& p : parts) {
    out.middleRows(off, p.rows()) = p.value();
    ids.push_back(p.id());
    offsets.push_back(off);
    off += p.rows();
  }
  return t.push(std::move(out), std::vector<Var>(parts.begin(), parts.end()),
                [ids, offsets](Tape& tp, const Matrix& g) {
                  for (std::size_t i = 0; i < ids.size(); ++i) {
                    if (!tp.requires_grad(ids[i])) continue;
                    tp.accumulate(ids[i], g.middleRows(offsets[i], tp.value(ids[i]).rows()));
                  }
                });
}

Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

Var concat_rows(std::initializer_list<Var> parts) {
  return concat_rows(std::span<const Var>(parts.begin(), parts.size()));
}

Var slice(Var a, Index row0, Index nrows, Index col0, Index ncols) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  if (row0 < 0 || col0 < 0 || nrows < 0 || ncols < 0 || row0 + nrows > x.rows() || col0 + ncols > x.cols()) {
    throw DimensionError("slice [" + std::to_string(row0) + "+" + std::to_string(nrows) + ", " +
                         std::to_string(col0) + "+" + std::to_string(ncols) + "] out of range for " +
                         shape_string(x));
  }
  const std::size_t ia = a.id();
  const Index r = x.rows(), c = x.cols();
  return t.push(x.block(row0, col0, nrows, ncols), {a},
                [ia, r, c, row0, col0, nrows, ncols](Tape& tp, const Matrix& g) {
                  Matrix full = Matrix::Zero(r, c);
                  full.block(row0, col0, nrows, ncols) = g;
                  tp.accumulate(ia, full);
                });
}

Var row(Var a, Index i) { return slice(a, i, 1, 0, a.cols()); }

Var element(Var a, Index r, Index c) { return slice(a, r, 1, c, 1); }

Var gather_rows(Var table, std::span<const Index> indices) {
  Tape& t = tape_of(table);
  const Matrix& x = table.value();
  Matrix out(static_cast<Index>(indices.size()), x.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= x.rows()) {
      throw DimensionError("gather_rows: index " + std::to_string(indices[i]) + " outside table " +
                           shape_string(x));
    }
    out.row(static_cast<Index>(i)) = x.row(indices[i]);
  }
  const std::size_t ia = table.id();
  std::vector<Index> idx(indices.begin(), indices.end());
  const Index r = x.rows(), c = x.cols();
  return t.push(std::move(out), {table}, [ia, idx, r, c](Tape& tp, const Matrix& g) {
    Matrix full = Matrix::Zero(r, c);
    for (std::size_t i = 0; i < idx.size(); ++i) full.row(idx[i]) += g.row(static_cast<Index>(i));
    tp.accumulate(ia, full);
  });
}

Var softmax_cols(Var a) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const double mx = x.col(j).maxCoeff();
    y.col(j) = (x.col(j).array() - mx).exp().matrix();
    y.col(j) /= y.col(j).sum();
  }
  const std::size_t ia = a.id();
  const std::size_t io = t.size();
  return t.push(std::move(y), {a}, [ia, io](Tape& tp, const Matrix& g) {
    const Matrix& p = tp.value(io);
    const Matrix dots = (g.cwiseProduct(p)).colwise().sum();
    tp.accumulate(ia, p.cwiseProduct((g.rowwise() - dots.row(0)).eval()));
  });
}

Var softmax_rows(Var a) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    const double mx = x.row(i).maxCoeff();
    y.row(i) = (x.row(i).array() - mx).exp().matrix();
    y.row(i) /= y.row(i).sum();
  }
  const std::size_t ia = a.id();
  const std::size_t io = t.size();
  return t.push(std::move(y), {a}, [ia, io](Tape& tp, const Matrix& g) {
    const Matrix& p = tp.value(io);
    const Matrix dots = (g.cwiseProduct(p)).rowwise().sum();
    tp.accumulate(ia, p.cwiseProduct((g.colwise() - dots.col(0)).eval()));
  });
}

Var log_softmax_rows(Var a) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    const double mx = x.row(i).maxCoeff();
    const double lse = mx + std::log((x.row(i).array() - mx).exp().sum());
    y.row(i) = (x.row(i).array() - lse).matrix();
  }
  const std::size_t ia = a.id();
  const std::size_t io = t.size();
  return t.push(std::move(y), {a}, [ia, io](Tape& tp, const Matrix& g) {
    const Matrix p = tp.value(io).array().exp().matrix();
    const Matrix gs = g.rowwise().sum();
    tp.accumulate(ia, g - (p.array().colwise() * gs.col(0).array()).matrix());
  });
}

}  // namespace relmatch::diff

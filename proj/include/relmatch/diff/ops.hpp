#pragma once

#include "relmatch/diff/tape.hpp"

#include <span>
#include <vector>

/// Differentiable primitives over 2-D arrays.
///
/// Elementwise binary ops broadcast: each dimension of the two operands must
/// match or be 1. Vectors are 1xN rows or Nx1 columns, scalars are 1x1.
namespace relmatch::diff {

Var matmul(Var a, Var b);
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);

Var add_scalar(Var a, double c);
Var scale(Var a, double c);
Var neg(Var a);
/// c - a
Var rsub_scalar(double c, Var a);

Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);
/// [x]_+ = max(x, 0). Subgradient at 0 is 0.
Var relu(Var a);
/// Subgradient at 0 is 0.
Var abs(Var a);
/// max(x, floor) elementwise; gradient flows only where x > floor.
Var clamp_min(Var a, double floor);

/// Sum of every entry, 1x1.
Var sum(Var a);
Var mean(Var a);
/// Column sums, 1xC.
Var sum_rows(Var a);
/// Row sums, Rx1.
Var sum_cols(Var a);

/// Euclidean norm of the whole array, 1x1. Gradient is 0 at the origin.
Var l2norm(Var a);
/// Per-row norms, Rx1.
Var l2norm_rows(Var a);
/// Per-column norms, 1xC.
Var l2norm_cols(Var a);

Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::initializer_list<Var> parts);
Var concat_rows(std::initializer_list<Var> parts);
Var slice(Var a, Index row, Index nrows, Index col, Index ncols);
Var row(Var a, Index i);
Var element(Var a, Index r, Index c);

/// Rows of `table` selected by `indices`, len(indices) x table.cols().
Var gather_rows(Var table, std::span<const Index> indices);

/// Softmax down each column.
Var softmax_cols(Var a);
/// Softmax along each row.
Var softmax_rows(Var a);
Var log_softmax_rows(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator*(double c, Var a) { return scale(a, c); }

}  // namespace relmatch::diff

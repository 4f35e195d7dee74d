#pragma once

#include "dense_array.hpp"

namespace vcore::ops {

// Dense kernels shared by the forward-only path and the tape. All of them are
// sequential with a fixed summation order, so repeated evaluation on the same
// inputs is bit-identical.

/// C = A * B. Throws a dimension error naming both shapes on mismatch.
DenseArray matmul(const DenseArray& a, const DenseArray& b);

/// C = A * B with each entry accumulated in value-sorted order, so the result
/// is invariant (bitwise) under any simultaneous permutation of A's columns
/// and B's rows. Used where a reduction over a token *set* must not depend on
/// the set's storage order. Slower than matmul; keep off wide hot paths.
DenseArray matmul_sorted(const DenseArray& a, const DenseArray& b);

/// out += A * B
void matmul_acc(DenseArray& out, const DenseArray& a, const DenseArray& b);
/// out += A * B^T
void matmul_nt_acc(DenseArray& out, const DenseArray& a, const DenseArray& b);
/// out += A^T * B
void matmul_tn_acc(DenseArray& out, const DenseArray& a, const DenseArray& b);

DenseArray transpose(const DenseArray& a);

DenseArray add(const DenseArray& a, const DenseArray& b);
DenseArray scale(const DenseArray& a, double s);
/// Adds a length-cols vector to every row of a matrix.
DenseArray add_row_broadcast(const DenseArray& a, const DenseArray& bias);

/// Row-wise softmax of (logits + mask), where mask entries are 0 (allowed) or
/// -inf (forbidden). Forbidden positions come out exactly 0.0; the row max and
/// the normalizer are taken over allowed entries only. A fully masked row is a
/// precondition violation, never a silent NaN.
DenseArray masked_softmax(const DenseArray& logits, const DenseArray& mask);

/// Per-row layer normalization of a matrix: (x - mean) / sqrt(var + eps),
/// then elementwise gain and bias (both length cols).
DenseArray layer_norm_rows(const DenseArray& x, const DenseArray& gain,
                           const DenseArray& bias, double eps);

/// Exact GELU, 0.5 x (1 + erf(x / sqrt(2))).
DenseArray gelu(const DenseArray& x);
double gelu_derivative(double x);

/// Column means of a matrix, as a 1 x cols matrix.
DenseArray mean_rows(const DenseArray& a);

double sum(const DenseArray& a);
double max_abs(const DenseArray& a);
/// max_i |a_i - b_i| over arrays of identical shape.
double max_abs_diff(const DenseArray& a, const DenseArray& b);

}  // namespace vcore::ops

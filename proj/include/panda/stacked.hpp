#pragma once

// Helpers for stacked vectors: n blocks of dimension p laid out contiguously,
// block i occupying [i*p, (i+1)*p).

#include <Eigen/Core>

namespace panda {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline auto block(Vector& v, int i, int p) { return v.segment(i * p, p); }
inline auto block(const Vector& v, int i, int p) { return v.segment(i * p, p); }

// (1/n) sum_i v_i, a p-vector.
Vector block_average(const Vector& v, int p);

// (Pi_perp (x) I_p) v: subtracts the block average from every block.
Vector project_disagreement(const Vector& v, int p);

// Stacks n copies of a p-vector.
Vector repeat_block(const Vector& v, int n);

// Exact average projector (1/n) 1 1^T.
Matrix averaging_matrix(int n);

}  // namespace panda

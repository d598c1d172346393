#pragma once

// Per-round data-parallel kernels. Each OpenMP kernel has a serial reference
// twin with the same per-agent arithmetic, so results are bit-identical for
// any thread count. The reference versions back the equivalence tests and
// the benchmark.

#include <vector>

#include "panda/model.hpp"
#include "panda/stacked.hpp"

namespace panda::kernels {

// out = (W (x) I_p) v, i.e. out_i = sum_j w_ij v_j summed in j order.
void mix_blocks(const Matrix& w, const Vector& v, int p, Vector& out);
void mix_blocks_serial(const Matrix& w, const Vector& v, int p, Vector& out);

// out_i = argmin f_i(x) - y_i^T x, agent order preserved.
void local_solves(const model::ProblemInstance& prob, const Vector& y,
                  double tol, Vector& out, std::vector<int>& iterations);
void local_solves_serial(const model::ProblemInstance& prob, const Vector& y,
                         double tol, Vector& out,
                         std::vector<int>& iterations);

// out_i = grad f_i(x_i).
void gradients(const model::ProblemInstance& prob, const Vector& x,
               Vector& out);
void gradients_serial(const model::ProblemInstance& prob, const Vector& x,
                      Vector& out);

}  // namespace panda::kernels

#include "panda/kernels.hpp"

#include <exception>

#include "panda/error.hpp"

namespace panda::kernels {
namespace {

inline void mix_one(const Matrix& w, const Vector& v, int p, int i,
                    Vector& out) {
  auto dst = block(out, i, p);
  dst.setZero();
  const int n = static_cast<int>(w.cols());
  for (int j = 0; j < n; ++j) {
    const double wij = w(i, j);
    if (wij == 0.0) continue;
    dst += wij * block(v, j, p);
  }
}

void check_mix(const Matrix& w, const Vector& v, int p, const Vector& out) {
  require(w.rows() == w.cols(), "mix_blocks: W must be square");
  require(v.size() == w.rows() * p, "mix_blocks: dimension mismatch");
  require(&v != &out, "mix_blocks: output must not alias input");
}

}  // namespace

void mix_blocks(const Matrix& w, const Vector& v, int p, Vector& out) {
  out.resize(v.size());
  check_mix(w, v, p, out);
  const int n = static_cast<int>(w.rows());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) mix_one(w, v, p, i, out);
}

void mix_blocks_serial(const Matrix& w, const Vector& v, int p, Vector& out) {
  out.resize(v.size());
  check_mix(w, v, p, out);
  const int n = static_cast<int>(w.rows());
  for (int i = 0; i < n; ++i) mix_one(w, v, p, i, out);
}

void local_solves(const model::ProblemInstance& prob, const Vector& y,
                  double tol, Vector& out, std::vector<int>& iterations) {
  const int n = prob.n();
  const int p = prob.p();
  require(y.size() == static_cast<Eigen::Index>(n) * p,
          "local_solves: y must have dimension n*p");
  out.resize(y.size());
  iterations.assign(n, 0);
  // Exceptions cannot cross the parallel region; the first failure by agent
  // index is rethrown afterwards so the reported error is order-independent.
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      auto r = prob.agent(i).solve_shifted(block(y, i, p), tol);
      block(out, i, p) = r.x;
      iterations[i] = r.iterations;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void local_solves_serial(const model::ProblemInstance& prob, const Vector& y,
                         double tol, Vector& out,
                         std::vector<int>& iterations) {
  const int n = prob.n();
  const int p = prob.p();
  require(y.size() == static_cast<Eigen::Index>(n) * p,
          "local_solves: y must have dimension n*p");
  out.resize(y.size());
  iterations.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    auto r = prob.agent(i).solve_shifted(block(y, i, p), tol);
    block(out, i, p) = r.x;
    iterations[i] = r.iterations;
  }
}

void gradients(const model::ProblemInstance& prob, const Vector& x,
               Vector& out) {
  const int n = prob.n();
  const int p = prob.p();
  require(x.size() == static_cast<Eigen::Index>(n) * p,
          "gradients: x must have dimension n*p");
  out.resize(x.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    block(out, i, p) = prob.agent(i).gradient(block(x, i, p));
  }
}

void gradients_serial(const model::ProblemInstance& prob, const Vector& x,
                      Vector& out) {
  const int n = prob.n();
  const int p = prob.p();
  require(x.size() == static_cast<Eigen::Index>(n) * p,
          "gradients: x must have dimension n*p");
  out.resize(x.size());
  for (int i = 0; i < n; ++i) {
    block(out, i, p) = prob.agent(i).gradient(block(x, i, p));
  }
}

}  // namespace panda::kernels

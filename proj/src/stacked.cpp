#include "panda/stacked.hpp"

#include "panda/error.hpp"

namespace panda {

Vector block_average(const Vector& v, int p) {
  require(p > 0 && v.size() % p == 0, "block_average: size not a multiple of p");
  const int n = static_cast<int>(v.size() / p);
  Vector avg = Vector::Zero(p);
  for (int i = 0; i < n; ++i) avg += block(v, i, p);
  return avg / n;
}

Vector project_disagreement(const Vector& v, int p) {
  const Vector avg = block_average(v, p);
  const int n = static_cast<int>(v.size() / p);
  Vector out(v.size());
  for (int i = 0; i < n; ++i) block(out, i, p) = block(v, i, p) - avg;
  return out;
}

Vector repeat_block(const Vector& v, int n) {
  const int p = static_cast<int>(v.size());
  Vector out(static_cast<Eigen::Index>(n) * p);
  for (int i = 0; i < n; ++i) block(out, i, p) = v;
  return out;
}

Matrix averaging_matrix(int n) {
  return Matrix::Constant(n, n, 1.0 / n);
}

}  // namespace panda

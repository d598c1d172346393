#include <gtest/gtest.h>
#include <omp.h>

#include <random>

#include "panda/kernels.hpp"
#include "panda/model.hpp"
#include "test_util.hpp"

namespace panda::kernels {
namespace {

Matrix kron_identity(const Matrix& w, int p) {
  Matrix out = Matrix::Zero(w.rows() * p, w.cols() * p);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      out.block(i * p, j * p, p, p) = w(i, j) * Matrix::Identity(p, p);
  return out;
}

class ThreadCount : public ::testing::TestWithParam<int> {};

TEST_P(ThreadCount, MixMatchesSerialBitForBitAndKronecker) {
  omp_set_num_threads(GetParam());
  std::mt19937_64 rng(1);
  const Matrix w = testing::random_matrix(9, 9, rng);
  const Vector v = testing::random_vector(9 * 4, rng);
  Vector par, ser;
  mix_blocks(w, v, 4, par);
  mix_blocks_serial(w, v, 4, ser);
  EXPECT_EQ(par, ser);
  EXPECT_LT((par - kron_identity(w, 4) * v).norm(), 1e-12);
}

TEST_P(ThreadCount, LocalSolvesAndGradientsMatchSerial) {
  omp_set_num_threads(GetParam());
  const auto prob = model::generate_least_squares_instance(12, 5, 100.0, 1.0, 3);
  std::mt19937_64 rng(2);
  const Vector y = testing::random_vector(60, rng);
  Vector a, b;
  std::vector<int> ia, ib;
  local_solves(prob, y, 1e-12, a, ia);
  local_solves_serial(prob, y, 1e-12, b, ib);
  EXPECT_EQ(a, b);
  EXPECT_EQ(ia, ib);
  gradients(prob, y, a);
  gradients_serial(prob, y, b);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, model::stacked_gradient(prob, y));
}

INSTANTIATE_TEST_SUITE_P(Threads, ThreadCount, ::testing::Values(1, 2, 4, 7));

TEST(Kernels, AliasingRejected) {
  Vector v = Vector::Ones(4);
  EXPECT_ANY_THROW(mix_blocks(Matrix::Identity(2, 2), v, 2, v));
}

}  // namespace
}  // namespace panda::kernels

#include <gtest/gtest.h>

#include <random>

#include "panda/error.hpp"
#include "panda/model.hpp"
#include "panda/network.hpp"
#include "panda/solvers.hpp"
#include "test_util.hpp"

namespace panda::solvers {
namespace {

using network::GraphSequence;
using network::MixingSequence;

MixingSequence random_mixing(int n, std::uint64_t seed) {
  return MixingSequence::metropolis(GraphSequence::iid_link_failure(n, 0.3, seed));
}

TEST(Panda, InitialStateIsZeroAndFeasible) {
  const auto prob = testing::benign_instance(4, 2, 1);
  const auto s = panda_init(prob);
  EXPECT_EQ(s.x, Vector::Zero(8));
  EXPECT_EQ(s.y, Vector::Zero(8));
  Vector y0 = Vector::Zero(8);
  y0[0] = 1.0;
  EXPECT_THROW(panda_init(prob, y0), Error);
  y0[2] = -1.0;
  EXPECT_NO_THROW(panda_init(prob, y0));
}

TEST(Panda, TrackingAndDualFeasibilityInvariants) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto prob = testing::benign_instance(6, 3, seed);
    const auto mix = random_mixing(6, seed);
    auto s = panda_init(prob);
    for (long k = 0; k < 200; ++k) {
      s = panda_step(s, prob, mix.matrix(k), 0.1).state;
      EXPECT_LE((testing::naive_block_mean(s.z, 6, 3) -
                 testing::naive_block_mean(s.x, 6, 3)).norm(),
                1e-12);
      EXPECT_LE(testing::naive_block_mean(s.y, 6, 3).norm(), 1e-12);
    }
  }
}

TEST(Panda, OptimumIsAFixedPoint) {
  const auto prob = testing::benign_instance(5, 3, 2);
  const auto mix = random_mixing(5, 2);
  const Vector x_star = model::centralized_solution(prob);
  SolverState s = panda_init(prob, model::dual_optimum(prob, x_star));
  s.x = repeat_block(x_star, 5);
  s.z = s.x;
  const SolverState start = s;
  for (long k = 0; k < 50; ++k) {
    const auto next = panda_step(s, prob, mix.matrix(k), 0.2).state;
    EXPECT_LE((next.x - s.x).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((next.y - s.y).cwiseAbs().maxCoeff(), 1e-10);
    s = next;
  }
  EXPECT_LE((s.x - start.x).norm(), 1e-9);
}

TEST(Panda, SingleAgentSolvesInOneStep) {
  const auto prob = testing::benign_instance(1, 3, 5);
  auto s = panda_step(panda_init(prob), prob, Matrix::Identity(1, 1), 0.3);
  EXPECT_EQ(s.messages_sent, 0);
  EXPECT_LT((s.state.x - model::centralized_solution(prob)).norm(), 1e-12);
  EXPECT_EQ(s.state.y, Vector::Zero(3));
}

TEST(Panda, ExactAveragingIsDelayedDualAscent) {
  // With W = 11^T/n the tracker equals the network mean one round late, so
  // y(k+1) = y(k) - c Pi_perp x(k) with y(1) = y(0).
  const int n = 5, p = 2;
  const double c = 0.2;
  const auto prob = testing::benign_instance(n, p, 3);
  const Matrix avg = averaging_matrix(n);
  auto s = panda_init(prob);
  Vector x_prev = s.x;
  Vector y_oracle = Vector::Zero(n * p);
  for (long k = 0; k < 100; ++k) {
    s = panda_step(s, prob, avg, c).state;
    y_oracle = y_oracle - c * testing::naive_disagreement(x_prev, n, p);
    EXPECT_LE((s.y - y_oracle).cwiseAbs().maxCoeff(), 1e-12) << "k=" << k + 1;
    x_prev = s.x;
  }
}

TEST(Panda, ExactAverageReferenceConverges) {
  const auto prob = testing::benign_instance(4, 2, 9);
  const auto mix = MixingSequence::metropolis(GraphSequence::fixed(4, network::complete_graph(4)));
  RunParams params;
  params.c = 0.2;
  const auto trace = run(Algorithm::kExactAverage, prob, mix, params, 400);
  EXPECT_LT(trace.records.back().relative_residual, 1e-8);
  EXPECT_EQ(trace.records[1].cumulative_messages, 4 * 3);
}

TEST(Accelerated, FirstStepExtrapolatesFromZero) {
  const auto prob = testing::benign_instance(4, 2, 4);
  const auto mix = random_mixing(4, 4);
  const auto s = accelerated_panda_step(panda_init(prob), prob, mix.matrix(0), 0.1, 0.2).state;
  EXPECT_LT((s.y_bar - 1.2 * s.y).norm(), 1e-15);
}

TEST(Accelerated, ZeroMomentumEqualsPanda) {
  const auto prob = testing::benign_instance(4, 2, 6);
  const auto mix = random_mixing(4, 6);
  auto a = panda_init(prob);
  auto b = panda_init(prob);
  for (long k = 0; k < 30; ++k) {
    a = panda_step(a, prob, mix.matrix(k), 0.1).state;
    b = accelerated_panda_step(b, prob, mix.matrix(k), 0.1, 0.0).state;
  }
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
}

TEST(Diging, TracksAverageGradient) {
  const auto prob = testing::benign_instance(6, 3, 7);
  const auto mix = random_mixing(6, 7);
  auto s = diging_init(prob);
  for (long k = 0; k < 100; ++k) {
    s = diging_step(s, prob, mix.matrix(k), 0.05).state;
    const Vector g = model::stacked_gradient(prob, s.x);
    EXPECT_LE((testing::naive_block_mean(s.g_track, 6, 3) -
               testing::naive_block_mean(g, 6, 3)).norm(),
              1e-11);
  }
}

TEST(Messages, DigingSendsTwicePanda) {
  const auto prob = testing::benign_instance(6, 2, 8);
  const auto mix = random_mixing(6, 8);
  RunParams params;
  params.c = 0.1;
  params.alpha = 0.05;
  const auto panda = run(Algorithm::kPanda, prob, mix, params, 300);
  const auto diging = run(Algorithm::kDiging, prob, mix, params, 300);
  for (std::size_t k = 0; k < panda.records.size(); ++k) {
    EXPECT_EQ(2 * panda.records[k].cumulative_messages, diging.records[k].cumulative_messages);
  }
  for (std::size_t k = 1; k < panda.records.size(); ++k) {
    const long long sent =
        panda.records[k].cumulative_messages - panda.records[k - 1].cumulative_messages;
    EXPECT_EQ(sent, 2 * static_cast<long long>(mix.edges(static_cast<long>(k) - 1).size()));
  }
}

TEST(Run, AllMethodsConvergeOnBenignInstance) {
  const auto prob = testing::benign_instance(6, 3, 10);
  const auto mix = random_mixing(6, 10);
  RunParams params;
  params.c = 0.2;
  params.alpha = 0.1;
  for (auto algo : {Algorithm::kPanda, Algorithm::kPandaAccel, Algorithm::kDiging,
                    Algorithm::kExactAverage, Algorithm::kStaticDual}) {
    const auto trace = run(algo, prob, mix, params, 3000);
    EXPECT_EQ(trace.records.front().relative_residual, 1.0);
    EXPECT_LT(trace.records.back().relative_residual, 1e-6) << algorithm_name(algo);
  }
}

TEST(Run, DivergenceGuardTrips) {
  const auto prob = testing::benign_instance(5, 2, 11);
  const auto mix = random_mixing(5, 11);
  RunParams params;
  params.c = 500.0;
  const auto trace = run(Algorithm::kPanda, prob, mix, params, 2000);
  EXPECT_EQ(trace.status, RunStatus::kDiverged);
}

TEST(Run, SnapshotsFollowStride) {
  const auto prob = testing::benign_instance(3, 2, 12);
  RunParams params;
  params.snapshot_stride = 4;
  const auto trace = run(Algorithm::kPanda, prob, random_mixing(3, 12), params, 10);
  ASSERT_EQ(trace.snapshots.size(), 3u);
  EXPECT_EQ(trace.snapshots[2].k, 8);
  EXPECT_EQ(trace.records.size(), 11u);
}

TEST(Run, StopsBelowThreshold) {
  const auto prob = testing::benign_instance(3, 2, 13);
  RunParams params;
  params.c = 0.2;
  params.stop_below = 1e-3;
  const auto trace = run(Algorithm::kPanda, prob, random_mixing(3, 13), params, 10000);
  EXPECT_EQ(trace.status, RunStatus::kStopped);
  EXPECT_LE(trace.records.back().relative_residual, 1e-3);
  EXPECT_GT(trace.records[trace.records.size() - 2].relative_residual, 1e-3);
}

TEST(Names, RoundTrip) {
  for (auto a : {Algorithm::kPanda, Algorithm::kPandaAccel, Algorithm::kDiging,
                 Algorithm::kExactAverage, Algorithm::kStaticDual}) {
    EXPECT_EQ(parse_algorithm(algorithm_name(a)), a);
  }
  EXPECT_FALSE(parse_algorithm("admm").has_value());
}

}  // namespace
}  // namespace panda::solvers

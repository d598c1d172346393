#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "panda/error.hpp"
#include "panda/model.hpp"
#include "panda/network.hpp"
#include "panda/solvers.hpp"
#include "panda/theory.hpp"
#include "test_util.hpp"

namespace panda::theory {
namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kPrecondition;
}

TEST(StepSize, UnitConstants) {
  EXPECT_DOUBLE_EQ(max_step_size({1.0, 1.0, 1, 0.0}), 0.25);
  EXPECT_DOUBLE_EQ(max_step_size({1.0, 1.0, 2, 0.0}), 0.0625);
  EXPECT_NEAR(max_step_size({0.25, 1.0, 1, 0.5}), 0.25 * 0.5 * 0.75 / 4.0, 1e-16);
  EXPECT_EQ(code_of([] { max_step_size({2.0, 1.0, 1, 0.0}); }), ErrorCode::kDomain);
  EXPECT_EQ(code_of([] { max_step_size({1.0, 1.0, 1, 1.0}); }), ErrorCode::kDomain);
  EXPECT_EQ(code_of([] { max_step_size({1.0, 1.0, 0, 0.0}); }), ErrorCode::kDomain);
}

TEST(Alpha, MatchesDirectEvaluation) {
  for (double kappa : {1.0, 0.5, 0.04}) {
    for (int B : {1, 2, 3}) {
      for (double delta : {0.0, 0.1, 0.3}) {
        const Constants k{kappa * 2.0, 2.0, B, delta};
        const double num = std::sqrt((1 - delta * delta) * std::cbrt(kappa * kappa) + 8.0 * B * B) -
                           8.0 * delta * B;
        const auto a = alpha_threshold(k);
        EXPECT_EQ(a.defined, num > 0);
        if (num > 0) {
          const double den = kappa * std::sqrt(kappa) + 8.0 * B * B;
          EXPECT_NEAR(a.value, 2 * std::sqrt(kappa) * k.mu * (num / den) * (num / den),
                      1e-14 * a.value);
        }
      }
    }
  }
  EXPECT_NEAR(alpha_threshold({1.0, 1.0, 1, 0.0}).value, 2.0 / 9.0, 1e-15);
  EXPECT_FALSE(alpha_threshold({1.0, 1.0, 1, 0.9}).defined);
}

TEST(RateBound, BranchesByAlpha) {
  const Constants k{1.0, 1.0, 1, 0.0};
  const double alpha = alpha_threshold(k).value;
  const auto small = rate_bound(0.5 * alpha, k);
  EXPECT_EQ(small.branch, RateBranch::kSmallStep);
  EXPECT_NEAR(small.lambda, std::sqrt(1.0 - 0.25 * alpha), 1e-15);
  EXPECT_FALSE(small.vacuous);
  const auto large = rate_bound(0.24, k);
  EXPECT_EQ(large.branch, RateBranch::kLargeStep);
  EXPECT_NEAR(large.lambda, std::sqrt(4.0 * 0.24), 1e-15);
}

TEST(RateBound, EndpointIsFlaggedVacuous) {
  const Constants k{1.0, 1.0, 1, 0.0};
  const auto at_max = rate_bound(0.25, k);
  EXPECT_DOUBLE_EQ(at_max.lambda, 1.0);
  EXPECT_TRUE(at_max.vacuous);
  EXPECT_EQ(code_of([&] { rate_bound(0.26, k); }), ErrorCode::kOutOfRange);
  EXPECT_EQ(code_of([&] { rate_bound(0.0, k); }), ErrorCode::kOutOfRange);
}

TEST(RateBound, NeverSilentlyInvalid) {
  for (double kappa : {1.0, 0.25, 0.04}) {
    for (int B : {1, 2}) {
      for (double delta : {0.0, 0.3, 0.6, 0.9}) {
        const Constants k{kappa, 1.0, B, delta};
        const double c_max = max_step_size(k);
        const double c_contract =
            kappa * std::sqrt(kappa) * (1 - delta) * (1 - delta) / (4.0 * B * B);
        for (int i = 1; i < 50; ++i) {
          const double c = c_max * i / 50.0;
          const auto cert = rate_bound(c, k);
          EXPECT_GT(cert.lambda, 0.0);
          EXPECT_EQ(cert.vacuous, !(cert.lambda < 1.0));
          if (cert.branch == RateBranch::kSmallStep || c < c_contract) {
            EXPECT_LT(cert.lambda, 1.0);
          }
        }
      }
    }
  }
}

TEST(LambdaKNorm, BruteForceAndMonotonicity) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<double> s(60);
  for (auto& v : s) v = u(rng);
  for (double lambda : {0.5, 0.9, 0.999}) {
    double prev = 0.0;
    for (long K = 0; K < 60; ++K) {
      double brute = 0.0;
      for (long k = 0; k <= K; ++k) brute = std::max(brute, s[k] / std::pow(lambda, k));
      const double got = lambda_K_norm(s, lambda, K);
      EXPECT_NEAR(got, brute, 1e-12 * brute);
      EXPECT_GE(got, prev);
      prev = got;
    }
  }
  for (long K : {5L, 30L}) {
    EXPECT_GE(lambda_K_norm(s, 0.7, K), lambda_K_norm(s, 0.8, K));
  }
  EXPECT_THROW(lambda_K_norm(s, 1.0, 5), Error);
}

TEST(SmallGain, OffsetsAndGains) {
  const Constants k{1.0, 1.0, 1, 0.0};
  const auto cert = rate_bound(0.05, k);
  const auto g = small_gain_gains(0.05, cert.lambda, k, {});
  EXPECT_EQ(g.omega[0], 0.0);
  EXPECT_EQ(g.omega[1], 0.0);
  EXPECT_EQ(g.omega[2], 0.0);
  EXPECT_EQ(g.omega[3], 0.0);
  EXPECT_EQ(g.omega[4], 0.0);
  EXPECT_DOUBLE_EQ(g.gamma[0], 1.0 / cert.lambda);
  EXPECT_DOUBLE_EQ(g.gamma[2], 0.05);
  EXPECT_DOUBLE_EQ(g.gamma[4], 1.0);
  EXPECT_LT(check_small_gain(g).product, 1.0);
  EXPECT_TRUE(check_small_gain(g).passes);
}

TEST(SmallGain, SideConditionsThrow) {
  const Constants k{1.0, 1.0, 2, 0.5};
  EXPECT_EQ(code_of([&] { small_gain_gains(0.01, 0.7, k, {}); }), ErrorCode::kInfeasible);
  EXPECT_EQ(code_of([&] { small_gain_gains(0.6, 0.99, {1.0, 1.0, 1, 0.0}, {}); }),
            ErrorCode::kInfeasible);
  EXPECT_EQ(code_of([&] { small_gain_gains(0.1, 0.5, {1.0, 1.0, 1, 0.0}, {}); }),
            ErrorCode::kInfeasible);
}

TEST(SmallGain, ProductThresholdIsStrict) {
  SmallGain g;
  g.gamma = {1, 1, 1, 1, 1};
  EXPECT_FALSE(check_small_gain(g).passes);
  g.gamma[2] = 0.0;
  EXPECT_EQ(check_small_gain(g).product, 0.0);
  EXPECT_TRUE(check_small_gain(g).passes);
}

TEST(SmallGain, OffsetsFromWindowPrefix) {
  const Constants k{1.0, 1.0, 2, 0.2};
  ResidualBundle b;
  b.r = {3.0, 1.0};
  b.x_perp = {0.0, 2.0};
  b.z_perp = {0.0, 4.0};
  b.dy = {0.0, 0.0};
  b.dxz_perp = {0.0, 0.0};
  const double lambda = 0.999;
  const auto g = small_gain_gains(0.01, lambda, k, b);
  const double lb = lambda * lambda;
  EXPECT_NEAR(g.omega[1], lb / (lb - 0.2) * (2.0 / lambda), 1e-14);
  EXPECT_NEAR(g.omega[3], lb / (lb - 0.2) * (4.0 / lambda), 1e-14);
  EXPECT_DOUBLE_EQ(g.omega[4], 6.0);
}

TEST(SmallGain, ProductMatchesClosedFormIdentity) {
  // The gain product is 2 sqrt(L mu) / mu^2 times the left side of the
  // decreasing-gain inequality.
  for (double kappa : {1.0, 0.25, 0.04}) {
    for (int B : {1, 2}) {
      for (double delta : {0.0, 0.3}) {
        const Constants k{kappa, 1.0, B, delta};
        const double c = 0.2 * kappa;
        const double lambda = std::max(std::sqrt(1 - c / 2), std::pow(delta, 1.0 / B) + 0.01);
        if (!(lambda < 1.0)) continue;
        const auto g = small_gain_gains(c, lambda, k, {});
        const auto f = feasible_region_check(c, lambda, k);
        EXPECT_NEAR(g.product(), 2.0 * std::sqrt(kappa) / (kappa * kappa) * f.lhs_decreasing,
                    1e-12 * g.product());
      }
    }
  }
}

TEST(Feasibility, Examples) {
  const Constants k{1.0, 1.0, 1, 0.0};
  const double c = 0.5 * alpha_threshold(k).value;
  const auto cert = rate_bound(c, k);
  const auto ok = feasible_region_check(c, cert.lambda, k);
  EXPECT_TRUE(ok.all_pass());
  EXPECT_TRUE(ok.relaxation_holds);
  EXPECT_FALSE(feasible_region_check(0.6, 0.9, k).step_in_range);
  EXPECT_FALSE(feasible_region_check(0.01, 0.3, {1.0, 1.0, 2, 0.25}).lambda_in_window);
}

TEST(Residuals, IndependentProjectionAndConventions) {
  const int n = 4, p = 2;
  const auto prob = testing::benign_instance(n, p, 5);
  const auto mix = network::MixingSequence::metropolis(
      network::GraphSequence::iid_link_failure(n, 0.3, 5));
  solvers::RunParams params;
  params.c = 0.1;
  const auto trace = solvers::run(solvers::Algorithm::kPanda, prob, mix, params, 40);
  const Vector x_star = model::centralized_solution(prob);
  const Vector y_star = model::dual_optimum(prob, x_star);
  const auto b = residual_sequences(trace, x_star, y_star);
  ASSERT_EQ(b.size(), 41u);
  EXPECT_EQ(b.x_perp[0], 0.0);
  EXPECT_EQ(b.dy[0], 0.0);
  EXPECT_EQ(b.z_perp[0], 0.0);
  EXPECT_EQ(b.dxz_perp[0], 0.0);
  for (std::size_t k = 1; k < b.size(); ++k) {
    const auto& s = trace.snapshots[k];
    EXPECT_NEAR(b.x_perp[k], testing::naive_disagreement(s.x, n, p).norm(), 1e-13);
    EXPECT_NEAR(b.r[k], (s.y - y_star).norm(), 1e-13);
    EXPECT_NEAR(b.dy[k], (s.y - trace.snapshots[k - 1].y).norm(), 1e-13);
  }
}

TEST(Residuals, StationaryRunAtOptimumIsZero) {
  const int n = 3, p = 2;
  const auto prob = testing::benign_instance(n, p, 6);
  const Vector x_star = model::centralized_solution(prob);
  const Vector y_star = model::dual_optimum(prob, x_star);
  solvers::RunTrace trace;
  trace.n = n;
  trace.p = p;
  for (long k = 0; k < 5; ++k) {
    solvers::Snapshot s;
    s.k = k;
    s.x = repeat_block(x_star, n);
    s.z = s.x;
    s.y = y_star;
    trace.snapshots.push_back(s);
  }
  const auto b = residual_sequences(trace, x_star, y_star);
  for (std::size_t k = 0; k < b.size(); ++k) {
    EXPECT_EQ(b.r[k], 0.0);
    EXPECT_EQ(b.x_perp[k] + b.dy[k] + b.z_perp[k] + b.dxz_perp[k], 0.0);
  }
  const auto report = verify_arrows(b, 0.1, 0.99, {prob.mu(), prob.lip(), 1, 0.0}, {0, 4});
  EXPECT_TRUE(report.all_satisfied());
}

TEST(Residuals, StrideAboveOneRejected) {
  solvers::RunTrace trace;
  trace.snapshot_stride = 2;
  EXPECT_EQ(code_of([&] { residual_sequences(trace, Vector::Zero(1), Vector::Zero(1)); }),
            ErrorCode::kInsufficientSnapshots);
}

TEST(Reports, DocumentsCarryKeyFields) {
  const auto cert = rate_bound(0.1, {1.0, 1.0, 1, 0.0});
  const auto d = to_document(cert);
  EXPECT_TRUE(d.has("lambda"));
  EXPECT_TRUE(d.has("alpha_note"));
  EXPECT_TRUE(to_document(feasible_region_check(0.1, 0.99, {1.0, 1.0, 1, 0.0})).has("gain_inequality"));
}

}  // namespace
}  // namespace panda::theory

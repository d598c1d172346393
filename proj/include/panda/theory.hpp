#pragma once

// Step-size and rate certificates for PANDA, the lambda-K sequence norms,
// small-gain gains/offsets for the residual cycle
//   r -> x_perp -> dxz_perp -> dy -> z_perp -> r
// and empirical checks of those relations on solver traces.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "panda/kv.hpp"
#include "panda/solvers.hpp"
#include "panda/stacked.hpp"

namespace panda::theory {

struct Constants {
  double mu = 1.0;
  double lip = 1.0;
  int window = 1;      // B
  double delta = 0.0;  // joint-spectrum contraction
  double kappa() const { return mu / lip; }
};

// Throws kDomain unless 0 < mu <= L < inf, B >= 1, 0 <= delta < 1.
void validate(const Constants& k);

// mu sqrt(kappa) (1 - delta^2) / (4 B^2)
double max_step_size(const Constants& k);

struct AlphaThreshold {
  bool defined = false;  // numerator of the inner ratio is positive
  double value = 0.0;
  double numerator = 0.0;
};

// 2 sqrt(kappa) mu ((sqrt((1 - delta^2) kappa^(2/3) + 8 B^2) - 8 delta B)
//                   / (kappa^(3/2) + 8 B^2))^2
// evaluated with the two different kappa exponents exactly as stated; the
// asymmetry (2/3 inside the radical, 3/2 in the denominator) looks like a
// transposition but is kept verbatim and flagged in reports.
AlphaThreshold alpha_threshold(const Constants& k);

enum class RateBranch { kSmallStep, kLargeStep };

struct RateCertificate {
  double c = 0.0;
  double c_max = 0.0;
  AlphaThreshold alpha;
  double lambda = 0.0;
  RateBranch branch = RateBranch::kSmallStep;
  // lambda >= 1: the bound says nothing (e.g. the large-step branch at the
  // interval endpoint). Never reported as a valid rate.
  bool vacuous = false;
  Constants inputs;
};

// Selects the branch by comparing c with alpha (large-step branch whenever
// alpha is undefined). Throws kOutOfRange for c outside (0, c_max].
RateCertificate rate_bound(double c, const Constants& k);

// sup_{k=0..K} ||s(k)|| / lambda^k over a sequence of norms.
double lambda_K_norm(const std::vector<double>& norms, double lambda, long K);

// Residual norms; entry k belongs to round k. Conventions at k = 0:
// x_perp = dy = z_perp = dxz_perp = 0.
struct ResidualBundle {
  std::vector<double> r;
  std::vector<double> x_perp;
  std::vector<double> dy;
  std::vector<double> z_perp;
  std::vector<double> dxz_perp;
  std::size_t size() const { return r.size(); }
};

// Requires stride-1 PANDA-family snapshots starting at k = 0; otherwise
// throws kInsufficientSnapshots.
ResidualBundle residual_sequences(const solvers::RunTrace& trace,
                                  const Vector& x_star, const Vector& y_star);

struct SmallGain {
  std::array<double, 5> gamma{};
  std::array<double, 5> omega{};
  double product() const;
};

// r -> x_perp:           gamma1 = 1/(mu lambda), omega1 = 0
// x_perp -> dxz_perp:    gamma2 = 2(1-l^B)/((1-l)(l^B-delta)),
//                        omega2 = l^B/(l^B-delta) sum_{t=1}^{B} l^(1-t) ||x_perp(t-1)||
// dxz_perp -> dy:        gamma3 = c, omega3 = 0
// dy -> z_perp:          gamma4 = (1-l^B)/(mu(1-l)(l^B-delta)),
//                        omega4 = l^B/(l^B-delta) sum_{t=1}^{B} l^(1-t) ||z_perp(t-1)||
// z_perp -> r:           gamma5 = sqrt(L mu), omega5 = 2 ||r(0)||
// Side conditions: 0 < lambda < 1, lambda^B > delta,
// lambda >= sqrt(1 - c/(2L)), 0 < c <= mu/2. A violation throws kInfeasible
// naming the condition. An empty prefix counts as all zeros.
SmallGain small_gain_gains(double c, double lambda, const Constants& k,
                           const ResidualBundle& prefix);

struct SmallGainCheck {
  double product = 0.0;
  bool passes = false;  // product < 1
};
SmallGainCheck check_small_gain(const SmallGain& gains);

inline constexpr double kInequalitySlack = 1e-12;

struct ArrowResult {
  std::string name;  // e.g. "r->x_perp"
  long K = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  bool satisfied = false;  // lhs <= rhs + kInequalitySlack
};

struct ArrowReport {
  SmallGain gains;
  std::vector<ArrowResult> arrows;  // five per K, in cycle order
  bool all_satisfied() const;
};

// Evaluates ||next||^{lambda,K} <= gamma_i ||current||^{lambda,K} + omega_i
// for each arrow of the cycle and each K.
ArrowReport verify_arrows(const ResidualBundle& bundle, double c,
                          double lambda, const Constants& k,
                          const std::vector<long>& Ks);

struct FeasibilityReport {
  double lhs_decreasing = 0.0;  // c(1-l^B)^2 / (l(1-l)^2(l^B-delta)^2)
  double rhs_decreasing = 0.0;  // (mu/2) sqrt(mu/L)
  bool gain_inequality = false;
  bool step_in_range = false;      // 0 < c <= mu/2
  bool lambda_above_floor = false; // lambda >= sqrt(1 - c/(2L))
  bool lambda_in_window = false;   // delta^(1/B) < lambda < 1
  // (1-l^B)^2/(l(1-l)^2) <= 2B^2, the relaxation used to reach closed form;
  // only claimed for 0.5 <= lambda <= 1.
  double relaxation_lhs = 0.0;
  bool relaxation_holds = false;
  bool all_pass() const {
    return gain_inequality && step_in_range && lambda_above_floor &&
           lambda_in_window;
  }
};

FeasibilityReport feasible_region_check(double c, double lambda,
                                        const Constants& k);

kv::Document to_document(const RateCertificate& cert);
kv::Document to_document(const ArrowReport& report);
kv::Document to_document(const FeasibilityReport& report);

}  // namespace panda::theory

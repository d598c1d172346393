#include "panda/theory.hpp"

#include <algorithm>
#include <cmath>

#include "panda/error.hpp"

namespace panda::theory {
namespace {

double lambda_floor(double c, double lip) {
  return std::sqrt(1.0 - c / (2.0 * lip));
}

std::string arrow_name(int i) {
  static const char* kNames[5] = {"r->x_perp", "x_perp->dxz_perp",
                                  "dxz_perp->dy", "dy->z_perp", "z_perp->r"};
  return kNames[i];
}

// Offset shared by the x_perp and dy relations.
double window_offset(const std::vector<double>& seq, double lambda, int B,
                     double delta) {
  const double lb = std::pow(lambda, B);
  double sum = 0.0;
  for (int t = 1; t <= B; ++t) {
    const std::size_t idx = static_cast<std::size_t>(t - 1);
    const double term = idx < seq.size() ? seq[idx] : 0.0;
    sum += std::pow(lambda, 1 - t) * term;
  }
  return lb / (lb - delta) * sum;
}

}  // namespace

void validate(const Constants& k) {
  if (!(std::isfinite(k.mu) && std::isfinite(k.lip) && k.mu > 0.0 &&
        k.lip >= k.mu)) {
    fail(ErrorCode::kDomain, "constants: need 0 < mu <= L < inf");
  }
  if (k.window < 1) fail(ErrorCode::kDomain, "constants: B must be >= 1");
  if (!(k.delta >= 0.0 && k.delta < 1.0)) {
    fail(ErrorCode::kDomain, "constants: delta must lie in [0, 1)");
  }
}

double max_step_size(const Constants& k) {
  validate(k);
  const double B = k.window;
  return k.mu * std::sqrt(k.kappa()) * (1.0 - k.delta * k.delta) / (4.0 * B * B);
}

AlphaThreshold alpha_threshold(const Constants& k) {
  validate(k);
  const double kappa = k.kappa();
  const double B = k.window;
  const double radicand =
      (1.0 - k.delta * k.delta) * std::pow(kappa, 2.0 / 3.0) + 8.0 * B * B;
  AlphaThreshold a;
  a.numerator = std::sqrt(radicand) - 8.0 * k.delta * B;
  a.defined = a.numerator > 0.0;
  if (a.defined) {
    const double ratio = a.numerator / (std::pow(kappa, 1.5) + 8.0 * B * B);
    a.value = 2.0 * std::sqrt(kappa) * k.mu * ratio * ratio;
  }
  return a;
}

RateCertificate rate_bound(double c, const Constants& k) {
  RateCertificate cert;
  cert.inputs = k;
  cert.c = c;
  cert.c_max = max_step_size(k);
  if (!(c > 0.0 && c <= cert.c_max * (1.0 + 1e-12))) {
    fail(ErrorCode::kOutOfRange,
         "rate_bound: c = " + kv::format_double(c) + " outside (0, " +
             kv::format_double(cert.c_max) + "]");
  }
  cert.alpha = alpha_threshold(k);
  const double B = k.window;
  if (cert.alpha.defined && c <= cert.alpha.value) {
    cert.branch = RateBranch::kSmallStep;
    cert.lambda = std::pow(1.0 - c / (2.0 * k.lip), 1.0 / (2.0 * B));
  } else {
    cert.branch = RateBranch::kLargeStep;
    const double inner =
        k.delta + std::sqrt(4.0 * c * B * B / (k.mu * std::sqrt(k.kappa())));
    cert.lambda = std::pow(inner, 1.0 / B);
  }
  cert.vacuous = !(cert.lambda < 1.0);
  return cert;
}

double lambda_K_norm(const std::vector<double>& norms, double lambda, long K) {
  require(lambda > 0.0 && lambda < 1.0, "lambda_K_norm: lambda must lie in (0, 1)");
  require(K >= 0 && static_cast<std::size_t>(K) < norms.size(),
          "lambda_K_norm: sequence shorter than K + 1");
  double best = 0.0;
  double scale = 1.0;  // lambda^-k
  for (long k = 0; k <= K; ++k) {
    best = std::max(best, norms[static_cast<std::size_t>(k)] * scale);
    scale /= lambda;
  }
  return best;
}

ResidualBundle residual_sequences(const solvers::RunTrace& trace,
                                  const Vector& x_star, const Vector& y_star) {
  if (trace.snapshot_stride != 1) {
    fail(ErrorCode::kInsufficientSnapshots,
         "residual_sequences: trace stride must be 1");
  }
  if (!solvers::is_panda_family(trace.algorithm)) {
    fail(ErrorCode::kInsufficientSnapshots,
         "residual_sequences: needs a PANDA-family trace");
  }
  const int p = trace.p;
  require(x_star.size() == p, "residual_sequences: x_star must have dimension p");
  require(y_star.size() == static_cast<Eigen::Index>(trace.n) * p,
          "residual_sequences: y_star must have dimension n*p");
  ResidualBundle b;
  for (std::size_t i = 0; i < trace.snapshots.size(); ++i) {
    const auto& s = trace.snapshots[i];
    if (s.k != static_cast<long>(i)) {
      fail(ErrorCode::kInsufficientSnapshots,
           "residual_sequences: snapshots are not consecutive from k = 0");
    }
    b.r.push_back((s.y - y_star).norm());
    if (i == 0) {
      b.x_perp.push_back(0.0);
      b.dy.push_back(0.0);
      b.z_perp.push_back(0.0);
      b.dxz_perp.push_back(0.0);
      continue;
    }
    const Vector xp = project_disagreement(s.x, p);
    const Vector zp = project_disagreement(s.z, p);
    b.x_perp.push_back(xp.norm());
    b.z_perp.push_back(zp.norm());
    b.dxz_perp.push_back((xp - zp).norm());
    b.dy.push_back((s.y - trace.snapshots[i - 1].y).norm());
  }
  return b;
}

double SmallGain::product() const {
  double prod = 1.0;
  for (double g : gamma) prod *= g;
  return prod;
}

SmallGain small_gain_gains(double c, double lambda, const Constants& k,
                           const ResidualBundle& prefix) {
  validate(k);
  const int B = k.window;
  if (!(lambda > 0.0 && lambda < 1.0)) {
    fail(ErrorCode::kInfeasible, "small_gain: lambda must lie in (0, 1)");
  }
  if (!(c > 0.0 && c <= k.mu / 2.0)) {
    fail(ErrorCode::kInfeasible, "small_gain z_perp->r: c must lie in (0, mu/2]");
  }
  const double lb = std::pow(lambda, B);
  if (!(lb > k.delta)) {
    fail(ErrorCode::kInfeasible, "small_gain: need lambda^B > delta");
  }
  if (lambda < lambda_floor(c, k.lip) - kInequalitySlack) {
    fail(ErrorCode::kInfeasible,
         "small_gain z_perp->r: need lambda >= sqrt(1 - c/(2L))");
  }

  SmallGain g;
  const double spread = (1.0 - lb) / ((1.0 - lambda) * (lb - k.delta));
  g.gamma[0] = 1.0 / (k.mu * lambda);
  g.gamma[1] = 2.0 * spread;
  g.gamma[2] = c;
  g.gamma[3] = spread / k.mu;
  g.gamma[4] = std::sqrt(k.lip * k.mu);
  g.omega[0] = 0.0;
  g.omega[1] = window_offset(prefix.x_perp, lambda, B, k.delta);
  g.omega[2] = 0.0;
  g.omega[3] = window_offset(prefix.z_perp, lambda, B, k.delta);
  g.omega[4] = prefix.r.empty() ? 0.0 : 2.0 * prefix.r.front();
  return g;
}

SmallGainCheck check_small_gain(const SmallGain& gains) {
  for (double g : gains.gamma) {
    require(g >= 0.0, "check_small_gain: gains must be nonnegative");
  }
  SmallGainCheck out;
  out.product = gains.product();
  out.passes = out.product < 1.0;
  return out;
}

bool ArrowReport::all_satisfied() const {
  return std::all_of(arrows.begin(), arrows.end(),
                     [](const ArrowResult& a) { return a.satisfied; });
}

ArrowReport verify_arrows(const ResidualBundle& bundle, double c,
                          double lambda, const Constants& k,
                          const std::vector<long>& Ks) {
  ArrowReport report;
  report.gains = small_gain_gains(c, lambda, k, bundle);
  // Cycle order: source sequence i feeds target sequence i+1.
  const std::vector<const std::vector<double>*> cycle = {
      &bundle.r, &bundle.x_perp, &bundle.dxz_perp, &bundle.dy, &bundle.z_perp};
  for (long K : Ks) {
    for (int i = 0; i < 5; ++i) {
      const auto& source = *cycle[i];
      const auto& target = *cycle[(i + 1) % 5];
      ArrowResult a;
      a.name = arrow_name(i);
      a.K = K;
      a.lhs = lambda_K_norm(target, lambda, K);
      a.rhs = report.gains.gamma[i] * lambda_K_norm(source, lambda, K) +
              report.gains.omega[i];
      a.slack = a.rhs - a.lhs;
      a.satisfied = a.lhs <= a.rhs + kInequalitySlack;
      report.arrows.push_back(std::move(a));
    }
  }
  return report;
}

FeasibilityReport feasible_region_check(double c, double lambda,
                                        const Constants& k) {
  validate(k);
  FeasibilityReport r;
  const int B = k.window;
  const double lb = std::pow(lambda, B);
  const double one_minus = 1.0 - lambda;
  r.lhs_decreasing = c * (1.0 - lb) * (1.0 - lb) /
                     (lambda * one_minus * one_minus * (lb - k.delta) * (lb - k.delta));
  r.rhs_decreasing = 0.5 * k.mu * std::sqrt(k.mu / k.lip);
  r.step_in_range = c > 0.0 && c <= k.mu / 2.0;
  r.lambda_in_window =
      lambda > std::pow(k.delta, 1.0 / B) && lambda < 1.0;
  r.lambda_above_floor =
      c <= 2.0 * k.lip && lambda >= lambda_floor(c, k.lip) - kInequalitySlack;
  r.gain_inequality = r.lambda_in_window && std::isfinite(r.lhs_decreasing) &&
                      r.lhs_decreasing <= r.rhs_decreasing;
  if (lambda > 0.0 && lambda < 1.0) {
    r.relaxation_lhs = (1.0 - lb) * (1.0 - lb) / (lambda * one_minus * one_minus);
    r.relaxation_holds = r.relaxation_lhs <= 2.0 * B * B;
  }
  return r;
}

kv::Document to_document(const RateCertificate& cert) {
  kv::Document d;
  d.comment("rate certificate");
  d.set("mu", cert.inputs.mu);
  d.set("L", cert.inputs.lip);
  d.set("kappa", cert.inputs.kappa());
  d.set("B", cert.inputs.window);
  d.set("delta", cert.inputs.delta);
  d.set("c", cert.c);
  d.set("c_max", cert.c_max);
  d.set("alpha_defined", cert.alpha.defined);
  d.set("alpha", cert.alpha.value);
  d.set("alpha_note", "kappa^(2/3) under the radical and kappa^(3/2) in the "
                      "denominator evaluated as stated; possible typo");
  d.set("branch", cert.branch == RateBranch::kSmallStep ? "small-step" : "large-step");
  d.set("lambda", cert.lambda);
  d.set("vacuous", cert.vacuous);
  return d;
}

kv::Document to_document(const ArrowReport& report) {
  kv::Document d;
  d.comment("small-gain arrow report");
  for (int i = 0; i < 5; ++i) {
    d.set("gamma" + std::to_string(i + 1), report.gains.gamma[i]);
    d.set("omega" + std::to_string(i + 1), report.gains.omega[i]);
  }
  d.set("gain_product", report.gains.product());
  for (const auto& a : report.arrows) {
    const std::string prefix = "K" + std::to_string(a.K) + "." + a.name + ".";
    d.set(prefix + "lhs", a.lhs);
    d.set(prefix + "rhs", a.rhs);
    d.set(prefix + "slack", a.slack);
    d.set(prefix + "satisfied", a.satisfied);
  }
  d.set("all_satisfied", report.all_satisfied());
  return d;
}

kv::Document to_document(const FeasibilityReport& r) {
  kv::Document d;
  d.comment("feasible region for (c, lambda)");
  d.set("gain_inequality.lhs", r.lhs_decreasing);
  d.set("gain_inequality.rhs", r.rhs_decreasing);
  d.set("gain_inequality", r.gain_inequality);
  d.set("step_in_range", r.step_in_range);
  d.set("lambda_above_floor", r.lambda_above_floor);
  d.set("lambda_in_window", r.lambda_in_window);
  d.set("relaxation.lhs", r.relaxation_lhs);
  d.set("relaxation_holds", r.relaxation_holds);
  d.set("all_pass", r.all_pass());
  return d;
}

}  // namespace panda::theory

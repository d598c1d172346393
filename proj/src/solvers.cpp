#include "panda/solvers.hpp"

#include <cmath>

#include "panda/error.hpp"
#include "panda/kernels.hpp"

namespace panda::solvers {
namespace {

Eigen::Index stack_size(const model::ProblemInstance& prob) {
  return static_cast<Eigen::Index>(prob.n()) * prob.p();
}

void check_mixing(const model::ProblemInstance& prob, const Matrix& w) {
  require(w.rows() == prob.n() && w.cols() == prob.n(),
          "step: mixing matrix must be n x n");
}

void check_state(const SolverState& s, const model::ProblemInstance& prob) {
  const auto size = stack_size(prob);
  require(s.x.size() == size && s.z.size() == size && s.y.size() == size,
          "step: state dimensions do not match the instance");
}

}  // namespace

long long count_directed_links(const Matrix& w) {
  long long links = 0;
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      if (i != j && w(i, j) != 0.0) ++links;
    }
  }
  return links;
}

SolverState panda_init(const model::ProblemInstance& prob) {
  SolverState s;
  s.x = Vector::Zero(stack_size(prob));
  s.z = s.x;
  s.y = s.x;
  s.y_bar = s.x;
  return s;
}

SolverState panda_init(const model::ProblemInstance& prob, const Vector& y0) {
  require(y0.size() == stack_size(prob), "panda_init: y0 must have dimension n*p");
  const double drift = block_average(y0, prob.p()).norm();
  require(drift <= kDualStartTolerance,
          "panda_init: y0 must have zero block average");
  SolverState s = panda_init(prob);
  s.y = y0;
  s.y_bar = y0;
  return s;
}

SolverState diging_init(const model::ProblemInstance& prob) {
  SolverState s;
  s.x = Vector::Zero(stack_size(prob));
  kernels::gradients(prob, s.x, s.g_track);
  return s;
}

StepReport panda_step(const SolverState& state,
                      const model::ProblemInstance& prob, const Matrix& w,
                      double c) {
  require(c > 0.0, "panda_step: c must be positive");
  check_mixing(prob, w);
  check_state(state, prob);
  const int p = prob.p();

  StepReport report;
  SolverState& next = report.state;
  kernels::local_solves(prob, state.y, model::kDefaultInnerTol, next.x,
                        report.per_agent_solve_iters);
  kernels::mix_blocks(w, state.z, p, next.z);
  next.z += next.x - state.x;
  next.y = state.y - c * (next.x - next.z);
  next.y_bar = next.y;
  next.k = state.k + 1;
  report.messages_sent = count_directed_links(w);
  return report;
}

StepReport accelerated_panda_step(const SolverState& state,
                                  const model::ProblemInstance& prob,
                                  const Matrix& w, double c, double eta) {
  require(c > 0.0, "accelerated_panda_step: c must be positive");
  require(eta >= 0.0, "accelerated_panda_step: eta must be nonnegative");
  check_mixing(prob, w);
  check_state(state, prob);
  require(state.y_bar.size() == state.y.size(),
          "accelerated_panda_step: state carries no y_bar");
  const int p = prob.p();

  StepReport report;
  SolverState& next = report.state;
  kernels::local_solves(prob, state.y_bar, model::kDefaultInnerTol, next.x,
                        report.per_agent_solve_iters);
  kernels::mix_blocks(w, state.z, p, next.z);
  next.z += next.x - state.x;
  next.y = state.y - c * (next.x - next.z);
  next.y_bar = (1.0 + eta) * next.y - eta * state.y;
  next.k = state.k + 1;
  report.messages_sent = count_directed_links(w);
  return report;
}

StepReport diging_step(const SolverState& state,
                       const model::ProblemInstance& prob, const Matrix& w,
                       double alpha) {
  require(alpha > 0.0, "diging_step: alpha must be positive");
  check_mixing(prob, w);
  const auto size = stack_size(prob);
  require(state.x.size() == size && state.g_track.size() == size,
          "diging_step: state dimensions do not match (call diging_init)");
  const int p = prob.p();

  StepReport report;
  SolverState& next = report.state;
  kernels::mix_blocks(w, state.x, p, next.x);
  next.x -= alpha * state.g_track;

  Vector grad_old;
  Vector grad_new;
  kernels::gradients(prob, state.x, grad_old);
  kernels::gradients(prob, next.x, grad_new);
  kernels::mix_blocks(w, state.g_track, p, next.g_track);
  next.g_track += grad_new - grad_old;
  next.k = state.k + 1;
  report.messages_sent = 2 * count_directed_links(w);
  report.per_agent_solve_iters.assign(prob.n(), 0);
  return report;
}

StepReport exact_average_dual_ascent_step(const SolverState& state,
                                          const model::ProblemInstance& prob,
                                          double c) {
  require(c > 0.0, "exact_average_dual_ascent_step: c must be positive");
  const auto size = stack_size(prob);
  require(state.y.size() == size, "exact_average_dual_ascent_step: bad state");
  const int n = prob.n();
  const int p = prob.p();

  StepReport report;
  SolverState& next = report.state;
  kernels::local_solves(prob, state.y, model::kDefaultInnerTol, next.x,
                        report.per_agent_solve_iters);
  next.y = state.y - c * project_disagreement(next.x, p);
  next.z = repeat_block(block_average(next.x, p), n);
  next.y_bar = next.y;
  next.k = state.k + 1;
  report.messages_sent = static_cast<long long>(n) * (n - 1);
  return report;
}

StepReport static_dual_ascent_step(const SolverState& state,
                                   const model::ProblemInstance& prob,
                                   const Matrix& u, double c) {
  require(c > 0.0, "static_dual_ascent_step: c must be positive");
  check_mixing(prob, u);
  const auto size = stack_size(prob);
  require(state.y.size() == size, "static_dual_ascent_step: bad state");
  const int p = prob.p();

  StepReport report;
  SolverState& next = report.state;
  kernels::local_solves(prob, state.y, model::kDefaultInnerTol, next.x,
                        report.per_agent_solve_iters);
  Vector ux;
  kernels::mix_blocks(u, next.x, p, ux);
  next.y = state.y - c * ux;
  next.z = Vector::Zero(size);
  next.y_bar = next.y;
  next.k = state.k + 1;
  report.messages_sent = count_directed_links(u);
  return report;
}

std::string_view algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kPanda: return "panda";
    case Algorithm::kPandaAccel: return "panda-accel";
    case Algorithm::kDiging: return "diging";
    case Algorithm::kExactAverage: return "exact-avg";
    case Algorithm::kStaticDual: return "static-dual";
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (auto a : {Algorithm::kPanda, Algorithm::kPandaAccel, Algorithm::kDiging,
                 Algorithm::kExactAverage, Algorithm::kStaticDual}) {
    if (algorithm_name(a) == name) return a;
  }
  return std::nullopt;
}

bool is_panda_family(Algorithm algorithm) {
  return algorithm == Algorithm::kPanda || algorithm == Algorithm::kPandaAccel;
}

std::string_view status_name(RunStatus status) {
  switch (status) {
    case RunStatus::kCompleted: return "completed";
    case RunStatus::kStopped: return "stopped";
    case RunStatus::kDiverged: return "diverged";
    case RunStatus::kFailed: return "failed";
  }
  return "unknown";
}

std::vector<double> RunTrace::residuals() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.relative_residual);
  return out;
}

double relative_residual(const Vector& x, const Vector& x_star_stack,
                         const Vector& x0) {
  const double denom = (x_star_stack - x0).norm();
  const double num = (x - x_star_stack).norm();
  return denom > 0.0 ? num / denom : num;
}

RunTrace run(Algorithm algorithm, const model::ProblemInstance& prob,
             const network::MixingSequence& mix, const RunParams& params,
             long iters, std::optional<Vector> x_star) {
  require(iters >= 1, "run: iters must be >= 1");
  require(params.snapshot_stride >= 1, "run: snapshot stride must be >= 1");
  require(mix.n() == prob.n(), "run: mixing sequence and instance disagree on n");

  RunTrace trace;
  trace.algorithm = algorithm;
  trace.n = prob.n();
  trace.p = prob.p();
  trace.snapshot_stride = params.snapshot_stride;

  SolverState state;
  try {
    if (!x_star) x_star = model::centralized_solution(prob);
    switch (algorithm) {
      case Algorithm::kDiging:
        state = diging_init(prob);
        break;
      default:
        state = params.y0 ? panda_init(prob, *params.y0) : panda_init(prob);
        break;
    }
  } catch (const Error& e) {
    trace.status = RunStatus::kFailed;
    trace.message = e.what();
    return trace;
  }

  const Vector x_star_stack = repeat_block(*x_star, prob.n());
  const Vector x0 = state.x;
  const double guard = kDivergenceFactor * (1.0 + (x0 - x_star_stack).norm());

  auto snapshot = [&](const SolverState& s) {
    if (s.k % params.snapshot_stride != 0) return;
    Snapshot snap;
    snap.k = s.k;
    snap.x = s.x;
    snap.z = algorithm == Algorithm::kDiging ? s.g_track : s.z;
    if (algorithm != Algorithm::kDiging) snap.y = s.y;
    trace.snapshots.push_back(std::move(snap));
  };

  long long messages = 0;
  trace.records.push_back({0, relative_residual(state.x, x_star_stack, x0), 0});
  snapshot(state);

  for (long k = 0; k < iters; ++k) {
    try {
      StepReport step;
      switch (algorithm) {
        case Algorithm::kPanda:
          step = panda_step(state, prob, mix.matrix(k), params.c);
          break;
        case Algorithm::kPandaAccel:
          step = accelerated_panda_step(state, prob, mix.matrix(k), params.c,
                                        params.eta);
          break;
        case Algorithm::kDiging:
          step = diging_step(state, prob, mix.matrix(k), params.alpha);
          break;
        case Algorithm::kExactAverage:
          step = exact_average_dual_ascent_step(state, prob, params.c);
          break;
        case Algorithm::kStaticDual:
          step = static_dual_ascent_step(
              state, prob,
              network::laplacian_communication_matrix(mix.edges(k), prob.n()),
              params.c);
          break;
      }
      state = std::move(step.state);
      messages += step.messages_sent;
    } catch (const Error& e) {
      trace.status = RunStatus::kFailed;
      trace.message = e.what();
      return trace;
    }

    const double xnorm = state.x.norm();
    if (!std::isfinite(xnorm) || xnorm > guard) {
      trace.status = RunStatus::kDiverged;
      trace.message = "divergence guard tripped at round " + std::to_string(state.k);
      return trace;
    }
    const double res = relative_residual(state.x, x_star_stack, x0);
    trace.records.push_back({state.k, res, messages});
    snapshot(state);
    if (params.stop_below > 0.0 && res <= params.stop_below) {
      trace.status = RunStatus::kStopped;
      return trace;
    }
  }
  trace.status = RunStatus::kCompleted;
  return trace;
}

}  // namespace panda::solvers

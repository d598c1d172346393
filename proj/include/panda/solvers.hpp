#pragma once

// Synchronous-round state machines: PANDA, its momentum variant, DIGing, and
// two reference dual-ascent schemes. All state is stacked (n blocks of p).

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "panda/model.hpp"
#include "panda/network.hpp"
#include "panda/stacked.hpp"

namespace panda::solvers {

struct SolverState {
  Vector x;        // primal stack
  Vector z;        // average-tracking stack (PANDA family)
  Vector y;        // dual stack
  Vector y_bar;    // extrapolated dual (accelerated PANDA)
  Vector g_track;  // tracked gradient stack (DIGing)
  long k = 0;
};

struct StepReport {
  SolverState state;
  long long messages_sent = 0;  // p-vectors sent network-wide this round
  std::vector<int> per_agent_solve_iters;
};

// Number of ordered pairs (i, j), i != j, with w_ij != 0: the directed links
// a round of mixing with `w` uses.
long long count_directed_links(const Matrix& w);

inline constexpr double kDualStartTolerance = 1e-10;

// x = z = 0, y = y_bar = 0, k = 0.
SolverState panda_init(const model::ProblemInstance& prob);
// As above with a caller-chosen dual start; throws kPrecondition unless its
// block average has norm <= kDualStartTolerance.
SolverState panda_init(const model::ProblemInstance& prob, const Vector& y0);

// x = 0, g_track = grad f(0), k = 0.
SolverState diging_init(const model::ProblemInstance& prob);

// x(k+1) = argmin f(x) - y(k)^T x
// z(k+1) = (W (x) I) z(k) + x(k+1) - x(k)
// y(k+1) = y(k) - c (x(k+1) - z(k+1))
StepReport panda_step(const SolverState& state,
                      const model::ProblemInstance& prob, const Matrix& w,
                      double c);

// PANDA with the primal step taken at y_bar(k), followed by
// y_bar(k+1) = (1 + eta) y(k+1) - eta y(k).
StepReport accelerated_panda_step(const SolverState& state,
                                  const model::ProblemInstance& prob,
                                  const Matrix& w, double c, double eta);

// x(k+1) = (W (x) I) x(k) - alpha g(k)
// g(k+1) = (W (x) I) g(k) + grad f(x(k+1)) - grad f(x(k))
// Two p-vectors per directed link.
StepReport diging_step(const SolverState& state,
                       const model::ProblemInstance& prob, const Matrix& w,
                       double alpha);

// Dual ascent against the exact network average:
// y_i(k+1) = y_i(k) - c (x_i(k+1) - mean_j x_j(k+1)). All-to-all exchange.
StepReport exact_average_dual_ascent_step(const SolverState& state,
                                          const model::ProblemInstance& prob,
                                          double c);

// Static-graph dual ascent: y(k+1) = y(k) - c (U (x) I) x(k+1).
StepReport static_dual_ascent_step(const SolverState& state,
                                   const model::ProblemInstance& prob,
                                   const Matrix& u, double c);

enum class Algorithm { kPanda, kPandaAccel, kDiging, kExactAverage, kStaticDual };

std::string_view algorithm_name(Algorithm algorithm);
std::optional<Algorithm> parse_algorithm(std::string_view name);
bool is_panda_family(Algorithm algorithm);

struct RunParams {
  double c = 0.013;      // PANDA family and reference dual ascent
  double alpha = 0.24;   // DIGing
  double eta = 0.2;      // momentum weight
  int snapshot_stride = 1;
  double inner_tol = model::kDefaultInnerTol;
  std::optional<Vector> y0;  // PANDA family dual start; zero when unset
  // Stop early once the relative residual drops to this value (0: never).
  double stop_below = 0.0;
};

// For DIGing, `z` holds the tracked gradient and `y` is empty.
struct Snapshot {
  long k = 0;
  Vector x;
  Vector z;
  Vector y;
};

struct RoundRecord {
  long k = 0;
  double relative_residual = 0.0;
  long long cumulative_messages = 0;
};

enum class RunStatus { kCompleted, kStopped, kDiverged, kFailed };
std::string_view status_name(RunStatus status);

struct RunTrace {
  Algorithm algorithm = Algorithm::kPanda;
  int n = 0;
  int p = 0;
  int snapshot_stride = 1;
  std::vector<RoundRecord> records;  // k = 0 .. last round executed
  std::vector<Snapshot> snapshots;   // every stride-th round, from k = 0
  RunStatus status = RunStatus::kCompleted;
  std::string message;

  std::vector<double> residuals() const;
  long long total_messages() const {
    return records.empty() ? 0 : records.back().cumulative_messages;
  }
};

inline constexpr double kDivergenceFactor = 1e12;

// ||x(k) - x*stack|| / ||x*stack - x(0)||; falls back to the absolute error
// when the denominator vanishes.
double relative_residual(const Vector& x, const Vector& x_star_stack,
                         const Vector& x0);

// Iterates `iters` rounds, pulling W(k) (or the Laplacian of E(k) for static
// dual ascent) from `mix`. Aborts with kDiverged when
// ||x(k)|| > 1e12 (1 + ||x(0) - x*stack||). Module errors end the run with
// kFailed; neither throws. `x_star` defaults to the centralized solution.
RunTrace run(Algorithm algorithm, const model::ProblemInstance& prob,
             const network::MixingSequence& mix, const RunParams& params,
             long iters, std::optional<Vector> x_star = std::nullopt);

}  // namespace panda::solvers

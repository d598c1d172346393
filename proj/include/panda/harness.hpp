#pragma once

// Experiment orchestration: configs, seeded end-to-end runs, rate fitting,
// multi-seed comparisons, CSV/plot emission and the theorem compliance suite.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "panda/kv.hpp"
#include "panda/model.hpp"
#include "panda/network.hpp"
#include "panda/solvers.hpp"
#include "panda/theory.hpp"

namespace panda::harness {

// Defaults reproduce the least-squares experiment: p = 5, cond cap 100,
// link removal 0.2, c = 0.013, alpha = 0.24, eta = 0.2. n = 10 is our
// choice; the experiment does not state it.
struct RunConfig {
  std::vector<solvers::Algorithm> algorithms = {solvers::Algorithm::kPanda,
                                                solvers::Algorithm::kPandaAccel,
                                                solvers::Algorithm::kDiging};
  int n = 10;
  int p = 5;
  double cond_cap = 100.0;
  double noise_scale = 1.0;
  double removal_prob = 0.2;
  std::uint64_t seed = 1;
  long iters = 3000;
  double c = 0.013;
  double alpha = 0.24;
  double eta = 0.2;
  int window = 1;  // B used when certifying the graph sequence
  int snapshot_stride = 1;
  double threshold = 1e-6;
  double tail_fraction = 0.5;
  std::string out_dir;
};

// Throws kConfig when a field violates its operation's preconditions.
void validate(const RunConfig& config);
kv::Document to_document(const RunConfig& config);
// Unknown keys are rejected; missing keys keep the values of `base`.
RunConfig config_from_document(const kv::Document& doc, RunConfig base = {});

struct SeedPlan {
  std::uint64_t instance = 0;
  std::uint64_t graph = 0;
};
// Labeled derivation from the master seed; shared by every algorithm.
SeedPlan derive_seeds(std::uint64_t master);

model::ProblemInstance make_instance(const RunConfig& config);
network::GraphSequence make_graph(const RunConfig& config);

struct RateFit {
  double lambda_hat = 1.0;
  double r_squared = 1.0;
  std::size_t points = 0;
};

inline constexpr double kResidualFloor = 1e-15;
inline constexpr std::size_t kMinFitPoints = 10;

// Least-squares fit of log(residual) against k over the last `tail_fraction`
// of the entries above kResidualFloor; lambda_hat = exp(slope). Throws
// kInsufficientData with fewer than kMinFitPoints surviving entries.
RateFit fit_linear_rate(const std::vector<double>& residuals,
                        double tail_fraction = 0.5);

std::optional<long> iterations_to_threshold(const solvers::RunTrace& trace,
                                            double threshold);

struct AlgorithmSummary {
  solvers::Algorithm algorithm = solvers::Algorithm::kPanda;
  solvers::RunStatus status = solvers::RunStatus::kCompleted;
  std::string message;
  std::optional<long> iterations_to_threshold;
  long long total_messages = 0;
  long rounds = 0;
  double final_residual = 0.0;
  std::optional<RateFit> fit;
  std::string fit_error;
};

struct ExperimentResult {
  RunConfig config;
  SeedPlan seeds;
  Vector x_star;
  std::vector<solvers::RunTrace> traces;
  std::vector<AlgorithmSummary> summaries;
  bool any_diverged() const;
};

// Runs every requested algorithm on the same instance and graph sequence.
// A failing algorithm is recorded in its summary; the others still run.
ExperimentResult run_experiment(const RunConfig& config);

// Header `iteration,algorithm,relative_residual,cumulative_messages`, one row
// per round per algorithm, 17 significant digits.
std::string residual_csv(const std::vector<solvers::RunTrace>& traces);

struct CsvRow {
  long iteration = 0;
  std::string algorithm;
  double relative_residual = 0.0;
  long long cumulative_messages = 0;
  bool operator==(const CsvRow&) const = default;
};
std::vector<CsvRow> parse_residual_csv(const std::string& text);

// Two columns: k and log10 of the relative residual.
std::string plot_data(const solvers::RunTrace& trace);

kv::Document summary_document(const ExperimentResult& result);

// Full-state snapshot file consumed by verify-arrows.
std::string serialize_snapshots(const solvers::RunTrace& trace);
solvers::RunTrace parse_snapshots(const std::string& text);

// Writes residuals.csv, <algo>.dat, summary.txt and trace_<algo>.txt.
void write_outputs(const ExperimentResult& result, const std::string& dir,
                   bool write_snapshots);

// Median of iterations-to-threshold; runs that never reach the threshold
// count as +infinity.
double median_iterations(const std::vector<std::optional<long>>& values);

struct SweepCell {
  std::uint64_t seed = 0;
  solvers::Algorithm algorithm = solvers::Algorithm::kPanda;
  std::optional<long> iterations;
  solvers::RunStatus status = solvers::RunStatus::kCompleted;
  std::optional<RateFit> fit;
  long long total_messages = 0;
};

struct SweepResult {
  std::vector<std::uint64_t> seeds;
  std::vector<SweepCell> cells;  // seed-major, algorithm order of the config
  double median(solvers::Algorithm algorithm) const;
};

// Runs the config once per seed (master seeds first_seed, first_seed+1, ...).
// Cells are independent and execute in parallel; results are collected in
// seed order.
SweepResult sweep_seeds(const RunConfig& config, int count);

// Quadratic agents with diagonal Hessians whose spectra interleave between
// kappa and 1, so mu = kappa and L = 1 up to rounding; m is seeded Gaussian.
model::ProblemInstance constructed_instance(int n, int p, double kappa,
                                            std::uint64_t seed);

struct ComplianceCase {
  std::string name;
  int n = 6;
  int p = 3;
  double kappa = 1.0;
  network::EdgeSet graph;
  std::uint64_t seed = 1;
};

// kappa in {1, 0.25, 0.04} crossed with {complete, cycle, path} on 6 nodes.
std::vector<ComplianceCase> default_compliance_grid();

struct ComplianceRun {
  double c = 0.0;
  std::optional<theory::RateCertificate> certificate;
  std::string certificate_error;
  std::optional<RateFit> fit;
  std::string fit_error;
  solvers::RunStatus status = solvers::RunStatus::kCompleted;
  long rounds = 0;
  bool rate_ok = false;  // lambda_hat <= lambda + tolerance
};

struct ComplianceRow {
  ComplianceCase setup;
  theory::Constants constants;
  ComplianceRun at_c_max;
  std::optional<ComplianceRun> at_alpha;
  std::optional<theory::ArrowReport> arrows;
  std::string arrows_error;
  double arrows_c = 0.0;
  double arrows_lambda = 0.0;
  // 10 x c_max: diverged or lambda_hat >= 1 is the expected outcome.
  ComplianceRun negative_control;
  bool negative_control_failed_as_expected = false;
};

struct ComplianceOptions {
  long max_iters = 60000;
  // Above the rounding floor of the tracking recursion (about 1e-11 after
  // 1e4 rounds), so tail fits see the contraction and not accumulated error.
  double stop_below = 1e-10;
  double rate_tolerance = 1e-3;
  std::vector<long> arrow_Ks = {10, 50, 200};
};

struct ComplianceReport {
  std::vector<ComplianceRow> rows;
  bool rates_pass() const;   // every certified run has lambda_hat <= lambda + tol
  bool arrows_pass() const;  // every arrow check satisfied
};

ComplianceReport theorem_compliance_suite(const std::vector<ComplianceCase>& cases,
                                          const ComplianceOptions& options = {});

kv::Document to_document(const ComplianceReport& report);

}  // namespace panda::harness

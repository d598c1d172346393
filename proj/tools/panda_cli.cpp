// Command-line front end: run, compare, certify, verify-arrows.
//
// Exit codes: 0 success, 1 config error, 2 numerical divergence,
// 3 assumption-verification failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "panda/error.hpp"
#include "panda/harness.hpp"
#include "panda/kv.hpp"
#include "panda/network.hpp"
#include "panda/theory.hpp"

namespace {

using namespace panda;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDivergence = 2;
constexpr int kExitAssumption = 3;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<long> iters;
  std::vector<std::string> algos;
  std::optional<double> c;
  std::optional<double> alpha;
  std::optional<double> eta;
  std::optional<int> n;
  std::optional<int> p;
  std::optional<double> removal_prob;
  std::optional<double> cond_cap;
  std::optional<int> window;
  std::optional<std::string> out;
  std::optional<int> snapshot_stride;
  std::optional<double> threshold;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_path, "Key-value config file");
  app->add_option("--seed", o.seed, "Master seed");
  app->add_option("--iters", o.iters, "Rounds per algorithm");
  app->add_option("--algo", o.algos,
                  "Algorithms: panda, panda-accel, diging, exact-avg, static-dual")
      ->delimiter(',');
  app->add_option("--step-size", o.c, "PANDA-family step size c");
  app->add_option("--diging-step", o.alpha, "DIGing step size");
  app->add_option("--eta", o.eta, "Momentum weight");
  app->add_option("--n", o.n, "Number of agents");
  app->add_option("--p", o.p, "Local dimension");
  app->add_option("--removal-prob", o.removal_prob, "Per-round link removal probability");
  app->add_option("--cond-cap", o.cond_cap, "Condition-number cap for generated H");
  app->add_option("--window", o.window, "Joint-spectrum window B");
  app->add_option("--out", o.out, "Output directory");
  app->add_option("--snapshot-stride", o.snapshot_stride, "Snapshot every k-th round");
  app->add_option("--threshold", o.threshold, "Residual threshold for iteration counts");
}

harness::RunConfig resolve(const Overrides& o) {
  harness::RunConfig cfg;
  if (!o.config_path.empty()) {
    cfg = harness::config_from_document(kv::Document::parse(kv::read_file(o.config_path)));
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.iters) cfg.iters = *o.iters;
  if (!o.algos.empty()) {
    cfg.algorithms.clear();
    for (const auto& name : o.algos) {
      const auto a = solvers::parse_algorithm(name);
      if (!a) fail(ErrorCode::kConfig, "unknown algorithm '" + name + "'");
      cfg.algorithms.push_back(*a);
    }
  }
  if (o.c) cfg.c = *o.c;
  if (o.alpha) cfg.alpha = *o.alpha;
  if (o.eta) cfg.eta = *o.eta;
  if (o.n) cfg.n = *o.n;
  if (o.p) cfg.p = *o.p;
  if (o.removal_prob) cfg.removal_prob = *o.removal_prob;
  if (o.cond_cap) cfg.cond_cap = *o.cond_cap;
  if (o.window) cfg.window = *o.window;
  if (o.out) cfg.out_dir = *o.out;
  if (o.snapshot_stride) cfg.snapshot_stride = *o.snapshot_stride;
  if (o.threshold) cfg.threshold = *o.threshold;
  harness::validate(cfg);
  return cfg;
}

void print_summary(const harness::ExperimentResult& result) {
  std::printf("n=%d p=%d seed=%llu iters=%ld\n", result.config.n, result.config.p,
              static_cast<unsigned long long>(result.config.seed), result.config.iters);
  std::printf("%-12s %-10s %12s %14s %14s %10s\n", "algorithm", "status",
              "iters@thresh", "messages", "final_resid", "lambda_hat");
  for (const auto& s : result.summaries) {
    const std::string it = s.iterations_to_threshold
                               ? std::to_string(*s.iterations_to_threshold)
                               : "never";
    const std::string lam = s.fit ? kv::format_double(s.fit->lambda_hat).substr(0, 10) : "-";
    std::printf("%-12s %-10s %12s %14lld %14.6e %10s\n",
                std::string(solvers::algorithm_name(s.algorithm)).c_str(),
                std::string(solvers::status_name(s.status)).c_str(), it.c_str(),
                s.total_messages, s.final_residual, lam.c_str());
  }
}

int cmd_run(const Overrides& o, bool export_edges) {
  const auto cfg = resolve(o);
  const auto result = harness::run_experiment(cfg);
  print_summary(result);
  if (!cfg.out_dir.empty()) {
    harness::write_outputs(result, cfg.out_dir, true);
    if (export_edges) {
      kv::write_file((std::filesystem::path(cfg.out_dir) / "edges.txt").string(),
                     network::export_edge_lists(harness::make_graph(cfg), cfg.iters));
    }
    std::printf("wrote %s\n", cfg.out_dir.c_str());
  }
  return result.any_diverged() ? kExitDivergence : kExitOk;
}

int cmd_compare(Overrides o, int seeds) {
  if (o.algos.empty()) o.algos = {"panda", "panda-accel", "diging"};
  const auto cfg = resolve(o);
  const auto sweep = harness::sweep_seeds(cfg, seeds);
  std::printf("median iterations to %.3g over %d seeds (seeds %llu..%llu)\n",
              cfg.threshold, seeds, static_cast<unsigned long long>(cfg.seed),
              static_cast<unsigned long long>(cfg.seed + seeds - 1));
  bool diverged = false;
  kv::Document doc;
  doc.comment("seed sweep");
  doc.set("seeds", seeds);
  doc.set("threshold", cfg.threshold);
  for (auto a : cfg.algorithms) {
    const std::string name(solvers::algorithm_name(a));
    int reached = 0;
    for (const auto& cell : sweep.cells) {
      if (cell.algorithm != a) continue;
      if (cell.iterations) ++reached;
      if (cell.status == solvers::RunStatus::kDiverged) diverged = true;
    }
    const double med = sweep.median(a);
    std::printf("  %-12s median=%-10s reached=%d/%d\n", name.c_str(),
                std::isinf(med) ? "inf" : std::to_string(static_cast<long>(med)).c_str(),
                reached, seeds);
    doc.set(name + ".median", med);
    doc.set(name + ".reached", reached);
  }
  if (!cfg.out_dir.empty()) {
    const auto result = harness::run_experiment(cfg);
    harness::write_outputs(result, cfg.out_dir, false);
    kv::write_file((std::filesystem::path(cfg.out_dir) / "sweep.txt").string(),
                   doc.to_text());
    std::printf("wrote %s\n", cfg.out_dir.c_str());
  }
  return diverged ? kExitDivergence : kExitOk;
}

int cmd_certify(const Overrides& o) {
  const auto cfg = resolve(o);
  int code = kExitOk;

  const auto mix = network::MixingSequence::metropolis(harness::make_graph(cfg));
  const auto mixing = network::verify_mixing_assumptions(mix, network::kDefaultSpectrumRounds,
                                                         cfg.window);
  std::printf("mixing: decentralized=%d doubly_stochastic=%d B=%d delta=%.6g certified=%d\n",
              mixing.decentralized, mixing.doubly_stochastic, mixing.spectrum.window,
              mixing.spectrum.delta, mixing.spectrum.certified);
  if (!mixing.all_pass()) code = kExitAssumption;

  const auto report = harness::theorem_compliance_suite(harness::default_compliance_grid());
  for (const auto& row : report.rows) {
    const auto& r = row.at_c_max;
    std::printf("%-22s delta=%.4f c_max=%.4g lambda=%s lambda_hat=%s rate=%s arrows=%s neg=%s\n",
                row.setup.name.c_str(), row.constants.delta, r.c,
                r.certificate ? kv::format_double(r.certificate->lambda).substr(0, 8).c_str() : "-",
                r.fit ? kv::format_double(r.fit->lambda_hat).substr(0, 8).c_str() : "-",
                r.rate_ok ? "ok" : "FAIL",
                row.arrows ? (row.arrows->all_satisfied() ? "ok" : "violated") : "error",
                row.negative_control_failed_as_expected ? "failed" : "converged");
  }
  if (!report.rates_pass()) code = kExitAssumption;
  std::printf("rates %s, arrows %s\n", report.rates_pass() ? "pass" : "FAIL",
              report.arrows_pass() ? "pass" : "violated");
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    kv::write_file((std::filesystem::path(cfg.out_dir) / "certify.txt").string(),
                   harness::to_document(report).to_text());
  }
  return code;
}

int cmd_verify_arrows(const Overrides& o, const std::string& trace_path,
                      std::optional<double> lambda_opt, std::vector<long> Ks) {
  const auto cfg = resolve(o);
  const auto trace = harness::parse_snapshots(kv::read_file(trace_path));
  const auto prob = harness::make_instance(cfg);
  const auto mix = network::MixingSequence::metropolis(harness::make_graph(cfg));
  const auto spectrum = network::estimate_delta(mix, cfg.window);
  const theory::Constants constants{prob.mu(), prob.lip(), cfg.window, spectrum.delta};
  const double lambda =
      lambda_opt ? *lambda_opt : theory::rate_bound(cfg.c, constants).lambda;
  if (!(lambda < 1.0)) {
    std::fprintf(stderr, "certificate is vacuous at c=%.6g (lambda >= 1); pass --lambda\n", cfg.c);
    return kExitAssumption;
  }

  const Vector x_star = model::centralized_solution(prob);
  const Vector y_star = model::dual_optimum(prob, x_star);
  const auto bundle = theory::residual_sequences(trace, x_star, y_star);
  if (Ks.empty()) Ks = {10, 50, 200};
  const auto report = theory::verify_arrows(bundle, cfg.c, lambda, constants, Ks);
  std::printf("c=%.6g lambda=%.10g gain_product=%.6g\n", cfg.c, lambda,
              report.gains.product());
  for (const auto& a : report.arrows) {
    std::printf("  %-18s K=%-5ld lhs=%.6e rhs=%.6e %s\n", a.name.c_str(), a.K, a.lhs,
                a.rhs, a.satisfied ? "ok" : "VIOLATED");
  }
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    kv::write_file((std::filesystem::path(cfg.out_dir) / "arrows.txt").string(),
                   theory::to_document(report).to_text());
  }
  return report.all_satisfied() ? kExitOk : kExitAssumption;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized dual ascent experiments"};
  app.require_subcommand(1);

  Overrides run_o, cmp_o, cert_o, arrow_o;
  bool export_edges = false;
  int seeds = 11;
  std::string trace_path;
  std::optional<double> lambda;
  std::vector<long> Ks;

  auto* run = app.add_subcommand("run", "Run one seeded experiment");
  add_common(run, run_o);
  run->add_flag("--export-edges", export_edges, "Also write per-round edge lists");

  auto* compare = app.add_subcommand("compare", "Compare algorithms over a seed sweep");
  add_common(compare, cmp_o);
  compare->add_option("--seeds", seeds, "Number of consecutive seeds")->check(CLI::PositiveNumber);

  auto* certify = app.add_subcommand("certify", "Rate-certificate compliance suite");
  add_common(certify, cert_o);

  auto* arrows = app.add_subcommand("verify-arrows", "Small-gain checks on a stored trace");
  add_common(arrows, arrow_o);
  arrows->add_option("--trace", trace_path, "Trace file written by run")->required();
  arrows->add_option("--lambda", lambda, "Rate; defaults to the certified value");
  arrows->add_option("--K", Ks, "Horizons")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_o, export_edges);
    if (*compare) return cmd_compare(cmp_o, seeds);
    if (*certify) return cmd_certify(cert_o);
    if (*arrows) return cmd_verify_arrows(arrow_o, trace_path, lambda, Ks);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::kConfig:
      case ErrorCode::kParse:
      case ErrorCode::kPrecondition:
      case ErrorCode::kOutOfRange:
      case ErrorCode::kDomain:
        return kExitConfig;
      case ErrorCode::kDivergence:
      case ErrorCode::kInnerSolverDivergence:
        return kExitDivergence;
      default:
        return kExitAssumption;
    }
  }
  return kExitOk;
}

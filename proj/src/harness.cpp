#include "panda/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <sstream>

#include "panda/error.hpp"
#include "panda/seeding.hpp"

namespace panda::harness {
namespace {

void config_require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::kConfig, "config: " + what);
}

std::string join_algorithms(const std::vector<solvers::Algorithm>& algos) {
  std::string out;
  for (std::size_t i = 0; i < algos.size(); ++i) {
    if (i) out += ',';
    out += solvers::algorithm_name(algos[i]);
  }
  return out;
}

std::vector<solvers::Algorithm> split_algorithms(const std::string& text) {
  std::vector<solvers::Algorithm> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    item = item.substr(first, item.find_last_not_of(" \t") - first + 1);
    const auto a = solvers::parse_algorithm(item);
    config_require(a.has_value(), "unknown algorithm '" + item + "'");
    out.push_back(*a);
  }
  return out;
}

solvers::RunStatus parse_status(const std::string& s) {
  for (auto st : {solvers::RunStatus::kCompleted, solvers::RunStatus::kStopped,
                  solvers::RunStatus::kDiverged, solvers::RunStatus::kFailed}) {
    if (solvers::status_name(st) == s) return st;
  }
  fail(ErrorCode::kParse, "unknown run status '" + s + "'");
}

solvers::RunParams params_from(const RunConfig& config) {
  solvers::RunParams params;
  params.c = config.c;
  params.alpha = config.alpha;
  params.eta = config.eta;
  params.snapshot_stride = config.snapshot_stride;
  return params;
}

ComplianceRun run_at(double c, const theory::Constants& constants,
                     const model::ProblemInstance& prob,
                     const network::MixingSequence& mix, const Vector& x_star,
                     const ComplianceOptions& options) {
  ComplianceRun out;
  out.c = c;
  try {
    out.certificate = theory::rate_bound(c, constants);
  } catch (const Error& e) {
    out.certificate_error = e.what();
  }
  solvers::RunParams params;
  params.c = c;
  params.snapshot_stride = static_cast<int>(std::min<long>(
      options.max_iters, std::numeric_limits<int>::max()));
  params.stop_below = options.stop_below;
  const auto trace = solvers::run(solvers::Algorithm::kPanda, prob, mix, params,
                                  options.max_iters, x_star);
  out.status = trace.status;
  out.rounds = trace.records.empty() ? 0 : trace.records.back().k;
  try {
    out.fit = fit_linear_rate(trace.residuals(), 0.5);
  } catch (const Error& e) {
    out.fit_error = e.what();
  }
  out.rate_ok = out.certificate && out.fit &&
                trace.status != solvers::RunStatus::kDiverged &&
                trace.status != solvers::RunStatus::kFailed &&
                out.fit->lambda_hat <= out.certificate->lambda + options.rate_tolerance;
  return out;
}

void put_run(kv::Document& d, const std::string& prefix, const ComplianceRun& run) {
  d.set(prefix + ".c", run.c);
  if (run.certificate) {
    d.set(prefix + ".lambda", run.certificate->lambda);
    d.set(prefix + ".vacuous", run.certificate->vacuous);
    d.set(prefix + ".branch", run.certificate->branch == theory::RateBranch::kSmallStep
                                  ? "small-step"
                                  : "large-step");
  } else {
    d.set(prefix + ".certificate_error", run.certificate_error);
  }
  if (run.fit) {
    d.set(prefix + ".lambda_hat", run.fit->lambda_hat);
    d.set(prefix + ".r_squared", run.fit->r_squared);
  } else {
    d.set(prefix + ".fit_error", run.fit_error);
  }
  d.set(prefix + ".status", std::string(solvers::status_name(run.status)));
  d.set(prefix + ".rounds", static_cast<long long>(run.rounds));
  d.set(prefix + ".rate_ok", run.rate_ok);
}

}  // namespace

void validate(const RunConfig& config) {
  config_require(!config.algorithms.empty(), "at least one algorithm is required");
  config_require(config.n >= 1, "n must be >= 1");
  config_require(config.p >= 1, "p must be >= 1");
  config_require(config.cond_cap >= 1.0 && std::isfinite(config.cond_cap),
                 "cond_cap must be a finite value >= 1");
  config_require(config.noise_scale >= 0.0 && std::isfinite(config.noise_scale),
                 "noise_scale must be finite and >= 0");
  config_require(config.removal_prob >= 0.0 && config.removal_prob <= 1.0,
                 "removal_prob must lie in [0, 1]");
  config_require(config.iters >= 1, "iters must be >= 1");
  config_require(config.c > 0.0 && std::isfinite(config.c), "c must be positive");
  config_require(config.alpha > 0.0 && std::isfinite(config.alpha),
                 "alpha must be positive");
  config_require(config.eta >= 0.0 && std::isfinite(config.eta),
                 "eta must be nonnegative");
  config_require(config.window >= 1, "B must be >= 1");
  config_require(config.snapshot_stride >= 1, "snapshot_stride must be >= 1");
  config_require(config.threshold > 0.0, "threshold must be positive");
  config_require(config.tail_fraction > 0.0 && config.tail_fraction <= 1.0,
                 "tail_fraction must lie in (0, 1]");
}

kv::Document to_document(const RunConfig& config) {
  kv::Document d;
  d.set("algorithms", join_algorithms(config.algorithms));
  d.set("n", config.n);
  d.set("p", config.p);
  d.set("cond_cap", config.cond_cap);
  d.set("noise_scale", config.noise_scale);
  d.set("removal_prob", config.removal_prob);
  d.set("seed", std::to_string(config.seed));
  d.set("iters", static_cast<long long>(config.iters));
  d.set("c", config.c);
  d.set("alpha", config.alpha);
  d.set("eta", config.eta);
  d.set("B", config.window);
  d.set("snapshot_stride", config.snapshot_stride);
  d.set("threshold", config.threshold);
  d.set("tail_fraction", config.tail_fraction);
  d.set("out", config.out_dir);
  return d;
}

RunConfig config_from_document(const kv::Document& doc, RunConfig base) {
  RunConfig c = std::move(base);
  try {
    for (const auto& [key, value] : doc.entries()) {
      if (key.empty()) continue;
      if (key == "algorithms") c.algorithms = split_algorithms(value);
      else if (key == "n") c.n = static_cast<int>(kv::parse_int(value));
      else if (key == "p") c.p = static_cast<int>(kv::parse_int(value));
      else if (key == "cond_cap") c.cond_cap = kv::parse_double(value);
      else if (key == "noise_scale") c.noise_scale = kv::parse_double(value);
      else if (key == "removal_prob") c.removal_prob = kv::parse_double(value);
      else if (key == "seed") {
        config_require(!value.empty() && value.find_first_not_of("0123456789") ==
                                             std::string::npos,
                       "seed must be a nonnegative integer");
        c.seed = std::stoull(value);
      } else if (key == "iters") c.iters = static_cast<long>(kv::parse_int(value));
      else if (key == "c") c.c = kv::parse_double(value);
      else if (key == "alpha") c.alpha = kv::parse_double(value);
      else if (key == "eta") c.eta = kv::parse_double(value);
      else if (key == "B") c.window = static_cast<int>(kv::parse_int(value));
      else if (key == "snapshot_stride")
        c.snapshot_stride = static_cast<int>(kv::parse_int(value));
      else if (key == "threshold") c.threshold = kv::parse_double(value);
      else if (key == "tail_fraction") c.tail_fraction = kv::parse_double(value);
      else if (key == "out") c.out_dir = value;
      else config_require(false, "unknown key '" + key + "'");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw;
    fail(ErrorCode::kConfig, std::string("config: ") + e.what());
  } catch (const std::out_of_range&) {
    fail(ErrorCode::kConfig, "config: seed out of range");
  }
  validate(c);
  return c;
}

SeedPlan derive_seeds(std::uint64_t master) {
  return {derive_seed(master, "instance"), derive_seed(master, "graph")};
}

model::ProblemInstance make_instance(const RunConfig& config) {
  return model::generate_least_squares_instance(
      config.n, config.p, config.cond_cap, config.noise_scale,
      derive_seeds(config.seed).instance);
}

network::GraphSequence make_graph(const RunConfig& config) {
  return network::GraphSequence::iid_link_failure(
      config.n, config.removal_prob, derive_seeds(config.seed).graph);
}

RateFit fit_linear_rate(const std::vector<double>& residuals,
                        double tail_fraction) {
  require(tail_fraction > 0.0 && tail_fraction <= 1.0,
          "fit_linear_rate: tail_fraction must lie in (0, 1]");
  std::vector<std::pair<double, double>> kept;  // (k, log residual)
  for (std::size_t k = 0; k < residuals.size(); ++k) {
    const double r = residuals[k];
    if (std::isfinite(r) && r > kResidualFloor) {
      kept.emplace_back(static_cast<double>(k), std::log(r));
    }
  }
  const auto tail = static_cast<std::size_t>(
      std::ceil(tail_fraction * static_cast<double>(kept.size())));
  if (tail < kMinFitPoints) {
    fail(ErrorCode::kInsufficientData,
         "fit_linear_rate: " + std::to_string(tail) +
             " usable tail points, need " + std::to_string(kMinFitPoints));
  }
  const auto first = kept.end() - static_cast<std::ptrdiff_t>(tail);

  double sk = 0.0, sy = 0.0;
  for (auto it = first; it != kept.end(); ++it) {
    sk += it->first;
    sy += it->second;
  }
  const double m = static_cast<double>(tail);
  const double mk = sk / m, my = sy / m;
  double skk = 0.0, sky = 0.0, syy = 0.0;
  for (auto it = first; it != kept.end(); ++it) {
    const double dk = it->first - mk, dy = it->second - my;
    skk += dk * dk;
    sky += dk * dy;
    syy += dy * dy;
  }
  RateFit fit;
  fit.points = tail;
  const double slope = sky / skk;
  fit.lambda_hat = std::exp(slope);
  // A flat series is fit perfectly by a constant.
  fit.r_squared = syy > 0.0 ? (sky * sky) / (skk * syy) : 1.0;
  return fit;
}

std::optional<long> iterations_to_threshold(const solvers::RunTrace& trace,
                                            double threshold) {
  for (const auto& r : trace.records) {
    if (r.relative_residual <= threshold) return r.k;
  }
  return std::nullopt;
}

bool ExperimentResult::any_diverged() const {
  return std::any_of(summaries.begin(), summaries.end(), [](const auto& s) {
    return s.status == solvers::RunStatus::kDiverged;
  });
}

ExperimentResult run_experiment(const RunConfig& config) {
  validate(config);
  ExperimentResult result;
  result.config = config;
  result.seeds = derive_seeds(config.seed);

  const auto prob = make_instance(config);
  const auto mix = network::MixingSequence::metropolis(make_graph(config));
  result.x_star = model::centralized_solution(prob);
  const auto params = params_from(config);

  for (auto algo : config.algorithms) {
    auto trace = solvers::run(algo, prob, mix, params, config.iters, result.x_star);
    AlgorithmSummary s;
    s.algorithm = algo;
    s.status = trace.status;
    s.message = trace.message;
    s.iterations_to_threshold = iterations_to_threshold(trace, config.threshold);
    s.total_messages = trace.total_messages();
    s.rounds = trace.records.empty() ? 0 : trace.records.back().k;
    s.final_residual =
        trace.records.empty() ? 0.0 : trace.records.back().relative_residual;
    try {
      s.fit = fit_linear_rate(trace.residuals(), config.tail_fraction);
    } catch (const Error& e) {
      s.fit_error = e.what();
    }
    result.summaries.push_back(std::move(s));
    result.traces.push_back(std::move(trace));
  }
  return result;
}

std::string residual_csv(const std::vector<solvers::RunTrace>& traces) {
  std::string out = "iteration,algorithm,relative_residual,cumulative_messages\n";
  for (const auto& trace : traces) {
    const std::string name(solvers::algorithm_name(trace.algorithm));
    for (const auto& r : trace.records) {
      out += std::to_string(r.k);
      out += ',';
      out += name;
      out += ',';
      out += kv::format_double(r.relative_residual);
      out += ',';
      out += std::to_string(r.cumulative_messages);
      out += '\n';
    }
  }
  return out;
}

std::vector<CsvRow> parse_residual_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      line != "iteration,algorithm,relative_residual,cumulative_messages") {
    fail(ErrorCode::kParse, "residual csv: unexpected header");
  }
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string col;
    while (std::getline(ls, col, ',')) cols.push_back(col);
    if (cols.size() != 4) fail(ErrorCode::kParse, "residual csv: bad row '" + line + "'");
    CsvRow row;
    row.iteration = static_cast<long>(kv::parse_int(cols[0]));
    row.algorithm = cols[1];
    row.relative_residual = kv::parse_double(cols[2]);
    row.cumulative_messages = kv::parse_int(cols[3]);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string plot_data(const solvers::RunTrace& trace) {
  std::string out = "# k log10_relative_residual\n";
  for (const auto& r : trace.records) {
    out += std::to_string(r.k);
    out += ' ';
    out += kv::format_double(std::log10(r.relative_residual));
    out += '\n';
  }
  return out;
}

kv::Document summary_document(const ExperimentResult& result) {
  kv::Document d;
  d.comment("experiment summary");
  d.set("n", result.config.n);
  d.set("p", result.config.p);
  d.set("seed", std::to_string(result.config.seed));
  d.set("instance_seed", std::to_string(result.seeds.instance));
  d.set("graph_seed", std::to_string(result.seeds.graph));
  d.set("threshold", result.config.threshold);
  for (const auto& s : result.summaries) {
    const std::string pre(solvers::algorithm_name(s.algorithm));
    d.set(pre + ".status", std::string(solvers::status_name(s.status)));
    if (!s.message.empty()) d.set(pre + ".message", s.message);
    d.set(pre + ".rounds", static_cast<long long>(s.rounds));
    d.set(pre + ".iterations_to_threshold",
          s.iterations_to_threshold ? std::to_string(*s.iterations_to_threshold)
                                    : std::string("never"));
    d.set(pre + ".total_messages", s.total_messages);
    d.set(pre + ".final_residual", s.final_residual);
    if (s.fit) {
      d.set(pre + ".lambda_hat", s.fit->lambda_hat);
      d.set(pre + ".r_squared", s.fit->r_squared);
    } else {
      d.set(pre + ".fit_error", s.fit_error);
    }
  }
  return d;
}

std::string serialize_snapshots(const solvers::RunTrace& trace) {
  kv::Document d;
  d.set("format", "panda-trace-v1");
  d.set("algorithm", std::string(solvers::algorithm_name(trace.algorithm)));
  d.set("n", trace.n);
  d.set("p", trace.p);
  d.set("snapshot_stride", trace.snapshot_stride);
  d.set("status", std::string(solvers::status_name(trace.status)));
  d.set("message", trace.message);
  d.set("records", static_cast<long long>(trace.records.size()));
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    d.set("record." + std::to_string(i),
          std::to_string(r.k) + ' ' + kv::format_double(r.relative_residual) +
              ' ' + std::to_string(r.cumulative_messages));
  }
  d.set("snapshots", static_cast<long long>(trace.snapshots.size()));
  for (std::size_t i = 0; i < trace.snapshots.size(); ++i) {
    const auto& s = trace.snapshots[i];
    const std::string pre = "snapshot." + std::to_string(i);
    d.set(pre + ".k", static_cast<long long>(s.k));
    d.set(pre + ".x", kv::format_vector(s.x));
    d.set(pre + ".z", kv::format_vector(s.z));
    d.set(pre + ".y", kv::format_vector(s.y));
  }
  return d.to_text();
}

solvers::RunTrace parse_snapshots(const std::string& text) {
  const auto d = kv::Document::parse(text);
  if (d.at("format") != "panda-trace-v1") {
    fail(ErrorCode::kParse, "trace: unsupported format '" + d.at("format") + "'");
  }
  solvers::RunTrace t;
  const auto algo = solvers::parse_algorithm(d.at("algorithm"));
  if (!algo) fail(ErrorCode::kParse, "trace: unknown algorithm");
  t.algorithm = *algo;
  t.n = static_cast<int>(kv::parse_int(d.at("n")));
  t.p = static_cast<int>(kv::parse_int(d.at("p")));
  t.snapshot_stride = static_cast<int>(kv::parse_int(d.at("snapshot_stride")));
  t.status = parse_status(d.at("status"));
  t.message = d.get("message").value_or("");
  const auto records = kv::parse_int(d.at("records"));
  for (long long i = 0; i < records; ++i) {
    std::istringstream in(d.at("record." + std::to_string(i)));
    std::string k, res, msg;
    if (!(in >> k >> res >> msg)) fail(ErrorCode::kParse, "trace: bad record");
    t.records.push_back({static_cast<long>(kv::parse_int(k)), kv::parse_double(res),
                         kv::parse_int(msg)});
  }
  const auto snaps = kv::parse_int(d.at("snapshots"));
  const auto size = static_cast<Eigen::Index>(t.n) * t.p;
  for (long long i = 0; i < snaps; ++i) {
    const std::string pre = "snapshot." + std::to_string(i);
    solvers::Snapshot s;
    s.k = static_cast<long>(kv::parse_int(d.at(pre + ".k")));
    s.x = kv::parse_vector(d.at(pre + ".x"));
    s.z = kv::parse_vector(d.at(pre + ".z"));
    s.y = kv::parse_vector(d.at(pre + ".y"));
    if (s.x.size() != size || s.z.size() != size ||
        (s.y.size() != 0 && s.y.size() != size)) {
      fail(ErrorCode::kParse, "trace: snapshot " + std::to_string(i) +
                                  " has the wrong dimension");
    }
    t.snapshots.push_back(std::move(s));
  }
  return t;
}

void write_outputs(const ExperimentResult& result, const std::string& dir,
                   bool write_snapshots) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kConfig, "cannot create '" + dir + "': " + ec.message());
  const std::filesystem::path root(dir);
  kv::write_file((root / "residuals.csv").string(), residual_csv(result.traces));
  kv::write_file((root / "summary.txt").string(),
                 summary_document(result).to_text());
  kv::write_file((root / "config.txt").string(),
                 to_document(result.config).to_text());
  for (const auto& trace : result.traces) {
    const std::string name(solvers::algorithm_name(trace.algorithm));
    kv::write_file((root / (name + ".dat")).string(), plot_data(trace));
    if (write_snapshots) {
      kv::write_file((root / ("trace_" + name + ".txt")).string(),
                     serialize_snapshots(trace));
    }
  }
}

double median_iterations(const std::vector<std::optional<long>>& values) {
  require(!values.empty(), "median_iterations: no values");
  std::vector<double> v;
  v.reserve(values.size());
  for (const auto& x : values) {
    v.push_back(x ? static_cast<double>(*x) : std::numeric_limits<double>::infinity());
  }
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  if (v.size() % 2 == 1) return v[mid];
  return 0.5 * (v[mid - 1] + v[mid]);
}

double SweepResult::median(solvers::Algorithm algorithm) const {
  std::vector<std::optional<long>> values;
  for (const auto& cell : cells) {
    if (cell.algorithm == algorithm) values.push_back(cell.iterations);
  }
  return median_iterations(values);
}

SweepResult sweep_seeds(const RunConfig& config, int count) {
  validate(config);
  require(count >= 1, "sweep_seeds: count must be >= 1");
  SweepResult out;
  const std::size_t n_algo = config.algorithms.size();
  out.cells.resize(static_cast<std::size_t>(count) * n_algo);
  for (int s = 0; s < count; ++s) out.seeds.push_back(config.seed + s);

  std::vector<std::string> errors(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < count; ++s) {
    RunConfig cell_config = config;
    cell_config.seed = config.seed + static_cast<std::uint64_t>(s);
    // Only k = 0 and the last round are kept; residual records are enough.
    cell_config.snapshot_stride = static_cast<int>(
        std::min<long>(config.iters, std::numeric_limits<int>::max()));
    try {
      const auto result = run_experiment(cell_config);
      for (std::size_t a = 0; a < n_algo; ++a) {
        auto& cell = out.cells[static_cast<std::size_t>(s) * n_algo + a];
        const auto& summary = result.summaries[a];
        cell.seed = cell_config.seed;
        cell.algorithm = summary.algorithm;
        cell.iterations = summary.iterations_to_threshold;
        cell.status = summary.status;
        cell.fit = summary.fit;
        cell.total_messages = summary.total_messages;
      }
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(s)] = e.what();
    }
  }
  for (int s = 0; s < count; ++s) {
    if (!errors[static_cast<std::size_t>(s)].empty()) {
      fail(ErrorCode::kGenerationFailure,
           "sweep seed " + std::to_string(config.seed + s) + ": " +
               errors[static_cast<std::size_t>(s)]);
    }
  }
  return out;
}

model::ProblemInstance constructed_instance(int n, int p, double kappa,
                                            std::uint64_t seed) {
  require(n >= 1 && p >= 1, "constructed_instance: n and p must be >= 1");
  require(kappa > 0.0 && kappa <= 1.0, "constructed_instance: kappa must lie in (0, 1]");
  Vector spectrum(p);
  for (int j = 0; j < p; ++j) {
    spectrum[j] = p == 1 ? 1.0 : kappa + (1.0 - kappa) * j / (p - 1.0);
  }
  Rng rng(derive_seed(seed, "constructed"));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<model::LocalObjective> agents;
  agents.reserve(n);
  for (int i = 0; i < n; ++i) {
    Matrix H = Matrix::Zero(p, p);
    for (int j = 0; j < p; ++j) H(j, j) = std::sqrt(spectrum[(i + j) % p]);
    Vector m(p);
    for (int j = 0; j < p; ++j) m[j] = normal(rng);
    agents.push_back(model::LocalObjective::quadratic(std::move(H), std::move(m)));
  }
  return model::ProblemInstance(std::move(agents), seed);
}

std::vector<ComplianceCase> default_compliance_grid() {
  std::vector<ComplianceCase> cases;
  const int n = 6;
  const std::pair<const char*, network::EdgeSet> graphs[] = {
      {"complete", network::complete_graph(n)},
      {"cycle", network::cycle_graph(n)},
      {"path", network::path_graph(n)},
  };
  std::uint64_t seed = 1;
  for (double kappa : {1.0, 0.25, 0.04}) {
    for (const auto& [name, edges] : graphs) {
      ComplianceCase c;
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%s/kappa=%g", name, kappa);
      c.name = buf;
      c.n = n;
      c.p = 3;
      c.kappa = kappa;
      c.graph = edges;
      c.seed = seed++;
      cases.push_back(std::move(c));
    }
  }
  return cases;
}

bool ComplianceReport::rates_pass() const {
  if (rows.empty()) return false;
  for (const auto& row : rows) {
    if (!row.at_c_max.rate_ok) return false;
    if (row.at_alpha && !row.at_alpha->rate_ok) return false;
  }
  return true;
}

bool ComplianceReport::arrows_pass() const {
  if (rows.empty()) return false;
  for (const auto& row : rows) {
    if (!row.arrows || !row.arrows->all_satisfied()) return false;
  }
  return true;
}

ComplianceReport theorem_compliance_suite(const std::vector<ComplianceCase>& cases,
                                          const ComplianceOptions& options) {
  ComplianceReport report;
  report.rows.resize(cases.size());
  for (const auto& cs : cases) {
    require(cs.n >= 2 && cs.p >= 1 && cs.kappa > 0.0 && cs.kappa <= 1.0,
            "compliance case '" + cs.name + "': bad dimensions or kappa");
    require(network::is_connected(cs.graph, cs.n),
            "compliance case '" + cs.name + "': graph must be connected");
  }
  require(!options.arrow_Ks.empty(), "compliance: arrow_Ks must be nonempty");

#pragma omp parallel for schedule(dynamic)
  for (std::size_t idx = 0; idx < cases.size(); ++idx) {
    const auto& cs = cases[idx];
    ComplianceRow& row = report.rows[idx];
    row.setup = cs;
    const auto prob = constructed_instance(cs.n, cs.p, cs.kappa, cs.seed);
    const auto mix = network::MixingSequence::metropolis(
        network::GraphSequence::fixed(cs.n, cs.graph));
    const auto spectrum = network::estimate_delta(mix, 1, 1);
    row.constants = {prob.mu(), prob.lip(), 1, spectrum.delta};
    const Vector x_star = model::centralized_solution(prob);

    const double c_max = theory::max_step_size(row.constants);
    row.at_c_max = run_at(c_max, row.constants, prob, mix, x_star, options);

    const auto alpha = theory::alpha_threshold(row.constants);
    if (alpha.defined && alpha.value > 0.0 && alpha.value <= c_max) {
      row.at_alpha = run_at(alpha.value, row.constants, prob, mix, x_star, options);
    }

    // Arrow check on a run whose certificate is non-vacuous: c = alpha when
    // that certifies, else a quarter of the largest step whose large-step
    // rate is below one.
    const double B = row.constants.window;
    const double c_contracting = row.constants.mu * std::sqrt(row.constants.kappa()) *
                                 (1.0 - row.constants.delta) *
                                 (1.0 - row.constants.delta) / (4.0 * B * B);
    double c_arrow = std::min(c_max, c_contracting) / 4.0;
    if (row.at_alpha && row.at_alpha->certificate &&
        !row.at_alpha->certificate->vacuous) {
      c_arrow = row.at_alpha->c;
    }
    row.arrows_c = c_arrow;
    try {
      const auto cert = theory::rate_bound(c_arrow, row.constants);
      // The large-step rate can sit below the floor required by the z_perp -> r relation; any
      // larger lambda below one is also a valid rate, so lift it.
      row.arrows_lambda = std::max(
          cert.lambda, std::sqrt(1.0 - c_arrow / (2.0 * row.constants.lip)));
      const long K_max = *std::max_element(options.arrow_Ks.begin(),
                                           options.arrow_Ks.end());
      solvers::RunParams params;
      params.c = c_arrow;
      const auto trace = solvers::run(solvers::Algorithm::kPanda, prob, mix,
                                      params, K_max, x_star);
      if (trace.status == solvers::RunStatus::kFailed ||
          trace.status == solvers::RunStatus::kDiverged) {
        fail(ErrorCode::kDivergence, "arrow run: " + trace.message);
      }
      const Vector y_star = model::dual_optimum(prob, x_star);
      const auto bundle = theory::residual_sequences(trace, x_star, y_star);
      row.arrows = theory::verify_arrows(bundle, c_arrow, row.arrows_lambda,
                                         row.constants, options.arrow_Ks);
    } catch (const Error& e) {
      row.arrows_error = e.what();
    }

    // Negative control: a tenfold step. Failure is the expected outcome.
    row.negative_control =
        run_at(10.0 * c_max, row.constants, prob, mix, x_star, options);
    const auto& nc = row.negative_control;
    row.negative_control_failed_as_expected =
        nc.status == solvers::RunStatus::kDiverged ||
        (nc.fit && nc.fit->lambda_hat >= 1.0);
  }
  return report;
}

kv::Document to_document(const ComplianceReport& report) {
  kv::Document d;
  d.comment("theorem compliance suite");
  d.set("cases", static_cast<long long>(report.rows.size()));
  d.set("rates_pass", report.rates_pass());
  d.set("arrows_pass", report.arrows_pass());
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& row = report.rows[i];
    const std::string pre = "case." + std::to_string(i);
    d.set(pre + ".name", row.setup.name);
    d.set(pre + ".mu", row.constants.mu);
    d.set(pre + ".L", row.constants.lip);
    d.set(pre + ".B", row.constants.window);
    d.set(pre + ".delta", row.constants.delta);
    put_run(d, pre + ".c_max", row.at_c_max);
    if (row.at_alpha) put_run(d, pre + ".alpha", *row.at_alpha);
    d.set(pre + ".arrows.c", row.arrows_c);
    d.set(pre + ".arrows.lambda", row.arrows_lambda);
    if (row.arrows) {
      d.set(pre + ".arrows.gain_product", row.arrows->gains.product());
      d.set(pre + ".arrows.all_satisfied", row.arrows->all_satisfied());
      for (const auto& a : row.arrows->arrows) {
        if (a.satisfied) continue;
        d.set(pre + ".arrows.violated." + a.name + ".K" + std::to_string(a.K),
              kv::format_double(a.lhs) + " > " + kv::format_double(a.rhs));
      }
    } else {
      d.set(pre + ".arrows.error", row.arrows_error);
    }
    put_run(d, pre + ".negative_control", row.negative_control);
    d.set(pre + ".negative_control.failed_as_expected",
          row.negative_control_failed_as_expected);
  }
  return d;
}

}  // namespace panda::harness

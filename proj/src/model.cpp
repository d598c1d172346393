#include "panda/model.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <limits>

#include "panda/error.hpp"
#include "panda/kernels.hpp"
#include "panda/kv.hpp"
#include "panda/seeding.hpp"

namespace panda::model {

LocalObjective LocalObjective::quadratic(Matrix H, Vector m) {
  require(H.rows() >= 1 && H.cols() >= 1, "quadratic objective: empty H");
  require(m.size() == H.rows(), "quadratic objective: m must have H.rows() entries");
  require(H.allFinite() && m.allFinite(), "quadratic objective: non-finite data");
  const int p = static_cast<int>(H.cols());

  Quadratic q;
  q.hessian = H.transpose() * H;
  q.rhs = H.transpose() * m;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(q.hessian, Eigen::EigenvaluesOnly);
  const double mu = eig.eigenvalues().minCoeff();
  const double lip = eig.eigenvalues().maxCoeff();
  if (!(mu > 0.0) || lip / mu > kMaxHessianCondition) {
    fail(ErrorCode::kDegenerateObjective,
         "H^T H is singular or too ill-conditioned (mu=" + kv::format_double(mu) +
             ", L=" + kv::format_double(lip) + ")");
  }
  q.factor.compute(q.hessian);
  if (q.factor.info() != Eigen::Success) {
    fail(ErrorCode::kDegenerateObjective, "Cholesky factorization of H^T H failed");
  }
  q.data = QuadraticData{std::move(H), std::move(m)};
  return LocalObjective(p, std::move(q), mu, lip);
}

LocalObjective LocalObjective::custom(int p, CustomData data) {
  require(p >= 1, "custom objective: p must be positive");
  require(static_cast<bool>(data.value) && static_cast<bool>(data.gradient),
          "custom objective: value and gradient evaluators required");
  require(std::isfinite(data.mu) && std::isfinite(data.lip) && data.mu > 0.0 &&
              data.lip >= data.mu,
          "custom objective: need 0 < mu <= L < inf");
  const double mu = data.mu;
  const double lip = data.lip;
  return LocalObjective(p, std::move(data), mu, lip);
}

const QuadraticData& LocalObjective::quadratic_data() const {
  const auto* q = std::get_if<Quadratic>(&data_);
  require(q != nullptr, "quadratic_data: objective is not quadratic");
  return q->data;
}

double LocalObjective::value(const Vector& x) const {
  require(x.size() == p_, "value: dimension mismatch");
  if (const auto* q = std::get_if<Quadratic>(&data_)) {
    return 0.5 * (q->data.H * x - q->data.m).squaredNorm();
  }
  return std::get<CustomData>(data_).value(x);
}

Vector LocalObjective::gradient(const Vector& x) const {
  require(x.size() == p_, "gradient: dimension mismatch");
  if (const auto* q = std::get_if<Quadratic>(&data_)) {
    return q->hessian * x - q->rhs;
  }
  return std::get<CustomData>(data_).gradient(x);
}

LocalSolveResult LocalObjective::solve_shifted(const Vector& y,
                                               double tol) const {
  require(y.size() == p_, "local_solve: dimension mismatch");
  if (const auto* q = std::get_if<Quadratic>(&data_)) {
    return {q->factor.solve(q->rhs + y), 0};
  }
  require(tol > 0.0, "local_solve: tol must be positive");
  const auto& c = std::get<CustomData>(data_);
  const double step = 1.0 / c.lip;
  Vector x = Vector::Zero(p_);
  for (int it = 0; it <= kInnerIterationCap; ++it) {
    const Vector g = c.gradient(x) - y;
    if (!g.allFinite()) break;
    if (g.norm() <= tol) return {std::move(x), it};
    x -= step * g;
  }
  fail(ErrorCode::kInnerSolverDivergence,
       "local_solve: gradient descent did not reach tolerance within the cap");
}

ProblemInstance::ProblemInstance(std::vector<LocalObjective> agents,
                                 std::optional<std::uint64_t> seed)
    : agents_(std::move(agents)), seed_(seed) {
  require(!agents_.empty(), "ProblemInstance: need at least one agent");
  p_ = agents_.front().dim();
  mu_ = std::numeric_limits<double>::infinity();
  lip_ = 0.0;
  for (const auto& a : agents_) {
    require(a.dim() == p_, "ProblemInstance: agents disagree on dimension");
    mu_ = std::min(mu_, a.mu());
    lip_ = std::max(lip_, a.lip());
  }
}

bool ProblemInstance::all_quadratic() const {
  for (const auto& a : agents_) {
    if (!a.is_quadratic()) return false;
  }
  return true;
}

Vector local_solve(const LocalObjective& obj, const Vector& y_i, double tol) {
  return obj.solve_shifted(y_i, tol).x;
}

Vector gradient(const LocalObjective& obj, const Vector& x) {
  return obj.gradient(x);
}

Vector stacked_gradient(const ProblemInstance& prob, const Vector& x) {
  Vector out;
  kernels::gradients(prob, x, out);
  return out;
}

Vector conjugate_gradient_map(const ProblemInstance& prob, const Vector& y,
                              double tol) {
  std::vector<int> iterations;
  return conjugate_gradient_map(prob, y, tol, iterations);
}

Vector conjugate_gradient_map(const ProblemInstance& prob, const Vector& y,
                              double tol, std::vector<int>& iterations) {
  Vector out;
  kernels::local_solves(prob, y, tol, out, iterations);
  return out;
}

ProblemInstance generate_least_squares_instance(int n, int p, double cond_cap,
                                                double noise_scale,
                                                std::uint64_t seed) {
  require(n >= 1 && p >= 1, "generate: need n >= 1 and p >= 1");
  require(cond_cap >= 1.0, "generate: cond_cap must be >= 1");
  require(std::isfinite(noise_scale), "generate: noise_scale must be finite");

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<Matrix> hs;
  hs.reserve(n);
  for (int i = 0; i < n; ++i) {
    bool accepted = false;
    Matrix H(p, p);
    for (int draw = 0; draw < kMaxConditionDraws && !accepted; ++draw) {
      for (int r = 0; r < p; ++r) {
        for (int c = 0; c < p; ++c) H(r, c) = normal(rng);
      }
      const Vector sv = Eigen::JacobiSVD<Matrix>(H).singularValues();
      const double smin = sv.minCoeff();
      accepted = smin > 0.0 && sv.maxCoeff() / smin <= cond_cap;
    }
    if (!accepted) {
      fail(ErrorCode::kGenerationFailure,
           "generate: no matrix within the condition cap after " +
               std::to_string(kMaxConditionDraws) + " draws (agent " +
               std::to_string(i) + ")");
    }
    hs.push_back(std::move(H));
  }

  Vector x_true(p);
  for (int j = 0; j < p; ++j) x_true[j] = normal(rng);

  std::vector<LocalObjective> agents;
  agents.reserve(n);
  for (int i = 0; i < n; ++i) {
    Vector noise(p);
    for (int j = 0; j < p; ++j) noise[j] = noise_scale * normal(rng);
    Vector m = hs[i] * x_true + noise;
    agents.push_back(LocalObjective::quadratic(std::move(hs[i]), std::move(m)));
  }
  return ProblemInstance(std::move(agents), seed);
}

Vector centralized_solution(const ProblemInstance& prob) {
  const int p = prob.p();
  if (prob.all_quadratic()) {
    Matrix lhs = Matrix::Zero(p, p);
    Vector rhs = Vector::Zero(p);
    for (const auto& a : prob.agents()) {
      const auto& q = a.quadratic_data();
      lhs.noalias() += q.H.transpose() * q.H;
      rhs.noalias() += q.H.transpose() * q.m;
    }
    Eigen::LDLT<Matrix> ldlt(lhs);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      fail(ErrorCode::kDegenerateInstance, "aggregate system is singular");
    }
    Vector x = ldlt.solve(rhs);
    // One step of iterative refinement tightens the aggregate gradient.
    x += ldlt.solve(rhs - lhs * x);
    if (!x.allFinite()) {
      fail(ErrorCode::kDegenerateInstance, "aggregate system is singular");
    }
    return x;
  }

  double lip_sum = 0.0;
  for (const auto& a : prob.agents()) lip_sum += a.lip();
  const double step = 1.0 / lip_sum;
  Vector x = Vector::Zero(p);
  constexpr int kCap = 10'000'000;
  for (int it = 0; it < kCap; ++it) {
    Vector g = Vector::Zero(p);
    for (const auto& a : prob.agents()) g += a.gradient(x);
    if (!g.allFinite()) break;
    if (g.norm() <= 1e-12) return x;
    x -= step * g;
  }
  fail(ErrorCode::kInnerSolverDivergence,
       "centralized_solution: gradient descent did not converge");
}

Vector dual_optimum(const ProblemInstance& prob, const Vector& x_star) {
  require(x_star.size() == prob.p(), "dual_optimum: x_star must have dimension p");
  const int p = prob.p();
  Vector y(static_cast<Eigen::Index>(prob.n()) * p);
  for (int i = 0; i < prob.n(); ++i) {
    block(y, i, p) = prob.agent(i).gradient(x_star);
  }
  const double drift = block_average(y, p).norm();
  if (!(drift <= kDualOptimumTolerance)) {
    fail(ErrorCode::kInconsistentOptimum,
         "dual_optimum: block average " + kv::format_double(drift) +
             " exceeds tolerance; x_star is not optimal");
  }
  return y;
}

std::string serialize_instance(const ProblemInstance& prob) {
  require(prob.all_quadratic(), "serialize_instance: quadratic instances only");
  kv::Document doc;
  doc.comment("least-squares problem instance; f_i(x) = 1/2 ||H_i x - m_i||^2");
  doc.set("format", "panda-instance-v1");
  doc.set("n", prob.n());
  doc.set("p", prob.p());
  doc.set("seed", prob.seed() ? std::to_string(*prob.seed()) : std::string("none"));
  for (int i = 0; i < prob.n(); ++i) {
    const auto& q = prob.agent(i).quadratic_data();
    const std::string prefix = "agent." + std::to_string(i) + ".";
    doc.set(prefix + "rows", static_cast<int>(q.H.rows()));
    doc.set(prefix + "H", kv::format_matrix(q.H));
    doc.set(prefix + "m", kv::format_vector(q.m));
  }
  return doc.to_text();
}

ProblemInstance parse_instance(const std::string& text) {
  const auto doc = kv::Document::parse(text);
  if (doc.at("format") != "panda-instance-v1") {
    fail(ErrorCode::kParse, "unsupported instance format '" + doc.at("format") + "'");
  }
  const auto n = kv::parse_int(doc.at("n"));
  const auto p = kv::parse_int(doc.at("p"));
  if (n < 1 || p < 1) fail(ErrorCode::kParse, "instance: n and p must be positive");
  std::optional<std::uint64_t> seed;
  if (doc.at("seed") != "none") {
    seed = std::stoull(doc.at("seed"));
  }
  std::vector<LocalObjective> agents;
  for (long long i = 0; i < n; ++i) {
    const std::string prefix = "agent." + std::to_string(i) + ".";
    const auto rows = kv::parse_int(doc.at(prefix + "rows"));
    const Vector h = kv::parse_vector(doc.at(prefix + "H"));
    Vector m = kv::parse_vector(doc.at(prefix + "m"));
    if (rows < 1 || h.size() != rows * p || m.size() != rows) {
      fail(ErrorCode::kParse, "instance: agent " + std::to_string(i) + " has wrong sizes");
    }
    Matrix H = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                              Eigen::RowMajor>>(h.data(), rows, p);
    agents.push_back(LocalObjective::quadratic(std::move(H), std::move(m)));
  }
  return ProblemInstance(std::move(agents), seed);
}

}  // namespace panda::model

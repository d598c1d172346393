#pragma once

// Local objectives, problem instances, the primal argmin map and the
// centralized ground-truth oracles.

#include <Eigen/Cholesky>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "panda/stacked.hpp"

namespace panda::model {

// f(x) = 1/2 ||H x - m||^2
struct QuadraticData {
  Matrix H;
  Vector m;
};

// User-supplied smooth strongly convex objective with declared constants.
struct CustomData {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  double mu = 0.0;
  double lip = 0.0;
};

struct LocalSolveResult {
  Vector x;
  int iterations = 0;  // 0 for the closed-form quadratic path
};

class LocalObjective {
 public:
  // Throws kDegenerateObjective when H^T H is singular or its condition
  // number exceeds kMaxHessianCondition.
  static LocalObjective quadratic(Matrix H, Vector m);
  // Throws kPrecondition unless 0 < mu <= lip < inf.
  static LocalObjective custom(int p, CustomData data);

  static constexpr double kMaxHessianCondition = 1e12;
  static constexpr int kInnerIterationCap = 1'000'000;

  int dim() const { return p_; }
  double mu() const { return mu_; }
  double lip() const { return lip_; }
  bool is_quadratic() const {
    return std::holds_alternative<Quadratic>(data_);
  }
  // Only valid for quadratic objectives.
  const QuadraticData& quadratic_data() const;

  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;

  // argmin_x f(x) - y^T x. Quadratics use the cached Cholesky factor of
  // H^T H; custom objectives run gradient descent with step 1/L until the
  // gradient norm of the shifted objective is <= tol.
  LocalSolveResult solve_shifted(const Vector& y, double tol) const;

 private:
  struct Quadratic {
    QuadraticData data;
    Matrix hessian;
    Vector rhs;  // H^T m
    Eigen::LLT<Matrix> factor;
  };
  using Data = std::variant<Quadratic, CustomData>;

  LocalObjective(int p, Data data, double mu, double lip)
      : p_(p), data_(std::move(data)), mu_(mu), lip_(lip) {}

  int p_;
  Data data_;
  double mu_;
  double lip_;
};

class ProblemInstance {
 public:
  ProblemInstance(std::vector<LocalObjective> agents,
                  std::optional<std::uint64_t> seed = std::nullopt);

  int n() const { return static_cast<int>(agents_.size()); }
  int p() const { return p_; }
  double mu() const { return mu_; }
  double lip() const { return lip_; }
  double kappa() const { return mu_ / lip_; }
  const std::vector<LocalObjective>& agents() const { return agents_; }
  const LocalObjective& agent(int i) const { return agents_[i]; }
  std::optional<std::uint64_t> seed() const { return seed_; }
  bool all_quadratic() const;

 private:
  std::vector<LocalObjective> agents_;
  int p_ = 0;
  double mu_ = 0.0;
  double lip_ = 0.0;
  std::optional<std::uint64_t> seed_;
};

inline constexpr double kDefaultInnerTol = 1e-12;

Vector local_solve(const LocalObjective& obj, const Vector& y_i,
                   double tol = kDefaultInnerTol);
Vector gradient(const LocalObjective& obj, const Vector& x);

// Stacked gradient of f(x) = sum_i f_i(x_i).
Vector stacked_gradient(const ProblemInstance& prob, const Vector& x);

// Stacked local solves; equals the gradient of the conjugate f* at y.
// Agents are solved in parallel and assembled in agent order.
Vector conjugate_gradient_map(const ProblemInstance& prob, const Vector& y,
                              double tol = kDefaultInnerTol);
// Same, also returning per-agent inner iteration counts.
Vector conjugate_gradient_map(const ProblemInstance& prob, const Vector& y,
                              double tol, std::vector<int>& iterations);

inline constexpr int kMaxConditionDraws = 100'000;

ProblemInstance generate_least_squares_instance(int n, int p, double cond_cap,
                                                double noise_scale,
                                                std::uint64_t seed);

// argmin of sum_i f_i over a shared p-vector.
Vector centralized_solution(const ProblemInstance& prob);

inline constexpr double kDualOptimumTolerance = 1e-8;

// y* stacks grad f_i(x*); throws kInconsistentOptimum if its block average
// exceeds kDualOptimumTolerance.
Vector dual_optimum(const ProblemInstance& prob, const Vector& x_star);

// Self-describing key-value text: n, p, seed, then each agent's H (row-major)
// and m, all at 17 significant digits. Quadratic instances only.
std::string serialize_instance(const ProblemInstance& prob);
ProblemInstance parse_instance(const std::string& text);

}  // namespace panda::model

#include "panda/network.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "panda/error.hpp"
#include "panda/kv.hpp"
#include "panda/seeding.hpp"

namespace panda::network {

EdgeSet make_edge_set(int n, std::vector<Edge> edges) {
  for (auto& [a, b] : edges) {
    require(a != b, "edge set: self-loops are not allowed");
    require(a >= 0 && b >= 0 && a < n && b < n, "edge set: vertex out of range");
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

EdgeSet complete_graph(int n) {
  EdgeSet e;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
  }
  return e;
}

EdgeSet path_graph(int n) {
  EdgeSet e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return e;
}

EdgeSet cycle_graph(int n) {
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i) {
    if (n > 1 && (i + 1) % n != i) e.emplace_back(i, (i + 1) % n);
  }
  return make_edge_set(n, std::move(e));
}

EdgeSet star_graph(int n) {
  EdgeSet e;
  for (int i = 1; i < n; ++i) e.emplace_back(0, i);
  return e;
}

std::vector<int> degrees(const EdgeSet& edges, int n) {
  std::vector<int> d(n, 0);
  for (const auto& [a, b] : edges) {
    ++d[a];
    ++d[b];
  }
  return d;
}

bool is_connected(const EdgeSet& edges, int n) {
  if (n <= 1) return true;
  std::vector<std::vector<int>> adj(n);
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int u : adj[v]) {
      if (!seen[u]) {
        seen[u] = 1;
        ++count;
        stack.push_back(u);
      }
    }
  }
  return count == n;
}

GraphSequence GraphSequence::iid_link_failure(int n, double removal_prob,
                                              std::uint64_t seed) {
  require(n >= 1, "iid_link_failure: n must be positive");
  require(removal_prob >= 0.0 && removal_prob <= 1.0,
          "iid_link_failure: removal_prob must lie in [0, 1]");
  GraphSequence g(Kind::kIidLinkFailure, n);
  g.removal_prob_ = removal_prob;
  g.seed_ = seed;
  return g;
}

GraphSequence GraphSequence::periodic(int n, std::vector<EdgeSet> sets) {
  require(n >= 1, "periodic graph: n must be positive");
  require(!sets.empty(), "periodic graph: need at least one edge set");
  GraphSequence g(Kind::kPeriodic, n);
  for (auto& s : sets) g.sets_.push_back(make_edge_set(n, std::move(s)));
  return g;
}

EdgeSet GraphSequence::edges(long k) const {
  if (kind_ == Kind::kPeriodic) {
    const long period = static_cast<long>(sets_.size());
    const long idx = ((k % period) + period) % period;
    return sets_[idx];
  }
  EdgeSet e;
  const auto round = static_cast<std::uint64_t>(k);
  for (int i = 0; i < n_; ++i) {
    for (int j = i + 1; j < n_; ++j) {
      const double u = to_unit_interval(
          derive_seed(seed_, round, static_cast<std::uint64_t>(i),
                      static_cast<std::uint64_t>(j)));
      if (u >= removal_prob_) e.emplace_back(i, j);
    }
  }
  return e;
}

std::string GraphSequence::describe() const {
  if (kind_ == Kind::kIidLinkFailure) {
    return "iid-link-failure(n=" + std::to_string(n_) +
           ", removal_prob=" + kv::format_double(removal_prob_) +
           ", seed=" + std::to_string(seed_) + ")";
  }
  return "periodic(n=" + std::to_string(n_) +
         ", period=" + std::to_string(sets_.size()) + ")";
}

MixingSequence MixingSequence::metropolis(GraphSequence graph) {
  MixingSequence m(MixingRule::kMetropolis, graph.n());
  m.graph_ = std::make_shared<const GraphSequence>(std::move(graph));
  return m;
}

MixingSequence MixingSequence::lazy_metropolis(GraphSequence graph) {
  MixingSequence m(MixingRule::kLazyMetropolis, graph.n());
  m.graph_ = std::make_shared<const GraphSequence>(std::move(graph));
  return m;
}

MixingSequence MixingSequence::constant(Matrix w, EdgeSet support) {
  require(w.rows() == w.cols() && w.rows() >= 1, "constant mixing: W must be square");
  const int n = static_cast<int>(w.rows());
  MixingSequence m(MixingRule::kConstant, n);
  m.constant_ = std::move(w);
  m.support_ = make_edge_set(n, std::move(support));
  return m;
}

Matrix MixingSequence::matrix(long k) const {
  switch (rule_) {
    case MixingRule::kMetropolis:
      return metropolis_weights(graph_->edges(k), n_);
    case MixingRule::kLazyMetropolis:
      return lazy_variant(metropolis_weights(graph_->edges(k), n_));
    case MixingRule::kConstant:
      return constant_;
  }
  return constant_;
}

EdgeSet MixingSequence::edges(long k) const {
  if (rule_ == MixingRule::kConstant) return support_;
  return graph_->edges(k);
}

Matrix metropolis_weights(const EdgeSet& edges, int n) {
  const auto d = degrees(edges, n);
  Matrix w = Matrix::Zero(n, n);
  for (const auto& [a, b] : edges) {
    const double wij = 1.0 / (1.0 + std::max(d[a], d[b]));
    w(a, b) = wij;
    w(b, a) = wij;
  }
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j != i) off += w(i, j);
    }
    w(i, i) = 1.0 - off;
  }
  return w;
}

Matrix lazy_variant(const Matrix& w) {
  require(w.rows() == w.cols(), "lazy_variant: W must be square");
  return 0.5 * (Matrix::Identity(w.rows(), w.cols()) + w);
}

Matrix laplacian_communication_matrix(const EdgeSet& edges, int n) {
  Matrix u = Matrix::Zero(n, n);
  for (const auto& [a, b] : edges) {
    require(a >= 0 && b < n && a != b, "laplacian: invalid edge");
    u(a, b) = -1.0;
    u(b, a) = -1.0;
    u(a, a) += 1.0;
    u(b, b) += 1.0;
  }
  return u;
}

int null_space_dimension(const Matrix& u, double tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(u, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  int count = 0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    if (std::abs(eig.eigenvalues()[i]) <= tol * scale) ++count;
  }
  return count;
}

Matrix window_product(const MixingSequence& mix, long k, int window) {
  require(window >= 0, "window_product: B must be nonnegative");
  const int n = mix.n();
  Matrix out = Matrix::Identity(n, n);
  if (k < 0) return out;
  for (int b = 0; b < window; ++b) {
    const long j = k - b;
    if (j < 0) break;
    out = out * mix.matrix(j);
  }
  return out;
}

SpectrumEstimate estimate_delta(const MixingSequence& mix, int window,
                                long rounds) {
  require(window >= 1, "estimate_delta: B must be >= 1");
  require(rounds >= window, "estimate_delta: rounds must be >= B");
  const Matrix avg = averaging_matrix(mix.n());
  SpectrumEstimate est;
  est.window = window;
  est.delta = 0.0;
  for (long k = window - 1; k < rounds; ++k) {
    const Matrix diff = window_product(mix, k, window) - avg;
    const double s = Eigen::JacobiSVD<Matrix>(diff).singularValues()(0);
    est.delta = std::max(est.delta, s);
    ++est.window_checked;
  }
  est.certified = est.delta < 1.0 - kDeltaCertificationMargin;
  return est;
}

SpectrumEstimate find_window(const MixingSequence& mix, int max_window,
                             long rounds) {
  require(max_window >= 1, "find_window: max_window must be >= 1");
  SpectrumEstimate est;
  for (int b = 1; b <= max_window; ++b) {
    est = estimate_delta(mix, b, std::max<long>(rounds, b));
    if (est.certified) return est;
  }
  return est;
}

MixingReport verify_mixing_assumptions(const MixingSequence& mix, long rounds,
                                       int window) {
  require(rounds >= window, "verify_mixing_assumptions: rounds must be >= B");
  MixingReport report;
  const int n = mix.n();
  for (long k = 0; k < rounds; ++k) {
    const Matrix w = mix.matrix(k);
    if (!w.allFinite()) {
      report.finite = false;
      continue;
    }
    const EdgeSet e = mix.edges(k);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> allowed =
        Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
    for (int i = 0; i < n; ++i) allowed(i, i) = true;
    for (const auto& [a, b] : e) {
      allowed(a, b) = true;
      allowed(b, a) = true;
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (!allowed(i, j) && w(i, j) != 0.0) {
          report.decentralized = false;
          report.worst_off_pattern =
              std::max(report.worst_off_pattern, std::abs(w(i, j)));
        }
      }
    }
    const double row_err = (w.rowwise().sum().array() - 1.0).abs().maxCoeff();
    const double col_err = (w.colwise().sum().array() - 1.0).abs().maxCoeff();
    report.worst_row_sum_error = std::max(report.worst_row_sum_error, row_err);
    report.worst_col_sum_error = std::max(report.worst_col_sum_error, col_err);
  }
  report.doubly_stochastic =
      report.worst_row_sum_error <= kStochasticityTolerance &&
      report.worst_col_sum_error <= kStochasticityTolerance;
  report.spectrum = estimate_delta(mix, window, rounds);
  return report;
}

std::string export_edge_lists(const GraphSequence& graph, long rounds) {
  std::ostringstream out;
  for (long k = 0; k < rounds; ++k) {
    out << k << ':';
    for (const auto& [a, b] : graph.edges(k)) {
      out << " (" << a + 1 << ',' << b + 1 << ')';
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace panda::network

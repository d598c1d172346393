#pragma once

// Time-varying graphs, mixing matrices W(k), the Laplacian communication
// matrix and joint-spectrum estimates.

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "panda/stacked.hpp"

namespace panda::network {

// Undirected edge, stored 0-based with first < second.
using Edge = std::pair<int, int>;
// Sorted, duplicate-free.
using EdgeSet = std::vector<Edge>;

EdgeSet make_edge_set(int n, std::vector<Edge> edges);
EdgeSet complete_graph(int n);
EdgeSet path_graph(int n);
EdgeSet cycle_graph(int n);
EdgeSet star_graph(int n);
std::vector<int> degrees(const EdgeSet& edges, int n);
bool is_connected(const EdgeSet& edges, int n);

// Seed-replayable stream of edge sets E(k) over a fixed vertex set.
class GraphSequence {
 public:
  // Complete graph with each edge dropped independently per round; the
  // decision for edge (i, j) in round k depends only on (seed, k, i, j).
  static GraphSequence iid_link_failure(int n, double removal_prob,
                                        std::uint64_t seed);
  // E(k) = sets[k mod sets.size()]. One set gives a static graph.
  static GraphSequence periodic(int n, std::vector<EdgeSet> sets);
  static GraphSequence fixed(int n, EdgeSet edges) {
    return periodic(n, {std::move(edges)});
  }

  int n() const { return n_; }
  EdgeSet edges(long k) const;
  std::string describe() const;

 private:
  enum class Kind { kIidLinkFailure, kPeriodic };
  GraphSequence(Kind kind, int n) : kind_(kind), n_(n) {}

  Kind kind_;
  int n_;
  double removal_prob_ = 0.0;
  std::uint64_t seed_ = 0;
  std::vector<EdgeSet> sets_;
};

enum class MixingRule { kMetropolis, kLazyMetropolis, kConstant };

// Per-round mixing matrices together with the edge sets that support them.
class MixingSequence {
 public:
  static MixingSequence metropolis(GraphSequence graph);
  static MixingSequence lazy_metropolis(GraphSequence graph);
  // The same matrix every round; `support` is the edge set used for message
  // accounting and the zero-pattern check.
  static MixingSequence constant(Matrix w, EdgeSet support);

  int n() const { return n_; }
  MixingRule rule() const { return rule_; }
  Matrix matrix(long k) const;
  EdgeSet edges(long k) const;

 private:
  MixingSequence(MixingRule rule, int n) : rule_(rule), n_(n) {}

  MixingRule rule_;
  int n_;
  std::shared_ptr<const GraphSequence> graph_;
  Matrix constant_;
  EdgeSet support_;
};

// w_ij = 1 / (1 + max(d_i, d_j)) on edges, w_ii = 1 - sum_{j != i} w_ij.
Matrix metropolis_weights(const EdgeSet& edges, int n);

// (I + W) / 2.
Matrix lazy_variant(const Matrix& w);

// D - A for the unweighted graph.
Matrix laplacian_communication_matrix(const EdgeSet& edges, int n);

// Dimension of null(U) counted by eigenvalues below tol * max(1, ||U||).
int null_space_dimension(const Matrix& u, double tol = 1e-9);

// W(k) W(k-1) ... W(k-B+1), with W(j) = I for j < 0 and the empty product
// (B = 0) equal to I.
Matrix window_product(const MixingSequence& mix, long k, int window);

struct SpectrumEstimate {
  int window = 1;           // B
  double delta = 0.0;       // max sigma_max(W_B(k) - 11^T/n) over the window
  long window_checked = 0;  // rounds inspected
  bool certified = false;   // delta < 1 - 1e-12
};

inline constexpr double kDeltaCertificationMargin = 1e-12;
inline constexpr long kDefaultSpectrumRounds = 200;

// Finite-window estimate of the supremum over k >= B-1.
SpectrumEstimate estimate_delta(const MixingSequence& mix, int window,
                                long rounds = kDefaultSpectrumRounds);

// Raises B from 1 to max_window until the estimate certifies.
SpectrumEstimate find_window(const MixingSequence& mix, int max_window,
                             long rounds = kDefaultSpectrumRounds);

struct MixingReport {
  bool decentralized = true;   // supported on E(k)
  double worst_off_pattern = 0.0;  // largest |w_ij| outside E(k)
  bool doubly_stochastic = true;   // rows and columns sum to one
  double worst_row_sum_error = 0.0;
  double worst_col_sum_error = 0.0;
  bool finite = true;
  SpectrumEstimate spectrum;   // joint contraction
  bool all_pass() const {
    return decentralized && doubly_stochastic && finite && spectrum.certified;
  }
};

inline constexpr double kStochasticityTolerance = 1e-12;

MixingReport verify_mixing_assumptions(const MixingSequence& mix, long rounds,
                                       int window);

// One line per round: `k: (i,j) (i,j) ...` with 1-based vertices.
std::string export_edge_lists(const GraphSequence& graph, long rounds);

}  // namespace panda::network

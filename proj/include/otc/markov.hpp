#pragma once

// Finite-state Markov chain primitives: validated matrix types, structural
// analysis of the support graph, stationary distributions, the independent
// coupling, and relative-frequency estimation.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace otc {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Entries at or below this value are structural zeros in support graphs.
inline constexpr double kStructuralZero = 1e-15;
inline constexpr double kRowSumTolerance = 1e-12;

/// Pair (x, y) of marginal states <-> flat index x * d + y.
struct PairIndexer {
  std::size_t d;

  std::size_t index(std::size_t x, std::size_t y) const { return x * d + y; }
  std::pair<std::size_t, std::size_t> pair(std::size_t s) const { return {s / d, s % d}; }
  std::size_t size() const { return d * d; }
};

class Distribution {
 public:
  /// Throws InvalidArgument unless entries are nonnegative and sum to 1 within `tol`.
  explicit Distribution(Vector weights, double tol = kRowSumTolerance);

  std::size_t dim() const { return static_cast<std::size_t>(weights_.size()); }
  const Vector& weights() const { return weights_; }
  double operator[](std::size_t i) const { return weights_(static_cast<Eigen::Index>(i)); }

 private:
  Vector weights_;
};

/// Row-stochastic square matrix. Validated on construction.
class TransitionMatrix {
 public:
  explicit TransitionMatrix(Matrix entries, double tol = kRowSumTolerance);

  /// Rescales each row to sum to one after checking it is within `tol` of one.
  /// Used for matrices read from text, where decimals rarely sum exactly.
  static TransitionMatrix normalized(Matrix entries, double tol = 1e-6);

  std::size_t dim() const { return static_cast<std::size_t>(entries_.rows()); }
  const Matrix& matrix() const { return entries_; }
  double operator()(std::size_t i, std::size_t j) const {
    return entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

 private:
  Matrix entries_;
};

/// Nonnegative, finite d x d single-letter cost.
class CostMatrix {
 public:
  explicit CostMatrix(Matrix entries);

  std::size_t dim() const { return static_cast<std::size_t>(entries_.rows()); }
  const Matrix& matrix() const { return entries_; }
  double operator()(std::size_t x, std::size_t y) const {
    return entries_(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
  }
  /// Length-d^2 view indexed by PairIndexer.
  Vector flattened() const;

 private:
  Matrix entries_;
};

/// d^2 x d^2 row-stochastic matrix on pairs of marginal states.
class TransitionCoupling {
 public:
  TransitionCoupling(std::size_t d, Matrix entries, double tol = kRowSumTolerance);

  std::size_t marginal_dim() const { return d_; }
  PairIndexer indexer() const { return {d_}; }
  const Matrix& matrix() const { return entries_; }
  TransitionMatrix as_transition_matrix() const { return TransitionMatrix(entries_, 1e-9); }

  /// Largest absolute deviation of any row's marginals from P(x,.) and Q(y,.).
  double marginal_error(const TransitionMatrix& p, const TransitionMatrix& q) const;

 private:
  std::size_t d_;
  Matrix entries_;
};

using StateClass = std::vector<std::size_t>;

/// Closed communicating classes of the support graph, each sorted ascending,
/// ordered by smallest member. Transient states belong to no class.
std::vector<StateClass> recurrent_classes(const Matrix& t);
std::vector<StateClass> recurrent_classes(const TransitionMatrix& t);

/// All strongly connected components of the support graph (Tarjan).
std::vector<StateClass> strongly_connected_components(const Matrix& t);

/// One stationary distribution per recurrent class, in class order.
std::vector<Distribution> stationary_distributions(const TransitionMatrix& t);

/// Stationary distribution of the chain restricted to one closed class,
/// embedded into the full state space.
Vector class_stationary_distribution(const Matrix& t, const StateClass& cls);

bool is_irreducible(const Matrix& t);
bool is_irreducible(const TransitionMatrix& t);
/// Every state has period one (gcd of cycle lengths through it equals 1).
bool is_aperiodic(const Matrix& t);
bool is_aperiodic(const TransitionMatrix& t);

/// Period of a strongly connected set of states, from BFS levels:
/// gcd over support edges (u, v) inside the set of level(u) + 1 - level(v).
std::size_t period_of_class(const Matrix& t, const StateClass& cls);

TransitionCoupling independent_coupling(const TransitionMatrix& p, const TransitionMatrix& q);

struct CesaroResult {
  Matrix limit;
  std::size_t powers_used;
};

/// Cesaro average (1/N) sum_{t<N} T^t, doubling N until ||A T - A||_inf <= tol.
/// Throws IterationLimitError if N would exceed max_power.
CesaroResult cesaro_limit(const TransitionMatrix& t, double tol = 1e-10,
                          std::size_t max_power = std::size_t{1} << 22);

struct Estimate {
  TransitionMatrix matrix;
  /// Rows with no observed departures, filled with the uniform distribution.
  std::vector<std::size_t> unvisited_rows;
};

/// Relative-frequency estimate of a transition matrix from one observed path.
Estimate estimate_transition_matrix(std::span<const std::size_t> sequence, std::size_t d);

/// Path of `steps` transitions from `start`; returns steps + 1 states.
std::vector<std::size_t> simulate_chain(const TransitionMatrix& t, std::size_t start,
                                        std::size_t steps, std::uint64_t seed);

}  // namespace otc

#include "otc/markov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>

#include "otc/error.hpp"
#include "otc/rng.hpp"

namespace otc {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw InvalidArgument(std::string(what) + ": entries must be finite");
}

void require_row_stochastic(const Matrix& m, double tol, const char* what) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw InvalidArgument(std::string(what) + ": matrix must be square and nonempty");
  }
  require_finite(m, what);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      if (v < 0.0 || v > 1.0 + tol) {
        throw InvalidArgument(std::string(what) + ": entry (" + std::to_string(i) + "," +
                              std::to_string(j) + ") outside [0,1]");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol) {
      throw InvalidArgument(std::string(what) + ": row " + std::to_string(i) +
                            " sums to " + std::to_string(sum));
    }
  }
}

std::vector<std::vector<std::size_t>> support_graph(const Matrix& t) {
  const auto n = static_cast<std::size_t>(t.rows());
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > kStructuralZero) {
        adj[i].push_back(j);
      }
    }
  }
  return adj;
}

}  // namespace

Distribution::Distribution(Vector weights, double tol) : weights_(std::move(weights)) {
  if (weights_.size() == 0) throw InvalidArgument("Distribution: empty");
  if (!weights_.allFinite()) throw InvalidArgument("Distribution: entries must be finite");
  if ((weights_.array() < 0.0).any()) throw InvalidArgument("Distribution: negative entry");
  if (std::abs(weights_.sum() - 1.0) > tol) {
    throw InvalidArgument("Distribution: weights sum to " + std::to_string(weights_.sum()));
  }
}

TransitionMatrix::TransitionMatrix(Matrix entries, double tol) : entries_(std::move(entries)) {
  require_row_stochastic(entries_, tol, "TransitionMatrix");
}

TransitionMatrix TransitionMatrix::normalized(Matrix entries, double tol) {
  require_row_stochastic(entries, tol, "TransitionMatrix");
  for (Eigen::Index i = 0; i < entries.rows(); ++i) entries.row(i) /= entries.row(i).sum();
  return TransitionMatrix(std::move(entries));
}

CostMatrix::CostMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0 || entries_.rows() != entries_.cols()) {
    throw InvalidArgument("CostMatrix: must be square and nonempty");
  }
  require_finite(entries_, "CostMatrix");
  if ((entries_.array() < 0.0).any()) throw InvalidArgument("CostMatrix: negative entry");
}

Vector CostMatrix::flattened() const {
  const auto d = dim();
  Vector out(static_cast<Eigen::Index>(d * d));
  const PairIndexer idx{d};
  for (std::size_t x = 0; x < d; ++x)
    for (std::size_t y = 0; y < d; ++y) out(static_cast<Eigen::Index>(idx.index(x, y))) = (*this)(x, y);
  return out;
}

TransitionCoupling::TransitionCoupling(std::size_t d, Matrix entries, double tol)
    : d_(d), entries_(std::move(entries)) {
  if (static_cast<std::size_t>(entries_.rows()) != d * d) {
    throw InvalidArgument("TransitionCoupling: expected a d^2 x d^2 matrix");
  }
  require_row_stochastic(entries_, tol, "TransitionCoupling");
}

double TransitionCoupling::marginal_error(const TransitionMatrix& p, const TransitionMatrix& q) const {
  if (p.dim() != d_ || q.dim() != d_) throw InvalidArgument("marginal_error: dimension mismatch");
  const PairIndexer idx{d_};
  double worst = 0.0;
  for (std::size_t s = 0; s < idx.size(); ++s) {
    const auto [x, y] = idx.pair(s);
    for (std::size_t a = 0; a < d_; ++a) {
      double row_mass = 0.0, col_mass = 0.0;
      for (std::size_t b = 0; b < d_; ++b) {
        row_mass += entries_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(idx.index(a, b)));
        col_mass += entries_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(idx.index(b, a)));
      }
      worst = std::max({worst, std::abs(row_mass - p(x, a)), std::abs(col_mass - q(y, a))});
    }
  }
  return worst;
}

std::vector<StateClass> strongly_connected_components(const Matrix& t) {
  const auto adj = support_graph(t);
  const std::size_t n = adj.size();
  constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
  std::vector<std::size_t> number(n, kUnvisited), low(n, 0), next_edge(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack, call;
  std::vector<StateClass> components;
  std::size_t counter = 0;

  // Iterative Tarjan; `call` mirrors the recursion stack.
  for (std::size_t root = 0; root < n; ++root) {
    if (number[root] != kUnvisited) continue;
    call.push_back(root);
    number[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      const std::size_t v = call.back();
      if (next_edge[v] < adj[v].size()) {
        const std::size_t w = adj[v][next_edge[v]++];
        if (number[w] == kUnvisited) {
          number[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back(w);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], number[w]);
        }
        continue;
      }
      call.pop_back();
      if (!call.empty()) low[call.back()] = std::min(low[call.back()], low[v]);
      if (low[v] == number[v]) {
        StateClass comp;
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        components.push_back(std::move(comp));
      }
    }
  }
  std::sort(components.begin(), components.end(),
            [](const StateClass& a, const StateClass& b) { return a.front() < b.front(); });
  return components;
}

std::vector<StateClass> recurrent_classes(const Matrix& t) {
  const auto components = strongly_connected_components(t);
  const auto n = static_cast<std::size_t>(t.rows());
  std::vector<std::size_t> owner(n);
  for (std::size_t c = 0; c < components.size(); ++c)
    for (auto s : components[c]) owner[s] = c;

  std::vector<StateClass> closed;
  for (std::size_t c = 0; c < components.size(); ++c) {
    bool leaks = false;
    for (auto s : components[c]) {
      for (std::size_t j = 0; j < n && !leaks; ++j) {
        if (t(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) > kStructuralZero &&
            owner[j] != c) {
          leaks = true;
        }
      }
      if (leaks) break;
    }
    if (!leaks) closed.push_back(components[c]);
  }
  return closed;
}

std::vector<StateClass> recurrent_classes(const TransitionMatrix& t) {
  return recurrent_classes(t.matrix());
}

Vector class_stationary_distribution(const Matrix& t, const StateClass& cls) {
  const auto k = static_cast<Eigen::Index>(cls.size());
  // Solve lambda (I - T_cc) = 0 with sum(lambda) = 1: transpose, replace the
  // last equation by the normalization.
  Matrix a(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      a(i, j) = (i == j ? 1.0 : 0.0) -
                t(static_cast<Eigen::Index>(cls[static_cast<std::size_t>(j)]),
                  static_cast<Eigen::Index>(cls[static_cast<std::size_t>(i)]));
  a.row(k - 1).setOnes();
  Vector rhs = Vector::Zero(k);
  rhs(k - 1) = 1.0;
  Vector local = a.fullPivLu().solve(rhs);
  local = local.cwiseMax(0.0);
  local /= local.sum();

  Vector full = Vector::Zero(t.rows());
  for (Eigen::Index i = 0; i < k; ++i) full(static_cast<Eigen::Index>(cls[static_cast<std::size_t>(i)])) = local(i);
  return full;
}

std::vector<Distribution> stationary_distributions(const TransitionMatrix& t) {
  std::vector<Distribution> out;
  for (const auto& cls : recurrent_classes(t.matrix())) {
    out.emplace_back(class_stationary_distribution(t.matrix(), cls), 1e-9);
  }
  return out;
}

bool is_irreducible(const Matrix& t) {
  return strongly_connected_components(t).size() == 1;
}

bool is_irreducible(const TransitionMatrix& t) { return is_irreducible(t.matrix()); }

std::size_t period_of_class(const Matrix& t, const StateClass& cls) {
  const auto n = static_cast<std::size_t>(t.rows());
  std::vector<bool> member(n, false);
  for (auto s : cls) member[s] = true;
  constexpr std::size_t kUnseen = static_cast<std::size_t>(-1);
  std::vector<std::size_t> level(n, kUnseen);
  std::queue<std::size_t> frontier;
  level[cls.front()] = 0;
  frontier.push(cls.front());
  std::size_t period = 0;
  while (!frontier.empty()) {
    const std::size_t u = frontier.front();
    frontier.pop();
    for (std::size_t v = 0; v < n; ++v) {
      if (!member[v] || t(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) <= kStructuralZero) continue;
      if (level[v] == kUnseen) {
        level[v] = level[u] + 1;
        frontier.push(v);
      } else {
        const auto diff = static_cast<long long>(level[u]) + 1 - static_cast<long long>(level[v]);
        period = std::gcd(period, static_cast<std::size_t>(diff < 0 ? -diff : diff));
      }
    }
  }
  return period;  // 0 means the class carries no cycle
}

bool is_aperiodic(const Matrix& t) {
  // States on no cycle (singleton components without a self-loop) have no
  // period and are ignored.
  for (const auto& comp : strongly_connected_components(t)) {
    const std::size_t p = period_of_class(t, comp);
    if (p > 1) return false;
  }
  return true;
}

bool is_aperiodic(const TransitionMatrix& t) { return is_aperiodic(t.matrix()); }

TransitionCoupling independent_coupling(const TransitionMatrix& p, const TransitionMatrix& q) {
  if (p.dim() != q.dim()) throw InvalidArgument("independent_coupling: dimension mismatch");
  const std::size_t d = p.dim();
  const PairIndexer idx{d};
  Matrix r(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t x = 0; x < d; ++x)
    for (std::size_t y = 0; y < d; ++y)
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b)
          r(static_cast<Eigen::Index>(idx.index(x, y)), static_cast<Eigen::Index>(idx.index(a, b))) =
              p(x, a) * q(y, b);
  return TransitionCoupling(d, std::move(r), 1e-10);
}

CesaroResult cesaro_limit(const TransitionMatrix& t, double tol, std::size_t max_power) {
  // The Cesaro limit of T is the spectral projector onto the eigenvalue-1
  // eigenspace, which is also the limit of powers of the lazy chain (I + T)/2.
  // Repeated squaring of the lazy chain therefore converges for periodic T too.
  const Matrix& tm = t.matrix();
  Matrix a = 0.5 * (Matrix::Identity(tm.rows(), tm.cols()) + tm);
  std::size_t power = 1;
  while (true) {
    const double residual = (a * tm - a).cwiseAbs().rowwise().sum().maxCoeff();
    if (residual <= tol) return {a, power};
    if (power > max_power / 2) {
      throw IterationLimitError("cesaro_limit: no convergence within " + std::to_string(max_power) +
                                " powers (residual " + std::to_string(residual) + ")");
    }
    a = a * a;
    power *= 2;
  }
}

Estimate estimate_transition_matrix(std::span<const std::size_t> sequence, std::size_t d) {
  if (d == 0) throw InvalidArgument("estimate_transition_matrix: d must be positive");
  if (sequence.size() < 2) throw InvalidArgument("estimate_transition_matrix: need at least two states");
  Matrix counts = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    if (sequence[i] >= d) {
      throw InvalidArgument("estimate_transition_matrix: state " + std::to_string(sequence[i]) +
                            " out of range");
    }
    if (i + 1 < sequence.size())
      counts(static_cast<Eigen::Index>(sequence[i]), static_cast<Eigen::Index>(sequence[i + 1])) += 1.0;
  }
  std::vector<std::size_t> unvisited;
  for (Eigen::Index i = 0; i < counts.rows(); ++i) {
    const double total = counts.row(i).sum();
    if (total == 0.0) {
      counts.row(i).setConstant(1.0 / static_cast<double>(d));
      unvisited.push_back(static_cast<std::size_t>(i));
    } else {
      counts.row(i) /= total;
    }
  }
  return {TransitionMatrix(std::move(counts)), std::move(unvisited)};
}

std::vector<std::size_t> simulate_chain(const TransitionMatrix& t, std::size_t start, std::size_t steps,
                                        std::uint64_t seed) {
  if (start >= t.dim()) throw InvalidArgument("simulate_chain: invalid start state");
  Rng rng(seed);
  std::vector<std::size_t> path;
  path.reserve(steps + 1);
  path.push_back(start);
  const Matrix& m = t.matrix();
  for (std::size_t k = 0; k < steps; ++k) {
    const auto row = static_cast<Eigen::Index>(path.back());
    path.push_back(rng.index(std::span<const double>(m.row(row).data(), static_cast<std::size_t>(m.cols()))));
  }
  return path;
}

}  // namespace otc

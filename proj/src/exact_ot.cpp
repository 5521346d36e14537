#include "otc/exact_ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "otc/error.hpp"

namespace otc {

namespace {

constexpr double kMarginalTolerance = 1e-9;

struct Cell {
  std::size_t i;
  std::size_t j;
};

// Transportation simplex on an m x n problem with strictly positive marginals
// of equal total mass. Nodes 0..m-1 are rows, m..m+n-1 are columns; the basis
// is a spanning tree of m + n - 1 cells.
class TransportSimplex {
 public:
  TransportSimplex(std::vector<double> supply, std::vector<double> demand)
      : m_(supply.size()), n_(demand.size()), supply_(std::move(supply)), demand_(std::move(demand)),
        basic_index_(m_ * n_, kNone) {}

  void northwest_corner() {
    std::vector<Cell> cells;
    std::size_t i = 0, j = 0;
    std::vector<double> a = supply_, b = demand_;
    while (true) {
      cells.push_back({i, j});
      if (i == m_ - 1 && j == n_ - 1) break;
      if (i == m_ - 1) {
        ++j;
      } else if (j == n_ - 1) {
        ++i;
      } else if (a[i] < b[j]) {
        b[j] -= a[i];
        ++i;
      } else {
        a[i] -= b[j];
        ++j;
      }
    }
    set_basis(cells);
  }

  void set_basis(const std::vector<Cell>& cells) {
    std::fill(basic_index_.begin(), basic_index_.end(), kNone);
    basis_ = cells;
    flow_.assign(basis_.size(), 0.0);
    for (std::size_t k = 0; k < basis_.size(); ++k) basic_index_[flat(basis_[k])] = k;
    rebalance();
  }

  const std::vector<Cell>& basis() const { return basis_; }

  // Primal simplex with the given cost. `allowed`, when nonempty, restricts
  // which non-basic cells may enter.
  void optimize(const Matrix& cost, const std::vector<bool>& allowed) {
    double scale = 1.0;
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t j = 0; j < n_; ++j) scale = std::max(scale, std::abs(at(cost, i, j)));
    const double tol = 1e-12 * scale;

    bool bland = false;
    std::size_t degenerate_run = 0;
    const std::size_t degenerate_limit = 2 * (m_ + n_);
    const std::size_t pivot_cap = 50 * (m_ + n_) * (m_ + n_) + 1000;

    for (std::size_t pivots = 0;; ++pivots) {
      if (pivots > pivot_cap) throw NumericalError("solve_exact_ot: pivot limit exceeded");
      compute_potentials(cost);

      std::size_t enter = kNone;
      double best = -tol;
      for (std::size_t i = 0; i < m_ && !(bland && enter != kNone); ++i) {
        for (std::size_t j = 0; j < n_; ++j) {
          const std::size_t f = i * n_ + j;
          if (basic_index_[f] != kNone) continue;
          if (!allowed.empty() && !allowed[f]) continue;
          const double rc = at(cost, i, j) - u_[i] - v_[j];
          if (rc < best) {
            best = rc;
            enter = f;
            if (bland) break;
          }
        }
      }
      if (enter == kNone) return;

      const Cell in{enter / n_, enter % n_};
      const auto cycle = tree_path(in.i, m_ + in.j);
      // cycle[k] are basis indices along the path from column in.j back to
      // row in.i; even positions lose flow.
      double theta = std::numeric_limits<double>::infinity();
      std::size_t leave = kNone;
      for (std::size_t k = 0; k < cycle.size(); k += 2) {
        const std::size_t b = cycle[k];
        const double f = flow_[b];
        const std::size_t key = flat(basis_[b]);
        if (f < theta || (f == theta && key < flat(basis_[leave]))) {
          theta = f;
          leave = b;
        }
      }
      theta = std::max(theta, 0.0);
      for (std::size_t k = 0; k < cycle.size(); ++k) flow_[cycle[k]] += (k % 2 == 0 ? -theta : theta);

      basic_index_[flat(basis_[leave])] = kNone;
      basis_[leave] = in;
      flow_[leave] = theta;
      basic_index_[enter] = leave;

      if (theta <= 1e-15) {
        if (++degenerate_run > degenerate_limit) bland = true;
      } else {
        degenerate_run = 0;
      }
    }
  }

  // Reduced cost of every cell under the current potentials.
  std::vector<double> reduced_costs(const Matrix& cost) {
    compute_potentials(cost);
    std::vector<double> rc(m_ * n_);
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t j = 0; j < n_; ++j) rc[i * n_ + j] = at(cost, i, j) - u_[i] - v_[j];
    return rc;
  }

  Matrix coupling() {
    rebalance();
    Matrix x = Matrix::Zero(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(n_));
    for (std::size_t k = 0; k < basis_.size(); ++k)
      x(static_cast<Eigen::Index>(basis_[k].i), static_cast<Eigen::Index>(basis_[k].j)) = flow_[k];
    return x;
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  std::size_t flat(const Cell& c) const { return c.i * n_ + c.j; }
  static double at(const Matrix& m, std::size_t i, std::size_t j) {
    return m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  std::vector<std::vector<std::size_t>> adjacency() const {
    std::vector<std::vector<std::size_t>> adj(m_ + n_);
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      adj[basis_[k].i].push_back(k);
      adj[m_ + basis_[k].j].push_back(k);
    }
    return adj;
  }

  std::size_t other_end(std::size_t node, std::size_t edge) const {
    const Cell& c = basis_[edge];
    return node < m_ ? m_ + c.j : c.i;
  }

  void compute_potentials(const Matrix& cost) {
    u_.assign(m_, 0.0);
    v_.assign(n_, 0.0);
    const auto adj = adjacency();
    std::vector<bool> seen(m_ + n_, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t e : adj[node]) {
        const std::size_t other = other_end(node, e);
        if (seen[other]) continue;
        seen[other] = true;
        const Cell& c = basis_[e];
        if (other < m_) {
          u_[c.i] = at(cost, c.i, c.j) - v_[c.j];
        } else {
          v_[c.j] = at(cost, c.i, c.j) - u_[c.i];
        }
        stack.push_back(other);
      }
    }
  }

  // Basis edges on the tree path from `to` back to `from`, listed starting at `to`.
  std::vector<std::size_t> tree_path(std::size_t from, std::size_t to) const {
    const auto adj = adjacency();
    std::vector<std::size_t> parent_edge(m_ + n_, kNone);
    std::vector<bool> seen(m_ + n_, false);
    std::vector<std::size_t> stack{from};
    seen[from] = true;
    while (!stack.empty() && !seen[to]) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t e : adj[node]) {
        const std::size_t other = other_end(node, e);
        if (seen[other]) continue;
        seen[other] = true;
        parent_edge[other] = e;
        stack.push_back(other);
      }
    }
    std::vector<std::size_t> path;
    for (std::size_t node = to; node != from;) {
      const std::size_t e = parent_edge[node];
      path.push_back(e);
      node = other_end(node, e);
    }
    return path;
  }

  // Recomputes basic flows from the marginals by peeling leaves of the tree,
  // which restores feasibility to rounding level.
  void rebalance() {
    const std::size_t nodes = m_ + n_;
    std::vector<double> remaining(nodes);
    for (std::size_t i = 0; i < m_; ++i) remaining[i] = supply_[i];
    for (std::size_t j = 0; j < n_; ++j) remaining[m_ + j] = demand_[j];
    const auto adj = adjacency();
    std::vector<std::size_t> degree(nodes);
    for (std::size_t v = 0; v < nodes; ++v) degree[v] = adj[v].size();
    std::vector<bool> edge_done(basis_.size(), false);

    std::vector<std::size_t> leaves;
    for (std::size_t v = nodes; v-- > 0;)
      if (degree[v] == 1) leaves.push_back(v);
    std::size_t assigned = 0;
    while (!leaves.empty() && assigned < basis_.size()) {
      const std::size_t leaf = leaves.back();
      leaves.pop_back();
      if (degree[leaf] != 1) continue;
      std::size_t e = kNone;
      for (std::size_t cand : adj[leaf])
        if (!edge_done[cand]) e = cand;
      const std::size_t other = other_end(leaf, e);
      const double f = std::max(remaining[leaf], 0.0);
      flow_[e] = f;
      edge_done[e] = true;
      ++assigned;
      remaining[leaf] = 0.0;
      remaining[other] -= f;
      degree[leaf] = 0;
      if (--degree[other] == 1) leaves.push_back(other);
    }
  }

  std::size_t m_, n_;
  std::vector<double> supply_, demand_;
  std::vector<Cell> basis_;
  std::vector<double> flow_;
  std::vector<std::size_t> basic_index_;
  std::vector<double> u_, v_;
};

struct Reduced {
  std::vector<std::size_t> rows, cols;
  std::vector<double> supply, demand;
};

Reduced validate_and_strip(const Vector& r, const Vector& c) {
  if (r.size() == 0 || c.size() == 0) throw InvalidArgument("solve_exact_ot: empty marginal");
  if (!r.allFinite() || !c.allFinite()) throw InvalidArgument("solve_exact_ot: non-finite marginal");
  if ((r.array() < 0.0).any() || (c.array() < 0.0).any())
    throw InvalidArgument("solve_exact_ot: negative marginal entry");
  const double rs = r.sum(), cs = c.sum();
  if (std::abs(rs - 1.0) > kMarginalTolerance || std::abs(cs - 1.0) > kMarginalTolerance)
    throw InvalidArgument("solve_exact_ot: marginals must be probability vectors");

  Reduced red;
  for (Eigen::Index i = 0; i < r.size(); ++i)
    if (r(i) > 0.0) {
      red.rows.push_back(static_cast<std::size_t>(i));
      red.supply.push_back(r(i));
    }
  // Column masses are rescaled to the row total so the reduced problem is
  // exactly balanced.
  for (Eigen::Index j = 0; j < c.size(); ++j)
    if (c(j) > 0.0) {
      red.cols.push_back(static_cast<std::size_t>(j));
      red.demand.push_back(c(j) * (rs / cs));
    }
  return red;
}

Matrix restrict(const Matrix& cost, const Reduced& red) {
  Matrix out(static_cast<Eigen::Index>(red.rows.size()), static_cast<Eigen::Index>(red.cols.size()));
  for (std::size_t a = 0; a < red.rows.size(); ++a)
    for (std::size_t b = 0; b < red.cols.size(); ++b)
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          cost(static_cast<Eigen::Index>(red.rows[a]), static_cast<Eigen::Index>(red.cols[b]));
  return out;
}

Matrix expand(const Matrix& small, const Reduced& red, Eigen::Index m, Eigen::Index n) {
  Matrix out = Matrix::Zero(m, n);
  for (std::size_t a = 0; a < red.rows.size(); ++a)
    for (std::size_t b = 0; b < red.cols.size(); ++b)
      out(static_cast<Eigen::Index>(red.rows[a]), static_cast<Eigen::Index>(red.cols[b])) =
          small(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  return out;
}

void check_cost(const Vector& r, const Vector& c, const Matrix& cost, const char* what) {
  if (cost.rows() != r.size() || cost.cols() != c.size())
    throw InvalidArgument(std::string(what) + ": cost dimensions do not match marginals");
  if (!cost.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite cost");
}

}  // namespace

OtSolution solve_exact_ot(const Vector& r, const Vector& c, const Matrix& cost) {
  check_cost(r, c, cost, "solve_exact_ot");
  const Reduced red = validate_and_strip(r, c);
  const Matrix small_cost = restrict(cost, red);
  TransportSimplex simplex(red.supply, red.demand);
  simplex.northwest_corner();
  simplex.optimize(small_cost, {});
  Matrix x = expand(simplex.coupling(), red, r.size(), c.size());
  const double value = (x.array() * cost.array()).sum();
  return {std::move(x), value};
}

LexOtSolution solve_exact_ot_lexicographic(const Vector& r, const Vector& c, const Matrix& primary,
                                           const Matrix& secondary, double face_tol) {
  check_cost(r, c, primary, "solve_exact_ot_lexicographic");
  check_cost(r, c, secondary, "solve_exact_ot_lexicographic");
  const Reduced red = validate_and_strip(r, c);
  const Matrix small_primary = restrict(primary, red);
  const Matrix small_secondary = restrict(secondary, red);

  TransportSimplex simplex(red.supply, red.demand);
  simplex.northwest_corner();
  simplex.optimize(small_primary, {});
  const auto rc = simplex.reduced_costs(small_primary);
  std::vector<bool> allowed(rc.size());
  for (std::size_t k = 0; k < rc.size(); ++k) allowed[k] = rc[k] <= face_tol;
  simplex.optimize(small_secondary, allowed);

  Matrix x = expand(simplex.coupling(), red, r.size(), c.size());
  const double pv = (x.array() * primary.array()).sum();
  const double sv = (x.array() * secondary.array()).sum();
  return {std::move(x), pv, sv};
}

}  // namespace otc

#pragma once

// Shared helpers for the test binaries: random instances and oracles that
// do not share code paths with the library solvers.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "otc/exact_ot.hpp"
#include "otc/markov.hpp"
#include "otc/otc_exact.hpp"
#include "otc/rng.hpp"

namespace otc::test {

inline Matrix hamming(std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  return Matrix::Ones(n, n) - Matrix::Identity(n, n);
}

/// Row-stochastic with entries uniform on (lo, 1] before normalization.
inline Matrix random_positive_stochastic(std::size_t d, Rng& rng, double lo = 0.05) {
  const auto n = static_cast<Eigen::Index>(d);
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = lo + (1.0 - lo) * rng.uniform();
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

/// Row-stochastic where each entry is zero with probability `zero_prob`;
/// every row keeps at least one positive entry.
inline Matrix random_sparse_stochastic(std::size_t d, Rng& rng, double zero_prob) {
  const auto n = static_cast<Eigen::Index>(d);
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rng.uniform() < zero_prob ? 0.0 : 0.1 + rng.uniform();
    if (m.row(i).sum() == 0.0) m(i, static_cast<Eigen::Index>(rng.bits() % d)) = 1.0;
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

/// Irreducible: random positive entries on a random Hamiltonian cycle plus
/// extra edges with probability `extra`.
inline Matrix random_irreducible(std::size_t d, Rng& rng, double extra) {
  std::vector<std::size_t> perm(d);
  for (std::size_t i = 0; i < d; ++i) perm[i] = i;
  for (std::size_t i = d; i > 1; --i) std::swap(perm[i - 1], perm[rng.bits() % i]);
  const auto n = static_cast<Eigen::Index>(d);
  Matrix m = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < d; ++k)
    m(static_cast<Eigen::Index>(perm[k]), static_cast<Eigen::Index>(perm[(k + 1) % d])) = 0.2 + rng.uniform();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j)
      if (m(i, j) == 0.0 && rng.uniform() < extra) m(i, j) = 0.2 + rng.uniform();
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

inline Vector random_distribution(std::size_t n, Rng& rng, double zero_prob = 0.0) {
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.uniform() < zero_prob ? 0.0 : 0.05 + rng.uniform();
  if (v.sum() == 0.0) v(0) = 1.0;
  return v / v.sum();
}

inline Matrix random_cost(std::size_t m, std::size_t n, Rng& rng) {
  Matrix c(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = 0; j < c.cols(); ++j) c(i, j) = rng.uniform();
  return c;
}

/// Transition coupling whose rows mix the product row with an exact-OT vertex
/// for a random cost. With weight < 1 on the vertex the support equals the
/// product support.
inline TransitionCoupling random_coupling(const TransitionMatrix& p, const TransitionMatrix& q, Rng& rng,
                                          double vertex_weight) {
  const std::size_t d = p.dim();
  const auto n = static_cast<Eigen::Index>(d * d);
  Matrix r = independent_coupling(p, q).matrix();
  for (std::size_t s = 0; s < d * d; ++s) {
    const auto x = static_cast<Eigen::Index>(s / d), y = static_cast<Eigen::Index>(s % d);
    const OtSolution v =
        solve_exact_ot(p.matrix().row(x).transpose(), q.matrix().row(y).transpose(), random_cost(d, d, rng));
    r.row(static_cast<Eigen::Index>(s)) = (1.0 - vertex_weight) * r.row(static_cast<Eigen::Index>(s)) +
                                          vertex_weight * Eigen::Map<const Eigen::RowVectorXd>(v.coupling.data(), n);
  }
  return TransitionCoupling(d, std::move(r), 1e-9);
}

/// Dense two-phase simplex with Bland's rule: min cost.x s.t. A x = b, x >= 0.
/// Small problems only. Returns +inf if infeasible.
inline double lp_min(const Eigen::MatrixXd& a, const Eigen::VectorXd& b_in, const Eigen::VectorXd& cost,
                     Eigen::VectorXd* x_out = nullptr) {
  const Eigen::Index m = a.rows(), n = a.cols(), total = n + m;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m + 1, total + 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double sign = b_in(i) < 0 ? -1.0 : 1.0;
    t.row(i).head(n) = sign * a.row(i);
    t(i, n + i) = 1.0;
    t(i, total) = sign * b_in(i);
  }
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;
  const double tol = 1e-11;

  auto pivot = [&](Eigen::Index r, Eigen::Index e) {
    t.row(r) /= t(r, e);
    for (Eigen::Index i = 0; i <= m; ++i)
      if (i != r && t(i, e) != 0.0) t.row(i) -= t(i, e) * t.row(r);
    basis[static_cast<std::size_t>(r)] = e;
  };
  auto run = [&](Eigen::Index allowed) {
    for (int guard = 0; guard < 100000; ++guard) {
      Eigen::Index e = -1;
      for (Eigen::Index j = 0; j < allowed; ++j)
        if (t(m, j) < -tol) {
          e = j;
          break;
        }
      if (e < 0) return;
      Eigen::Index r = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m; ++i) {
        if (t(i, e) <= tol) continue;
        const double ratio = t(i, total) / t(i, e);
        if (ratio < best - 1e-14 ||
            (std::abs(ratio - best) <= 1e-14 && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(r)])) {
          best = ratio;
          r = i;
        }
      }
      if (r < 0) throw std::runtime_error("lp_min: unbounded");
      pivot(r, e);
    }
    throw std::runtime_error("lp_min: no convergence");
  };

  // phase 1
  for (Eigen::Index j = 0; j <= total; ++j)
    if (j < n || j == total) t(m, j) = -t.col(j).head(m).sum();
  run(total);
  if (-t(m, total) > 1e-9) return std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (basis[static_cast<std::size_t>(i)] < n) continue;
    for (Eigen::Index j = 0; j < n; ++j)
      if (std::abs(t(i, j)) > tol) {
        pivot(i, j);
        break;
      }
  }
  // phase 2
  t.row(m).setZero();
  t.row(m).head(n) = cost.transpose();
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index bcol = basis[static_cast<std::size_t>(i)];
    if (bcol < n) t.row(m) -= cost(bcol) * t.row(i);
  }
  run(n);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i)
    if (basis[static_cast<std::size_t>(i)] < n) x(basis[static_cast<std::size_t>(i)]) = t(i, total);
  if (x_out) *x_out = x;
  return cost.dot(x);
}

/// Optimal transport value by the dense LP above.
inline double lp_ot(const Vector& r, const Vector& c, const Matrix& cost) {
  const Eigen::Index m = r.size(), n = c.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m + n, m * n);
  Eigen::VectorXd b(m + n), w(m * n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      a(i, i * n + j) = 1.0;
      a(m + j, i * n + j) = 1.0;
      w(i * n + j) = cost(i, j);
    }
  b << r, c;
  return lp_min(a, b, w);
}

/// Reachability closure of the support graph.
inline std::vector<std::vector<bool>> reachability(const Matrix& r) {
  const auto n = static_cast<std::size_t>(r.rows());
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    reach[i][i] = true;
    for (std::size_t j = 0; j < n; ++j)
      if (r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0) reach[i][j] = true;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (reach[i][k])
        for (std::size_t j = 0; j < n; ++j)
          if (reach[k][j]) reach[i][j] = true;
  return reach;
}

/// Gain and bias by decomposing the chain into recurrent classes and the
/// transient remainder. On a class with stationary law lambda:
///   g = <lambda, c>,  h = (I - R_KK + 1 lambda^T)^{-1} (c_K - g).
/// Transient states follow from the Bellman equations restricted to them.
inline GainBias class_gain_bias(const Matrix& r, const Vector& c) {
  const auto n = static_cast<std::size_t>(r.rows());
  const auto reach = reachability(r);
  std::vector<int> cls(n, -1);
  std::vector<std::vector<std::size_t>> classes;
  for (std::size_t i = 0; i < n; ++i) {
    bool recurrent = true;
    for (std::size_t j = 0; j < n && recurrent; ++j)
      if (reach[i][j] && !reach[j][i]) recurrent = false;
    if (!recurrent || cls[i] >= 0) continue;
    std::vector<std::size_t> members;
    for (std::size_t j = 0; j < n; ++j)
      if (reach[i][j]) members.push_back(j);
    for (std::size_t j : members) cls[j] = static_cast<int>(classes.size());
    classes.push_back(members);
  }

  Vector g = Vector::Zero(r.rows()), h = Vector::Zero(r.rows());
  for (const auto& members : classes) {
    const auto k = static_cast<Eigen::Index>(members.size());
    Eigen::MatrixXd rk(k, k);
    Eigen::VectorXd ck(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      ck(a) = c(static_cast<Eigen::Index>(members[static_cast<std::size_t>(a)]));
      for (Eigen::Index b = 0; b < k; ++b)
        rk(a, b) = r(static_cast<Eigen::Index>(members[static_cast<std::size_t>(a)]),
                     static_cast<Eigen::Index>(members[static_cast<std::size_t>(b)]));
    }
    Eigen::MatrixXd sys(k + 1, k);
    sys.topRows(k) = (Eigen::MatrixXd::Identity(k, k) - rk).transpose();
    sys.row(k).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
    rhs(k) = 1.0;
    const Eigen::VectorXd lambda = sys.fullPivHouseholderQr().solve(rhs);
    const double gk = lambda.dot(ck);
    const Eigen::MatrixXd fundamental =
        Eigen::MatrixXd::Identity(k, k) - rk + Eigen::VectorXd::Ones(k) * lambda.transpose();
    const Eigen::VectorXd hk = fundamental.fullPivLu().solve((ck.array() - gk).matrix());
    for (Eigen::Index a = 0; a < k; ++a) {
      g(static_cast<Eigen::Index>(members[static_cast<std::size_t>(a)])) = gk;
      h(static_cast<Eigen::Index>(members[static_cast<std::size_t>(a)])) = hk(a);
    }
  }

  std::vector<std::size_t> transient;
  for (std::size_t i = 0; i < n; ++i)
    if (cls[i] < 0) transient.push_back(i);
  if (!transient.empty()) {
    const auto t = static_cast<Eigen::Index>(transient.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(t, t);
    Eigen::VectorXd rg(t), rest(t);
    for (Eigen::Index i = 0; i < t; ++i) {
      const auto si = static_cast<Eigen::Index>(transient[static_cast<std::size_t>(i)]);
      for (Eigen::Index j = 0; j < t; ++j) a(i, j) -= r(si, static_cast<Eigen::Index>(transient[static_cast<std::size_t>(j)]));
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (cls[j] >= 0) acc += r(si, static_cast<Eigen::Index>(j)) * g(static_cast<Eigen::Index>(j));
      rg(i) = acc;
    }
    const auto lu = a.fullPivLu();
    const Eigen::VectorXd gt = lu.solve(rg);
    for (Eigen::Index i = 0; i < t; ++i) {
      const auto si = static_cast<Eigen::Index>(transient[static_cast<std::size_t>(i)]);
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (cls[j] >= 0) acc += r(si, static_cast<Eigen::Index>(j)) * h(static_cast<Eigen::Index>(j));
      rest(i) = c(si) - gt(i) + acc;
    }
    const Eigen::VectorXd ht = lu.solve(rest);
    for (Eigen::Index i = 0; i < t; ++i) {
      g(static_cast<Eigen::Index>(transient[static_cast<std::size_t>(i)])) = gt(i);
      h(static_cast<Eigen::Index>(transient[static_cast<std::size_t>(i)])) = ht(i);
    }
  }
  return {g, h};
}

/// Kronecker product with the pair ordering x * d + y.
inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Sum of the x-marginal and y-marginal of a distribution on pairs.
inline std::pair<Vector, Vector> pair_marginals(const Vector& lambda, std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  const Matrix m = Eigen::Map<const Matrix>(lambda.data(), n, n);
  return {m.rowwise().sum(), m.colwise().sum().transpose()};
}

/// Stationary law of an irreducible chain by least squares on
/// lambda (I - P) = 0, sum(lambda) = 1.
inline Vector stationary_of(const Matrix& p) {
  const Eigen::Index k = p.rows();
  Eigen::MatrixXd sys(k + 1, k);
  sys.topRows(k) = (Eigen::MatrixXd::Identity(k, k) - Eigen::MatrixXd(p)).transpose();
  sys.row(k).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
  rhs(k) = 1.0;
  return sys.fullPivHouseholderQr().solve(rhs);
}

}  // namespace otc::test

namespace otc::test {

/// Entropic optimum diag(a) exp(-xi C) diag(b) by plain alternating scaling
/// until the marginal gap is below `gap_tol`.
inline Matrix reference_entropic_plan(const Vector& r, const Vector& c, const Matrix& cost, double xi,
                                      double gap_tol = 1e-14) {
  const Eigen::MatrixXd k = (-xi * Eigen::MatrixXd(cost)).array().exp();
  Eigen::VectorXd a = Eigen::VectorXd::Ones(r.size()), b = Eigen::VectorXd::Ones(c.size());
  for (int it = 0; it < 1000000; ++it) {
    b = c.array() / (k.transpose() * a).array();
    a = r.array() / (k * b).array();
    const Eigen::MatrixXd x = a.asDiagonal() * k * b.asDiagonal();
    const double gap = (x.colwise().sum().transpose() - c).cwiseAbs().sum();
    if (gap < gap_tol) return x;
  }
  throw std::runtime_error("reference_entropic_plan: no convergence");
}

}  // namespace otc::test

namespace otc::test {

struct Fixture {
  Matrix p, q, c;
};

/// Five-state pair: cheap first step through (2,2) leads to the expensive (4,4).
inline Fixture five_state() {
  Matrix p = Matrix::Zero(5, 5), q = Matrix::Zero(5, 5);
  p(0, 1) = 0.25;
  p(0, 2) = 0.75;
  q(0, 1) = 0.5;
  q(0, 2) = 0.5;
  for (Matrix* m : {&p, &q}) {
    (*m)(1, 3) = 1;
    (*m)(2, 4) = 1;
    (*m)(3, 0) = 1;
    (*m)(4, 0) = 1;
  }
  Matrix c = Matrix::Constant(5, 5, 100.0);
  for (auto [x, y] : {std::pair{0, 0}, {1, 2}, {2, 1}, {2, 2}, {3, 3}}) c(x, y) = 0;
  for (auto [x, y] : {std::pair{1, 1}, {3, 4}, {4, 3}}) c(x, y) = 1;
  c(4, 4) = 9;
  return {p, q, c};
}

/// The product coupling of five_state() with row (0,0) replaced by
/// (1,1) 0.25, (2,1) 0.25, (2,2) 0.5.
inline Matrix five_state_depicted_one_step() {
  const Fixture f = five_state();
  Matrix r = kron(f.p, f.q);
  r.row(0).setZero();
  r(0, 1 * 5 + 1) = 0.25;
  r(0, 2 * 5 + 1) = 0.25;
  r(0, 2 * 5 + 2) = 0.5;
  return r;
}

/// P iid uniform on two states, Q deterministic alternation.
inline Fixture forced_pair() {
  Matrix p = Matrix::Constant(2, 2, 0.5), q(2, 2);
  q << 0, 1, 1, 0;
  return {p, q, hamming(2)};
}

/// Printed 9 x 9 coupling of the two three-state chains (pair index 3x + y).
inline Matrix three_state_coupling() {
  Matrix r = Matrix::Zero(9, 9);
  auto put = [&](int x, int y, std::initializer_list<std::pair<int, double>> cells) {
    for (auto [to, w] : cells) r(3 * x + y, to) = w;
  };
  put(0, 0, {{1, .25}, {3, .25}, {8, .5}});
  put(0, 1, {{2, .25}, {5, .25}, {6, .25}, {7, .25}});
  put(0, 2, {{2, .25}, {3, .25}, {6, .25}, {7, .25}});
  put(1, 0, {{0, .25}, {5, .25}, {7, .25}, {8, .25}});
  put(1, 1, {{2, .25}, {3, .25}, {7, .25}, {8, .25}});
  put(1, 2, {{1, .25}, {5, .25}, {6, .5}});
  put(2, 0, {{1, .25}, {3, .25}, {8, .5}});
  put(2, 1, {{0, .25}, {5, .25}, {7, .25}, {8, .25}});
  put(2, 2, {{1, .25}, {5, .25}, {6, .5}});
  return r;
}

inline Matrix three_state_p() { return Matrix::Constant(3, 3, 0.25).rowwise() + Eigen::RowVector3d(0, 0, 0.25); }

inline Matrix three_state_q() {
  Matrix q = three_state_p();
  q.row(2) << 0.5, 0.25, 0.25;
  return q;
}

}  // namespace otc::test

#include "otc/hmm.hpp"

namespace otc::test {

inline Hmm random_hmm(std::size_t d, std::size_t m, Rng& rng, double emission_zero_prob = 0.3) {
  Matrix e(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(m));
  for (Eigen::Index x = 0; x < e.rows(); ++x) e.row(x) = random_distribution(m, rng, emission_zero_prob).transpose();
  return Hmm(TransitionMatrix(random_positive_stochastic(d, rng)), std::move(e));
}

/// |u - v| on an alphabet laid out on a line: a metric.
inline Matrix line_metric(std::size_t m) {
  Matrix c(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (Eigen::Index u = 0; u < c.rows(); ++u)
    for (Eigen::Index v = 0; v < c.cols(); ++v) c(u, v) = std::abs(static_cast<double>(u - v));
  return c;
}

}  // namespace otc::test

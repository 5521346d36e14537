#include "otc/otc_exact.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "otc/error.hpp"
#include "otc/exact_ot.hpp"
#include "otc/parallel.hpp"

namespace otc {

namespace {

Eigen::Map<const Matrix> as_square(const Vector& v, std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  return Eigen::Map<const Matrix>(v.data(), n, n);
}

}  // namespace

void check_marginal_chains(const TransitionMatrix& p, const TransitionMatrix& q, const CostMatrix& c) {
  if (p.dim() != q.dim()) throw InvalidArgument("P and Q must have the same number of states");
  if (c.dim() != p.dim()) throw InvalidArgument("cost matrix must be d x d");
}

GainBias exact_tce(const Matrix& r, const Vector& c) {
  const Eigen::Index n = r.rows();
  if (r.cols() != n || c.size() != n) throw InvalidArgument("exact_tce: dimension mismatch");

  // [I-R 0 0; I I-R 0; 0 I I-R] (g, h, w) = (0, c, 0)
  const Eigen::MatrixXd i_minus_r = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd(r);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  a.block(0, 0, n, n) = i_minus_r;
  a.block(n, 0, n, n).diagonal().setOnes();
  a.block(n, n, n, n) = i_minus_r;
  a.block(2 * n, n, n, n).diagonal().setOnes();
  a.block(2 * n, 2 * n, n, n) = i_minus_r;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(3 * n);
  b.segment(n, n) = c;

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::VectorXd x = qr.solve(b);
  const double residual = (a * x - b).cwiseAbs().maxCoeff();
  const double scale = 1.0 + c.cwiseAbs().maxCoeff();
  if (!x.allFinite() || residual > 1e-8 * scale)
    throw NumericalError("exact_tce: evaluation system solve failed (residual " + std::to_string(residual) + ")");
  return {x.head(n), x.segment(n, n)};
}

GainBias exact_tce(const TransitionCoupling& r, const CostMatrix& c) {
  if (r.marginal_dim() != c.dim()) throw InvalidArgument("exact_tce: cost dimension does not match coupling");
  return exact_tce(r.matrix(), c.flattened());
}

Improvement exact_tci(const GainBias& values, const TransitionCoupling& r0, const TransitionMatrix& p,
                      const TransitionMatrix& q, double tau) {
  const std::size_t d = r0.marginal_dim();
  const auto n = static_cast<Eigen::Index>(d * d);
  if (p.dim() != d || q.dim() != d) throw InvalidArgument("exact_tci: marginal dimension mismatch");
  if (values.g.size() != n || values.h.size() != n) throw InvalidArgument("exact_tci: gain/bias length mismatch");

  const Matrix& current = r0.matrix();
  const PairIndexer idx{d};
  const Matrix g_cost = as_square(values.g, d);
  const Matrix h_cost = as_square(values.h, d);
  const double tau_g = tau * std::max(1.0, values.g.cwiseAbs().maxCoeff());
  const double tau_h = tau * std::max(1.0, values.h.cwiseAbs().maxCoeff());

  Matrix next = current;
  std::vector<char> changed(static_cast<std::size_t>(n), 0);
  auto count = [&] { return static_cast<std::size_t>(std::count(changed.begin(), changed.end(), 1)); };

  parallel_for(static_cast<std::size_t>(n), [&](std::size_t s) {
    const auto [x, y] = idx.pair(s);
    const Vector rx = p.matrix().row(static_cast<Eigen::Index>(x)).transpose();
    const Vector qy = q.matrix().row(static_cast<Eigen::Index>(y)).transpose();
    const OtSolution best = solve_exact_ot(rx, qy, g_cost);
    const double now = current.row(static_cast<Eigen::Index>(s)).dot(values.g);
    if (now > best.value + tau_g) {
      next.row(static_cast<Eigen::Index>(s)) = Eigen::Map<const Eigen::RowVectorXd>(best.coupling.data(), n);
      changed[s] = 1;
    }
  });
  if (const std::size_t k = count(); k > 0) return {TransitionCoupling(d, std::move(next), 1e-9), ImprovementPass::Gain, k};

  parallel_for(static_cast<std::size_t>(n), [&](std::size_t s) {
    const auto [x, y] = idx.pair(s);
    const Vector rx = p.matrix().row(static_cast<Eigen::Index>(x)).transpose();
    const Vector qy = q.matrix().row(static_cast<Eigen::Index>(y)).transpose();
    const LexOtSolution best = solve_exact_ot_lexicographic(rx, qy, g_cost, h_cost, tau_g);
    const double now = current.row(static_cast<Eigen::Index>(s)).dot(values.h);
    if (now > best.secondary_value + tau_h) {
      next.row(static_cast<Eigen::Index>(s)) = Eigen::Map<const Eigen::RowVectorXd>(best.coupling.data(), n);
      changed[s] = 1;
    }
  });
  if (const std::size_t k = count(); k > 0) return {TransitionCoupling(d, std::move(next), 1e-9), ImprovementPass::Bias, k};
  return {r0, ImprovementPass::None, 0};
}

OtcSolution exact_otc(const TransitionMatrix& p, const TransitionMatrix& q, const CostMatrix& c,
                      const ExactOtcOptions& options) {
  check_marginal_chains(p, q, c);
  const std::size_t d = p.dim();
  const std::size_t cap = options.max_iterations.value_or(10 * d * d);
  const Vector flat = c.flattened();

  TransitionCoupling r = independent_coupling(p, q);
  for (std::size_t iteration = 1;; ++iteration) {
    GainBias values = exact_tce(r.matrix(), flat);
    if (options.on_iteration) options.on_iteration(iteration, r, values);
    Improvement step = exact_tci(values, r, p, q, options.tau);
    if (step.pass == ImprovementPass::None) {
      CostExtraction extracted = otc_cost(r.matrix(), flat);
      return {std::move(r), std::move(values.g), extracted.cost, std::move(extracted.stationary), iteration,
              std::nullopt};
    }
    if (iteration >= cap)
      throw IterationLimitError("exact_otc: no fixed point after " + std::to_string(cap) + " iterations");
    r = std::move(step.coupling);
  }
}

OtcSolution one_step_otc(const TransitionMatrix& p, const TransitionMatrix& q, const CostMatrix& c) {
  check_marginal_chains(p, q, c);
  const std::size_t d = p.dim();
  const auto n = static_cast<Eigen::Index>(d * d);
  const PairIndexer idx{d};
  Matrix rows(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t s) {
    const auto [x, y] = idx.pair(s);
    const OtSolution best = solve_exact_ot(p.matrix().row(static_cast<Eigen::Index>(x)).transpose(),
                                           q.matrix().row(static_cast<Eigen::Index>(y)).transpose(), c.matrix());
    rows.row(static_cast<Eigen::Index>(s)) = Eigen::Map<const Eigen::RowVectorXd>(best.coupling.data(), n);
  });
  TransitionCoupling r(d, std::move(rows), 1e-9);
  const Vector flat = c.flattened();
  GainBias values = exact_tce(r.matrix(), flat);
  CostExtraction extracted = otc_cost(r.matrix(), flat);
  return {std::move(r), std::move(values.g), extracted.cost, std::move(extracted.stationary), 1, std::nullopt};
}

CostExtraction otc_cost(const Matrix& r, const Vector& c) {
  if (r.rows() != r.cols() || c.size() != r.rows()) throw InvalidArgument("otc_cost: dimension mismatch");
  std::optional<CostExtraction> best;
  for (const StateClass& cls : recurrent_classes(r)) {
    Vector lambda = class_stationary_distribution(r, cls);
    const double value = c.dot(lambda);
    if (!best || value < best->cost) best = CostExtraction{value, Distribution(std::move(lambda), 1e-9)};
  }
  if (!best) throw NumericalError("otc_cost: no recurrent class found");
  return std::move(*best);
}

CostExtraction otc_cost(const TransitionCoupling& r, const CostMatrix& c) {
  if (r.marginal_dim() != c.dim()) throw InvalidArgument("otc_cost: cost dimension does not match coupling");
  return otc_cost(r.matrix(), c.flattened());
}

}  // namespace otc

#include "otc/otc_entropic.hpp"

#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "otc/entropic_ot.hpp"
#include "otc/error.hpp"
#include "otc/parallel.hpp"

namespace otc {

namespace {

// R held once; sparse storage when at least 90% of entries are zero.
class PairOperator {
 public:
  explicit PairOperator(const Matrix& r) : dense_(r) {
    const auto zeros = (r.array() == 0.0).count();
    if (10 * zeros >= 9 * r.size()) {
      sparse_ = r.sparseView();
      sparse_.makeCompressed();
      use_sparse_ = true;
    }
  }

  void apply(const Vector& in, Vector& out) const {
    if (use_sparse_)
      out.noalias() = sparse_ * in;
    else
      out.noalias() = dense_ * in;
  }

 private:
  const Matrix& dense_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> sparse_;
  bool use_sparse_ = false;
};

void check_square(const Matrix& r, const Vector& c) {
  if (r.rows() != r.cols() || c.size() != r.rows()) throw InvalidArgument("approx_tce: dimension mismatch");
}

}  // namespace

void EntropicParams::validate() const {
  if (L < 1 || T < 1) throw InvalidArgument("entropic: L and T must be at least 1");
  if (L_max < 1 || T_max < 1) throw InvalidArgument("entropic: L_max and T_max must be at least 1");
  if (!(xi > 0.0) || !std::isfinite(xi)) throw InvalidArgument("entropic: xi must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("entropic: eps must lie in (0, 1)");
  if (sinkhorn_iters && *sinkhorn_iters < 1) throw InvalidArgument("entropic: sinkhorn iterations must be positive");
  if (adaptive && !(tol > 0.0)) throw InvalidArgument("entropic: tolerance must be positive");
  if (max_iterations < 1) throw InvalidArgument("entropic: iteration cap must be positive");
}

GainBias approx_tce(const Matrix& r, const Vector& c, std::size_t L, std::size_t T) {
  check_square(r, c);
  if (L < 1 || T < 1) throw InvalidArgument("approx_tce: L and T must be at least 1");
  const PairOperator op(r);
  Vector v = c, scratch(c.size());
  for (std::size_t k = 0; k < L; ++k) {
    op.apply(v, scratch);
    v.swap(scratch);
  }
  const double gain = v.mean();

  Vector term = c.array() - gain;
  Vector h = term;
  for (std::size_t t = 0; t < T; ++t) {
    op.apply(term, scratch);
    term.swap(scratch);
    h += term;
  }
  return {Vector::Constant(c.size(), gain), std::move(h)};
}

AdaptiveEvaluation approx_tce_adaptive(const Matrix& r, const Vector& c, double tol, std::size_t L_max,
                                       std::size_t T_max) {
  check_square(r, c);
  if (!(tol > 0.0)) throw InvalidArgument("approx_tce_adaptive: tol must be positive");
  if (L_max < 1 || T_max < 1) throw InvalidArgument("approx_tce_adaptive: caps must be at least 1");
  const PairOperator op(r);

  AdaptiveEvaluation out{};
  Vector v = c, scratch(c.size());
  double gain = v.mean();
  for (std::size_t L = 1; L <= L_max; ++L) {
    op.apply(v, scratch);
    v.swap(scratch);
    const double next = v.mean();
    const double change = std::abs(next - gain);
    gain = next;
    out.L_used = L;
    if (change < tol) {
      out.gain_converged = true;
      break;
    }
  }

  Vector term = c.array() - gain;
  Vector h = term;
  for (std::size_t t = 1; t <= T_max; ++t) {
    op.apply(term, scratch);
    term.swap(scratch);
    h += term;
    out.T_used = t;
    if (term.cwiseAbs().maxCoeff() < tol) {
      out.bias_converged = true;
      break;
    }
  }
  out.values = {Vector::Constant(c.size(), gain), std::move(h)};
  return out;
}

EntropicImprovement entropic_tci(const Vector& h, const TransitionMatrix& p, const TransitionMatrix& q,
                                 const EntropicParams& params) {
  const std::size_t d = p.dim();
  const auto n = static_cast<Eigen::Index>(d * d);
  if (q.dim() != d || h.size() != n) throw InvalidArgument("entropic_tci: dimension mismatch");
  if (!h.allFinite()) throw NumericalError("entropic_tci: bias has non-finite entries");

  const auto side = static_cast<Eigen::Index>(d);
  const Matrix cost = Eigen::Map<const Matrix>(h.data(), side, side).array() - h.minCoeff();
  const ApproxOtParams ot{params.xi, params.eps, params.sinkhorn_iters};
  const PairIndexer idx{d};

  Matrix rows(n, n);
  std::vector<std::size_t> iters(static_cast<std::size_t>(n), 0);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t s) {
    const auto [x, y] = idx.pair(s);
    const ApproxOtResult row = approx_ot(p.matrix().row(static_cast<Eigen::Index>(x)).transpose(),
                                         q.matrix().row(static_cast<Eigen::Index>(y)).transpose(), cost, ot);
    rows.row(static_cast<Eigen::Index>(s)) = Eigen::Map<const Eigen::RowVectorXd>(row.coupling.data(), n);
    iters[s] = row.sinkhorn_iterations;
  });
  return {TransitionCoupling(d, std::move(rows), 1e-9), *std::max_element(iters.begin(), iters.end())};
}

OtcSolution entropic_otc(const TransitionMatrix& p, const TransitionMatrix& q, const CostMatrix& c,
                         const EntropicParams& params) {
  check_marginal_chains(p, q, c);
  params.validate();
  for (const auto* chain : {&p, &q}) {
    const char* name = chain == &p ? "P" : "Q";
    if (!is_irreducible(*chain)) throw PreconditionError(std::string("entropic_otc: ") + name + " is not irreducible");
    if (!is_aperiodic(*chain)) throw PreconditionError(std::string("entropic_otc: ") + name + " is not aperiodic");
  }

  const Vector flat = c.flattened();
  EntropicDiagnostics diag;
  diag.xi = params.xi;
  diag.stopped_by = "iteration_cap";

  TransitionCoupling current = independent_coupling(p, q);
  TransitionCoupling best = current;
  double best_gain = std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;

  for (std::size_t n = 1; n <= params.max_iterations; ++n) {
    GainBias values;
    std::size_t l_used = params.L, t_used = params.T;
    if (params.adaptive) {
      AdaptiveEvaluation e = approx_tce_adaptive(current.matrix(), flat, params.tol, params.L_max, params.T_max);
      values = std::move(e.values);
      l_used = e.L_used;
      t_used = e.T_used;
    } else {
      values = approx_tce(current.matrix(), flat, params.L, params.T);
    }
    ++evaluations;
    const double gain = values.g(0);
    diag.gain_history.push_back(gain);
    if (n > 1 && !(gain < best_gain - params.stop_slack)) {
      diag.stopped_by = "no_improvement";
      break;
    }
    best = current;
    best_gain = gain;
    diag.L_used = l_used;
    diag.T_used = t_used;
    if (n == params.max_iterations) break;

    EntropicImprovement step = entropic_tci(values.h, p, q, params);
    diag.sinkhorn_iters = step.sinkhorn_iters;
    current = std::move(step.coupling);
  }

  CostExtraction extracted = otc_cost(best.matrix(), flat);
  const auto states = static_cast<Eigen::Index>(flat.size());
  return {std::move(best), Vector::Constant(states, best_gain), extracted.cost, std::move(extracted.stationary),
          evaluations, std::move(diag)};
}

}  // namespace otc

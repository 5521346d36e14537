#pragma once

// Approximate OTC: truncated power-series evaluation of gain and bias,
// Sinkhorn-based row improvement, and the outer loop that runs while the
// approximate gain keeps decreasing.

#include <cstddef>
#include <optional>

#include "otc/markov.hpp"
#include "otc/otc_exact.hpp"

namespace otc {

struct EntropicParams {
  std::size_t L = 100;   ///< gain horizon
  std::size_t T = 1000;  ///< bias horizon
  double xi = 100.0;
  /// Per-row ApproxOT accuracy, used when sinkhorn_iters is empty.
  double eps = 0.1;
  std::optional<std::size_t> sinkhorn_iters;

  bool adaptive = false;
  double tol = 1e-12;
  std::size_t L_max = 100;
  std::size_t T_max = 1000;

  std::size_t max_iterations = 200;
  /// A new gain must be below the previous one by more than this to continue.
  double stop_slack = 1e-9;

  void validate() const;
};

/// g = mean(R^L c) * 1 and h = sum_{t=0..T} R^t (c - g).
GainBias approx_tce(const Matrix& r, const Vector& c, std::size_t L, std::size_t T);

struct AdaptiveEvaluation {
  GainBias values;
  std::size_t L_used;
  std::size_t T_used;
  bool gain_converged;  ///< false when L hit L_max
  bool bias_converged;  ///< false when T hit T_max
};

/// Grows L until consecutive gains differ by less than tol, then grows T
/// until the newest bias term R^T (c - g) has sup-norm below tol.
AdaptiveEvaluation approx_tce_adaptive(const Matrix& r, const Vector& c, double tol, std::size_t L_max,
                                       std::size_t T_max);

struct EntropicImprovement {
  TransitionCoupling coupling;
  std::size_t sinkhorn_iters;  ///< largest per-row count
};

/// Every row (x, y) becomes ApproxOT(P(x,.), Q(y,.), h as a d x d cost). h is
/// shifted by its minimum first so the cost is nonnegative; that leaves every
/// row problem unchanged.
EntropicImprovement entropic_tci(const Vector& h, const TransitionMatrix& p, const TransitionMatrix& q,
                                 const EntropicParams& params);

/// Requires P and Q aperiodic and irreducible. Returns the last coupling
/// whose approximate gain improved; the reported cost comes from otc_cost.
OtcSolution entropic_otc(const TransitionMatrix& p, const TransitionMatrix& q, const CostMatrix& c,
                         const EntropicParams& params);

}  // namespace otc

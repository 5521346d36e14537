#pragma once

// Entropy-regularized optimal transport: Sinkhorn matrix scaling, rounding of
// a near-feasible matrix onto the coupling polytope, and the ApproxOT driver
// that combines the two on the positive support of the marginals.

#include <cstddef>
#include <optional>

#include "otc/markov.hpp"

namespace otc {

struct SinkhornResult {
  Matrix plan;              ///< diag(e^u) K diag(e^v)
  Vector u, v;              ///< log-scalings
  std::size_t iterations;
  double marginal_gap;      ///< ||X 1 - r||_1 + ||X^T 1 - c||_1 of `plan`
  bool converged;           ///< gap <= eps_prime when the loop stopped
};

/// Alternating row (odd k) / column (even k) scaling starting from
/// X_0 = K / ||K||_1, stopping once the marginal gap is <= eps_prime or after
/// max_iters scalings. Pass eps_prime = 0 to run exactly max_iters scalings.
///
/// K must be strictly positive and r, c strictly positive.
SinkhornResult sinkhorn(const Matrix& kernel, const Vector& r, const Vector& c, double eps_prime,
                        std::size_t max_iters);

/// Same iteration started from the given log-scalings instead of K / ||K||_1.
SinkhornResult sinkhorn(const Matrix& kernel, const Vector& r, const Vector& c, double eps_prime,
                        std::size_t max_iters, const Vector& u0, const Vector& v0);

/// Log-domain variant for kernels K = exp(-xi C) too small to represent;
/// takes the cost and xi instead of K. Returns the same quantities.
SinkhornResult sinkhorn_log(const Matrix& cost, double xi, const Vector& r, const Vector& c,
                            double eps_prime, std::size_t max_iters);

/// Projects nonnegative F onto couplings of (r, c): shrink rows, shrink
/// columns, then add the rank-one correction err_r err_c^T / ||err_r||_1.
/// A 0/0 ratio is treated as 1.
Matrix round_to_feasible(const Matrix& f, const Vector& r, const Vector& c);

struct ApproxOtParams {
  double xi;
  double eps;
  /// When set, Sinkhorn runs exactly this many scalings instead of stopping
  /// on the eps'-derived marginal gap.
  std::optional<std::size_t> max_sinkhorn_iters;
  /// Safety cap for the eps'-driven loop.
  std::size_t iteration_cap = 1'000'000;
};

struct ApproxOtResult {
  Matrix coupling;
  std::size_t sinkhorn_iterations;
  double eps_prime;
  bool converged;
};

/// Approximate entropic optimal coupling of r and c for a nonnegative cost.
/// Entries outside supp(r) x supp(c) are exactly zero.
ApproxOtResult approx_ot(const Vector& r, const Vector& c, const Matrix& cost, const ApproxOtParams& params);

}  // namespace otc

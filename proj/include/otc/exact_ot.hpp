#pragma once

// Exact discrete optimal transport returning a vertex of the transportation
// polytope, computed by a primal transportation simplex on a spanning-tree
// basis.

#include "otc/markov.hpp"

namespace otc {

struct OtSolution {
  Matrix coupling;  ///< m x n, at most m + n - 1 strictly positive entries
  double value;     ///< <cost, coupling>
};

/// Minimizes <cost, X> over couplings X of r and c. Costs may be signed.
///
/// Zero-mass rows and columns are removed before solving and come back as
/// zero rows/columns. Pricing is Dantzig (most negative reduced cost, first
/// in row-major order on ties); after a run of degenerate pivots the solver
/// switches permanently to Bland's rule. Ties in the ratio test go to the
/// smallest row-major cell. The result is therefore deterministic.
OtSolution solve_exact_ot(const Vector& r, const Vector& c, const Matrix& cost);

struct LexOtSolution {
  Matrix coupling;
  double primary_value;
  double secondary_value;
};

/// Minimizes <secondary, X> over the face of couplings that are optimal for
/// `primary`. The face is identified by complementary slackness: cells whose
/// primary reduced cost exceeds `face_tol` are excluded.
LexOtSolution solve_exact_ot_lexicographic(const Vector& r, const Vector& c, const Matrix& primary,
                                           const Matrix& secondary, double face_tol);

}  // namespace otc

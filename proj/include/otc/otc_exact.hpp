#pragma once

// Exact optimal transition coupling by policy iteration on the transition
// coupling MDP: evaluate the current coupling (gain and bias), improve it row
// by row with exact OT, repeat until nothing improves.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "otc/markov.hpp"

namespace otc {

/// Default tolerance for "this row already attains the minimum" tests.
inline constexpr double kImprovementTolerance = 1e-10;

struct GainBias {
  Vector g;  ///< long-run average cost from each pair state
  Vector h;  ///< total deviation sum_t R^t (c - g)
};

/// Extra fields reported by the entropic solver.
struct EntropicDiagnostics {
  double xi = 0.0;
  std::size_t L_used = 0;
  std::size_t T_used = 0;
  std::size_t sinkhorn_iters = 0;
  /// "no_improvement" or "iteration_cap".
  std::string stopped_by;
  /// Approximate gain after each evaluation, in order.
  std::vector<double> gain_history;
};

struct OtcSolution {
  TransitionCoupling coupling;
  Vector gain;
  double cost;
  Distribution stationary;  ///< stationary law attaining `cost`
  std::size_t iterations;
  std::optional<EntropicDiagnostics> entropic;
};

struct CostExtraction {
  double cost;
  Distribution stationary;
};

/// Gain and bias of R for the flattened cost c, from the three-block linear
/// system in (g, h, w) solved by column-pivoted QR. Throws NumericalError if
/// the solve leaves a residual above 1e-8 (1 + ||c||_inf).
GainBias exact_tce(const Matrix& r, const Vector& c);
GainBias exact_tce(const TransitionCoupling& r, const CostMatrix& c);

enum class ImprovementPass { None, Gain, Bias };

struct Improvement {
  TransitionCoupling coupling;
  ImprovementPass pass;
  std::size_t rows_changed;
};

/// One improvement step. First every row is re-solved against g; rows whose
/// current value is within tau * max(1, ||g||_inf) of the optimum keep their
/// current row. If no row changed, rows are re-solved against h over the
/// g-optimal face only (the multichain policy iteration rule), with the same
/// keep-if-tied test. With no change in either pass the input comes back
/// unchanged and pass == None. Replaced rows are vertices.
Improvement exact_tci(const GainBias& values, const TransitionCoupling& r0, const TransitionMatrix& p,
                      const TransitionMatrix& q, double tau = kImprovementTolerance);

struct ExactOtcOptions {
  /// Evaluation cap; defaults to 10 d^2.
  std::optional<std::size_t> max_iterations;
  double tau = kImprovementTolerance;
  /// Called after every evaluation with the iteration number (from 1), the
  /// coupling just evaluated, and its gain and bias.
  std::function<void(std::size_t, const TransitionCoupling&, const GainBias&)> on_iteration;
};

OtcSolution exact_otc(const TransitionMatrix& p, const TransitionMatrix& q, const CostMatrix& c,
                      const ExactOtcOptions& options = {});

/// Greedy coupling: each row minimizes the next-step expected cost alone.
OtcSolution one_step_otc(const TransitionMatrix& p, const TransitionMatrix& q, const CostMatrix& c);

/// Minimum of <c, lambda> over the stationary distributions of the recurrent
/// classes of R. Ties go to the class with the smallest member.
CostExtraction otc_cost(const Matrix& r, const Vector& c);
CostExtraction otc_cost(const TransitionCoupling& r, const CostMatrix& c);

void check_marginal_chains(const TransitionMatrix& p, const TransitionMatrix& q, const CostMatrix& c);

}  // namespace otc

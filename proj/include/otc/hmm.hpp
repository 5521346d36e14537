#pragma once

// Coupling of hidden Markov models with finite observation alphabets. An
// observation cost is lifted to hidden pairs by exact OT between emission
// rows, OTC runs on the hidden chains, and the joint model can be sampled.

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "otc/markov.hpp"
#include "otc/otc_entropic.hpp"
#include "otc/otc_exact.hpp"

namespace otc {

class Hmm {
 public:
  /// emissions is d x m; every row must be a probability vector.
  Hmm(TransitionMatrix transitions, Matrix emissions, double tol = 1e-9);

  const TransitionMatrix& transitions() const { return transitions_; }
  const Matrix& emissions() const { return emissions_; }
  std::size_t hidden_dim() const { return transitions_.dim(); }
  std::size_t alphabet_size() const { return static_cast<std::size_t>(emissions_.cols()); }

 private:
  TransitionMatrix transitions_;
  Matrix emissions_;
};

struct LiftedCost {
  CostMatrix cost;
  /// Optimal emission coupling for hidden pair (x, y) at index x * d + y.
  std::vector<Matrix> joint_emissions;
};

LiftedCost lift_cost(const Hmm& a, const Hmm& b, const Matrix& obs_cost);

struct CoupledHmm {
  TransitionCoupling coupling;
  std::vector<Matrix> joint_emissions;
  CostMatrix lifted_cost;
  Matrix obs_cost;
  /// Start law for sampling: the stationary distribution attaining the cost.
  Distribution start;
  double cost;
};

enum class HmmSolver { Exact, Entropic };

struct CoupledResult {
  CoupledHmm coupled;
  OtcSolution solution;
};

/// Exact requires irreducible hidden chains; entropic also needs them aperiodic.
CoupledResult couple_hmms(const Hmm& a, const Hmm& b, const Matrix& obs_cost, HmmSolver solver,
                          const EntropicParams& params = {});

struct SampleRow {
  std::size_t step;
  std::size_t hidden_x;
  std::size_t hidden_y;
  std::size_t obs_u;
  std::size_t obs_v;
  double pair_cost;
};

/// `steps` consecutive observations of the joint model, starting from
/// `start`. Hidden pairs move by the coupling; each observation pair is drawn
/// from the joint emission of the current hidden pair.
std::vector<SampleRow> sample_coupled(const CoupledHmm& model, std::size_t steps, std::uint64_t seed);

enum class NoteCostKind { Octave, Tiered };

NoteCostKind parse_note_cost_kind(std::string_view name);

/// Octave: 0 when |a - b| is a multiple of 12, else 1. Tiered, on |a - b| mod 12:
/// 0 for 0, 1 for 5 or 7, 2 for 4 or 9, 10 otherwise.
double note_cost(NoteCostKind kind, int a, int b);

/// obs_cost(u, v) = note_cost(kind, pitches_a[u], pitches_b[v]).
Matrix note_cost_matrix(NoteCostKind kind, const std::vector<int>& pitches_a, const std::vector<int>& pitches_b);

}  // namespace otc

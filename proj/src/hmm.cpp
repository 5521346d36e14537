#include "otc/hmm.hpp"

#include <cmath>
#include <cstdlib>
#include <span>
#include <string>

#include "otc/error.hpp"
#include "otc/exact_ot.hpp"
#include "otc/parallel.hpp"
#include "otc/rng.hpp"

namespace otc {

Hmm::Hmm(TransitionMatrix transitions, Matrix emissions, double tol)
    : transitions_(std::move(transitions)), emissions_(std::move(emissions)) {
  if (static_cast<std::size_t>(emissions_.rows()) != transitions_.dim())
    throw InvalidArgument("Hmm: emission rows must match hidden states");
  if (emissions_.cols() < 1) throw InvalidArgument("Hmm: observation alphabet is empty");
  for (Eigen::Index x = 0; x < emissions_.rows(); ++x) {
    const auto row = emissions_.row(x);
    if (!row.allFinite() || (row.array() < 0.0).any() || std::abs(row.sum() - 1.0) > tol)
      throw InvalidArgument("Hmm: emission row " + std::to_string(x) + " is not a distribution");
  }
}

LiftedCost lift_cost(const Hmm& a, const Hmm& b, const Matrix& obs_cost) {
  const std::size_t d = a.hidden_dim();
  if (b.hidden_dim() != d) throw InvalidArgument("lift_cost: hidden chains must have the same number of states");
  if (static_cast<std::size_t>(obs_cost.rows()) != a.alphabet_size() ||
      static_cast<std::size_t>(obs_cost.cols()) != b.alphabet_size())
    throw InvalidArgument("lift_cost: observation cost must be m_A x m_B");
  if (!obs_cost.allFinite() || (obs_cost.array() < 0.0).any())
    throw InvalidArgument("lift_cost: observation cost must be nonnegative");

  const PairIndexer idx{d};
  std::vector<Matrix> joint(d * d);
  Matrix lifted(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  parallel_for(d * d, [&](std::size_t s) {
    const auto [x, y] = idx.pair(s);
    OtSolution sol = solve_exact_ot(a.emissions().row(static_cast<Eigen::Index>(x)).transpose(),
                                    b.emissions().row(static_cast<Eigen::Index>(y)).transpose(), obs_cost);
    lifted(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = std::max(0.0, sol.value);
    joint[s] = std::move(sol.coupling);
  });
  return {CostMatrix(std::move(lifted)), std::move(joint)};
}

CoupledResult couple_hmms(const Hmm& a, const Hmm& b, const Matrix& obs_cost, HmmSolver solver,
                          const EntropicParams& params) {
  for (const auto* model : {&a, &b}) {
    const char* name = model == &a ? "A" : "B";
    if (!is_irreducible(model->transitions()))
      throw PreconditionError(std::string("couple_hmms: hidden chain of ") + name + " is not irreducible");
    if (solver == HmmSolver::Entropic && !is_aperiodic(model->transitions()))
      throw PreconditionError(std::string("couple_hmms: hidden chain of ") + name + " is not aperiodic");
  }
  LiftedCost lifted = lift_cost(a, b, obs_cost);
  OtcSolution solution = solver == HmmSolver::Exact
                             ? exact_otc(a.transitions(), b.transitions(), lifted.cost)
                             : entropic_otc(a.transitions(), b.transitions(), lifted.cost, params);
  CoupledHmm coupled{solution.coupling, std::move(lifted.joint_emissions), std::move(lifted.cost), obs_cost,
                     solution.stationary, solution.cost};
  return {std::move(coupled), std::move(solution)};
}

std::vector<SampleRow> sample_coupled(const CoupledHmm& model, std::size_t steps, std::uint64_t seed) {
  if (steps < 1) throw InvalidArgument("sample_coupled: steps must be at least 1");
  const std::size_t d = model.coupling.marginal_dim();
  const PairIndexer idx{d};
  const Matrix& r = model.coupling.matrix();
  Rng rng(seed);

  std::vector<SampleRow> rows;
  rows.reserve(steps);
  const Vector& start = model.start.weights();
  std::size_t s = rng.index(std::span<const double>(start.data(), static_cast<std::size_t>(start.size())));
  for (std::size_t t = 0; t < steps; ++t) {
    const Matrix& theta = model.joint_emissions[s];
    const std::size_t cell = rng.index(std::span<const double>(theta.data(), static_cast<std::size_t>(theta.size())));
    const auto cols = static_cast<std::size_t>(theta.cols());
    const std::size_t u = cell / cols, v = cell % cols;
    const auto [x, y] = idx.pair(s);
    rows.push_back({t, x, y, u, v, model.obs_cost(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v))});
    s = rng.index(std::span<const double>(r.data() + s * r.cols(), static_cast<std::size_t>(r.cols())));
  }
  return rows;
}

NoteCostKind parse_note_cost_kind(std::string_view name) {
  if (name == "octave") return NoteCostKind::Octave;
  if (name == "tiered") return NoteCostKind::Tiered;
  throw InvalidArgument("unknown note cost kind '" + std::string(name) + "' (expected octave or tiered)");
}

double note_cost(NoteCostKind kind, int a, int b) {
  const int interval = std::abs(a - b) % 12;
  if (interval == 0) return 0.0;
  if (kind == NoteCostKind::Octave) return 1.0;
  if (interval == 5 || interval == 7) return 1.0;
  if (interval == 4 || interval == 9) return 2.0;
  return 10.0;
}

Matrix note_cost_matrix(NoteCostKind kind, const std::vector<int>& pitches_a, const std::vector<int>& pitches_b) {
  Matrix out(static_cast<Eigen::Index>(pitches_a.size()), static_cast<Eigen::Index>(pitches_b.size()));
  for (std::size_t u = 0; u < pitches_a.size(); ++u)
    for (std::size_t v = 0; v < pitches_b.size(); ++v)
      out(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) = note_cost(kind, pitches_a[u], pitches_b[v]);
  return out;
}

}  // namespace otc

#include <doctest.h>

#include "otc/error.hpp"
#include "otc/exact_ot.hpp"
#include "otc/rng.hpp"
#include "support.hpp"

using namespace otc;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

double feasibility_gap(const Matrix& x, const Vector& r, const Vector& c) {
  return std::max((x.rowwise().sum() - r).cwiseAbs().maxCoeff(),
                  (x.colwise().sum().transpose() - c).cwiseAbs().maxCoeff());
}

Eigen::Index positives(const Matrix& x) { return (x.array() > 0.0).count(); }

}  // namespace

TEST_CASE("two by two hand example") {
  Matrix cost(2, 2);
  cost << 0, 1, 1, 0;
  const OtSolution s = solve_exact_ot(vec({0.3, 0.7}), vec({0.6, 0.4}), cost);
  CHECK(s.value == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(s.coupling(0, 0) == doctest::Approx(0.3));
  CHECK(s.coupling(1, 0) == doctest::Approx(0.3));
  CHECK(s.coupling(1, 1) == doctest::Approx(0.4));
  CHECK(s.coupling(0, 1) == 0.0);
}

TEST_CASE("point masses force the product") {
  Rng rng(1);
  const Matrix cost = test::random_cost(3, 3, rng);
  const OtSolution s = solve_exact_ot(vec({0, 1, 0}), vec({0.2, 0.3, 0.5}), cost);
  CHECK(s.coupling.row(1).sum() == doctest::Approx(1.0));
  CHECK(s.coupling(1, 2) == doctest::Approx(0.5));
  CHECK(s.coupling.row(0).sum() == 0.0);
}

TEST_CASE("matches the dense LP oracle on random instances") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng.bits() % 6, n = 1 + rng.bits() % 6;
    const Vector r = test::random_distribution(m, rng, 0.2);
    const Vector c = test::random_distribution(n, rng, 0.2);
    Matrix cost = test::random_cost(m, n, rng);
    if (trial % 3 == 0) cost = (cost * 3.0).array().floor();  // many ties
    if (trial % 5 == 0) cost.array() -= 0.5;                  // signed
    const OtSolution s = solve_exact_ot(r, c, cost);
    const double oracle = test::lp_ot(r, c, cost);
    CHECK(s.value == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(feasibility_gap(s.coupling, r, c) < 1e-12);
    CHECK((s.coupling.array() >= 0.0).all());
    CHECK(positives(s.coupling) <= static_cast<Eigen::Index>(m + n - 1));
    CHECK(s.value == doctest::Approx((s.coupling.array() * cost.array()).sum()).epsilon(1e-12));
  }
}

TEST_CASE("zero-mass rows and columns stay empty") {
  Rng rng(4);
  const Vector r = vec({0.5, 0.0, 0.5});
  const Vector c = vec({0.0, 0.25, 0.75});
  const OtSolution s = solve_exact_ot(r, c, test::random_cost(3, 3, rng));
  CHECK(s.coupling.row(1).sum() == 0.0);
  CHECK(s.coupling.col(0).sum() == 0.0);
}

TEST_CASE("deterministic output") {
  Rng rng(8);
  const Vector r = test::random_distribution(7, rng);
  const Vector c = test::random_distribution(7, rng);
  const Matrix cost = (test::random_cost(7, 7, rng) * 2.0).array().floor();
  const OtSolution a = solve_exact_ot(r, c, cost);
  const OtSolution b = solve_exact_ot(r, c, cost);
  CHECK(a.coupling == b.coupling);
}

TEST_CASE("input validation") {
  Matrix cost = Matrix::Zero(2, 2);
  CHECK_THROWS_AS(solve_exact_ot(vec({0.5, 0.6}), vec({0.5, 0.5}), cost), InvalidArgument);
  CHECK_THROWS_AS(solve_exact_ot(vec({0.5, 0.5}), vec({1.0}), cost), InvalidArgument);
  CHECK_THROWS_AS(solve_exact_ot(vec({1.5, -0.5}), vec({0.5, 0.5}), cost), InvalidArgument);
  cost(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(solve_exact_ot(vec({0.5, 0.5}), vec({0.5, 0.5}), cost), InvalidArgument);
}

TEST_CASE("lexicographic solve against a weighted LP oracle") {
  // Quarter marginals and small integer primary costs keep every suboptimal
  // vertex at least 1/4 worse on the primary, so a large weight separates
  // the two objectives exactly.
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 2 + rng.bits() % 3, n = 2 + rng.bits() % 3;
    auto quarters = [&](std::size_t k) {
      Vector v = Vector::Zero(static_cast<Eigen::Index>(k));
      for (int unit = 0; unit < 4; ++unit) v(static_cast<Eigen::Index>(rng.bits() % k)) += 0.25;
      return v;
    };
    const Vector r = quarters(m), c = quarters(n);
    const Matrix primary = (test::random_cost(m, n, rng) * 2.0).array().floor();
    const Matrix secondary = test::random_cost(m, n, rng).array() - 0.5;
    const LexOtSolution s = solve_exact_ot_lexicographic(r, c, primary, secondary, 1e-10);
    const double best_primary = test::lp_ot(r, c, primary);
    const double combined = test::lp_ot(r, c, (1000.0 * primary + secondary).eval());
    CHECK(s.primary_value == doctest::Approx(best_primary).epsilon(1e-12));
    CHECK(s.secondary_value == doctest::Approx(combined - 1000.0 * best_primary).epsilon(1e-9));
    CHECK(feasibility_gap(s.coupling, r, c) < 1e-12);
  }
}

TEST_CASE("lexicographic with a constant primary is plain OT on the secondary") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector r = test::random_distribution(4, rng), c = test::random_distribution(5, rng);
    const Matrix secondary = test::random_cost(4, 5, rng);
    const LexOtSolution s = solve_exact_ot_lexicographic(r, c, Matrix::Constant(4, 5, 2.0), secondary, 1e-10);
    CHECK(s.secondary_value == doctest::Approx(solve_exact_ot(r, c, secondary).value).epsilon(1e-12));
  }
}

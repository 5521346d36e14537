#include "otc/entropic_ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "otc/error.hpp"

namespace otc {

namespace {

// Above this value of xi * ||C||_inf the kernel exp(-xi C) risks underflow.
constexpr double kLogDomainThreshold = 500.0;

void check_scaling_inputs(Eigen::Index m, Eigen::Index n, const Vector& r, const Vector& c) {
  if (r.size() != m || c.size() != n) throw InvalidArgument("sinkhorn: marginal sizes do not match kernel");
  if ((r.array() <= 0.0).any() || (c.array() <= 0.0).any())
    throw InvalidArgument("sinkhorn: marginals must be strictly positive (subset first)");
}

double l1_gap(const Vector& scaled, const Vector& target) { return (scaled - target).cwiseAbs().sum(); }

double log_sum_exp(const double* values, std::size_t count, std::size_t stride) {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < count; ++k) hi = std::max(hi, values[k * stride]);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (std::size_t k = 0; k < count; ++k) acc += std::exp(values[k * stride] - hi);
  return hi + std::log(acc);
}

}  // namespace

SinkhornResult sinkhorn(const Matrix& kernel, const Vector& r, const Vector& c, double eps_prime,
                        std::size_t max_iters, const Vector& u0, const Vector& v0) {
  check_scaling_inputs(kernel.rows(), kernel.cols(), r, c);
  if (!(kernel.array() > 0.0).all()) throw InvalidArgument("sinkhorn: kernel must be strictly positive");
  if (u0.size() != kernel.rows() || v0.size() != kernel.cols())
    throw InvalidArgument("sinkhorn: initial scaling sizes do not match kernel");

  Vector a = u0.array().exp();
  Vector b = v0.array().exp();
  // Row sums of X are a .* (K b); column sums are b .* (K^T a). Each scaling
  // step invalidates exactly one of the two products.
  Vector kb = kernel * b;
  Vector kta = kernel.transpose() * a;
  auto gap = [&] {
    return l1_gap(a.cwiseProduct(kb), r) + l1_gap(b.cwiseProduct(kta), c);
  };

  double current = gap();
  std::size_t k = 0;
  while ((eps_prime <= 0.0 || current > eps_prime) && k < max_iters) {
    ++k;
    if (k % 2 == 1) {
      a = r.cwiseQuotient(kb);
      kta.noalias() = kernel.transpose() * a;
    } else {
      b = c.cwiseQuotient(kta);
      kb.noalias() = kernel * b;
    }
    current = gap();
  }
  if (!a.allFinite() || !b.allFinite()) throw NumericalError("sinkhorn: scaling overflow; use the log-domain path");

  SinkhornResult out;
  out.plan = a.asDiagonal() * kernel * b.asDiagonal();
  out.u = a.array().log();
  out.v = b.array().log();
  out.iterations = k;
  out.marginal_gap = current;
  out.converged = current <= eps_prime;
  return out;
}

SinkhornResult sinkhorn(const Matrix& kernel, const Vector& r, const Vector& c, double eps_prime,
                        std::size_t max_iters) {
  const double total = kernel.sum();
  if (!(total > 0.0) || !std::isfinite(total)) throw InvalidArgument("sinkhorn: kernel must be strictly positive");
  return sinkhorn(kernel, r, c, eps_prime, max_iters, Vector::Constant(kernel.rows(), -std::log(total)),
                  Vector::Zero(kernel.cols()));
}

SinkhornResult sinkhorn_log(const Matrix& cost, double xi, const Vector& r, const Vector& c, double eps_prime,
                            std::size_t max_iters) {
  check_scaling_inputs(cost.rows(), cost.cols(), r, c);
  const auto m = static_cast<std::size_t>(cost.rows());
  const auto n = static_cast<std::size_t>(cost.cols());
  const Matrix log_k = -xi * cost;
  const Vector log_r = r.array().log();
  const Vector log_c = c.array().log();

  Vector u = Vector::Constant(cost.rows(), -log_sum_exp(log_k.data(), m * n, 1));
  Vector v = Vector::Zero(cost.cols());
  Matrix work(cost.rows(), cost.cols());

  // lse_row(i) = log sum_j exp(logK_ij + v_j); lse_col(j) = log sum_i exp(logK_ij + u_i).
  Vector lse_row(cost.rows()), lse_col(cost.cols());
  auto refresh_rows = [&] {
    work = log_k.rowwise() + v.transpose();
    for (std::size_t i = 0; i < m; ++i) lse_row(static_cast<Eigen::Index>(i)) = log_sum_exp(work.data() + i * n, n, 1);
  };
  auto refresh_cols = [&] {
    work = log_k.colwise() + u;
    for (std::size_t j = 0; j < n; ++j) lse_col(static_cast<Eigen::Index>(j)) = log_sum_exp(work.data() + j, m, n);
  };
  auto gap = [&] {
    const Vector rows = (u + lse_row).array().exp();
    const Vector cols = (v + lse_col).array().exp();
    return l1_gap(rows, r) + l1_gap(cols, c);
  };

  refresh_rows();
  refresh_cols();
  double current = gap();
  std::size_t k = 0;
  while ((eps_prime <= 0.0 || current > eps_prime) && k < max_iters) {
    ++k;
    if (k % 2 == 1) {
      u = log_r - lse_row;
      refresh_cols();
    } else {
      v = log_c - lse_col;
      refresh_rows();
    }
    current = gap();
  }

  SinkhornResult out;
  out.plan = ((log_k.colwise() + u).rowwise() + v.transpose()).array().exp();
  out.u = u;
  out.v = v;
  out.iterations = k;
  out.marginal_gap = current;
  out.converged = current <= eps_prime;
  return out;
}

Matrix round_to_feasible(const Matrix& f, const Vector& r, const Vector& c) {
  if (f.rows() != r.size() || f.cols() != c.size()) throw InvalidArgument("round_to_feasible: dimension mismatch");
  if (!f.allFinite() || (f.array() < 0.0).any()) throw InvalidArgument("round_to_feasible: F must be nonnegative");
  if (f.sum() == 0.0 && (r.sum() > 0.0 || c.sum() > 0.0))
    throw InvalidArgument("round_to_feasible: all-zero F with nonzero marginals");

  auto shrink = [](double target, double current) {
    return current > 0.0 ? std::min(target / current, 1.0) : 1.0;
  };

  const Vector row_mass = f.rowwise().sum();
  Vector x(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) x(i) = shrink(r(i), row_mass(i));
  const Matrix f1 = x.asDiagonal() * f;

  const Vector col_mass = f1.colwise().sum().transpose();
  Vector y(c.size());
  for (Eigen::Index j = 0; j < c.size(); ++j) y(j) = shrink(c(j), col_mass(j));
  Matrix f2 = f1 * y.asDiagonal();

  // Both residuals are nonnegative in exact arithmetic; clip rounding noise.
  const Vector err_r = (r - f2.rowwise().sum()).cwiseMax(0.0);
  const Vector err_c = (c - f2.colwise().sum().transpose()).cwiseMax(0.0);
  const double norm = err_r.cwiseAbs().sum();
  if (norm > 0.0) f2.noalias() += err_r * err_c.transpose() / norm;
  return f2;
}

ApproxOtResult approx_ot(const Vector& r, const Vector& c, const Matrix& cost, const ApproxOtParams& params) {
  if (!(params.xi > 0.0)) throw InvalidArgument("approx_ot: xi must be positive");
  if (!(params.eps > 0.0 && params.eps < 1.0)) throw InvalidArgument("approx_ot: eps must lie in (0, 1)");
  if (cost.rows() != r.size() || cost.cols() != c.size()) throw InvalidArgument("approx_ot: dimension mismatch");
  if (!cost.allFinite() || (cost.array() < 0.0).any()) throw InvalidArgument("approx_ot: cost must be nonnegative");
  if ((r.array() < 0.0).any() || (c.array() < 0.0).any() || std::abs(r.sum() - 1.0) > 1e-9 ||
      std::abs(c.sum() - 1.0) > 1e-9)
    throw InvalidArgument("approx_ot: marginals must be probability vectors");

  std::vector<Eigen::Index> rows, cols;
  for (Eigen::Index i = 0; i < r.size(); ++i)
    if (r(i) > 0.0) rows.push_back(i);
  for (Eigen::Index j = 0; j < c.size(); ++j)
    if (c(j) > 0.0) cols.push_back(j);
  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto n = static_cast<Eigen::Index>(cols.size());

  Vector rs(m), cs(n);
  Matrix sub(m, n);
  for (Eigen::Index a = 0; a < m; ++a) rs(a) = r(rows[static_cast<std::size_t>(a)]);
  for (Eigen::Index b = 0; b < n; ++b) cs(b) = c(cols[static_cast<std::size_t>(b)]);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < n; ++b) sub(a, b) = cost(rows[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(b)]);

  // Accuracy schedule. J takes the larger of the ApproxOT setting and the
  // bound's own constant xi ||C||_inf - log b, so the eps guarantee holds for
  // any xi, not only xi = 4 log n / eps.
  const double c_inf = sub.size() > 0 ? sub.cwiseAbs().maxCoeff() : 0.0;
  const double b_min = std::min(rs.minCoeff(), cs.minCoeff());
  const double big_n = static_cast<double>(std::max(m, n));
  const double j_schedule = 4.0 * std::log(big_n) * c_inf / params.eps - std::log(b_min);
  const double j_bound = params.xi * c_inf - std::log(b_min);
  const double j = std::max(j_schedule, j_bound);
  double eps_prime = j > 0.0 ? params.eps * params.eps / (8.0 * j) : params.eps * params.eps / 8.0;
  if (std::max(m, n) == 2) eps_prime *= std::log(2.0);

  const double run_eps = params.max_sinkhorn_iters ? 0.0 : eps_prime;
  const std::size_t run_iters = params.max_sinkhorn_iters ? *params.max_sinkhorn_iters : params.iteration_cap;

  SinkhornResult scaled = params.xi * c_inf > kLogDomainThreshold
                              ? sinkhorn_log(sub, params.xi, rs, cs, run_eps, run_iters)
                              : sinkhorn((-params.xi * sub).array().exp().matrix(), rs, cs, run_eps, run_iters);
  const Matrix rounded = round_to_feasible(scaled.plan, rs, cs);

  ApproxOtResult out;
  out.coupling = Matrix::Zero(r.size(), c.size());
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      out.coupling(rows[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(b)]) = rounded(a, b);
  out.sinkhorn_iterations = scaled.iterations;
  out.eps_prime = eps_prime;
  out.converged = scaled.marginal_gap <= eps_prime;
  return out;
}

}  // namespace otc

#include "otc/bench.hpp"

#include <chrono>
#include <cmath>
#include <exception>

#include "otc/error.hpp"
#include "otc/io.hpp"
#include "otc/otc_entropic.hpp"
#include "otc/otc_exact.hpp"
#include "otc/rng.hpp"

namespace otc {

namespace {

Matrix softmax_rows(Rng& rng, std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = std::exp(0.1 * rng.normal());
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

template <class F>
double timed(F&& f) {
  const auto start = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

Instance gen_instance(std::size_t d, std::uint64_t seed) {
  if (d < 2) throw InvalidArgument("gen_instance: d must be at least 2");
  Rng rng(seed);
  Matrix p = softmax_rows(rng, d);
  Matrix q = softmax_rows(rng, d);
  const auto n = static_cast<Eigen::Index>(d);
  Matrix c(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) c(i, j) = std::abs(rng.normal());
  c /= c.maxCoeff();
  return {TransitionMatrix(std::move(p)), TransitionMatrix(std::move(q)), CostMatrix(std::move(c))};
}

void BenchConfig::validate() const {
  if (dims.empty() || xi.empty()) throw InvalidArgument("bench: dims and xi lists must be nonempty");
  if (seeds < 1) throw InvalidArgument("bench: need at least one seed");
  if (xi.size() != sinkhorn_iters.size()) throw InvalidArgument("bench: xi and iteration lists must pair up");
  for (std::size_t d : dims)
    if (d < 2) throw InvalidArgument("bench: every d must be at least 2");
  for (double x : xi)
    if (!(x > 0.0)) throw InvalidArgument("bench: xi must be positive");
  for (std::size_t k : sinkhorn_iters)
    if (k < 1) throw InvalidArgument("bench: Sinkhorn iteration counts must be positive");
}

std::string bench_csv(const std::vector<BenchRecord>& records, bool include_runtime) {
  std::string out = "d,seed,algorithm,xi,";
  if (include_runtime) out += "runtime_seconds,";
  out += "cost,abs_error_vs_exact,iterations,error\n";
  for (const BenchRecord& r : records) {
    out += std::to_string(r.d) + ',' + std::to_string(r.seed) + ',' + r.algorithm + ',' + opt(r.xi) + ',';
    if (include_runtime) out += format_double(r.runtime_seconds) + ',';
    // Error text is free-form; keep the CSV one field wide.
    std::string err = r.error;
    for (char& ch : err)
      if (ch == ',' || ch == '\n') ch = ';';
    out += opt(r.cost) + ',' + opt(r.abs_error_vs_exact) + ',' + std::to_string(r.iterations) + ',' + err + '\n';
  }
  return out;
}

std::vector<BenchRecord> run_bench(const BenchConfig& cfg, const std::function<void(const BenchRecord&)>& progress) {
  cfg.validate();
  std::vector<BenchRecord> records;
  auto emit = [&](BenchRecord r) {
    if (progress) progress(r);
    records.push_back(std::move(r));
  };

  for (std::size_t d : cfg.dims) {
    for (std::uint64_t seed = 1; seed <= cfg.seeds; ++seed) {
      const Instance inst = gen_instance(d, seed);

      BenchRecord exact{d, seed, "exact", std::nullopt, 0.0, std::nullopt, std::nullopt, 0, {}};
      exact.runtime_seconds = timed([&] {
        try {
          const OtcSolution s = exact_otc(inst.p, inst.q, inst.c);
          exact.cost = s.cost;
          exact.iterations = s.iterations;
        } catch (const std::exception& ex) {
          exact.error = ex.what();
        }
      });
      const std::optional<double> reference = exact.cost;
      emit(std::move(exact));

      for (std::size_t k = 0; k < cfg.xi.size(); ++k) {
        EntropicParams params;
        params.xi = cfg.xi[k];
        params.sinkhorn_iters = cfg.sinkhorn_iters[k];
        params.adaptive = true;
        params.tol = cfg.tol;
        params.L_max = cfg.L_max;
        params.T_max = cfg.T_max;

        BenchRecord ent{d, seed, "entropic", cfg.xi[k], 0.0, std::nullopt, std::nullopt, 0, {}};
        ent.runtime_seconds = timed([&] {
          try {
            const OtcSolution s = entropic_otc(inst.p, inst.q, inst.c, params);
            ent.cost = s.cost;
            ent.iterations = s.iterations;
          } catch (const std::exception& ex) {
            ent.error = ex.what();
          }
        });
        if (ent.cost && reference) ent.abs_error_vs_exact = std::abs(*ent.cost - *reference);
        emit(std::move(ent));
      }
    }
  }
  if (!cfg.out.empty()) write_text_atomic(cfg.out, bench_csv(records));
  return records;
}

}  // namespace otc

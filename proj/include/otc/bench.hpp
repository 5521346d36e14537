#pragma once

// Random instance generator and the exact-vs-entropic benchmark sweep.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "otc/markov.hpp"

namespace otc {

struct Instance {
  TransitionMatrix p;
  TransitionMatrix q;
  CostMatrix c;
};

/// Standard normals are drawn in the order P, Q, c (row-major). Rows of P
/// and Q are softmax(0.1 z); c = |z| / max |z|, so max c = 1 exactly.
Instance gen_instance(std::size_t d, std::uint64_t seed);

struct BenchConfig {
  std::vector<std::size_t> dims{10, 20, 30};
  std::size_t seeds = 5;  ///< seeds 1..seeds for every d
  std::vector<double> xi{75.0, 100.0, 200.0};
  std::vector<std::size_t> sinkhorn_iters{50, 100, 200};
  double tol = 1e-12;
  std::size_t L_max = 100;
  std::size_t T_max = 1000;
  std::string out = "bench.csv";

  void validate() const;
};

struct BenchRecord {
  std::size_t d;
  std::uint64_t seed;
  std::string algorithm;  ///< "exact" or "entropic"
  std::optional<double> xi;
  double runtime_seconds;
  std::optional<double> cost;
  std::optional<double> abs_error_vs_exact;
  std::size_t iterations;
  std::string error;  ///< empty on success
};

/// CSV header and rows; `include_runtime = false` drops the timing column so
/// two runs can be compared byte for byte.
std::string bench_csv(const std::vector<BenchRecord>& records, bool include_runtime = true);

/// One exact run and one entropic run per xi for every (d, seed). Failures
/// are recorded in the error column. Writes cfg.out atomically when nonempty.
std::vector<BenchRecord> run_bench(const BenchConfig& cfg,
                                   const std::function<void(const BenchRecord&)>& progress = {});

}  // namespace otc

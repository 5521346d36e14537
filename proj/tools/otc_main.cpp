// otc: command-line front end. Results go to --out files only; progress and
// errors go to stderr. Exit status: 0 ok, 1 usage, 2 solver or input failure.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "otc/bench.hpp"
#include "otc/error.hpp"
#include "otc/hmm.hpp"
#include "otc/io.hpp"
#include "otc/markov.hpp"
#include "otc/otc_entropic.hpp"
#include "otc/otc_exact.hpp"

namespace {

using namespace otc;

struct ChainFiles {
  std::string p, q, cost, out;
};

struct EntropicFlags {
  double xi = 100.0;
  std::size_t sinkhorn_iters = 0;
  double eps = 0.1;
  std::size_t L = 100, T = 1000;
  bool adaptive = false;
  double tol = 1e-12;
  std::size_t lmax = 100, tmax = 1000;
  std::size_t max_iters = 200;

  EntropicParams params() const {
    EntropicParams e;
    e.xi = xi;
    if (sinkhorn_iters > 0) e.sinkhorn_iters = sinkhorn_iters;
    e.eps = eps;
    e.L = L;
    e.T = T;
    e.adaptive = adaptive;
    e.tol = tol;
    e.L_max = lmax;
    e.T_max = tmax;
    e.max_iterations = max_iters;
    return e;
  }
};

void add_chain_options(CLI::App* cmd, ChainFiles& f) {
  cmd->add_option("--p", f.p, "P as CSV (rows are next-state distributions)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--q", f.q, "Q as CSV")->required()->check(CLI::ExistingFile);
  cmd->add_option("--cost", f.cost, "d x d cost as CSV")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "result JSON")->required();
}

void add_entropic_options(CLI::App* cmd, EntropicFlags& e) {
  cmd->add_option("--xi", e.xi, "entropic penalty")->capture_default_str();
  cmd->add_option("--sinkhorn-iters", e.sinkhorn_iters, "fixed Sinkhorn scalings per row (0: stop on accuracy)")
      ->capture_default_str();
  cmd->add_option("--eps", e.eps, "per-row ApproxOT accuracy when no fixed count is given")->capture_default_str();
  cmd->add_option("--L", e.L, "gain horizon")->capture_default_str();
  cmd->add_option("--T", e.T, "bias horizon")->capture_default_str();
  cmd->add_flag("--adaptive", e.adaptive, "choose L and T by consecutive-difference tolerance");
  cmd->add_option("--tol", e.tol, "adaptive tolerance")->capture_default_str();
  cmd->add_option("--lmax", e.lmax, "adaptive cap on L")->capture_default_str();
  cmd->add_option("--tmax", e.tmax, "adaptive cap on T")->capture_default_str();
  cmd->add_option("--max-iters", e.max_iters, "outer iteration cap")->capture_default_str();
}

struct Inputs {
  TransitionMatrix p, q;
  CostMatrix c;
};

Inputs load_chains(const ChainFiles& f) {
  return {TransitionMatrix::normalized(read_matrix_csv(f.p)), TransitionMatrix::normalized(read_matrix_csv(f.q)),
          CostMatrix(read_matrix_csv(f.cost))};
}

void report(const char* what, const OtcSolution& s, const std::string& out) {
  write_json(out, solution_to_json(s));
  std::fprintf(stderr, "%s: cost %s after %zu iteration(s), wrote %s\n", what, format_double(s.cost).c_str(),
               s.iterations, out.c_str());
}

std::vector<std::size_t> to_sizes(const std::vector<std::string>& items) {
  std::vector<std::size_t> out;
  for (const auto& s : items) out.push_back(std::stoul(s));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal transition couplings of Markov chains"};
  app.require_subcommand(1);

  ChainFiles exact_files, entropic_files, one_step_files;
  EntropicFlags entropic_flags, hmm_flags;

  auto* exact = app.add_subcommand("exact", "exact OTC by policy iteration");
  add_chain_options(exact, exact_files);

  auto* entropic = app.add_subcommand("entropic", "approximate OTC with Sinkhorn improvement");
  add_chain_options(entropic, entropic_files);
  add_entropic_options(entropic, entropic_flags);

  auto* one_step = app.add_subcommand("one-step", "greedy coupling minimizing next-step cost");
  add_chain_options(one_step, one_step_files);

  std::string seq_path, estimate_out;
  std::size_t estimate_d = 0;
  auto* estimate = app.add_subcommand("estimate", "transition matrix from an observed path");
  estimate->add_option("--seq", seq_path, "state sequence")->required()->check(CLI::ExistingFile);
  estimate->add_option("--d", estimate_d, "number of states")->required();
  estimate->add_option("--out", estimate_out, "CSV output")->required();

  std::string hmm_a, hmm_b, obs_cost_path, hmm_out, solver_name = "exact";
  auto* hmm = app.add_subcommand("hmm-couple", "couple two hidden Markov models");
  hmm->add_option("--a", hmm_a, "first HMM as JSON")->required()->check(CLI::ExistingFile);
  hmm->add_option("--b", hmm_b, "second HMM as JSON")->required()->check(CLI::ExistingFile);
  hmm->add_option("--obs-cost", obs_cost_path, "m_A x m_B observation cost CSV")->required()->check(CLI::ExistingFile);
  hmm->add_option("--solver", solver_name, "exact or entropic")
      ->check(CLI::IsMember({"exact", "entropic"}))
      ->capture_default_str();
  hmm->add_option("--out", hmm_out, "coupled model JSON")->required();
  add_entropic_options(hmm, hmm_flags);

  std::string coupled_path, sample_out;
  std::size_t steps = 1000;
  std::uint64_t sample_seed = 0;
  auto* sample = app.add_subcommand("sample", "draw paired observations from a coupled HMM");
  sample->add_option("--coupled", coupled_path, "output of hmm-couple")->required()->check(CLI::ExistingFile);
  sample->add_option("--steps", steps, "number of observation pairs")->capture_default_str();
  sample->add_option("--seed", sample_seed, "random seed")->capture_default_str();
  sample->add_option("--out", sample_out, "CSV output")->required();

  std::size_t gen_d = 10;
  std::uint64_t gen_seed = 1;
  std::string gen_dir;
  auto* generate = app.add_subcommand("generate", "write a random benchmark instance as P.csv, Q.csv, C.csv");
  generate->add_option("--d", gen_d, "number of states")->capture_default_str();
  generate->add_option("--seed", gen_seed, "random seed")->capture_default_str();
  generate->add_option("--out-dir", gen_dir, "output directory")->required();

  BenchConfig bench_cfg;
  std::vector<std::string> dims_s{"10", "20", "30"}, iters_s{"50", "100", "200"};
  std::vector<double> xi_list{75, 100, 200};
  bool allow_large = false;
  auto* bench = app.add_subcommand("bench", "exact vs entropic sweep over random instances");
  bench->add_option("--dims", dims_s, "state counts")->delimiter(',')->capture_default_str();
  bench->add_option("--seeds", bench_cfg.seeds, "seeds per d")->capture_default_str();
  bench->add_option("--xi", xi_list, "entropic penalties")->delimiter(',')->capture_default_str();
  bench->add_option("--iters", iters_s, "Sinkhorn scalings, one per xi")->delimiter(',')->capture_default_str();
  bench->add_option("--tol", bench_cfg.tol, "adaptive evaluation tolerance")->capture_default_str();
  bench->add_option("--lmax", bench_cfg.L_max, "cap on L")->capture_default_str();
  bench->add_option("--tmax", bench_cfg.T_max, "cap on T")->capture_default_str();
  bench->add_option("--out", bench_cfg.out, "CSV output")->required();
  bench->add_flag("--allow-large", allow_large, "permit d > 40 (exact runs need O(d^4) memory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*exact) {
      const Inputs in = load_chains(exact_files);
      report("exact", exact_otc(in.p, in.q, in.c), exact_files.out);
    } else if (*entropic) {
      const Inputs in = load_chains(entropic_files);
      report("entropic", entropic_otc(in.p, in.q, in.c, entropic_flags.params()), entropic_files.out);
    } else if (*one_step) {
      const Inputs in = load_chains(one_step_files);
      report("one-step", one_step_otc(in.p, in.q, in.c), one_step_files.out);
    } else if (*estimate) {
      const auto seq = read_sequence(seq_path);
      const Estimate est = estimate_transition_matrix(seq, estimate_d);
      write_matrix_csv(estimate_out, est.matrix.matrix());
      if (!est.unvisited_rows.empty())
        std::fprintf(stderr, "estimate: %zu state(s) never left; their rows are uniform\n", est.unvisited_rows.size());
    } else if (*hmm) {
      const Hmm a = hmm_from_json(read_json(hmm_a));
      const Hmm b = hmm_from_json(read_json(hmm_b));
      const HmmSolver solver = solver_name == "exact" ? HmmSolver::Exact : HmmSolver::Entropic;
      const CoupledResult res = couple_hmms(a, b, read_matrix_csv(obs_cost_path), solver, hmm_flags.params());
      write_json(hmm_out, coupled_to_json(res.coupled));
      std::fprintf(stderr, "hmm-couple: cost %s, wrote %s\n", format_double(res.coupled.cost).c_str(), hmm_out.c_str());
    } else if (*sample) {
      const CoupledHmm model = coupled_from_json(read_json(coupled_path));
      write_text_atomic(sample_out, samples_to_csv(sample_coupled(model, steps, sample_seed)));
    } else if (*generate) {
      const Instance inst = gen_instance(gen_d, gen_seed);
      std::filesystem::create_directories(gen_dir);
      const std::filesystem::path dir(gen_dir);
      write_matrix_csv(dir / "P.csv", inst.p.matrix());
      write_matrix_csv(dir / "Q.csv", inst.q.matrix());
      write_matrix_csv(dir / "C.csv", inst.c.matrix());
    } else if (*bench) {
      bench_cfg.dims = to_sizes(dims_s);
      bench_cfg.xi = xi_list;
      bench_cfg.sinkhorn_iters = to_sizes(iters_s);
      for (std::size_t d : bench_cfg.dims)
        if (d > 40 && !allow_large) throw InvalidArgument("bench: d > 40 needs --allow-large");
      run_bench(bench_cfg, [](const BenchRecord& r) {
        std::fprintf(stderr, "bench: d=%zu seed=%llu %s%s %.3fs %s\n", r.d, static_cast<unsigned long long>(r.seed),
                     r.algorithm.c_str(), r.xi ? (" xi=" + format_double(*r.xi)).c_str() : "", r.runtime_seconds,
                     r.error.empty() ? "" : r.error.c_str());
      });
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "otc: %s: %s\n", e.kind(), e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "otc: invalid number in list: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "otc: %s\n", e.what());
    return 2;
  }
  return 0;
}

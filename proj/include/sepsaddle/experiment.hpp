#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sepsaddle/losses.hpp"
#include "sepsaddle/solver.hpp"

namespace sepsaddle {

/// One experiment sweep: every (solver, lambda, seed) triple gets a run
/// and a CSV; every (solver, lambda) pair additionally gets a CSV of
/// seed-averaged curves.
struct ExperimentConfig {
  std::string data;  // file path or "synthetic:n=..,d=.."
  LossKind loss = LossKind::quadratic;
  std::vector<double> lambdas;
  std::vector<SolverVariant> solvers;
  int m = 1;
  int passes = 10;
  int seeds = 1;
  std::uint64_t seed_base = 0;
  double stride = 1.0;  // passes between trace rows
  std::string out_dir;
  bool add_bias = false;
  int dim_override = 0;  // pin the feature dimension of file input
  int newton_iters = 5;
  bool wall_timing = false;  // real elapsed_ms; off keeps CSVs reproducible
  int workers = 0;           // 0 = auto (hardware, capped by SEPSADDLE_THREADS)

  void validate() const;  // throws invalid_argument on bad fields
};

/// CSV rows use the fixed schema
///   pass,objective,suboptimality,elapsed_ms,seed,solver,lambda
/// with one row per trace record, ordered by pass. Averaged files carry
/// seed = -1 and hold per-pass arithmetic means over the seeds.
std::string trace_to_csv(const std::vector<TraceRecord>& trace,
                         const std::string& solver, double lambda,
                         bool wall_timing, bool averaged = false);

/// Runs the sweep. Returns 0 on full success; any failed run yields a
/// nonzero return, keeps the successful outputs, and writes
/// failures.txt into out_dir. Runs execute on a worker pool; files are
/// written atomically (temp + rename).
int run_experiment(const ExperimentConfig& config);

struct VerifyOptions {
  int trials = 100;          // step-matrix suite size
  std::uint64_t seed = 1;
  double theta_scale = 1.0;  // hidden knob: < 1 must make the suite fail
  bool diagnostic = true;    // print the mini-batch potential diagnostic
};

/// Runs the step-matrix suite and the contraction suite, prints a summary
/// table, and returns 0 iff both report zero violations.
int run_verify(const VerifyOptions& options);

/// Worker cap: min(requested or hardware, SEPSADDLE_THREADS if set).
int resolve_workers(int requested);

}  // namespace sepsaddle

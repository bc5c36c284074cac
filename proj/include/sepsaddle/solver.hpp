#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sepsaddle/block_matrix.hpp"
#include "sepsaddle/losses.hpp"

namespace sepsaddle {

enum class SolverVariant { adaspdc, spdc, pdcp };

const char* solver_name(SolverVariant v);
SolverVariant solver_from_name(const std::string& name);

struct SolverConfig {
  SolverVariant variant = SolverVariant::adaspdc;
  int m = 1;                        // blocks picked per iteration; in [1, n]
  int max_passes = 10;              // epochs over the data; >= 0
  std::uint64_t seed = 0;           // sampling RNG seed
  int newton_iters = 5;             // inner iterations for the logistic prox
  int r_recompute_interval = 1000;  // iterations between exact r refreshes
  double trace_stride = 1.0;        // passes between trace records; <=0 none
};

/// Step sizes for one iteration. sigma is aligned with `selected`; tau and
/// theta are shared by the primal side. For the batch variant `selected`
/// covers every block and theta is exactly 1.
struct StepSchedule {
  std::vector<int> selected;   // sampled block indices, ascending
  std::vector<double> sigma;   // per selected block
  double tau = 0.0;
  double theta = 0.0;
  double r_max = 0.0;          // largest block norm among selected
  int m = 0;
  int n = 0;
};

/// sigma_i = (1 / (2 R_i)) sqrt(n lambda / (m gamma)).
double compute_sigma(double r_i, int n, int m, double lambda, double gamma);

/// tau = (1 / (2 R_max)) sqrt(m gamma / (n lambda)).
double compute_tau(double r_max, int n, int m, double lambda, double gamma);

/// theta = 1 - 1 / (n/m + R_max sqrt((n/m) / (lambda gamma))).
double compute_theta(double r_max, int n, int m, double lambda, double gamma);

/// Uniform random m-subset of {0,...,n-1}, without replacement, returned
/// sorted ascending. Partial Fisher-Yates, so each index has inclusion
/// probability exactly m/n.
std::vector<int> sample_blocks(int n, int m, std::mt19937_64& rng);

/// Iterates plus the running aggregate r = (1/n) A y kept incrementally.
struct SolverState {
  std::vector<double> x;
  std::vector<double> x_prev;
  std::vector<double> x_bar;
  std::vector<double> y;  // one scalar per sample
  std::vector<double> r;
  std::int64_t iteration = 0;
  double passes = 0.0;  // effective passes: block updates / n

  static SolverState zeros(int dim, int n);
};

struct TraceRecord {
  double pass = 0.0;
  double objective = 0.0;
  double suboptimality = 0.0;  // NaN when no reference was supplied
  double elapsed_ms = 0.0;
  std::uint64_t seed = 0;
};

struct SolveResult {
  SolverState state;
  std::vector<TraceRecord> trace;
  std::int64_t prox_failures = 0;      // flagged logistic prox results
  std::optional<std::string> error;    // set if the run aborted; trace is partial
};

class Solver {
 public:
  /// Requires every block of A to be a single column (one dual scalar per
  /// sample) and at least max(1, m) blocks with nonzero norm.
  Solver(const BlockMatrix& A, const SaddleProblem& problem,
         SolverConfig config);

  /// One iteration in place. Returns the schedule actually used so callers
  /// can observe the adaptive quantities. Throws on NaN/Inf with a
  /// diagnostic naming the iteration and sampled set.
  StepSchedule step(SolverState& state);

  /// Run from the zero state until effective passes >= max_passes,
  /// recording a trace every trace_stride passes and at the end. A
  /// reference objective, when given, fills the suboptimality fields.
  /// Iteration failures land in SolveResult::error with the partial trace.
  SolveResult run(std::optional<double> reference_objective = std::nullopt);

  const SolverConfig& config() const { return config_; }
  double global_norm_max() const { return global_r_max_; }

  /// Exact r = (1/n) A y, used for periodic refreshes and tests.
  std::vector<double> exact_r(std::span<const double> y) const;

 private:
  StepSchedule step_stochastic(SolverState& state, bool adaptive);
  StepSchedule step_batch(SolverState& state);
  void check_finite(const SolverState& state,
                    const StepSchedule& sched) const;

  const BlockMatrix& A_;
  const SaddleProblem& problem_;
  SolverConfig config_;
  std::mt19937_64 rng_;
  std::vector<int> pool_;      // blocks with R_i > 0, eligible for sampling
  double global_r_max_ = 0.0;  // max_i R_i, the non-adaptive constant
  double batch_sigma_ = 0.0;   // batch variant: sigma with tau*sigma = 1/(2|K|^2)
  double batch_tau_ = 0.0;
  std::int64_t prox_failures_ = 0;
};

}  // namespace sepsaddle

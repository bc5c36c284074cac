#include "sepsaddle/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "sepsaddle/analysis.hpp"
#include "sepsaddle/data.hpp"

namespace fs = std::filesystem;

namespace sepsaddle {

void ExperimentConfig::validate() const {
  if (data.empty()) throw std::invalid_argument("experiment: no data source");
  if (solvers.empty()) throw std::invalid_argument("experiment: no solvers");
  if (lambdas.empty()) throw std::invalid_argument("experiment: no lambdas");
  for (double l : lambdas)
    if (l <= 0.0)
      throw std::invalid_argument("experiment: lambdas must be > 0");
  if (seeds < 1) throw std::invalid_argument("experiment: seeds must be >= 1");
  if (m < 1) throw std::invalid_argument("experiment: m must be >= 1");
  if (passes < 0)
    throw std::invalid_argument("experiment: passes must be >= 0");
  // One shared stride keeps every seed's trace pass-aligned, which the
  // averaging step depends on.
  if (stride <= 0.0)
    throw std::invalid_argument("experiment: stride must be > 0");
  if (out_dir.empty())
    throw std::invalid_argument("experiment: no output directory");
  if (newton_iters < 1)
    throw std::invalid_argument("experiment: newton_iters must be >= 1");
}

int resolve_workers(int requested) {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  int workers = requested > 0 ? requested : hw;
  if (const char* env = std::getenv("SEPSADDLE_THREADS")) {
    int cap = 0;
    std::string_view sv(env);
    auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), cap);
    if (ec != std::errc() || ptr != sv.data() + sv.size() || cap < 1)
      throw std::invalid_argument(
          fmt::format("SEPSADDLE_THREADS='{}' is not a positive integer", sv));
    workers = std::min(workers, cap);
  }
  return std::max(1, workers);
}

std::string trace_to_csv(const std::vector<TraceRecord>& trace,
                         const std::string& solver, double lambda,
                         bool wall_timing, bool averaged) {
  std::string out = "pass,objective,suboptimality,elapsed_ms,seed,solver,lambda\n";
  for (const TraceRecord& rec : trace) {
    const double subopt =
        std::isnan(rec.suboptimality) ? rec.suboptimality
                                      : std::max(rec.suboptimality, 0.0);
    const double elapsed = wall_timing ? rec.elapsed_ms : 0.0;
    if (averaged)
      out += fmt::format("{},{},{},{},-1,{},{}\n", rec.pass, rec.objective,
                         subopt, elapsed, solver, lambda);
    else
      out += fmt::format("{},{},{},{},{},{},{}\n", rec.pass, rec.objective,
                         subopt, elapsed, rec.seed, solver, lambda);
  }
  return out;
}

namespace {

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", tmp.string()));
    out << content;
    if (!out.flush())
      throw std::runtime_error(fmt::format("write failed for {}", tmp.string()));
  }
  fs::rename(tmp, path);
}

struct Job {
  std::size_t solver_idx;
  std::size_t lambda_idx;
  int seed_idx;
};

struct JobOutcome {
  std::vector<TraceRecord> trace;
  std::string error;  // empty on success
};

// Runs the adaptive solver ten times longer than the experiment and keeps
// the lowest objective seen; losses without a closed-form optimum get
// their suboptimality measured against this.
double approximate_reference(const BlockMatrix& A, const SaddleProblem& problem,
                             const ExperimentConfig& cfg) {
  SolverConfig scfg;
  scfg.variant = SolverVariant::adaspdc;
  scfg.m = cfg.m;
  scfg.max_passes = std::max(1, cfg.passes) * 10;
  scfg.seed = cfg.seed_base;
  scfg.newton_iters = std::max(cfg.newton_iters, 20);
  scfg.trace_stride = std::max(1, cfg.passes);
  Solver solver(A, problem, scfg);
  SolveResult res = solver.run();
  if (res.error)
    throw std::runtime_error(
        fmt::format("reference run failed: {}", *res.error));
  double best = res.trace.front().objective;
  for (const TraceRecord& rec : res.trace)
    best = std::min(best, rec.objective);
  return best;
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);

  Dataset base = load_dataset(cfg.data, cfg.seed_base, cfg.dim_override);
  const Dataset data = cfg.add_bias ? add_bias(base) : std::move(base);

  // Problems and reference optima are per-lambda and shared read-only by
  // every worker.
  std::vector<SaddleProblem> problems;
  std::vector<double> references;
  problems.reserve(cfg.lambdas.size());
  for (double lambda : cfg.lambdas) {
    problems.emplace_back(cfg.loss, data.labels, lambda);
    if (cfg.loss == LossKind::quadratic) {
      RidgeSolution star = ridge_saddle_solution(data.A, data.labels, lambda);
      references.push_back(problems.back().primal_objective(data.A, star.x));
    } else {
      references.push_back(
          approximate_reference(data.A, problems.back(), cfg));
    }
  }

  std::vector<Job> jobs;
  for (std::size_t si = 0; si < cfg.solvers.size(); ++si)
    for (std::size_t li = 0; li < cfg.lambdas.size(); ++li)
      for (int ki = 0; ki < cfg.seeds; ++ki) jobs.push_back({si, li, ki});

  std::vector<JobOutcome> outcomes(jobs.size());
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t j = cursor.fetch_add(1);
      if (j >= jobs.size()) return;
      const Job& job = jobs[j];
      JobOutcome& out = outcomes[j];
      try {
        SolverConfig scfg;
        scfg.variant = cfg.solvers[job.solver_idx];
        scfg.m = cfg.m;
        scfg.max_passes = cfg.passes;
        scfg.seed = cfg.seed_base + static_cast<std::uint64_t>(job.seed_idx);
        scfg.newton_iters = cfg.newton_iters;
        scfg.trace_stride = cfg.stride;
        Solver solver(data.A, problems[job.lambda_idx], scfg);
        SolveResult res = solver.run(references[job.lambda_idx]);
        out.trace = std::move(res.trace);
        if (res.error) out.error = *res.error;

        const std::string name = fmt::format(
            "{}_lambda{}_seed{}.csv", solver_name(scfg.variant),
            cfg.lambdas[job.lambda_idx], scfg.seed);
        write_atomic(fs::path(cfg.out_dir) / name,
                     trace_to_csv(out.trace, solver_name(scfg.variant),
                                  cfg.lambdas[job.lambda_idx],
                                  cfg.wall_timing));
      } catch (const std::exception& ex) {
        out.error = ex.what();
      }
    }
  };

  const int nworkers =
      std::min<std::size_t>(resolve_workers(cfg.workers), jobs.size());
  std::vector<std::thread> threads;
  threads.reserve(nworkers);
  for (int w = 0; w < nworkers; ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  // Seed-averaged curve per (solver, lambda); skipped when any of its
  // seeds failed so partial data never masquerades as an average.
  std::vector<std::string> failures;
  for (std::size_t si = 0; si < cfg.solvers.size(); ++si) {
    for (std::size_t li = 0; li < cfg.lambdas.size(); ++li) {
      std::vector<const JobOutcome*> group;
      bool ok = true;
      for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (jobs[j].solver_idx != si || jobs[j].lambda_idx != li) continue;
        if (!outcomes[j].error.empty()) {
          failures.push_back(fmt::format(
              "{} lambda={} seed={}: {}", solver_name(cfg.solvers[si]),
              cfg.lambdas[li], cfg.seed_base + jobs[j].seed_idx,
              outcomes[j].error));
          ok = false;
        }
        group.push_back(&outcomes[j]);
      }
      if (!ok) continue;
      const std::size_t rows = group.front()->trace.size();
      for (const JobOutcome* o : group)
        if (o->trace.size() != rows) {
          failures.push_back(fmt::format(
              "{} lambda={}: traces are not pass-aligned across seeds",
              solver_name(cfg.solvers[si]), cfg.lambdas[li]));
          ok = false;
          break;
        }
      if (!ok) continue;

      std::vector<TraceRecord> avg(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        TraceRecord rec;
        rec.pass = group.front()->trace[r].pass;
        for (const JobOutcome* o : group) {
          rec.objective += o->trace[r].objective;
          rec.suboptimality += std::max(o->trace[r].suboptimality, 0.0);
          rec.elapsed_ms += o->trace[r].elapsed_ms;
        }
        rec.objective /= group.size();
        rec.suboptimality /= group.size();
        rec.elapsed_ms /= group.size();
        avg[r] = rec;
      }
      const std::string name =
          fmt::format("{}_lambda{}_avg.csv", solver_name(cfg.solvers[si]),
                      cfg.lambdas[li]);
      write_atomic(fs::path(cfg.out_dir) / name,
                   trace_to_csv(avg, solver_name(cfg.solvers[si]),
                                cfg.lambdas[li], cfg.wall_timing,
                                /*averaged=*/true));
    }
  }

  if (!failures.empty()) {
    std::string manifest;
    for (const std::string& f : failures) manifest += f + '\n';
    write_atomic(fs::path(cfg.out_dir) / "failures.txt", manifest);
    fmt::print(stderr, "{} run(s) failed; see {}/failures.txt\n",
               failures.size(), cfg.out_dir);
    return 1;
  }
  return 0;
}

int run_verify(const VerifyOptions& options) {
  int total_violations = 0;

  StepMatrixReport sm = check_step_matrix(options.trials, options.seed);
  fmt::print("step-matrix PSD   trials={:<5} violations={:<3} worst margin={:.3e}\n",
             sm.trials, sm.violations, sm.worst_margin);
  if (sm.violations > 0 && !sm.offender.empty())
    fmt::print("first failing matrix:\n{}\n", sm.offender);
  total_violations += sm.violations;

  const double lambdas[] = {1e-1, 1e-2, 1e-3};
  for (double lambda : lambdas) {
    int violations = 0;
    double worst = 0.0;
    for (int inst = 0; inst < 5; ++inst) {
      Dataset data = make_synthetic(50, 50, options.seed + inst);
      ContractionReport rep = check_contraction(
          data.A, data.labels, lambda, 200, options.theta_scale);
      violations += rep.violations;
      worst = std::max(worst, rep.max_violation);
    }
    fmt::print(
        "contraction       lambda={:<7} instances=5 iters=200 violations={:<3}"
        " max excess={:.3e}\n",
        lambda, violations, worst);
    total_violations += violations;
  }

  if (options.diagnostic) {
    Dataset data = make_synthetic(20, 20, options.seed + 17);
    PotentialDiagnostic diag = potential_monte_carlo(
        data.A, data.labels, 1e-2, /*m=*/5, /*iterations=*/100,
        /*seeds=*/10, options.seed);
    fmt::print(
        "mini-batch potential diagnostic (informational, not pass/fail):\n"
        "  mean potential over 10 seeds: start={:.4e} end={:.4e}\n"
        "  mean per-iteration factor={:.6f}; final tau realized={:.6f}\n"
        "  (with m < n the contraction holds in expectation only, and the\n"
        "   final bound's tau varies with the last sampled set)\n",
        diag.mean_delta.front(), diag.mean_delta.back(), diag.mean_theta,
        diag.tau_last);
  }

  fmt::print("verify: {}\n", total_violations == 0 ? "PASS" : "FAIL");
  return total_violations == 0 ? 0 : 1;
}

}  // namespace sepsaddle

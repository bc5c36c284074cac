#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "sepsaddle/experiment.hpp"
#include "sepsaddle/losses.hpp"
#include "sepsaddle/solver.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Separable saddle-point solver toolkit"};
  app.require_subcommand(1);
  app.set_config("--config")->group("");

  // --- solve ---
  auto* solve = app.add_subcommand("solve", "Run a solver comparison sweep");
  std::string data, loss = "ridge", out, timing = "deterministic";
  std::vector<double> lambdas{1e-3};
  std::vector<std::string> solvers{"adaspdc"};
  int m = 1, passes = 10, seeds = 1, dim = 0, newton_iters = 5, workers = 0;
  std::uint64_t seed_base = 0;
  double stride = 1.0;
  bool add_bias = false;

  solve->add_option("--data", data,
                    "dataset path or synthetic:n=..,d=..")
      ->required();
  solve->add_option("--loss", loss, "ridge | smooth-hinge | logistic")
      ->check(CLI::IsMember({"ridge", "smooth-hinge", "logistic"}));
  solve->add_option("--lambda", lambdas, "regularization value(s)")
      ->delimiter(',');
  solve->add_option("--solver", solvers, "adaspdc | spdc | pdcp (list)")
      ->delimiter(',')
      ->check(CLI::IsMember({"adaspdc", "spdc", "pdcp"}));
  solve->add_option("--m", m, "blocks per iteration");
  solve->add_option("--passes", passes, "effective passes per run");
  solve->add_option("--seeds", seeds, "number of seeds");
  solve->add_option("--seed-base", seed_base, "first seed value");
  solve->add_option("--stride", stride, "passes between trace rows");
  solve->add_option("--out", out, "output directory")->required();
  solve->add_option("--dim", dim,
                    "pin the feature dimension of LIBSVM input");
  solve->add_flag("--add-bias", add_bias, "append a constant-1 feature");
  solve->add_option("--newton-iters", newton_iters,
                    "inner iterations of the logistic dual prox");
  solve->add_option("--timing", timing,
                    "'wall' writes real elapsed_ms; 'deterministic' writes 0 "
                    "so reruns are byte-identical")
      ->check(CLI::IsMember({"deterministic", "wall"}));
  solve->add_option("--workers", workers, "parallel runs (0 = auto)");

  // --- verify ---
  auto* verify = app.add_subcommand(
      "verify", "Machine-check the step-size certificate and contraction");
  sepsaddle::VerifyOptions vopt;
  bool corrupt_theta = false, no_diagnostic = false;
  verify->add_option("--trials", vopt.trials, "step-matrix trials");
  verify->add_option("--seed", vopt.seed, "suite RNG seed");
  verify->add_flag("--corrupt-theta", corrupt_theta)->group("");  // test hook
  verify->add_flag("--no-diagnostic", no_diagnostic,
                   "skip the mini-batch potential diagnostic");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) {
      sepsaddle::ExperimentConfig cfg;
      cfg.data = data;
      cfg.loss = sepsaddle::loss_from_name(loss);
      cfg.lambdas = lambdas;
      for (const std::string& s : solvers)
        cfg.solvers.push_back(sepsaddle::solver_from_name(s));
      cfg.m = m;
      cfg.passes = passes;
      cfg.seeds = seeds;
      cfg.seed_base = seed_base;
      cfg.stride = stride;
      cfg.out_dir = out;
      cfg.add_bias = add_bias;
      cfg.newton_iters = newton_iters;
      cfg.wall_timing = timing == "wall";
      cfg.workers = workers;
      cfg.dim_override = dim;
      return sepsaddle::run_experiment(cfg);
    }
    if (corrupt_theta) vopt.theta_scale = 0.5;
    vopt.diagnostic = !no_diagnostic;
    return sepsaddle::run_verify(vopt);
  } catch (const std::exception& ex) {
    fmt::print(stderr, "error: {}\n", ex.what());
    return 2;
  }
}

#include "sepsaddle/analysis.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "sepsaddle/solver.hpp"

namespace sepsaddle {

PotentialWeights PotentialWeights::compute(std::span<const double> sigmas,
                                           int n, int m, double gamma) {
  if (m < 1 || n < m || gamma <= 0.0)
    throw std::invalid_argument("PotentialWeights: bad parameters");
  if (static_cast<int>(sigmas.size()) != n)
    throw std::invalid_argument("PotentialWeights: need one sigma per block");
  PotentialWeights w;
  w.nu.reserve(n);
  w.nu_prime.reserve(n);
  w.mu.reserve(n);
  w.mu_prime.reserve(n);
  for (double s : sigmas) {
    if (s <= 0.0)
      throw std::invalid_argument("PotentialWeights: sigma must be > 0");
    w.nu.push_back((0.25 / s + gamma) / m);
    w.nu_prime.push_back((0.5 / s + gamma) / m);
    w.mu.push_back(0.5 / (m * s) + (n - m) * gamma / (static_cast<double>(m) * n));
    w.mu_prime.push_back(0.5 / (m * s) + gamma / m);
  }
  for (int i = 0; i < n; ++i) {
    // mu' - mu = gamma/n and nu' - nu = 1/(4 sigma m): both strictly
    // positive for every legal input, so a violation means a bug.
    if (!(w.nu[i] > 0.0 && w.nu[i] < w.nu_prime[i] && w.mu[i] > 0.0 &&
          w.mu[i] < w.mu_prime[i]))
      throw std::logic_error("PotentialWeights: ordering violated");
  }
  return w;
}

Eigen::MatrixXd step_matrix(const BlockMatrix& A,
                            std::span<const int> selected,
                            std::span<const double> sigmas, double tau,
                            int m) {
  if (selected.size() != sigmas.size())
    throw std::invalid_argument("step_matrix: selected/sigmas mismatch");
  if (tau <= 0.0 || m < 1)
    throw std::invalid_argument("step_matrix: bad tau or m");
  const int d = A.rows();
  int q = 0;
  for (int i : selected) q += A.block_width(i);
  const int dim = d + q;
  if (dim > 500)
    throw std::invalid_argument(fmt::format(
        "step_matrix: dimension {} too large to densify (desk-scale "
        "checks only, limit 500)",
        dim));

  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(dim, dim);
  P.topLeftCorner(d, d).diagonal().setConstant(m / (2.0 * tau));

  int col = d;
  std::vector<double> dense(d);
  for (std::size_t k = 0; k < selected.size(); ++k) {
    const int i = selected[k];
    const int w = A.block_width(i);
    if (sigmas[k] <= 0.0)
      throw std::invalid_argument("step_matrix: sigma must be > 0");
    std::vector<double> basis(w, 0.0);
    for (int c = 0; c < w; ++c) {
      basis[c] = 1.0;
      A.block_matvec(i, basis, dense);
      basis[c] = 0.0;
      for (int r = 0; r < d; ++r) {
        P(r, col + c) = -dense[r];
        P(col + c, r) = -dense[r];
      }
      P(col + c, col + c) = 1.0 / (2.0 * sigmas[k]);
    }
    col += w;
  }
  return P;
}

double min_eigenvalue(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("min_eigenvalue: eigensolver failed");
  return solver.eigenvalues().minCoeff();
}

namespace {

std::string serialize_matrix(const Eigen::MatrixXd& mat) {
  std::string out;
  for (Eigen::Index r = 0; r < mat.rows(); ++r) {
    for (Eigen::Index c = 0; c < mat.cols(); ++c)
      out += fmt::format("{}{}", c ? " " : "", mat(r, c));
    out += '\n';
  }
  return out;
}

BlockMatrix random_block_matrix(std::mt19937_64& rng, int max_d, int max_blocks,
                                int max_width) {
  std::uniform_int_distribution<int> d_pick(1, max_d);
  std::uniform_int_distribution<int> j_pick(1, max_blocks);
  std::uniform_int_distribution<int> w_pick(1, max_width);
  std::uniform_real_distribution<double> density(0.2, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const int d = d_pick(rng);
  const int J = j_pick(rng);
  std::vector<int> widths(J);
  for (int& w : widths) w = w_pick(rng);

  std::vector<BlockMatrix::Entry> entries;
  int col = 0;
  for (int j = 0; j < J; ++j) {
    const double p = density(rng);
    bool any = false;
    for (int c = col; c < col + widths[j]; ++c)
      for (int r = 0; r < d; ++r)
        if (unit(rng) < p) {
          entries.push_back({r, c, gauss(rng)});
          any = true;
        }
    if (!any)
      entries.push_back(
          {std::uniform_int_distribution<int>(0, d - 1)(rng), col, gauss(rng)});
    col += widths[j];
  }
  return BlockMatrix(d, std::move(widths), std::move(entries));
}

}  // namespace

StepMatrixReport check_step_matrix(int trials, std::uint64_t seed,
                                   double u_scale) {
  if (trials < 1)
    throw std::invalid_argument("check_step_matrix: trials must be >= 1");
  constexpr double kMargin = -1e-10;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> c_pick(0.1, 10.0);
  std::uniform_real_distribution<double> loglambda(-4.0, -1.0);
  std::uniform_int_distribution<int> gamma_pick(0, 1);

  StepMatrixReport report;
  report.trials = trials;
  report.worst_margin = std::numeric_limits<double>::infinity();

  auto run_case = [&](const BlockMatrix& A, std::span<const int> sel,
                      std::span<const double> sigmas, double tau, int m) {
    const double ev = min_eigenvalue(
        step_matrix(A, sel, sigmas, tau * u_scale, m));
    report.worst_margin = std::min(report.worst_margin, ev);
    if (ev <= kMargin) {
      ++report.violations;
      if (report.offender.empty())
        report.offender =
            serialize_matrix(step_matrix(A, sel, sigmas, tau * u_scale, m));
    }
  };

  for (int t = 0; t < trials; ++t) {
    const BlockMatrix A = random_block_matrix(rng, 20, 10, 3);
    const int J = A.num_blocks();
    std::vector<int> sel(J);
    std::iota(sel.begin(), sel.end(), 0);
    double r_max = 0.0;
    for (int j = 0; j < J; ++j)
      r_max = std::max(r_max, A.spectral_norm(j));

    // General rule: any c > 0 with per-block weight c/R_j and primal
    // weight c*J*R_max. In prox form: sigma_j = c/(2 R_j), tau =
    // 1/(2 c R_max).
    const double c = c_pick(rng);
    std::vector<double> sigmas(J);
    for (int j = 0; j < J; ++j) sigmas[j] = c / (2.0 * A.spectral_norm(j));
    run_case(A, sel, sigmas, 1.0 / (2.0 * c * r_max), J);

    // The solver's lambda/gamma configuration is this rule with
    // c = sqrt(n lambda / (m gamma)); exercise it directly.
    const double lambda = std::pow(10.0, loglambda(rng));
    const double gamma = gamma_pick(rng) ? 4.0 : 1.0;
    std::uniform_int_distribution<int> n_pick(J, 50);
    const int n = n_pick(rng);
    for (int j = 0; j < J; ++j)
      sigmas[j] = compute_sigma(A.spectral_norm(j), n, J, lambda, gamma);
    run_case(A, sel, sigmas, compute_tau(r_max, n, J, lambda, gamma), J);
  }
  return report;
}

double potential_value(const BlockMatrix& A, std::span<const double> x,
                       std::span<const double> x_prev,
                       std::span<const double> y,
                       std::span<const double> x_star,
                       std::span<const double> y_star, double tau,
                       double lambda, const PotentialWeights& weights) {
  const int d = A.rows();
  const int n = A.num_blocks();
  if (static_cast<int>(x.size()) != d || static_cast<int>(x_prev.size()) != d ||
      static_cast<int>(x_star.size()) != d)
    throw std::invalid_argument("potential_value: primal length mismatch");
  if (static_cast<int>(y.size()) != A.cols() ||
      static_cast<int>(y_star.size()) != A.cols())
    throw std::invalid_argument("potential_value: dual length mismatch");
  if (static_cast<int>(weights.mu_prime.size()) != n)
    throw std::invalid_argument("potential_value: weights length mismatch");
  if (tau <= 0.0) throw std::invalid_argument("potential_value: tau <= 0");

  double x_gap = 0.0, x_step = 0.0;
  for (int j = 0; j < d; ++j) {
    x_gap += (x[j] - x_star[j]) * (x[j] - x_star[j]);
    x_step += (x[j] - x_prev[j]) * (x[j] - x_prev[j]);
  }

  double y_gap = 0.0;
  for (int i = 0; i < n; ++i) {
    const int off = A.block_offset(i);
    double blk = 0.0;
    for (int c = 0; c < A.block_width(i); ++c)
      blk += (y[off + c] - y_star[off + c]) * (y[off + c] - y_star[off + c]);
    y_gap += weights.mu_prime[i] * blk;
  }

  // crossing term (1/n) <x - x_prev, A (y - y_star)>
  std::vector<double> ay(d, 0.0);
  std::vector<double> dy;
  for (int i = 0; i < n; ++i) {
    const int off = A.block_offset(i);
    const int w = A.block_width(i);
    dy.assign(w, 0.0);
    bool nonzero = false;
    for (int c = 0; c < w; ++c) {
      dy[c] = y[off + c] - y_star[off + c];
      nonzero = nonzero || dy[c] != 0.0;
    }
    if (nonzero) A.block_matvec_add(i, dy, 1.0, ay);
  }
  double crossing = 0.0;
  for (int j = 0; j < d; ++j) crossing += (x[j] - x_prev[j]) * ay[j];

  return (0.5 / tau + lambda) * x_gap + y_gap + 0.25 / tau * x_step +
         crossing / n;
}

RidgeSolution ridge_saddle_solution(const BlockMatrix& A,
                                    std::span<const double> b, double lambda) {
  const int d = A.rows();
  const int n = A.num_blocks();
  if (d > 2000)
    throw std::invalid_argument(
        "ridge_saddle_solution: dense solve capped at d <= 2000");
  if (static_cast<int>(b.size()) != n)
    throw std::invalid_argument("ridge_saddle_solution: labels != blocks");
  if (lambda <= 0.0)
    throw std::invalid_argument("ridge_saddle_solution: lambda must be > 0");
  for (int i = 0; i < n; ++i)
    if (A.block_width(i) != 1)
      throw std::invalid_argument(
          "ridge_saddle_solution: needs one column per sample");

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
  std::vector<double> col(d);
  const double one = 1.0;
  for (int i = 0; i < n; ++i) {
    A.block_matvec(i, std::span<const double>(&one, 1), col);
    Eigen::Map<const Eigen::VectorXd> a(col.data(), d);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(a, 1.0);
    rhs += b[i] * a;
  }
  gram.diagonal().array() += n * lambda;

  Eigen::LLT<Eigen::MatrixXd> llt(gram.selfadjointView<Eigen::Lower>());
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("ridge_saddle_solution: factorization failed");
  const Eigen::VectorXd x = llt.solve(rhs);

  RidgeSolution sol;
  sol.x.assign(x.data(), x.data() + d);
  sol.y.resize(n);
  for (int i = 0; i < n; ++i) sol.y[i] = A.column_dot(i, sol.x) - b[i];
  return sol;
}

double suboptimality(const SaddleProblem& problem, const BlockMatrix& A,
                     std::span<const double> x, double reference_objective) {
  if (!std::isfinite(reference_objective))
    throw std::invalid_argument("suboptimality: reference must be finite");
  return problem.primal_objective(A, x) - reference_objective;
}

namespace {

struct ContractionSetup {
  SaddleProblem problem;
  RidgeSolution star;
  PotentialWeights weights;
};

ContractionSetup contraction_setup(const BlockMatrix& A,
                                   std::span<const double> labels,
                                   double lambda, int m) {
  SaddleProblem problem(LossKind::quadratic,
                        std::vector<double>(labels.begin(), labels.end()),
                        lambda);
  RidgeSolution star = ridge_saddle_solution(A, labels, lambda);
  const int n = A.num_blocks();
  std::vector<double> sigmas(n);
  for (int i = 0; i < n; ++i)
    sigmas[i] =
        compute_sigma(A.spectral_norm(i), n, m, lambda, problem.gamma());
  PotentialWeights weights =
      PotentialWeights::compute(sigmas, n, m, problem.gamma());
  return {std::move(problem), std::move(star), std::move(weights)};
}

}  // namespace

ContractionReport check_contraction(const BlockMatrix& A,
                                    std::span<const double> labels,
                                    double lambda, int iterations,
                                    double theta_scale) {
  const int n = A.num_blocks();
  auto setup = contraction_setup(A, labels, lambda, n);

  SolverConfig config;
  config.variant = SolverVariant::adaspdc;
  config.m = n;  // deterministic regime: the factors are exact, not expected
  Solver solver(A, setup.problem, config);
  SolverState state = SolverState::zeros(A.rows(), n);

  ContractionReport report;
  report.delta.reserve(iterations + 1);
  report.theta.reserve(iterations);

  const double tau =
      compute_tau(solver.global_norm_max(), n, n, lambda, setup.problem.gamma());
  report.delta.push_back(potential_value(A, state.x, state.x, state.y,
                                         setup.star.x, setup.star.y, tau,
                                         lambda, setup.weights));
  for (int t = 0; t < iterations; ++t) {
    StepSchedule sched = solver.step(state);
    const double delta =
        potential_value(A, state.x, state.x_prev, state.y, setup.star.x,
                        setup.star.y, sched.tau, lambda, setup.weights);
    const double bound =
        theta_scale * sched.theta * report.delta.back() + 1e-10;
    if (delta > bound) {
      ++report.violations;
      report.max_violation =
          std::max(report.max_violation, delta - bound);
    }
    report.delta.push_back(delta);
    report.theta.push_back(sched.theta);
    report.tau_last = sched.tau;
  }
  return report;
}

PotentialDiagnostic potential_monte_carlo(const BlockMatrix& A,
                                          std::span<const double> labels,
                                          double lambda, int m,
                                          int iterations, int seeds,
                                          std::uint64_t seed_base) {
  if (seeds < 1)
    throw std::invalid_argument("potential_monte_carlo: seeds must be >= 1");
  const int n = A.num_blocks();
  auto setup = contraction_setup(A, labels, lambda, m);

  PotentialDiagnostic diag;
  diag.seeds = seeds;
  diag.mean_delta.assign(iterations + 1, 0.0);
  double theta_sum = 0.0;

  for (int s = 0; s < seeds; ++s) {
    SolverConfig config;
    config.variant = SolverVariant::adaspdc;
    config.m = m;
    config.seed = seed_base + s;
    Solver solver(A, setup.problem, config);
    SolverState state = SolverState::zeros(A.rows(), n);

    const double tau0 =
        compute_tau(solver.global_norm_max(), n, m, lambda,
                    setup.problem.gamma());
    diag.mean_delta[0] += potential_value(A, state.x, state.x, state.y,
                                          setup.star.x, setup.star.y, tau0,
                                          lambda, setup.weights);
    for (int t = 0; t < iterations; ++t) {
      StepSchedule sched = solver.step(state);
      diag.mean_delta[t + 1] +=
          potential_value(A, state.x, state.x_prev, state.y, setup.star.x,
                          setup.star.y, sched.tau, lambda, setup.weights);
      theta_sum += sched.theta;
      if (s == 0 && t == iterations - 1) diag.tau_last = sched.tau;
    }
  }
  for (double& v : diag.mean_delta) v /= seeds;
  diag.mean_theta = theta_sum / (static_cast<double>(seeds) * iterations);
  return diag;
}

}  // namespace sepsaddle

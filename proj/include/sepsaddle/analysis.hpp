#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sepsaddle/block_matrix.hpp"
#include "sepsaddle/losses.hpp"

namespace sepsaddle {

/// Per-block weights of the contraction potential, all functions of the
/// dual step sizes. Strict ordering nu < nu' and mu < mu' holds for every
/// valid input and is asserted on construction.
struct PotentialWeights {
  std::vector<double> nu;
  std::vector<double> nu_prime;
  std::vector<double> mu;
  std::vector<double> mu_prime;

  /// sigmas holds one entry per block (all n blocks, not a sample).
  static PotentialWeights compute(std::span<const double> sigmas, int n,
                                  int m, double gamma);
};

/// Assembles the symmetric step matrix
///   [ (m/(2 tau)) I_d   -A_S          ]
///   [ -A_S^T             diag(1/(2 sigma_i) I_{q_i}) ]
/// whose positive semidefiniteness certifies the step-size rule. selected
/// and sigmas are aligned. Dense; total dimension must stay <= 500.
Eigen::MatrixXd step_matrix(const BlockMatrix& A,
                            std::span<const int> selected,
                            std::span<const double> sigmas, double tau,
                            int m);

/// Smallest eigenvalue of a symmetric matrix (self-adjoint solver).
double min_eigenvalue(const Eigen::MatrixXd& sym);

struct StepMatrixReport {
  int trials = 0;
  int violations = 0;
  double worst_margin = 0.0;   // smallest min-eigenvalue seen
  std::string offender;        // serialized first failing matrix, if any
};

/// Randomized positive-semidefiniteness check of the step matrix: each
/// trial draws a random block matrix (d <= 20, <= 10 blocks of width <= 3)
/// and tests both the general rule (random c in [0.1, 10]: per-block
/// sigma_i = c/(2 R_i), m/(2 tau) = c * m * R_max) and the solver's
/// lambda/gamma configuration. Margin threshold is -1e-10. `u_scale`
/// inflates the primal prox weight's inverse (scales tau up) to prove the
/// check can fail; leave at 1 for the real check.
StepMatrixReport check_step_matrix(int trials, std::uint64_t seed,
                                   double u_scale = 1.0);

/// Potential
///   (1/(2 tau) + lambda)||x - x*||^2 + sum_i mu'_i (y_i - y*_i)^2
///   + (1/(4 tau))||x - x_prev||^2 + (1/n) <x - x_prev, A (y - y*)>.
/// At iteration 0 pass x_prev = x; the trailing terms then vanish, which
/// is the initial potential's definition.
double potential_value(const BlockMatrix& A, std::span<const double> x,
                       std::span<const double> x_prev,
                       std::span<const double> y,
                       std::span<const double> x_star,
                       std::span<const double> y_star, double tau,
                       double lambda, const PotentialWeights& weights);

struct ContractionReport {
  std::vector<double> delta;  // potential per iteration, delta[0] initial
  std::vector<double> theta;  // contraction factor used at each step
  int violations = 0;
  double max_violation = 0.0;
  double tau_last = 0.0;
};

/// Runs the adaptive solver in the full-batch regime (m = n, where the
/// per-iteration factors are deterministic) on a quadratic-loss instance
/// and checks delta[t+1] <= theta_scale * theta[t] * delta[t] + 1e-10.
/// theta_scale < 1 tightens the demanded contraction to prove the check
/// can fail; leave at 1 for the real check.
ContractionReport check_contraction(const BlockMatrix& A,
                                    std::span<const double> labels,
                                    double lambda, int iterations,
                                    double theta_scale = 1.0);

struct RidgeSolution {
  std::vector<double> x;
  std::vector<double> y;  // a_i^T x* - b_i, the dual optimum
};

/// Closed-form saddle point of the quadratic-loss problem:
/// x* = (A A^T + n lambda I)^{-1} A b via dense Cholesky. d <= 2000.
RidgeSolution ridge_saddle_solution(const BlockMatrix& A,
                                    std::span<const double> b, double lambda);

/// J(x) - reference. May be slightly negative when the reference is an
/// approximate optimum; reporting layers clamp at zero.
double suboptimality(const SaddleProblem& problem, const BlockMatrix& A,
                     std::span<const double> x, double reference_objective);

/// Mini-batch potential behaviour, Monte Carlo over seeds. In the
/// stochastic regime the contraction holds only in expectation, so this
/// is a diagnostic, not a pass/fail check: it reports the seed-averaged
/// potential path, the mean contraction factor, and the realized final
/// tau (which varies with the last sampled set).
struct PotentialDiagnostic {
  std::vector<double> mean_delta;
  double mean_theta = 0.0;
  double tau_last = 0.0;  // realized tau of the final iteration, first seed
  int seeds = 0;
};

PotentialDiagnostic potential_monte_carlo(const BlockMatrix& A,
                                          std::span<const double> labels,
                                          double lambda, int m,
                                          int iterations, int seeds,
                                          std::uint64_t seed_base);

}  // namespace sepsaddle

#pragma once

#include <span>
#include <vector>

#include "sepsaddle/block_matrix.hpp"

namespace sepsaddle {

enum class LossKind { quadratic, smooth_hinge, logistic };

const char* loss_name(LossKind kind);
LossKind loss_from_name(const std::string& name);  // "ridge" aliases quadratic

/// Dual strong-convexity constant gamma of phi*_i.
double loss_gamma(LossKind kind);

/// Primal per-sample loss phi_i(z) for label b.
double primal_loss(LossKind kind, double z, double b);

struct DualProxResult {
  double y = 0.0;
  bool converged = true;
  double grad = 0.0;  // subproblem gradient magnitude at y
};

/// Minimizer of phi*(y) - inner*y + (y - y_prev)^2 / (2 sigma) with
/// phi*(y) = y^2/2 + b*y. `displayed_sign` flips the label term to the
/// form printed in some references (+b instead of the stationarity -b).
double dual_prox_quadratic(double inner, double b, double y_prev, double sigma,
                           bool displayed_sign = false);

/// Quadratic prox followed by exact projection onto {y : b*y in [-1, 0]}.
double dual_prox_smooth_hinge(double inner, double b, double y_prev,
                              double sigma);

/// Safeguarded Newton solve of the logistic dual prox subproblem with
/// phi*(y) = -b*y*log(-b*y) + (1 + b*y)*log(1 + b*y) on b*y in [-1, 0].
/// Result stays strictly interior. If the gradient tolerance 1e-10 is not
/// met within newton_iters steps the result is flagged, never silent.
DualProxResult dual_prox_logistic(double inner, double b, double y_prev,
                                  double sigma, int newton_iters);

/// argmin_x (lambda/2)||x||^2 + <x, u> + ||x - x_prev||^2 / (2 tau),
/// i.e. (x_prev / tau - u) / (lambda + 1/tau). Other regularizers would
/// plug their own prox in place of this one; only L2 ships here.
void primal_prox_l2(std::span<const double> x_prev, std::span<const double> u,
                    double tau, double lambda, std::span<double> out);
std::vector<double> primal_prox_l2(std::span<const double> x_prev,
                                   std::span<const double> u, double tau,
                                   double lambda);

/// Loss family: kind, per-sample labels, and the conjugate's strong
/// convexity constant.
struct LossFamily {
  LossKind kind = LossKind::quadratic;
  std::vector<double> labels;

  double gamma() const { return loss_gamma(kind); }
};

/// g(x) = (lambda/2)||x||^2, lambda > 0.
struct Regularizer {
  double lambda = 0.0;
};

/// A separable saddle problem instance: loss family plus L2 regularizer.
/// Supplies the per-sample dual prox, the primal objective and the
/// strong-convexity constants the step-size rules need.
class SaddleProblem {
 public:
  SaddleProblem(LossKind kind, std::vector<double> labels, double lambda,
                bool quad_displayed_sign = false);

  LossKind kind() const { return loss_.kind; }
  double lambda() const { return reg_.lambda; }
  double gamma() const { return loss_.gamma(); }
  int num_samples() const { return static_cast<int>(loss_.labels.size()); }
  double label(int i) const { return loss_.labels[i]; }
  const std::vector<double>& labels() const { return loss_.labels; }
  bool quad_displayed_sign() const { return quad_displayed_sign_; }

  /// Dual proximal step for sample i.
  DualProxResult dual_prox(int i, double inner, double y_prev, double sigma,
                           int newton_iters) const;

  /// J(x) = (1/n) sum_i phi_i(a_i^T x) + (lambda/2)||x||^2.
  /// Requires every block of A to be a single column.
  double primal_objective(const BlockMatrix& A,
                          std::span<const double> x) const;

 private:
  LossFamily loss_;
  Regularizer reg_;
  bool quad_displayed_sign_ = false;
};

}  // namespace sepsaddle

#include "sepsaddle/losses.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace sepsaddle {

const char* loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::quadratic: return "ridge";
    case LossKind::smooth_hinge: return "smooth-hinge";
    case LossKind::logistic: return "logistic";
  }
  return "?";
}

LossKind loss_from_name(const std::string& name) {
  if (name == "ridge" || name == "quadratic") return LossKind::quadratic;
  if (name == "smooth-hinge" || name == "smooth_hinge")
    return LossKind::smooth_hinge;
  if (name == "logistic") return LossKind::logistic;
  throw std::invalid_argument(fmt::format("unknown loss '{}'", name));
}

double loss_gamma(LossKind kind) {
  return kind == LossKind::logistic ? 4.0 : 1.0;
}

double primal_loss(LossKind kind, double z, double b) {
  switch (kind) {
    case LossKind::quadratic: {
      const double d = z - b;
      return 0.5 * d * d;
    }
    case LossKind::smooth_hinge: {
      const double bz = b * z;
      if (bz >= 1.0) return 0.0;
      if (bz <= 0.0) return 0.5 - bz;
      return 0.5 * (1.0 - bz) * (1.0 - bz);
    }
    case LossKind::logistic: {
      const double t = -b * z;
      return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
    }
  }
  return 0.0;
}

double dual_prox_quadratic(double inner, double b, double y_prev, double sigma,
                           bool displayed_sign) {
  if (sigma <= 0.0)
    throw std::invalid_argument("dual_prox_quadratic: sigma must be > 0");
  const double bterm = displayed_sign ? b : -b;
  return (inner + bterm + y_prev / sigma) / (1.0 + 1.0 / sigma);
}

double dual_prox_smooth_hinge(double inner, double b, double y_prev,
                              double sigma) {
  if (b != 1.0 && b != -1.0)
    throw std::invalid_argument("dual_prox_smooth_hinge: label must be +-1");
  const double y = dual_prox_quadratic(inner, b, y_prev, sigma);
  // Exact projection onto {y : b*y in [-1, 0]}: the subproblem is a 1-D
  // strongly convex quadratic, so clamping its free minimizer is optimal.
  const double lo = b > 0.0 ? -1.0 : 0.0;
  const double hi = b > 0.0 ? 0.0 : 1.0;
  return std::min(std::max(y, lo), hi);
}

DualProxResult dual_prox_logistic(double inner, double b, double y_prev,
                                  double sigma, int newton_iters) {
  if (sigma <= 0.0)
    throw std::invalid_argument("dual_prox_logistic: sigma must be > 0");
  if (b != 1.0 && b != -1.0)
    throw std::invalid_argument("dual_prox_logistic: label must be +-1");
  const double a = b * y_prev;  // prox center in the substituted variable
  if (a < -1.0 || a > 0.0)
    throw std::invalid_argument(
        "dual_prox_logistic: previous dual value outside its domain");

  // Substitute u = -b*y, u in (0, 1). The subproblem gradient becomes
  //   g(u) = log(u/(1-u)) + b*inner + (u + b*y_prev)/sigma,
  // strictly increasing, so the root is unique and bracketable.
  constexpr double kEdge = 1e-12;
  constexpr double kTol = 1e-10;
  const double c = b * inner;
  auto g = [&](double u) {
    return std::log(u / (1.0 - u)) + c + (u + a) / sigma;
  };
  auto gprime = [&](double u) {
    return 1.0 / u + 1.0 / (1.0 - u) + 1.0 / sigma;
  };

  double lo = kEdge, hi = 1.0 - kEdge;
  const double glo = g(lo), ghi = g(hi);
  if (glo >= 0.0) return {-b * lo, std::abs(glo) < kTol, std::abs(glo)};
  if (ghi <= 0.0) return {-b * hi, std::abs(ghi) < kTol, std::abs(ghi)};

  double u = 0.5;  // interval midpoint; Newton is started cold every call
  double gu = 0.0;
  bool converged = false;
  for (int k = 0; k < newton_iters; ++k) {
    gu = g(u);
    if (std::abs(gu) < kTol) {
      converged = true;
      break;
    }
    if (gu < 0.0)
      lo = u;
    else
      hi = u;
    double next = u - gu / gprime(u);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    u = next;
  }
  if (!converged) {
    gu = g(u);
    converged = std::abs(gu) < kTol;
  }
  return {-b * u, converged, std::abs(gu)};
}

void primal_prox_l2(std::span<const double> x_prev, std::span<const double> u,
                    double tau, double lambda, std::span<double> out) {
  if (tau <= 0.0 || lambda <= 0.0)
    throw std::invalid_argument("primal_prox_l2: tau and lambda must be > 0");
  if (x_prev.size() != u.size() || out.size() != u.size())
    throw std::invalid_argument("primal_prox_l2: length mismatch");
  const double denom = lambda + 1.0 / tau;
  for (std::size_t j = 0; j < u.size(); ++j)
    out[j] = (x_prev[j] / tau - u[j]) / denom;
}

std::vector<double> primal_prox_l2(std::span<const double> x_prev,
                                   std::span<const double> u, double tau,
                                   double lambda) {
  std::vector<double> out(u.size());
  primal_prox_l2(x_prev, u, tau, lambda, out);
  return out;
}

SaddleProblem::SaddleProblem(LossKind kind, std::vector<double> labels,
                             double lambda, bool quad_displayed_sign)
    : loss_{kind, std::move(labels)},
      reg_{lambda},
      quad_displayed_sign_(quad_displayed_sign) {
  if (lambda <= 0.0)
    throw std::invalid_argument("SaddleProblem: lambda must be > 0");
  if (loss_.labels.empty())
    throw std::invalid_argument("SaddleProblem: no samples");
  if (kind != LossKind::quadratic) {
    for (double b : loss_.labels)
      if (b != 1.0 && b != -1.0)
        throw std::invalid_argument(
            fmt::format("SaddleProblem: classification label {} is not +-1, "
                        "refusing to coerce",
                        b));
  }
}

DualProxResult SaddleProblem::dual_prox(int i, double inner, double y_prev,
                                        double sigma, int newton_iters) const {
  const double b = loss_.labels.at(i);
  switch (loss_.kind) {
    case LossKind::quadratic:
      return {dual_prox_quadratic(inner, b, y_prev, sigma,
                                  quad_displayed_sign_),
              true, 0.0};
    case LossKind::smooth_hinge:
      return {dual_prox_smooth_hinge(inner, b, y_prev, sigma), true, 0.0};
    case LossKind::logistic:
      return dual_prox_logistic(inner, b, y_prev, sigma, newton_iters);
  }
  throw std::logic_error("unreachable");
}

double SaddleProblem::primal_objective(const BlockMatrix& A,
                                       std::span<const double> x) const {
  const int n = num_samples();
  if (A.num_blocks() != n)
    throw std::invalid_argument("primal_objective: blocks != samples");
  if (static_cast<int>(x.size()) != A.rows())
    throw std::invalid_argument("primal_objective: x length != rows");
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    acc += primal_loss(loss_.kind, A.column_dot(i, x), loss_.labels[i]);
  double sq = 0.0;
  for (double v : x) sq += v * v;
  return acc / n + 0.5 * reg_.lambda * sq;
}

}  // namespace sepsaddle

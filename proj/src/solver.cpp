#include "sepsaddle/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace sepsaddle {

const char* solver_name(SolverVariant v) {
  switch (v) {
    case SolverVariant::adaspdc: return "adaspdc";
    case SolverVariant::spdc: return "spdc";
    case SolverVariant::pdcp: return "pdcp";
  }
  return "?";
}

SolverVariant solver_from_name(const std::string& name) {
  if (name == "adaspdc") return SolverVariant::adaspdc;
  if (name == "spdc") return SolverVariant::spdc;
  if (name == "pdcp") return SolverVariant::pdcp;
  throw std::invalid_argument(fmt::format("unknown solver '{}'", name));
}

double compute_sigma(double r_i, int n, int m, double lambda, double gamma) {
  if (r_i <= 0.0)
    throw std::invalid_argument("compute_sigma: block norm must be > 0");
  if (m < 1 || n < m || lambda <= 0.0 || gamma <= 0.0)
    throw std::invalid_argument("compute_sigma: bad parameters");
  return 0.5 / r_i * std::sqrt(n * lambda / (m * gamma));
}

double compute_tau(double r_max, int n, int m, double lambda, double gamma) {
  if (r_max <= 0.0)
    throw std::invalid_argument("compute_tau: block norm must be > 0");
  if (m < 1 || n < m || lambda <= 0.0 || gamma <= 0.0)
    throw std::invalid_argument("compute_tau: bad parameters");
  return 0.5 / r_max * std::sqrt(m * gamma / (n * lambda));
}

double compute_theta(double r_max, int n, int m, double lambda, double gamma) {
  if (r_max <= 0.0)
    throw std::invalid_argument("compute_theta: block norm must be > 0");
  if (m < 1 || n < m || lambda <= 0.0 || gamma <= 0.0)
    throw std::invalid_argument("compute_theta: bad parameters");
  const double ratio = static_cast<double>(n) / m;
  return 1.0 - 1.0 / (ratio + r_max * std::sqrt(ratio / (lambda * gamma)));
}

std::vector<int> sample_blocks(int n, int m, std::mt19937_64& rng) {
  if (m < 1 || m > n)
    throw std::invalid_argument(
        fmt::format("sample_blocks: m={} outside [1, {}]", m, n));
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int k = 0; k < m; ++k) {
    std::uniform_int_distribution<int> pick(k, n - 1);
    std::swap(idx[k], idx[pick(rng)]);
  }
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

SolverState SolverState::zeros(int dim, int n) {
  SolverState s;
  s.x.assign(dim, 0.0);
  s.x_prev.assign(dim, 0.0);
  s.x_bar.assign(dim, 0.0);
  s.y.assign(n, 0.0);
  s.r.assign(dim, 0.0);
  return s;
}

Solver::Solver(const BlockMatrix& A, const SaddleProblem& problem,
               SolverConfig config)
    : A_(A), problem_(problem), config_(config), rng_(config.seed) {
  const int n = A_.num_blocks();
  if (problem_.num_samples() != n)
    throw std::invalid_argument("Solver: labels != blocks");
  for (int i = 0; i < n; ++i)
    if (A_.block_width(i) != 1)
      throw std::invalid_argument(
          "Solver: needs one column per sample (width-1 blocks)");
  if (config_.m < 1 || config_.m > n)
    throw std::invalid_argument(
        fmt::format("Solver: m={} outside [1, {}]", config_.m, n));
  if (config_.max_passes < 0)
    throw std::invalid_argument("Solver: max_passes must be >= 0");
  if (config_.r_recompute_interval < 1)
    throw std::invalid_argument("Solver: r_recompute_interval must be >= 1");
  if (config_.newton_iters < 1)
    throw std::invalid_argument("Solver: newton_iters must be >= 1");

  for (int i = 0; i < n; ++i) {
    const double r = A_.spectral_norm(i);
    global_r_max_ = std::max(global_r_max_, r);
    // Zero columns never enter the sampled set: their dual variable does
    // not couple to x, and the step-size rule divides by the block norm.
    if (r > 0.0) pool_.push_back(i);
  }
  if (config_.variant == SolverVariant::pdcp) {
    const double k_norm = A_.spectral_norm() / n;
    if (k_norm <= 0.0)
      throw std::invalid_argument("Solver: batch variant needs a nonzero A");
    // tau * sigma = 1/(2 |K|^2), split evenly.
    batch_tau_ = 1.0 / (std::sqrt(2.0) * k_norm);
    batch_sigma_ = batch_tau_;
  } else {
    if (static_cast<int>(pool_.size()) < config_.m)
      throw std::invalid_argument(
          fmt::format("Solver: only {} nonzero blocks but m={}", pool_.size(),
                      config_.m));
  }
}

std::vector<double> Solver::exact_r(std::span<const double> y) const {
  const int n = A_.num_blocks();
  std::vector<double> r(A_.rows(), 0.0);
  for (int i = 0; i < n; ++i)
    if (y[i] != 0.0) A_.add_scaled_column(i, y[i], r);
  for (double& v : r) v /= n;
  return r;
}

void Solver::check_finite(const SolverState& state,
                          const StepSchedule& sched) const {
  auto bad = [](std::span<const double> v) {
    for (double e : v)
      if (!std::isfinite(e)) return true;
    return false;
  };
  if (bad(state.x) || bad(state.x_bar) || bad(state.y) || bad(state.r)) {
    auto head = std::span<const int>(sched.selected)
                    .first(std::min<std::size_t>(sched.selected.size(), 8));
    throw std::runtime_error(fmt::format(
        "solver diverged: non-finite state at iteration {} (sampled blocks "
        "[{}]{})",
        state.iteration, fmt::join(head, ", "),
        sched.selected.size() > 8 ? ", ..." : ""));
  }
}

StepSchedule Solver::step(SolverState& state) {
  StepSchedule sched;
  switch (config_.variant) {
    case SolverVariant::adaspdc:
      sched = step_stochastic(state, true);
      break;
    case SolverVariant::spdc:
      sched = step_stochastic(state, false);
      break;
    case SolverVariant::pdcp:
      sched = step_batch(state);
      break;
  }
  if (state.iteration % config_.r_recompute_interval == 0) {
    state.r = exact_r(state.y);
  }
  check_finite(state, sched);
  return sched;
}

StepSchedule Solver::step_stochastic(SolverState& state, bool adaptive) {
  const int n = A_.num_blocks();
  const int m = config_.m;
  const int d = A_.rows();
  const double lambda = problem_.lambda();
  const double gamma = problem_.gamma();

  StepSchedule sched;
  sched.m = m;
  sched.n = n;
  sched.selected.reserve(m);
  for (int k : sample_blocks(static_cast<int>(pool_.size()), m, rng_))
    sched.selected.push_back(pool_[k]);

  double r_used_max = 0.0;  // drives tau and theta
  for (int i : sched.selected)
    r_used_max = std::max(r_used_max, A_.spectral_norm(i));
  if (!adaptive) r_used_max = global_r_max_;
  sched.r_max = r_used_max;
  sched.tau = compute_tau(r_used_max, n, m, lambda, gamma);
  sched.theta = compute_theta(r_used_max, n, m, lambda, gamma);
  if (!(sched.tau > 0.0) || !(sched.theta > 0.0 && sched.theta < 1.0))
    throw std::logic_error(
        fmt::format("step sizes out of range: tau={} theta={}", sched.tau,
                    sched.theta));

  // Dual step on the sampled blocks; the shared delta = sum_j a_j (y_j' -
  // y_j) feeds both the primal bracket (scaled 1/m) and the r update
  // (scaled 1/n).
  std::vector<double> delta(d, 0.0);
  sched.sigma.reserve(m);
  for (int i : sched.selected) {
    const double r_i = adaptive ? A_.spectral_norm(i) : global_r_max_;
    const double sigma = compute_sigma(r_i, n, m, lambda, gamma);
    if (std::abs(4.0 * sigma * sched.tau * r_i * r_used_max - 1.0) > 1e-9)
      throw std::logic_error("step-size product relation violated");
    sched.sigma.push_back(sigma);

    const double inner = A_.column_dot(i, state.x_bar);
    DualProxResult res =
        problem_.dual_prox(i, inner, state.y[i], sigma, config_.newton_iters);
    if (!res.converged) {
      res = problem_.dual_prox(i, inner, state.y[i], sigma,
                               4 * config_.newton_iters);
      if (!res.converged) ++prox_failures_;
    }
    if (res.y != state.y[i]) {
      A_.add_scaled_column(i, res.y - state.y[i], delta);
      state.y[i] = res.y;
    }
  }

  std::vector<double> u(d);
  for (int j = 0; j < d; ++j) u[j] = state.r[j] + delta[j] / m;
  std::swap(state.x_prev, state.x);  // x_prev <- x^t; x is overwritten next
  state.x.resize(d);
  primal_prox_l2(state.x_prev, u, sched.tau, lambda, state.x);
  for (int j = 0; j < d; ++j)
    state.x_bar[j] = state.x[j] + sched.theta * (state.x[j] - state.x_prev[j]);
  for (int j = 0; j < d; ++j) state.r[j] += delta[j] / n;

  ++state.iteration;
  state.passes = static_cast<double>(state.iteration * m) / n;
  return sched;
}

StepSchedule Solver::step_batch(SolverState& state) {
  const int n = A_.num_blocks();
  const int d = A_.rows();
  const double lambda = problem_.lambda();

  StepSchedule sched;
  sched.m = n;
  sched.n = n;
  sched.selected.resize(n);
  std::iota(sched.selected.begin(), sched.selected.end(), 0);
  sched.r_max = global_r_max_;
  sched.tau = batch_tau_;
  sched.theta = 1.0;

  // The dual objective carries a 1/n factor in this formulation, so the
  // per-sample prox weight is sigma/n.
  const double sigma_eff = batch_sigma_ / n;
  sched.sigma.assign(n, sigma_eff);

  std::vector<double> delta(d, 0.0);
  for (int i = 0; i < n; ++i) {
    const double inner = A_.column_dot(i, state.x_bar);
    DualProxResult res = problem_.dual_prox(i, inner, state.y[i], sigma_eff,
                                            config_.newton_iters);
    if (!res.converged) {
      res = problem_.dual_prox(i, inner, state.y[i], sigma_eff,
                               4 * config_.newton_iters);
      if (!res.converged) ++prox_failures_;
    }
    if (res.y != state.y[i]) {
      A_.add_scaled_column(i, res.y - state.y[i], delta);
      state.y[i] = res.y;
    }
  }
  for (int j = 0; j < d; ++j) state.r[j] += delta[j] / n;

  // Primal step against the fresh aggregate, then extrapolate with theta=1.
  std::swap(state.x_prev, state.x);
  state.x.resize(d);
  primal_prox_l2(state.x_prev, state.r, sched.tau, lambda, state.x);
  for (int j = 0; j < d; ++j)
    state.x_bar[j] = 2.0 * state.x[j] - state.x_prev[j];

  ++state.iteration;
  state.passes = static_cast<double>(state.iteration);  // one pass per sweep
  return sched;
}

SolveResult Solver::run(std::optional<double> reference_objective) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(clock::now() - t0)
        .count();
  };

  SolveResult result;
  result.state = SolverState::zeros(A_.rows(), A_.num_blocks());
  prox_failures_ = 0;

  auto record = [&](const SolverState& s) {
    TraceRecord rec;
    rec.pass = s.passes;
    rec.objective = problem_.primal_objective(A_, s.x);
    rec.suboptimality = reference_objective
                            ? rec.objective - *reference_objective
                            : std::numeric_limits<double>::quiet_NaN();
    rec.elapsed_ms = elapsed_ms();
    rec.seed = config_.seed;
    result.trace.push_back(rec);
  };

  record(result.state);  // pass 0
  double next_mark = config_.trace_stride;
  const double eps = 1e-9;
  try {
    while (result.state.passes + eps < config_.max_passes) {
      step(result.state);
      if (config_.trace_stride > 0.0 &&
          result.state.passes + eps >= next_mark) {
        record(result.state);
        while (next_mark <= result.state.passes + eps)
          next_mark += config_.trace_stride;
      }
    }
    if (result.trace.back().pass + eps < result.state.passes)
      record(result.state);
  } catch (const std::exception& ex) {
    result.error = ex.what();
  }
  result.prox_failures = prox_failures_;
  return result;
}

}  // namespace sepsaddle

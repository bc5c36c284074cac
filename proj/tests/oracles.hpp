// Independent reference implementations the tests measure the library
// against: dense SVD, derivative-free 1-D optimization, bisection, and
// the conjugate functions written out directly from their formulas.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "sepsaddle/block_matrix.hpp"

namespace oracles {

inline Eigen::MatrixXd dense_block(const sepsaddle::BlockMatrix& A, int i) {
  const int d = A.rows(), w = A.block_width(i);
  Eigen::MatrixXd M(d, w);
  std::vector<double> basis(w, 0.0), col(d);
  for (int c = 0; c < w; ++c) {
    basis[c] = 1.0;
    A.block_matvec(i, basis, col);
    basis[c] = 0.0;
    for (int r = 0; r < d; ++r) M(r, c) = col[r];
  }
  return M;
}

inline Eigen::MatrixXd dense_full(const sepsaddle::BlockMatrix& A) {
  Eigen::MatrixXd M(A.rows(), A.cols());
  for (int i = 0; i < A.num_blocks(); ++i)
    M.middleCols(A.block_offset(i), A.block_width(i)) = dense_block(A, i);
  return M;
}

inline double top_singular_value(const Eigen::MatrixXd& M) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues()(0);
}

/// Golden-section minimizer of a unimodal f over [lo, hi].
template <typename F>
double golden_min(F f, double lo, double hi) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > 1e-14) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// Bisection root of an increasing g with g(lo) < 0 < g(hi).
template <typename G>
double bisect_root(G g, double lo, double hi, int iters = 200) {
  for (int k = 0; k < iters; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Max of f over [lo, hi]: coarse grid, then golden refinement around the
/// best grid cell.
template <typename F>
double grid_refine_max(F f, double lo, double hi, int points = 4001) {
  double best_x = lo, best = f(lo);
  for (int k = 1; k < points; ++k) {
    const double x = lo + (hi - lo) * k / (points - 1);
    const double v = f(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  const double h = (hi - lo) / (points - 1);
  const double x = golden_min([&](double t) { return -f(t); },
                              std::max(lo, best_x - h),
                              std::min(hi, best_x + h));
  return std::max(best, f(x));
}

/// Central-difference second derivative.
template <typename F>
double second_derivative(F f, double x, double h = 1e-5) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

// Conjugates written straight from their closed forms. The logistic
// conjugate's domain is b*y in [-1, 0]; endpoints by continuity.
inline double conj_quadratic(double y, double b) { return 0.5 * y * y + b * y; }

inline double conj_smooth_hinge(double y, double b) {
  return b * y + 0.5 * y * y;  // only meaningful on b*y in [-1, 0]
}

inline double conj_logistic(double y, double b) {
  const double u = -b * y;
  const double t1 = u > 0.0 ? u * std::log(u) : 0.0;
  const double t2 = 1.0 - u > 0.0 ? (1.0 - u) * std::log(1.0 - u) : 0.0;
  return t1 + t2;
}

/// d/dy of the logistic conjugate at an interior point.
inline double conj_logistic_grad(double y, double b) {
  const double u = -b * y;
  return -b * std::log(u / (1.0 - u));
}

}  // namespace oracles

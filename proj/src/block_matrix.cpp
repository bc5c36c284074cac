#include "sepsaddle/block_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace sepsaddle {
namespace {

constexpr double kDenseThreshold = 0.5;
constexpr int kPowerIterCap = 10000;
constexpr double kPowerIterTol = 1e-12;

}  // namespace

BlockMatrix::BlockMatrix(int rows, std::vector<int> block_widths,
                         std::vector<Entry> entries)
    : rows_(rows) {
  if (rows < 1) throw std::invalid_argument("BlockMatrix: rows must be >= 1");
  if (block_widths.empty())
    throw std::invalid_argument("BlockMatrix: need at least one block");

  block_offsets_.reserve(block_widths.size() + 1);
  block_offsets_.push_back(0);
  for (int w : block_widths) {
    if (w < 1)
      throw std::invalid_argument("BlockMatrix: block widths must be >= 1");
    block_offsets_.push_back(block_offsets_.back() + w);
  }
  cols_ = block_offsets_.back();

  for (const Entry& e : entries) {
    if (e.row < 0 || e.row >= rows_)
      throw std::invalid_argument(
          fmt::format("BlockMatrix: row {} outside [0, {})", e.row, rows_));
    if (e.col < 0 || e.col >= cols_)
      throw std::invalid_argument(
          fmt::format("BlockMatrix: col {} outside [0, {})", e.col, cols_));
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) {
              return a.col != b.col ? a.col < b.col : a.row < b.row;
            });

  const int n = static_cast<int>(block_widths.size());
  blocks_.resize(n);
  nnz_ = 0;
  std::size_t pos = 0;
  for (int i = 0; i < n; ++i) {
    Block& blk = blocks_[i];
    blk.width = block_widths[i];
    blk.dense = false;
    blk.col_ptr.assign(blk.width + 1, 0);
    const int lo = block_offsets_[i], hi = block_offsets_[i + 1];
    for (int c = lo; c < hi; ++c) {
      while (pos < entries.size() && entries[pos].col == c) {
        double v = entries[pos].value;
        int r = entries[pos].row;
        ++pos;
        while (pos < entries.size() && entries[pos].col == c &&
               entries[pos].row == r) {
          v += entries[pos].value;  // duplicates accumulate
          ++pos;
        }
        if (v != 0.0) {
          blk.row_idx.push_back(r);
          blk.values.push_back(v);
        }
      }
      blk.col_ptr[c - lo + 1] = static_cast<int>(blk.row_idx.size());
    }
    nnz_ += static_cast<std::int64_t>(blk.row_idx.size());

    const double density = static_cast<double>(blk.row_idx.size()) /
                           (static_cast<double>(rows_) * blk.width);
    if (density > kDenseThreshold) {
      std::vector<double> full(static_cast<std::size_t>(rows_) * blk.width,
                               0.0);
      for (int c = 0; c < blk.width; ++c)
        for (int k = blk.col_ptr[c]; k < blk.col_ptr[c + 1]; ++k)
          full[static_cast<std::size_t>(c) * rows_ + blk.row_idx[k]] =
              blk.values[k];
      blk.dense = true;
      blk.values = std::move(full);
      blk.col_ptr.clear();
      blk.row_idx.clear();
    }
  }

  norm_cache_.assign(n, std::numeric_limits<double>::quiet_NaN());
  full_norm_ = std::numeric_limits<double>::quiet_NaN();
  norm_mutex_ = std::make_unique<std::mutex>();

  // Single-column norms are plain Euclidean norms: compute them up front
  // so loading a dataset fixes every R_i once and for all.
  for (int i = 0; i < n; ++i)
    if (blocks_[i].width == 1) norm_cache_[i] = compute_block_norm(i);
}

BlockMatrix BlockMatrix::from_columns(
    int rows, const std::vector<std::vector<double>>& cols) {
  std::vector<Entry> entries;
  for (int c = 0; c < static_cast<int>(cols.size()); ++c) {
    if (static_cast<int>(cols[c].size()) != rows)
      throw std::invalid_argument("from_columns: column length != rows");
    for (int r = 0; r < rows; ++r)
      if (cols[c][r] != 0.0) entries.push_back({r, c, cols[c][r]});
  }
  return BlockMatrix(rows, std::vector<int>(cols.size(), 1),
                     std::move(entries));
}

int BlockMatrix::rows() const { return rows_; }
int BlockMatrix::num_blocks() const { return static_cast<int>(blocks_.size()); }
int BlockMatrix::cols() const { return cols_; }

int BlockMatrix::block_width(int block) const {
  check_block_index(block);
  return blocks_[block].width;
}

int BlockMatrix::block_offset(int block) const {
  check_block_index(block);
  return block_offsets_[block];
}

std::int64_t BlockMatrix::nnz() const { return nnz_; }

bool BlockMatrix::block_is_zero(int block) const {
  check_block_index(block);
  const Block& blk = blocks_[block];
  if (!blk.dense) return blk.values.empty();
  return std::all_of(blk.values.begin(), blk.values.end(),
                     [](double v) { return v == 0.0; });
}

void BlockMatrix::check_block_index(int block) const {
  if (block < 0 || block >= num_blocks())
    throw std::invalid_argument(
        fmt::format("block index {} outside [0, {})", block, num_blocks()));
}

void BlockMatrix::block_matvec(int block, std::span<const double> v,
                               std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  block_matvec_add(block, v, 1.0, out);
}

void BlockMatrix::block_matvec_add(int block, std::span<const double> v,
                                   double scale, std::span<double> out) const {
  check_block_index(block);
  const Block& blk = blocks_[block];
  if (static_cast<int>(v.size()) != blk.width)
    throw std::invalid_argument(
        fmt::format("block_matvec: vector length {} != block width {}",
                    v.size(), blk.width));
  if (static_cast<int>(out.size()) != rows_)
    throw std::invalid_argument("block_matvec: output length != rows");

  if (blk.dense) {
    for (int c = 0; c < blk.width; ++c) {
      const double s = scale * v[c];
      if (s == 0.0) continue;
      const double* col = blk.values.data() + static_cast<std::size_t>(c) * rows_;
      for (int r = 0; r < rows_; ++r) out[r] += s * col[r];
    }
  } else {
    for (int c = 0; c < blk.width; ++c) {
      const double s = scale * v[c];
      if (s == 0.0) continue;
      for (int k = blk.col_ptr[c]; k < blk.col_ptr[c + 1]; ++k)
        out[blk.row_idx[k]] += s * blk.values[k];
    }
  }
}

void BlockMatrix::block_column_dot(int block, std::span<const double> x,
                                   std::span<double> out) const {
  check_block_index(block);
  const Block& blk = blocks_[block];
  if (static_cast<int>(x.size()) != rows_)
    throw std::invalid_argument(
        fmt::format("block_column_dot: vector length {} != rows {}", x.size(),
                    rows_));
  if (static_cast<int>(out.size()) != blk.width)
    throw std::invalid_argument("block_column_dot: output length != width");

  if (blk.dense) {
    for (int c = 0; c < blk.width; ++c) {
      const double* col = blk.values.data() + static_cast<std::size_t>(c) * rows_;
      double acc = 0.0;
      for (int r = 0; r < rows_; ++r) acc += col[r] * x[r];
      out[c] = acc;
    }
  } else {
    for (int c = 0; c < blk.width; ++c) {
      double acc = 0.0;
      for (int k = blk.col_ptr[c]; k < blk.col_ptr[c + 1]; ++k)
        acc += blk.values[k] * x[blk.row_idx[k]];
      out[c] = acc;
    }
  }
}

double BlockMatrix::column_dot(int block, std::span<const double> x) const {
  check_block_index(block);
  if (blocks_[block].width != 1)
    throw std::invalid_argument("column_dot: block is not a single column");
  double out;
  block_column_dot(block, x, std::span<double>(&out, 1));
  return out;
}

void BlockMatrix::add_scaled_column(int block, double scale,
                                    std::span<double> out) const {
  check_block_index(block);
  if (blocks_[block].width != 1)
    throw std::invalid_argument(
        "add_scaled_column: block is not a single column");
  const double v = 1.0;
  block_matvec_add(block, std::span<const double>(&v, 1), scale, out);
}

namespace {

// Power iteration on M = A^T A through a caller-supplied y = M v, with a
// deterministic start. Returns the Rayleigh quotient v^T M v (= sigma^2).
// A second call from a different start guards against a start vector that
// happens to be orthogonal to the leading eigenspace.
template <typename ApplyM>
double rayleigh_power(int dim, ApplyM&& apply, std::vector<double> v) {
  double norm = 0.0;
  for (double e : v) norm += e * e;
  norm = std::sqrt(norm);
  if (norm == 0.0) return 0.0;
  for (double& e : v) e /= norm;

  std::vector<double> w(dim);
  double rayleigh = 0.0;
  for (int it = 0; it < kPowerIterCap; ++it) {
    apply(v, w);
    double rq = 0.0;
    for (int j = 0; j < dim; ++j) rq += v[j] * w[j];
    double wn = 0.0;
    for (double e : w) wn += e * e;
    wn = std::sqrt(wn);
    if (wn == 0.0) return 0.0;  // v fell in the null space
    for (int j = 0; j < dim; ++j) v[j] = w[j] / wn;
    if (it > 0 && std::abs(rq - rayleigh) <= kPowerIterTol * std::abs(rq)) {
      rayleigh = rq;
      break;
    }
    rayleigh = rq;
  }
  return rayleigh;
}

}  // namespace

double BlockMatrix::power_iteration_block(int block) const {
  const Block& blk = blocks_[block];
  const int w = blk.width;
  std::vector<double> tmp(rows_);
  auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
    block_matvec(block, v, tmp);
    block_column_dot(block, tmp, out);
  };

  double best = rayleigh_power(w, apply, std::vector<double>(w, 1.0));
  // Second start: the basis vector of the heaviest column. ||A e_j|| is a
  // lower bound on the norm, so this both cross-checks the all-ones start
  // and repairs it when it stalls on a symmetric instance.
  int heaviest = 0;
  double heaviest_sq = -1.0;
  for (int c = 0; c < w; ++c) {
    std::vector<double> e(w, 0.0);
    e[c] = 1.0;
    block_matvec(block, e, tmp);
    double sq = 0.0;
    for (double t : tmp) sq += t * t;
    if (sq > heaviest_sq) {
      heaviest_sq = sq;
      heaviest = c;
    }
  }
  std::vector<double> e(w, 0.0);
  e[heaviest] = 1.0;
  best = std::max(best, rayleigh_power(w, apply, std::move(e)));
  return std::sqrt(std::max(best, 0.0));
}

double BlockMatrix::compute_block_norm(int block) const {
  const Block& blk = blocks_[block];
  if (block_is_zero(block)) return 0.0;
  if (blk.width == 1) {
    double sq = 0.0;
    for (double v : blk.values) sq += v * v;
    return std::sqrt(sq);
  }
  return power_iteration_block(block);
}

double BlockMatrix::norm_locked(int block) const {
  if (std::isnan(norm_cache_[block]))
    norm_cache_[block] = compute_block_norm(block);
  return norm_cache_[block];
}

double BlockMatrix::spectral_norm(int block) const {
  check_block_index(block);
  std::lock_guard<std::mutex> lock(*norm_mutex_);
  return norm_locked(block);
}

double BlockMatrix::spectral_norm() const {
  std::lock_guard<std::mutex> lock(*norm_mutex_);
  if (!std::isnan(full_norm_)) return full_norm_;
  if (nnz_ == 0) {
    full_norm_ = 0.0;
    return full_norm_;
  }
  std::vector<double> tmp(rows_);
  auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
    std::fill(tmp.begin(), tmp.end(), 0.0);
    for (int i = 0; i < num_blocks(); ++i)
      block_matvec_add(i,
                       std::span<const double>(v.data() + block_offsets_[i],
                                               blocks_[i].width),
                       1.0, tmp);
    for (int i = 0; i < num_blocks(); ++i)
      block_column_dot(i, tmp,
                       std::span<double>(out.data() + block_offsets_[i],
                                         blocks_[i].width));
  };

  double best = rayleigh_power(cols_, apply, std::vector<double>(cols_, 1.0));
  // Cross-check start: basis vector of the block with the largest norm
  // (a guaranteed lower bound on the full norm).
  int arg = 0;
  double arg_norm = -1.0;
  for (int i = 0; i < num_blocks(); ++i) {
    const double r = norm_locked(i);
    if (r > arg_norm) {
      arg_norm = r;
      arg = i;
    }
  }
  std::vector<double> e(cols_, 0.0);
  e[block_offsets_[arg]] = 1.0;
  best = std::max(best, rayleigh_power(cols_, apply, std::move(e)));
  full_norm_ = std::sqrt(std::max(best, 0.0));
  return full_norm_;
}

}  // namespace sepsaddle

#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace sepsaddle {

/// Column-block-partitioned sparse matrix A = [A_1 ... A_n]. Blocks are
/// stored compressed-sparse-column (dense fallback past 50% fill) and the
/// per-block spectral norms are cached compute-once: immutable after
/// construction, safe for concurrent reads.
class BlockMatrix {
 public:
  struct Entry {
    int row;
    int col;  // global column index
    double value;
  };

  BlockMatrix(int rows, std::vector<int> block_widths,
              std::vector<Entry> entries);

  /// One single-column block per input column.
  static BlockMatrix from_columns(int rows,
                                  const std::vector<std::vector<double>>& cols);

  int rows() const;
  int num_blocks() const;
  int cols() const;
  int block_width(int block) const;
  int block_offset(int block) const;
  std::int64_t nnz() const;
  bool block_is_zero(int block) const;

  /// Largest singular value of block i. Exact for single columns, power
  /// iteration otherwise; zero blocks give 0.
  double spectral_norm(int block) const;

  /// Largest singular value of the whole matrix.
  double spectral_norm() const;

  /// out = A_i v.
  void block_matvec(int block, std::span<const double> v,
                    std::span<double> out) const;

  /// out += scale * A_i v.
  void block_matvec_add(int block, std::span<const double> v, double scale,
                        std::span<double> out) const;

  /// out = A_i^T x.
  void block_column_dot(int block, std::span<const double> x,
                        std::span<double> out) const;

  /// <a_i, x> for a single-column block.
  double column_dot(int block, std::span<const double> x) const;

  /// out += scale * a_i for a single-column block.
  void add_scaled_column(int block, double scale, std::span<double> out) const;

 private:
  struct Block {
    int width;
    bool dense;                // values is rows*width column-major if set
    std::vector<int> col_ptr;  // CSC layout otherwise
    std::vector<int> row_idx;
    std::vector<double> values;
  };

  double compute_block_norm(int block) const;
  double power_iteration_block(int block) const;
  double norm_locked(int block) const;  // requires norm_mutex_ held
  void check_block_index(int block) const;

  int rows_ = 0;
  int cols_ = 0;
  std::int64_t nnz_ = 0;
  std::vector<Block> blocks_;
  std::vector<int> block_offsets_;

  // NaN marks a norm as not yet computed; the mutex gives compute-once
  // semantics under concurrent readers.
  mutable std::vector<double> norm_cache_;
  mutable double full_norm_ = 0.0;
  mutable std::unique_ptr<std::mutex> norm_mutex_;
};

}  // namespace sepsaddle

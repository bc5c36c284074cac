#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sepsaddle/block_matrix.hpp"

namespace sepsaddle {

/// A supervised dataset in saddle form: one single-column block per
/// sample, plus the label vector.
struct Dataset {
  BlockMatrix A;
  std::vector<double> labels;

  int num_samples() const { return A.num_blocks(); }
  int dim() const { return A.rows(); }
};

/// Gaussian features with decaying per-coordinate variance: coordinate j
/// of each sample is N(0, j^-2) (1-based j). Labels are <a_i, 1> plus
/// unit Gaussian noise. Deterministic for a fixed seed.
Dataset make_synthetic(int n, int d, std::uint64_t seed);

/// Parse LIBSVM-format text: "<label> idx:val idx:val ...". Indices are
/// 1-based and must be strictly increasing within a line. The feature
/// dimension is the largest index seen unless dim_override pins it
/// higher (for trailing all-zero features). Labels {0,1} are remapped to
/// {-1,+1}; other label sets are kept as-is (regression targets).
/// Malformed input throws with the offending line number.
Dataset parse_libsvm(const std::string& text, int dim_override = 0);

/// Read a LIBSVM file, transparently inflating gzip (sniffed from the
/// 0x1f 0x8b magic, not the file name).
Dataset load_libsvm_file(const std::string& path, int dim_override = 0);

/// Serialize back to LIBSVM text. Zero entries are dropped; shortest
/// round-trip float formatting, so parse(to_libsvm(x)) reproduces values
/// exactly.
std::string to_libsvm(const Dataset& data);

/// Append a constant-1 feature coordinate to every sample (bias term).
/// Applying twice appends two; not idempotent by design.
Dataset add_bias(const Dataset& data);

/// "synthetic:n=100,d=50" style spec, or a filesystem path.
Dataset load_dataset(const std::string& spec, std::uint64_t seed,
                     int dim_override = 0);

}  // namespace sepsaddle

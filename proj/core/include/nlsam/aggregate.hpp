#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "nlsam/patches.hpp"
#include "nlsam/volume.hpp"

namespace nlsam {

enum class AggregationWeight {
  inverse_sparsity,  ///< 1 / (1 + ||a||_0): sparser reconstructions count more
  literal,           ///< 1 + ||a||_0
};

double block_weight(std::size_t l0, AggregationWeight mode);

/// Weighted sums of overlapping block values per (voxel, member volume).
class Accumulator {
 public:
  Accumulator(const Shape3& dims, std::size_t members);

  /// Adds one column laid out as in PatchMatrix, centered at `center`.
  void add(const double* column, const Index3& center, int patch_size, double weight);

  /// Weighted means; voxels no block touched take the fallback value.
  std::vector<Image3D> resolve(const std::vector<Image3D>& fallback) const;

  /// Voxels reached by at least one block (same for every member).
  Mask3D coverage() const;

  const std::vector<double>& numerator() const { return num_; }
  const std::vector<double>& denominator() const { return den_; }

 private:
  Shape3 dims_;
  std::size_t members_;
  std::vector<double> num_;
  std::vector<double> den_;
  std::vector<double> ref_;
};

/// Weighted overlap average of reconstructed blocks. `l0[j]` is the number of
/// nonzero coefficients of column j; `fallback` holds one image per member.
std::vector<Image3D> aggregate_blocks(const PatchMatrix& recon, const std::vector<std::size_t>& l0,
                                      AggregationWeight mode, const std::vector<Image3D>& fallback);

/// Denoised images of one subset, indexed like `members`.
struct SubsetEstimate {
  std::vector<std::size_t> members;
  std::vector<Image3D> images;
};

/// Plain mean, per volume index, of every estimate of that volume. Throws if a
/// volume of `dims` has no estimate.
Volume4D average_subset_outputs(const std::vector<SubsetEstimate>& estimates, const Shape4& dims,
                                const std::array<double, 3>& spacing = {1.0, 1.0, 1.0});

/// Number of estimates per volume index.
std::vector<std::size_t> estimate_counts(const std::vector<SubsetEstimate>& estimates, std::size_t volumes);

}  // namespace nlsam

#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "nlsam/angular.hpp"
#include "nlsam/volume.hpp"

namespace nlsam {

/// Flattened 4D blocks, one per column. Within a column the member volumes
/// follow each other; within a member the ps^3 patch is x fastest.
struct PatchMatrix {
  Eigen::MatrixXd data;
  std::vector<Index3> centers;
  int patch_size = 3;
  std::size_t members = 0;

  Eigen::Index cols() const { return data.cols(); }
  Eigen::Index rows() const { return data.rows(); }
};

/// Patch centers in scan order (x fastest): every stride-th position in
/// [r, dim - 1 - r] on each axis, plus the last position when the stride
/// skips it, kept when the mask is set at the center.
std::vector<Index3> patch_centers(const Shape3& dims, const BlockConfig& cfg, const Mask3D& mask);

/// Blocks of `members` volumes of `vol` around every center in `centers`.
PatchMatrix extract_blocks(const Volume4D& vol, const std::vector<std::size_t>& members, int patch_size,
                           const std::vector<Index3>& centers);

/// extract_blocks over patch_centers(cfg, mask) for the subset's members.
PatchMatrix assemble_block_matrix(const Volume4D& vol, const AngularSubset& subset, const BlockConfig& cfg,
                                  const Mask3D& mask);

}  // namespace nlsam

#include "nlsam/patches.hpp"

#include <string>

#include "nlsam/error.hpp"

namespace nlsam {
namespace {

std::vector<std::size_t> axis_positions(std::size_t dim, std::size_t r, std::size_t stride) {
  std::vector<std::size_t> pos;
  const std::size_t last = dim - 1 - r;
  for (std::size_t c = r; c <= last; c += stride) pos.push_back(c);
  if (pos.back() != last) pos.push_back(last);
  return pos;
}

}  // namespace

std::vector<Index3> patch_centers(const Shape3& dims, const BlockConfig& cfg, const Mask3D& mask) {
  validate(cfg);
  if (mask.dims != dims) throw DimensionMismatchError("mask dims differ from the volume");
  const auto ps = static_cast<std::size_t>(cfg.patch_size);
  for (std::size_t a = 0; a < 3; ++a) {
    if (dims[a] < ps) throw DimensionMismatchError("volume is smaller than the patch size " + std::to_string(ps));
  }
  const std::size_t r = ps / 2;
  const auto stride = static_cast<std::size_t>(cfg.stride);
  const auto xs = axis_positions(dims[0], r, stride);
  const auto ys = axis_positions(dims[1], r, stride);
  const auto zs = axis_positions(dims[2], r, stride);
  std::vector<Index3> centers;
  for (std::size_t z : zs) {
    for (std::size_t y : ys) {
      for (std::size_t x : xs) {
        if (mask(x, y, z)) centers.push_back({x, y, z});
      }
    }
  }
  return centers;
}

PatchMatrix extract_blocks(const Volume4D& vol, const std::vector<std::size_t>& members, int patch_size,
                           const std::vector<Index3>& centers) {
  for (std::size_t v : members) {
    if (v >= vol.volumes()) throw DimensionMismatchError("block member outside the volume");
  }
  const auto ps = static_cast<std::size_t>(patch_size);
  const std::size_t patch_len = ps * ps * ps;
  const std::size_t r = ps / 2;
  PatchMatrix pm;
  pm.patch_size = patch_size;
  pm.members = members.size();
  pm.centers = centers;
  pm.data.resize(static_cast<Eigen::Index>(patch_len * members.size()), static_cast<Eigen::Index>(centers.size()));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(centers.size()); ++c) {
    const Index3& ctr = centers[static_cast<std::size_t>(c)];
    double* col = pm.data.col(c).data();
    for (std::size_t k = 0; k < members.size(); ++k) {
      const auto vol_k = vol.volume(members[k]);
      const auto& d = vol.dims();
      for (std::size_t dz = 0; dz < ps; ++dz) {
        for (std::size_t dy = 0; dy < ps; ++dy) {
          const std::size_t base = (ctr[0] - r) + d[0] * ((ctr[1] - r + dy) + d[1] * (ctr[2] - r + dz));
          for (std::size_t dx = 0; dx < ps; ++dx) *col++ = vol_k[base + dx];
        }
      }
    }
  }
  return pm;
}

PatchMatrix assemble_block_matrix(const Volume4D& vol, const AngularSubset& subset, const BlockConfig& cfg,
                                  const Mask3D& mask) {
  return extract_blocks(vol, subset.members, cfg.patch_size, patch_centers(vol.spatial_dims(), cfg, mask));
}

}  // namespace nlsam

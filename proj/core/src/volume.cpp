#include "nlsam/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nlsam/error.hpp"

namespace nlsam {

std::size_t Mask3D::count() const {
  return static_cast<std::size_t>(std::count_if(data.begin(), data.end(), [](std::uint8_t b) { return b != 0; }));
}

Volume4D::Volume4D(const Shape4& dims, const std::array<double, 3>& spacing)
    : dims_(dims), data_(dims[0] * dims[1] * dims[2] * dims[3], 0.0) {
  set_spacing(spacing);
}

Volume4D::Volume4D(const Shape4& dims, const std::array<double, 3>& spacing, std::vector<double> data)
    : dims_(dims), data_(std::move(data)) {
  set_spacing(spacing);
  if (data_.size() != dims[0] * dims[1] * dims[2] * dims[3]) {
    throw DimensionMismatchError("volume data length " + std::to_string(data_.size()) +
                                 " does not match its dimensions");
  }
}

void Volume4D::set_spacing(const std::array<double, 3>& spacing) {
  for (double s : spacing) {
    if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("voxel spacing must be positive and finite");
  }
  spacing_ = spacing;
}

std::span<double> Volume4D::volume(std::size_t v) {
  const std::size_t n = voxels_per_volume();
  return {data_.data() + v * n, n};
}

std::span<const double> Volume4D::volume(std::size_t v) const {
  const std::size_t n = voxels_per_volume();
  return {data_.data() + v * n, n};
}

Image3D Volume4D::volume_image(std::size_t v) const {
  Image3D img;
  img.dims = spatial_dims();
  auto src = volume(v);
  img.data.assign(src.begin(), src.end());
  return img;
}

void Volume4D::set_volume(std::size_t v, const Image3D& image) {
  if (image.dims != spatial_dims()) throw DimensionMismatchError("image does not match volume spatial dims");
  std::copy(image.data.begin(), image.data.end(), volume(v).begin());
}

void validate(const Volume4D& vol) {
  for (std::size_t d : vol.dims()) {
    if (d == 0) throw DimensionMismatchError("volume has a zero dimension");
  }
  const auto& s = vol.dims();
  if (vol.size() != s[0] * s[1] * s[2] * s[3]) throw DimensionMismatchError("dims product differs from data length");
  for (double v : vol.data()) {
    if (!std::isfinite(v)) throw DomainError("volume contains non-finite intensities");
  }
}

}  // namespace nlsam

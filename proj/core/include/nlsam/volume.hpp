#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace nlsam {

using Shape3 = std::array<std::size_t, 3>;
using Shape4 = std::array<std::size_t, 4>;
using Index3 = std::array<std::size_t, 3>;

inline std::size_t element_count(const Shape3& s) { return s[0] * s[1] * s[2]; }

/// Linear offset of (x, y, z) in an x-fastest 3D grid.
inline std::size_t linear_index(const Shape3& s, std::size_t x, std::size_t y, std::size_t z) {
  return x + s[0] * (y + s[1] * z);
}

/// Scalar image on a 3D grid, x fastest.
struct Image3D {
  Shape3 dims{0, 0, 0};
  std::vector<double> data;

  Image3D() = default;
  explicit Image3D(const Shape3& d, double fill = 0.0) : dims(d), data(element_count(d), fill) {}

  std::size_t size() const { return data.size(); }
  double& operator()(std::size_t x, std::size_t y, std::size_t z) { return data[linear_index(dims, x, y, z)]; }
  double operator()(std::size_t x, std::size_t y, std::size_t z) const {
    return data[linear_index(dims, x, y, z)];
  }
};

/// Boolean voxel mask on a 3D grid, x fastest.
struct Mask3D {
  Shape3 dims{0, 0, 0};
  std::vector<std::uint8_t> data;

  Mask3D() = default;
  explicit Mask3D(const Shape3& d, bool fill = true) : dims(d), data(element_count(d), fill ? 1 : 0) {}

  std::size_t size() const { return data.size(); }
  std::size_t count() const;
  bool operator()(std::size_t x, std::size_t y, std::size_t z) const {
    return data[linear_index(dims, x, y, z)] != 0;
  }
  bool operator[](std::size_t i) const { return data[i] != 0; }
};

/// X x Y x Z x V grid of intensities with voxel spacing in millimetres.
///
/// Data order is x fastest, then y, then z, then v: voxel (x, y, z, v) lives
/// at offset x + X * (y + Y * (z + Z * v)). Each 3D volume is therefore a
/// contiguous span.
class Volume4D {
 public:
  Volume4D() = default;
  explicit Volume4D(const Shape4& dims, const std::array<double, 3>& spacing = {1.0, 1.0, 1.0});
  Volume4D(const Shape4& dims, const std::array<double, 3>& spacing, std::vector<double> data);

  const Shape4& dims() const { return dims_; }
  Shape3 spatial_dims() const { return {dims_[0], dims_[1], dims_[2]}; }
  std::size_t volumes() const { return dims_[3]; }
  std::size_t voxels_per_volume() const { return dims_[0] * dims_[1] * dims_[2]; }
  std::size_t size() const { return data_.size(); }

  const std::array<double, 3>& spacing() const { return spacing_; }
  void set_spacing(const std::array<double, 3>& spacing);

  std::size_t index(std::size_t x, std::size_t y, std::size_t z, std::size_t v) const {
    return x + dims_[0] * (y + dims_[1] * (z + dims_[2] * v));
  }
  double& operator()(std::size_t x, std::size_t y, std::size_t z, std::size_t v) { return data_[index(x, y, z, v)]; }
  double operator()(std::size_t x, std::size_t y, std::size_t z, std::size_t v) const {
    return data_[index(x, y, z, v)];
  }

  std::span<double> volume(std::size_t v);
  std::span<const double> volume(std::size_t v) const;
  Image3D volume_image(std::size_t v) const;
  void set_volume(std::size_t v, const Image3D& image);

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  /// Raw 348-byte NIfTI-1 header this volume was read from, if any. The
  /// orientation fields in it are written back untouched.
  const std::vector<std::uint8_t>& source_header() const { return source_header_; }
  void set_source_header(std::vector<std::uint8_t> header) { source_header_ = std::move(header); }

 private:
  Shape4 dims_{0, 0, 0, 0};
  std::array<double, 3> spacing_{1.0, 1.0, 1.0};
  std::vector<double> data_;
  std::vector<std::uint8_t> source_header_;
};

/// Checks the Volume4D invariants: positive dims, dims product equals data
/// length, positive spacing and finite intensities. Throws on violation.
void validate(const Volume4D& vol);

}  // namespace nlsam

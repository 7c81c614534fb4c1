#pragma once

#include <cstdint>
#include <filesystem>

#include "nlsam/volume.hpp"

namespace nlsam {

/// Datatype codes of the supported NIfTI-1 subset.
enum class NiftiDatatype : std::int16_t {
  int16 = 4,
  float32 = 16,
  float64 = 64,
};

struct ReadReport {
  /// Number of negative intensities clamped to zero on load.
  std::size_t clamped_negatives = 0;
};

/// Reads a single-file little-endian NIfTI-1 volume (".nii").
///
/// Values are scaled by scl_slope / scl_inter when scl_slope is nonzero and
/// 3D inputs become a single-volume Volume4D. Negative intensities are clamped
/// to 0; pass `report` to learn how many were.
Volume4D read_volume(const std::filesystem::path& path, ReadReport* report = nullptr);

/// Reads without clamping negatives (noise maps, dictionaries, test fixtures).
Volume4D read_volume_raw(const std::filesystem::path& path);

/// Writes a NIfTI-1 single file with identity scaling. Single-volume data is
/// written as a 3D image. Orientation fields from the source header, if the
/// volume carries one, are copied verbatim.
void write_volume(const Volume4D& vol, const std::filesystem::path& path,
                  NiftiDatatype datatype = NiftiDatatype::float32);

Mask3D read_mask(const std::filesystem::path& path);
void write_mask(const Mask3D& mask, const std::filesystem::path& path);

}  // namespace nlsam

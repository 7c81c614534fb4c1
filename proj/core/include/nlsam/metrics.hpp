#pragma once

#include <cstddef>
#include <vector>

#include "nlsam/volume.hpp"

namespace nlsam {

struct PsnrResult {
  double db = 0.0;
  bool infinite = false;  ///< MSE was exactly zero
};

/// 10 log10(MAX^2 / MSE), MAX the largest reference value inside the mask and
/// MSE over the masked voxels of every volume.
PsnrResult psnr(const Volume4D& reference, const Volume4D& test, const Mask3D& mask);

/// Mean over masked voxels and volumes of the SSIM map computed slice by slice
/// (axial planes) with an 11-tap Gaussian window of sigma 1.5, K1 = 0.01,
/// K2 = 0.03 and L the in-mask dynamic range of the reference.
double ssim(const Volume4D& reference, const Volume4D& test, const Mask3D& mask);

struct QualityReport {
  std::vector<PsnrResult> psnr_per_volume;
  std::vector<double> ssim_per_volume;
  PsnrResult psnr;        ///< pooled over all volumes
  double ssim = 0.0;      ///< mean over all volumes
  std::size_t mask_voxels = 0;
};

QualityReport evaluate_quality(const Volume4D& reference, const Volume4D& test, const Mask3D& mask);

/// Voxels where any reference volume is nonzero.
Mask3D nonzero_mask(const Volume4D& reference);

}  // namespace nlsam

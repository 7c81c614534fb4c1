#pragma once

#include "nlsam/noise_estimation.hpp"
#include "nlsam/volume.hpp"

namespace nlsam {

struct StabilizationResult {
  double eta_hat = 0.0;
  double m_hat = 0.0;
  double alpha = 0.5;
};

/// Where the underlying signal of each voxel is estimated from.
enum class EtaSource {
  local_mean,  ///< first-moment inversion of the mean over a (2r+1)^3 window
  voxel,       ///< first-moment inversion of the voxel value alone
};

struct StabilizeOptions {
  /// Use beta_N * sigma instead of sigma * sqrt(pi/2) as the noise-floor threshold.
  bool beta_floor_threshold = false;
  EtaSource eta_source = EtaSource::local_mean;
  int local_radius = 1;
};

/// Solves beta_N 1F1(-1/2; N; -theta^2/2) sigma = m for eta = theta sigma.
/// Returns 0 when m is at or below the noise floor.
double estimate_eta(double m, double sigma, int n_coils, bool beta_floor_threshold = false);

/// Maps m to the Gaussian variable with the same cdf level around eta_hat.
StabilizationResult stabilize_with_eta(double m, double eta_hat, double sigma, int n_coils);

/// stabilize_with_eta(m, estimate_eta(m, sigma, N), sigma, N).
StabilizationResult stabilize(double m, double sigma, int n_coils, bool beta_floor_threshold = false);

/// Voxelwise stabilization of every volume with the local sigma of `field`.
/// Voxels with sigma = 0 are copied unchanged.
Volume4D stabilize_volume(const Volume4D& vol, const NoiseField& field, const StabilizeOptions& opts = {});

}  // namespace nlsam

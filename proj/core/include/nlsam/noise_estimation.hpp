#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "nlsam/volume.hpp"

namespace nlsam {

enum class NoiseProvenance {
  piesno,           ///< global PIESNO estimate broadcast to every voxel
  local_patch,      ///< minimum patch distance on the high-pass residual
  noise_map,        ///< sampled from an acquired noise-only scan
  synthetic_field,  ///< local std of the high-pass residual, median over volumes, smoothed
  ground_truth,     ///< exact field used by the noise simulator
  supplied,         ///< precomputed sigma field read from disk
};

std::string_view to_string(NoiseProvenance p);

/// Per-voxel Gaussian-equivalent noise standard deviation and coil count.
struct NoiseField {
  Shape3 dims{0, 0, 0};
  std::vector<double> sigma;
  int n_coils = 1;
  NoiseProvenance provenance = NoiseProvenance::piesno;

  static NoiseField constant(const Shape3& dims, double sigma, int n_coils, NoiseProvenance provenance);
  std::size_t size() const { return sigma.size(); }
  double operator[](std::size_t i) const { return sigma[i]; }
};

/// Throws unless every sigma is finite and nonnegative and dims match.
void validate(const NoiseField& field, const Shape3& expected_dims);

struct PiesnoConfig {
  double alpha = 0.01;       ///< two-sided significance level of the Gamma test
  double quantile = 0.5;     ///< quantile of slice magnitudes used for the first start
  double tolerance = 1e-5;   ///< relative change of sigma at convergence
  int max_iters = 100;
  int starts = 10;           ///< starts at quantiles spaced evenly in [quantile/starts, quantile]
  double min_background_fraction = 0.1;
};

struct PiesnoSliceResult {
  double sigma = 0.0;
  std::vector<std::size_t> background;  ///< voxel indices within the slice
  int iterations = 0;
};

/// PIESNO on one slice. `values` holds n_volumes blocks of n_voxels
/// magnitudes (value of voxel i in volume v at v * n_voxels + i).
///
/// A voxel is background when the mean over volumes of m^2 / (2 sigma^2)
/// falls inside the [alpha/2, 1 - alpha/2] quantiles of
/// Gamma(shape = N V, scale = 1 / V); sigma is then re-estimated from those
/// voxels until it stops moving. Several starting quantiles are tried and the
/// smallest converged sigma whose background covers at least
/// min_background_fraction of the slice is kept.
PiesnoSliceResult piesno_slice(std::span<const double> values, std::size_t n_voxels, std::size_t n_volumes,
                               int n_coils, const PiesnoConfig& cfg = {});

struct PiesnoResult {
  double sigma = 0.0;               ///< median over slices where PIESNO succeeded
  std::vector<double> slice_sigma;  ///< NaN for slices without background
  Mask3D background;
};

/// Runs piesno_slice on every axial slice; throws NoBackgroundError when no
/// slice yields background.
PiesnoResult piesno(const Volume4D& vol, int n_coils, const PiesnoConfig& cfg = {});

/// Lower bound of the mean/std ratio of nc-chi magnitudes (reached at eta = 0).
double snr_r_min(int n_coils);

/// SNR theta whose nc-chi mean/std ratio equals r, from the fixed point
/// theta = sqrt(xi(theta) (1 + r^2) - 2N). Returns 0 for r <= r_min.
double snr_fixed_point(double r, int n_coils);

/// Calibration of the minimum-over-26-neighbours patch statistic for unit
/// white noise, per patch radius 1..3 (see local_noise_variance).
double local_patch_calibration(int patch_radius);

/// Spatially varying sigma from the minimum squared distance between a
/// residual patch and its 26 shifted neighbours, averaged over volumes and
/// corrected for the magnitude bias with xi(theta | N).
NoiseField local_noise_variance(const Volume4D& vol, int patch_radius, int n_coils, bool bias_correction = true);

struct NoiseFieldConfig {
  double fwhm_mm = 10.0;
  int window_radius = 1;
  double lowpass_sigma_voxels = 1.0;
  bool bias_correction = true;
};

double fwhm_to_sigma_voxels(double fwhm_mm, double spacing_mm);

/// Noise field from the local standard deviation of (volume - low-pass),
/// median across volumes, Gaussian smoothing and xi correction.
NoiseField estimate_noise_field(const Volume4D& vol, int n_coils, const NoiseFieldConfig& cfg = {});

/// Same reduction applied to an acquired noise-only scan, which needs no
/// high-pass step.
NoiseField noise_field_from_map(const Volume4D& noise_map, int n_coils, const NoiseFieldConfig& cfg = {});

}  // namespace nlsam

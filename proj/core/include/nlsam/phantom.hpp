#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "nlsam/gradients.hpp"
#include "nlsam/noise_estimation.hpp"
#include "nlsam/volume.hpp"

namespace nlsam {

enum class BetaMode {
  constant,  ///< beta = 1
  sphere,    ///< 3 at the mask centroid falling linearly to 1 at the farthest mask voxel
};

struct NoiseSpec {
  double snr = 10.0;
  int n_coils = 1;
  BetaMode beta = BetaMode::constant;
  std::uint64_t seed = 0;
  /// Noise level; negative derives it as mean(b0 in mask) / snr.
  double sigma = -1.0;
};

void validate(const NoiseSpec& spec);

/// Per-voxel noise amplitude factor; 1 outside the mask.
Image3D build_beta_field(const Mask3D& mask, BetaMode mode);

struct NoisyVolume {
  Volume4D noisy;
  NoiseField truth;  ///< sigma * beta per voxel, provenance ground_truth
  double sigma = 0.0;
};

/// Magnitude of N complex channels, each carrying I / sqrt(N) on the real
/// part and Gaussian noise of standard deviation beta * sigma on both parts.
/// Streams are derived from (seed, voxel) so the result does not depend on
/// threading. A zero sigma returns the clean data unchanged.
NoisyVolume add_noise(const Volume4D& clean, const GradientTable& table, const Mask3D& mask, const NoiseSpec& spec);

/// `count` unit vectors spread over the upper hemisphere (Fibonacci lattice).
std::vector<Vec3> hemisphere_directions(std::size_t count);

struct PhantomConfig {
  std::size_t size = 24;
  std::size_t directions = 12;
  double bval = 1000.0;
  double s0 = 1.0;
};

struct Phantom {
  Volume4D clean;
  GradientTable table;
  Mask3D mask;
};

/// Piecewise-constant diffusion phantom: a spherical brain-like mask with
/// isotropic tissue, one fibre bundle along x, one along y and their crossing,
/// each region with a tensor signal S0 exp(-b g^T D g). Volume 0 is the b0.
Phantom make_crossing_phantom(const PhantomConfig& cfg = {});

}  // namespace nlsam

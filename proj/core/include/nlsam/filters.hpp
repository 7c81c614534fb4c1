#pragma once

#include <array>
#include <vector>

#include "nlsam/volume.hpp"

namespace nlsam {

/// Normalized 1D Gaussian taps over [-ceil(truncate*sigma), +ceil(truncate*sigma)].
std::vector<double> gaussian_kernel_1d(double sigma, double truncate = 4.0);

/// Separable Gaussian smoothing with half-sample symmetric boundaries
/// (d c b a | a b c d). A zero sigma leaves that axis untouched.
Image3D gaussian_filter(const Image3D& image, const std::array<double, 3>& sigma_voxels, double truncate = 4.0);

/// Variance of (x - gaussian_filter(x)) for unit white noise, away from the
/// borders: 1 - 2 g(0) + sum g^2 for the 3D kernel.
double highpass_variance_factor(const std::array<double, 3>& sigma_voxels, double truncate = 4.0);

struct LocalMoments {
  Image3D mean;
  Image3D stddev;
};

/// Mean and sample standard deviation over a (2r+1)^3 window clipped to the
/// image bounds.
LocalMoments local_moments(const Image3D& image, int radius);

/// Mean over a (2r+1)^3 window clipped to the image bounds.
Image3D box_mean(const Image3D& image, int radius);

/// Voxelwise median across a stack of same-sized images.
Image3D median_across(const std::vector<Image3D>& images);

}  // namespace nlsam

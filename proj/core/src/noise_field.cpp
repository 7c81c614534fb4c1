#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "nlsam/error.hpp"
#include "nlsam/filters.hpp"
#include "nlsam/ncchi.hpp"
#include "nlsam/noise_estimation.hpp"

namespace nlsam {
namespace {

// sigma^2 / E[min_j ||u_i - u_j||^2 / (2 |patch|)] for unit white Gaussian
// noise after subtracting a sigma = 1 voxel Gaussian low-pass, indexed by
// patch radius 1..3, interior voxels of two 96^3 Monte-Carlo volumes.
constexpr std::array<double, 3> kLocalPatchCalibration{1.7723, 1.3238, 1.2132};

constexpr double kLowpassSigma = 1.0;

Image3D highpass(const Image3D& img, double sigma) {
  const Image3D low = gaussian_filter(img, {sigma, sigma, sigma});
  Image3D out(img.dims);
  for (std::size_t i = 0; i < img.size(); ++i) out.data[i] = img.data[i] - low.data[i];
  return out;
}

std::ptrdiff_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  return std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1);
}

// Reduces per-volume std and mean maps to the smoothed, bias-corrected field.
NoiseField reduce_field(const std::vector<Image3D>& stds, const std::vector<Image3D>& means,
                        const std::array<double, 3>& spacing, int n_coils, const NoiseFieldConfig& cfg,
                        NoiseProvenance provenance) {
  Image3D sigma = median_across(stds);
  Image3D mean = median_across(means);
  const std::array<double, 3> smooth{fwhm_to_sigma_voxels(cfg.fwhm_mm, spacing[0]),
                                     fwhm_to_sigma_voxels(cfg.fwhm_mm, spacing[1]),
                                     fwhm_to_sigma_voxels(cfg.fwhm_mm, spacing[2])};
  sigma = gaussian_filter(sigma, smooth);
  mean = gaussian_filter(mean, smooth);
  NoiseField field;
  field.dims = sigma.dims;
  field.n_coils = n_coils;
  field.provenance = provenance;
  field.sigma.resize(sigma.size());
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    double s = std::max(0.0, sigma.data[i]);
    if (cfg.bias_correction && s > 0.0) {
      const double theta = snr_fixed_point(std::abs(mean.data[i]) / s, n_coils);
      s /= std::sqrt(xi_factor(theta, n_coils));
    }
    field.sigma[i] = s;
  }
  return field;
}

}  // namespace

std::string_view to_string(NoiseProvenance p) {
  switch (p) {
    case NoiseProvenance::piesno: return "piesno";
    case NoiseProvenance::local_patch: return "local_patch";
    case NoiseProvenance::noise_map: return "noise_map";
    case NoiseProvenance::synthetic_field: return "synthetic_field";
    case NoiseProvenance::ground_truth: return "ground_truth";
    case NoiseProvenance::supplied: return "supplied";
  }
  return "unknown";
}

NoiseField NoiseField::constant(const Shape3& dims, double sigma, int n_coils, NoiseProvenance provenance) {
  NoiseField f;
  f.dims = dims;
  f.sigma.assign(element_count(dims), sigma);
  f.n_coils = n_coils;
  f.provenance = provenance;
  return f;
}

void validate(const NoiseField& field, const Shape3& expected_dims) {
  if (field.dims != expected_dims || field.sigma.size() != element_count(expected_dims)) {
    throw DimensionMismatchError("noise field dims do not match the volume");
  }
  if (field.n_coils < 1) throw DomainError("noise field coil count must be >= 1");
  for (double s : field.sigma) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw DomainError("noise field must be finite and nonnegative");
  }
}

double snr_r_min(int n_coils) {
  const double b = beta_factor(n_coils);
  return b / std::sqrt(2.0 * n_coils - b * b);
}

double snr_fixed_point(double r, int n_coils) {
  if (!(r > snr_r_min(n_coils))) return 0.0;
  const double lift = 1.0 + r * r;
  auto g = [&](double theta) {
    const double v = xi_factor(theta, n_coils) * lift - 2.0 * n_coils;
    return v > 0.0 ? std::sqrt(v) : 0.0;
  };
  double theta = r - snr_r_min(n_coils);
  for (int it = 0; it < 500; ++it) {
    const double next = g(theta);
    if (std::abs(next - theta) < 1e-8) return next;
    theta = next;
  }
  // Slow convergence next to r_min: finish with bisection on g(theta) - theta,
  // which is positive at 0 and negative for large theta.
  double lo = 0.0;
  double hi = std::max(1.0, 2.0 * r);
  while (g(hi) - hi > 0.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) - mid > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double local_patch_calibration(int patch_radius) {
  if (patch_radius < 1 || patch_radius > static_cast<int>(kLocalPatchCalibration.size())) {
    throw DomainError("local noise estimation supports patch radius 1.." + std::to_string(kLocalPatchCalibration.size()));
  }
  return kLocalPatchCalibration[static_cast<std::size_t>(patch_radius - 1)];
}

NoiseField local_noise_variance(const Volume4D& vol, int patch_radius, int n_coils, bool bias_correction) {
  const double calibration = local_patch_calibration(patch_radius);
  const auto dims = vol.spatial_dims();
  const std::size_t width = 2 * static_cast<std::size_t>(patch_radius) + 1;
  if (dims[0] < width || dims[1] < width || dims[2] < width) {
    throw DimensionMismatchError("volume is smaller than the noise-estimation patch");
  }
  const std::size_t n = element_count(dims);
  std::vector<double> variance(n, 0.0);
  Image3D diff(dims);
  for (std::size_t v = 0; v < vol.volumes(); ++v) {
    const Image3D img = vol.volume_image(v);
    const Image3D u = highpass(img, kLowpassSigma);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    for (int dz = -1; dz <= 1; ++dz) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0 && dz == 0) continue;
          for (std::size_t z = 0; z < dims[2]; ++z) {
            for (std::size_t y = 0; y < dims[1]; ++y) {
              for (std::size_t x = 0; x < dims[0]; ++x) {
                const auto sx = clamp_index(static_cast<std::ptrdiff_t>(x) + dx, dims[0]);
                const auto sy = clamp_index(static_cast<std::ptrdiff_t>(y) + dy, dims[1]);
                const auto sz = clamp_index(static_cast<std::ptrdiff_t>(z) + dz, dims[2]);
                const double d = u(x, y, z) - u(static_cast<std::size_t>(sx), static_cast<std::size_t>(sy),
                                                static_cast<std::size_t>(sz));
                diff(x, y, z) = d * d;
              }
            }
          }
          // ||u_i - u_j||^2 / |patch| is the window mean of the squared differences.
          const Image3D dist = box_mean(diff, patch_radius);
          for (std::size_t i = 0; i < n; ++i) best[i] = std::min(best[i], dist.data[i]);
        }
      }
    }
    Image3D mean;
    if (bias_correction) mean = box_mean(img, patch_radius);
    for (std::size_t i = 0; i < n; ++i) {
      double s2 = calibration * 0.5 * best[i];
      if (bias_correction && s2 > 0.0) {
        const double theta = snr_fixed_point(std::abs(mean.data[i]) / std::sqrt(s2), n_coils);
        s2 /= xi_factor(theta, n_coils);
      }
      variance[i] += s2;
    }
  }
  NoiseField field;
  field.dims = dims;
  field.n_coils = n_coils;
  field.provenance = NoiseProvenance::local_patch;
  field.sigma.resize(n);
  for (std::size_t i = 0; i < n; ++i) field.sigma[i] = std::sqrt(variance[i] / static_cast<double>(vol.volumes()));
  return field;
}

double fwhm_to_sigma_voxels(double fwhm_mm, double spacing_mm) {
  if (!(spacing_mm > 0.0)) throw DomainError("spacing must be positive");
  return fwhm_mm / (2.0 * std::sqrt(2.0 * std::log(2.0)) * spacing_mm);
}

NoiseField estimate_noise_field(const Volume4D& vol, int n_coils, const NoiseFieldConfig& cfg) {
  const double sigma_lp = cfg.lowpass_sigma_voxels;
  const double hp_std = std::sqrt(highpass_variance_factor({sigma_lp, sigma_lp, sigma_lp}));
  std::vector<Image3D> stds;
  std::vector<Image3D> means;
  for (std::size_t v = 0; v < vol.volumes(); ++v) {
    const Image3D img = vol.volume_image(v);
    LocalMoments mom = local_moments(highpass(img, sigma_lp), cfg.window_radius);
    for (double& s : mom.stddev.data) s /= hp_std;
    stds.push_back(std::move(mom.stddev));
    means.push_back(box_mean(img, cfg.window_radius));
  }
  return reduce_field(stds, means, vol.spacing(), n_coils, cfg, NoiseProvenance::synthetic_field);
}

NoiseField noise_field_from_map(const Volume4D& noise_map, int n_coils, const NoiseFieldConfig& cfg) {
  std::vector<Image3D> stds;
  std::vector<Image3D> means;
  for (std::size_t v = 0; v < noise_map.volumes(); ++v) {
    LocalMoments mom = local_moments(noise_map.volume_image(v), cfg.window_radius);
    stds.push_back(std::move(mom.stddev));
    means.push_back(std::move(mom.mean));
  }
  return reduce_field(stds, means, noise_map.spacing(), n_coils, cfg, NoiseProvenance::noise_map);
}

}  // namespace nlsam

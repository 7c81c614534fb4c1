#include "nlsam/stabilize.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nlsam/error.hpp"
#include "nlsam/filters.hpp"
#include "nlsam/ncchi.hpp"

namespace nlsam {
namespace {

constexpr double kAlphaClamp = 1e-15;

}  // namespace

double estimate_eta(double m, double sigma, int n_coils, bool beta_floor_threshold) {
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  if (n_coils < 1) throw DomainError("coil count must be >= 1");
  const double beta = beta_factor(n_coils);
  const double r = m / sigma;
  if (!(r > beta)) return 0.0;

  double lo = 0.0;
  double hi = r + 10.0;
  double theta = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    theta = 0.5 * (lo + hi);
    const double f = (mean_factor(theta, n_coils) - r) * sigma;
    if (std::abs(f) < 1e-8 * sigma) break;
    (f < 0.0 ? lo : hi) = theta;
  }
  const double eta = theta * sigma;
  const double floor = beta_floor_threshold ? beta * sigma : sigma * std::sqrt(std::numbers::pi / 2.0);
  return eta < floor ? 0.0 : eta;
}

StabilizationResult stabilize_with_eta(double m, double eta_hat, double sigma, int n_coils) {
  StabilizationResult r;
  r.eta_hat = eta_hat;
  r.alpha = std::clamp(ncx_cdf(m, {eta_hat, sigma, n_coils}), kAlphaClamp, 1.0 - kAlphaClamp);
  r.m_hat = gaussian_icdf(r.alpha, eta_hat, sigma);
  return r;
}

StabilizationResult stabilize(double m, double sigma, int n_coils, bool beta_floor_threshold) {
  return stabilize_with_eta(m, estimate_eta(m, sigma, n_coils, beta_floor_threshold), sigma, n_coils);
}

Volume4D stabilize_volume(const Volume4D& vol, const NoiseField& field, const StabilizeOptions& opts) {
  const Shape3 dims = vol.spatial_dims();
  validate(field, dims);
  if (opts.local_radius < 0) throw DomainError("local radius must be >= 0");
  Volume4D out = vol;
  const std::size_t n = vol.voxels_per_volume();
  const int n_coils = field.n_coils;
  for (std::size_t v = 0; v < vol.volumes(); ++v) {
    Image3D source;
    if (opts.eta_source == EtaSource::local_mean) source = box_mean(vol.volume_image(v), opts.local_radius);
    const auto in = vol.volume(v);
    auto dst = out.volume(v);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double s = field.sigma[k];
      if (s <= 0.0) continue;
      const double m = in[k];
      const double moment = opts.eta_source == EtaSource::local_mean ? source.data[k] : m;
      const double eta = estimate_eta(moment, s, n_coils, opts.beta_floor_threshold);
      dst[k] = stabilize_with_eta(m, eta, s, n_coils).m_hat;
    }
  }
  return out;
}

}  // namespace nlsam

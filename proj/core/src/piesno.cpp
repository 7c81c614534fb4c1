#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "nlsam/error.hpp"
#include "nlsam/noise_estimation.hpp"

namespace nlsam {
namespace {

struct Run {
  double sigma;
  std::vector<std::size_t> background;
  int iterations;
};

std::optional<Run> fixed_point(const std::vector<double>& mean_square, double sigma, int n_coils, double lo, double hi,
                               const PiesnoConfig& cfg) {
  std::vector<std::size_t> omega;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    omega.clear();
    const double scale = 1.0 / (2.0 * sigma * sigma);
    double acc = 0.0;
    for (std::size_t i = 0; i < mean_square.size(); ++i) {
      const double t = mean_square[i] * scale;
      if (t >= lo && t <= hi) {
        omega.push_back(i);
        acc += mean_square[i];
      }
    }
    if (omega.empty()) return std::nullopt;
    const double next = std::sqrt(acc / static_cast<double>(omega.size()) / (2.0 * n_coils));
    const bool done = std::abs(next - sigma) <= cfg.tolerance * sigma;
    sigma = next;
    if (done) return Run{sigma, omega, it};
  }
  return Run{sigma, omega, cfg.max_iters};
}

}  // namespace

PiesnoSliceResult piesno_slice(std::span<const double> values, std::size_t n_voxels, std::size_t n_volumes,
                               int n_coils, const PiesnoConfig& cfg) {
  if (n_coils < 1) throw DomainError("piesno: coil count must be >= 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0) || !(cfg.quantile > 0.0 && cfg.quantile < 1.0)) {
    throw DomainError("piesno: alpha and quantile must lie in (0, 1)");
  }
  if (n_voxels < 100) throw DomainError("piesno: a slice needs at least 100 voxels");
  if (values.size() != n_voxels * n_volumes || n_volumes == 0) throw DimensionMismatchError("piesno: slice size mismatch");

  std::vector<double> mean_square(n_voxels, 0.0);
  for (std::size_t v = 0; v < n_volumes; ++v) {
    for (std::size_t i = 0; i < n_voxels; ++i) {
      const double m = values[v * n_voxels + i];
      mean_square[i] += m * m;
    }
  }
  for (double& s : mean_square) s /= static_cast<double>(n_volumes);

  const double nv = static_cast<double>(n_volumes);
  const boost::math::gamma_distribution<double> test_dist(n_coils * nv, 1.0 / nv);
  const double lo = boost::math::quantile(test_dist, cfg.alpha / 2.0);
  const double hi = boost::math::quantile(test_dist, 1.0 - cfg.alpha / 2.0);

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  auto value_quantile = [&](double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double f = pos - static_cast<double>(i);
    return i + 1 < sorted.size() ? sorted[i] * (1.0 - f) + sorted[i + 1] * f : sorted[i];
  };

  std::optional<Run> best;
  const int starts = std::max(1, cfg.starts);
  const auto min_count = static_cast<std::size_t>(std::ceil(cfg.min_background_fraction * static_cast<double>(n_voxels)));
  bool any_nonempty = false;
  for (int s = starts; s >= 1; --s) {
    const double q = cfg.quantile * s / starts;
    const double sigma0 = value_quantile(q) / std::sqrt(2.0 * boost::math::gamma_p_inv(static_cast<double>(n_coils), q));
    if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) continue;
    auto run = fixed_point(mean_square, sigma0, n_coils, lo, hi, cfg);
    if (!run) continue;
    any_nonempty = true;
    if (run->background.size() < min_count) continue;
    if (!best || run->sigma < best->sigma) best = std::move(run);
  }
  if (!best) {
    throw NoBackgroundError(any_nonempty ? "piesno: background too small in every start"
                                         : "piesno: no background voxel identified");
  }
  return PiesnoSliceResult{best->sigma, std::move(best->background), best->iterations};
}

PiesnoResult piesno(const Volume4D& vol, int n_coils, const PiesnoConfig& cfg) {
  const auto dims = vol.spatial_dims();
  const std::size_t per_slice = dims[0] * dims[1];
  PiesnoResult result;
  result.background = Mask3D(dims, false);
  result.slice_sigma.assign(dims[2], std::numeric_limits<double>::quiet_NaN());
  std::vector<double> slice(per_slice * vol.volumes());
  std::vector<double> good;
  for (std::size_t z = 0; z < dims[2]; ++z) {
    for (std::size_t v = 0; v < vol.volumes(); ++v) {
      auto src = vol.volume(v).subspan(z * per_slice, per_slice);
      std::copy(src.begin(), src.end(), slice.begin() + static_cast<std::ptrdiff_t>(v * per_slice));
    }
    try {
      const auto r = piesno_slice(slice, per_slice, vol.volumes(), n_coils, cfg);
      result.slice_sigma[z] = r.sigma;
      good.push_back(r.sigma);
      for (std::size_t i : r.background) result.background.data[z * per_slice + i] = 1;
    } catch (const NoBackgroundError&) {
    }
  }
  if (good.empty()) throw NoBackgroundError("piesno: no slice contains identifiable background");
  std::sort(good.begin(), good.end());
  const std::size_t mid = good.size() / 2;
  result.sigma = good.size() % 2 ? good[mid] : 0.5 * (good[mid - 1] + good[mid]);
  return result;
}

}  // namespace nlsam

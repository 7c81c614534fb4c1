#include "nlsam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlsam/error.hpp"
#include "nlsam/filters.hpp"

namespace nlsam {
namespace {

constexpr double kWindowSigma = 1.5;
constexpr double kWindowTruncate = 3.3;  // radius 5: 11 taps
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

void check_pair(const Volume4D& a, const Volume4D& b, const Mask3D& mask) {
  if (a.dims() != b.dims()) throw DimensionMismatchError("compared volumes differ in dims");
  if (mask.dims != a.spatial_dims()) throw DimensionMismatchError("mask dims differ from the volumes");
  if (mask.count() == 0) throw DomainError("empty mask");
}

PsnrResult psnr_of(double max_ref, double sse, double count) {
  PsnrResult r;
  if (sse == 0.0) {
    r.infinite = true;
    r.db = std::numeric_limits<double>::infinity();
    return r;
  }
  r.db = 10.0 * std::log10(max_ref * max_ref / (sse / count));
  return r;
}

double reference_max(const Volume4D& ref, const Mask3D& mask, std::size_t v) {
  double mx = -std::numeric_limits<double>::infinity();
  const auto d = ref.volume(v);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (mask[i]) mx = std::max(mx, d[i]);
  }
  return mx;
}

double sum_sq_error(const Volume4D& ref, const Volume4D& test, const Mask3D& mask, std::size_t v) {
  const auto a = ref.volume(v);
  const auto b = test.volume(v);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (mask[i]) s += (a[i] - b[i]) * (a[i] - b[i]);
  }
  return s;
}

// Sum of the SSIM map over the masked voxels of one volume.
double ssim_sum(const Volume4D& ref, const Volume4D& test, const Mask3D& mask, std::size_t v, double range) {
  const Image3D x = ref.volume_image(v);
  const Image3D y = test.volume_image(v);
  Image3D xx(x.dims), yy(x.dims), xy(x.dims);
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx.data[i] = x.data[i] * x.data[i];
    yy.data[i] = y.data[i] * y.data[i];
    xy.data[i] = x.data[i] * y.data[i];
  }
  const std::array<double, 3> window{kWindowSigma, kWindowSigma, 0.0};
  const Image3D mx = gaussian_filter(x, window, kWindowTruncate);
  const Image3D my = gaussian_filter(y, window, kWindowTruncate);
  const Image3D sxx = gaussian_filter(xx, window, kWindowTruncate);
  const Image3D syy = gaussian_filter(yy, window, kWindowTruncate);
  const Image3D sxy = gaussian_filter(xy, window, kWindowTruncate);
  const double c1 = (kK1 * range) * (kK1 * range);
  const double c2 = (kK2 * range) * (kK2 * range);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!mask[i]) continue;
    const double vx = sxx.data[i] - mx.data[i] * mx.data[i];
    const double vy = syy.data[i] - my.data[i] * my.data[i];
    const double cov = sxy.data[i] - mx.data[i] * my.data[i];
    const double num = (2.0 * mx.data[i] * my.data[i] + c1) * (2.0 * cov + c2);
    const double den = (mx.data[i] * mx.data[i] + my.data[i] * my.data[i] + c1) * (vx + vy + c2);
    s += std::clamp(num / den, -1.0, 1.0);
  }
  return s;
}

double reference_range(const Volume4D& ref, const Mask3D& mask) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t v = 0; v < ref.volumes(); ++v) {
    const auto d = ref.volume(v);
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!mask[i]) continue;
      lo = std::min(lo, d[i]);
      hi = std::max(hi, d[i]);
    }
  }
  if (!(hi > lo)) throw DomainError("reference has zero dynamic range inside the mask");
  return hi - lo;
}

}  // namespace

PsnrResult psnr(const Volume4D& reference, const Volume4D& test, const Mask3D& mask) {
  check_pair(reference, test, mask);
  double mx = -std::numeric_limits<double>::infinity();
  double sse = 0.0;
  for (std::size_t v = 0; v < reference.volumes(); ++v) {
    mx = std::max(mx, reference_max(reference, mask, v));
    sse += sum_sq_error(reference, test, mask, v);
  }
  return psnr_of(mx, sse, static_cast<double>(mask.count() * reference.volumes()));
}

double ssim(const Volume4D& reference, const Volume4D& test, const Mask3D& mask) {
  check_pair(reference, test, mask);
  const double range = reference_range(reference, mask);
  double s = 0.0;
  for (std::size_t v = 0; v < reference.volumes(); ++v) s += ssim_sum(reference, test, mask, v, range);
  return s / static_cast<double>(mask.count() * reference.volumes());
}

QualityReport evaluate_quality(const Volume4D& reference, const Volume4D& test, const Mask3D& mask) {
  check_pair(reference, test, mask);
  const double range = reference_range(reference, mask);
  QualityReport r;
  r.mask_voxels = mask.count();
  double mx = -std::numeric_limits<double>::infinity();
  double sse = 0.0;
  double ssim_total = 0.0;
  for (std::size_t v = 0; v < reference.volumes(); ++v) {
    const double vmax = reference_max(reference, mask, v);
    const double vsse = sum_sq_error(reference, test, mask, v);
    mx = std::max(mx, vmax);
    sse += vsse;
    r.psnr_per_volume.push_back(psnr_of(vmax, vsse, static_cast<double>(r.mask_voxels)));
    const double vs = ssim_sum(reference, test, mask, v, range) / static_cast<double>(r.mask_voxels);
    r.ssim_per_volume.push_back(vs);
    ssim_total += vs;
  }
  r.psnr = psnr_of(mx, sse, static_cast<double>(r.mask_voxels * reference.volumes()));
  r.ssim = ssim_total / static_cast<double>(reference.volumes());
  return r;
}

Mask3D nonzero_mask(const Volume4D& reference) {
  Mask3D m(reference.spatial_dims(), false);
  for (std::size_t v = 0; v < reference.volumes(); ++v) {
    const auto d = reference.volume(v);
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d[i] != 0.0) m.data[i] = 1;
    }
  }
  return m;
}

}  // namespace nlsam

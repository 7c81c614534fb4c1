#include "nlsam/filters.hpp"

#include <algorithm>
#include <cmath>

#include "nlsam/error.hpp"

namespace nlsam {
namespace {

std::ptrdiff_t reflect(std::ptrdiff_t i, std::ptrdiff_t n) {
  if (n == 1) return 0;
  const std::ptrdiff_t period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

void convolve_axis(const std::vector<double>& in, std::vector<double>& out, const Shape3& dims, int axis,
                   const std::vector<double>& taps) {
  const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const std::size_t stride = axis == 0 ? 1 : axis == 1 ? dims[0] : dims[0] * dims[1];
  const auto n = static_cast<std::ptrdiff_t>(dims[axis]);
  for (std::size_t z = 0; z < dims[2]; ++z) {
    for (std::size_t y = 0; y < dims[1]; ++y) {
      for (std::size_t x = 0; x < dims[0]; ++x) {
        const std::size_t here = linear_index(dims, x, y, z);
        const std::array<std::size_t, 3> c{x, y, z};
        const std::size_t base = here - c[axis] * stride;
        const auto pos = static_cast<std::ptrdiff_t>(c[axis]);
        double acc = 0.0;
        for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
          acc += taps[static_cast<std::size_t>(t + radius)] * in[base + static_cast<std::size_t>(reflect(pos + t, n)) * stride];
        }
        out[here] = acc;
      }
    }
  }
}

}  // namespace

std::vector<double> gaussian_kernel_1d(double sigma, double truncate) {
  if (!(sigma > 0.0)) return {1.0};
  const int radius = static_cast<int>(std::ceil(truncate * sigma));
  std::vector<double> taps(2 * static_cast<std::size_t>(radius) + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
    taps[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (double& w : taps) w /= sum;
  return taps;
}

Image3D gaussian_filter(const Image3D& image, const std::array<double, 3>& sigma_voxels, double truncate) {
  Image3D out = image;
  std::vector<double> scratch(image.size());
  for (int axis = 0; axis < 3; ++axis) {
    if (!(sigma_voxels[axis] > 0.0) || image.dims[axis] < 2) continue;
    convolve_axis(out.data, scratch, image.dims, axis, gaussian_kernel_1d(sigma_voxels[axis], truncate));
    out.data.swap(scratch);
  }
  return out;
}

double highpass_variance_factor(const std::array<double, 3>& sigma_voxels, double truncate) {
  double center = 1.0;
  double energy = 1.0;
  for (double s : sigma_voxels) {
    const auto taps = gaussian_kernel_1d(s, truncate);
    center *= taps[taps.size() / 2];
    double e = 0.0;
    for (double w : taps) e += w * w;
    energy *= e;
  }
  return 1.0 - 2.0 * center + energy;
}

LocalMoments local_moments(const Image3D& image, int radius) {
  LocalMoments out{Image3D(image.dims), Image3D(image.dims)};
  const auto& d = image.dims;
  const auto r = static_cast<std::ptrdiff_t>(radius);
  for (std::size_t z = 0; z < d[2]; ++z) {
    for (std::size_t y = 0; y < d[1]; ++y) {
      for (std::size_t x = 0; x < d[0]; ++x) {
        double sum = 0.0;
        double sum2 = 0.0;
        std::size_t count = 0;
        const auto lo = [&](std::size_t c) { return static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(c) - r)); };
        const auto hi = [&](std::size_t c, std::size_t n) { return std::min(n - 1, c + static_cast<std::size_t>(r)); };
        // Shifted sums keep the variance accurate when the mean is large.
        const double ref = image(x, y, z);
        for (std::size_t k = lo(z); k <= hi(z, d[2]); ++k) {
          for (std::size_t j = lo(y); j <= hi(y, d[1]); ++j) {
            for (std::size_t i = lo(x); i <= hi(x, d[0]); ++i) {
              const double v = image(i, j, k) - ref;
              sum += v;
              sum2 += v * v;
              ++count;
            }
          }
        }
        const double mean = sum / static_cast<double>(count);
        out.mean(x, y, z) = ref + mean;
        const double var = count > 1 ? (sum2 - sum * mean) / static_cast<double>(count - 1) : 0.0;
        out.stddev(x, y, z) = std::sqrt(std::max(0.0, var));
      }
    }
  }
  return out;
}

Image3D box_mean(const Image3D& image, int radius) {
  Image3D out(image.dims);
  const auto& d = image.dims;
  // Separable running sums over clipped windows.
  std::vector<double> buf = image.data;
  std::vector<double> tmp(image.size());
  std::vector<double> cnt(image.size(), 1.0);
  std::vector<double> cnt_tmp(image.size());
  for (int axis = 0; axis < 3; ++axis) {
    const std::size_t stride = axis == 0 ? 1 : axis == 1 ? d[0] : d[0] * d[1];
    for (std::size_t z = 0; z < d[2]; ++z) {
      for (std::size_t y = 0; y < d[1]; ++y) {
        for (std::size_t x = 0; x < d[0]; ++x) {
          const std::array<std::size_t, 3> c{x, y, z};
          const std::size_t here = linear_index(d, x, y, z);
          const std::size_t base = here - c[axis] * stride;
          const std::size_t lo = c[axis] >= static_cast<std::size_t>(radius) ? c[axis] - radius : 0;
          const std::size_t hi = std::min(d[axis] - 1, c[axis] + radius);
          double s = 0.0;
          double n = 0.0;
          for (std::size_t t = lo; t <= hi; ++t) {
            s += buf[base + t * stride];
            n += cnt[base + t * stride];
          }
          tmp[here] = s;
          cnt_tmp[here] = n;
        }
      }
    }
    buf.swap(tmp);
    cnt.swap(cnt_tmp);
  }
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = buf[i] / cnt[i];
  return out;
}

Image3D median_across(const std::vector<Image3D>& images) {
  if (images.empty()) throw DomainError("median_across: no images");
  Image3D out(images.front().dims);
  std::vector<double> values(images.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t k = 0; k < images.size(); ++k) values[k] = images[k].data[i];
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    double med = values[mid];
    if (values.size() % 2 == 0) {
      med = 0.5 * (med + *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    out.data[i] = med;
  }
  return out;
}

}  // namespace nlsam

#include "nlsam/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "nlsam/error.hpp"
#include "nlsam/seeding.hpp"

namespace nlsam {
namespace {

constexpr double kLambdaPar = 1.7e-3;
constexpr double kLambdaPerp = 0.3e-3;
constexpr double kIsotropic = 0.8e-3;

double stick_signal(const Vec3& g, int axis, double b) {
  const double c = g[static_cast<std::size_t>(axis)];
  return std::exp(-b * (kLambdaPerp + (kLambdaPar - kLambdaPerp) * c * c));
}

}  // namespace

void validate(const NoiseSpec& spec) {
  if (!(spec.snr > 0.0)) throw DomainError("snr must be positive");
  if (spec.n_coils < 1) throw DomainError("coil count must be >= 1");
}

Image3D build_beta_field(const Mask3D& mask, BetaMode mode) {
  if (mask.count() == 0) throw DomainError("beta field needs a nonempty mask");
  Image3D beta(mask.dims, 1.0);
  if (mode == BetaMode::constant) return beta;
  const auto& d = mask.dims;
  double cx = 0.0, cy = 0.0, cz = 0.0;
  for (std::size_t z = 0; z < d[2]; ++z) {
    for (std::size_t y = 0; y < d[1]; ++y) {
      for (std::size_t x = 0; x < d[0]; ++x) {
        if (!mask(x, y, z)) continue;
        cx += static_cast<double>(x);
        cy += static_cast<double>(y);
        cz += static_cast<double>(z);
      }
    }
  }
  const auto count = static_cast<double>(mask.count());
  cx /= count;
  cy /= count;
  cz /= count;
  Image3D dist(d, 0.0);
  double dmax = 0.0;
  for (std::size_t z = 0; z < d[2]; ++z) {
    for (std::size_t y = 0; y < d[1]; ++y) {
      for (std::size_t x = 0; x < d[0]; ++x) {
        if (!mask(x, y, z)) continue;
        const double dd = std::hypot(static_cast<double>(x) - cx, static_cast<double>(y) - cy,
                                     static_cast<double>(z) - cz);
        dist(x, y, z) = dd;
        dmax = std::max(dmax, dd);
      }
    }
  }
  for (std::size_t i = 0; i < beta.size(); ++i) {
    if (mask[i]) beta.data[i] = dmax > 0.0 ? 1.0 + 2.0 * (1.0 - dist.data[i] / dmax) : 3.0;
  }
  return beta;
}

NoisyVolume add_noise(const Volume4D& clean, const GradientTable& table, const Mask3D& mask, const NoiseSpec& spec) {
  validate(clean);
  validate(spec);
  check_matches(table, clean.volumes());
  const Shape3 dims = clean.spatial_dims();
  if (mask.dims != dims) throw DimensionMismatchError("mask dims differ from the volume");

  double sigma = spec.sigma;
  if (sigma < 0.0) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t b : table.b0_indices()) {
      const auto vol = clean.volume(b);
      for (std::size_t i = 0; i < vol.size(); ++i) {
        if (mask[i]) {
          sum += vol[i];
          ++count;
        }
      }
    }
    if (count == 0) throw DomainError("mask selects no voxel for the b0 mean");
    sigma = std::isinf(spec.snr) ? 0.0 : sum / static_cast<double>(count) / spec.snr;
  }
  const Image3D beta = build_beta_field(mask, spec.beta);

  NoisyVolume out;
  out.sigma = sigma;
  out.noisy = clean;
  out.truth = NoiseField::constant(dims, 0.0, spec.n_coils, NoiseProvenance::ground_truth);
  for (std::size_t i = 0; i < beta.size(); ++i) out.truth.sigma[i] = sigma * beta.data[i];
  if (sigma == 0.0) return out;

  const std::size_t n = clean.voxels_per_volume();
  const std::size_t volumes = clean.volumes();
  const int coils = spec.n_coils;
  const double root_n = std::sqrt(static_cast<double>(coils));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    std::mt19937_64 rng(derive_seed({spec.seed, i}));
    std::normal_distribution<double> normal(0.0, 1.0);
    const double s = out.truth.sigma[i];
    for (std::size_t v = 0; v < volumes; ++v) {
      const double signal = clean.data()[i + n * v] / root_n;
      double acc = 0.0;
      for (int c = 0; c < coils; ++c) {
        const double re = signal + s * normal(rng);
        const double im = s * normal(rng);
        acc += re * re + im * im;
      }
      out.noisy.data()[i + n * v] = std::sqrt(acc);
    }
  }
  return out;
}

std::vector<Vec3> hemisphere_directions(std::size_t count) {
  std::vector<Vec3> dirs;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t k = 0; k < count; ++k) {
    const double z = 1.0 - (static_cast<double>(k) + 0.5) / static_cast<double>(count);
    const double r = std::sqrt(1.0 - z * z);
    const double phi = golden * static_cast<double>(k);
    dirs.push_back({r * std::cos(phi), r * std::sin(phi), z});
  }
  return dirs;
}

Phantom make_crossing_phantom(const PhantomConfig& cfg) {
  if (cfg.size < 8) throw DomainError("phantom size must be >= 8");
  if (cfg.directions < 2) throw DomainError("phantom needs at least 2 directions");
  const std::size_t s = cfg.size;
  const Shape3 dims{s, s, s};
  const auto dirs = hemisphere_directions(cfg.directions);
  std::vector<double> bvals{0.0};
  std::vector<Vec3> bvecs{Vec3{0.0, 0.0, 0.0}};
  for (const auto& g : dirs) {
    bvals.push_back(cfg.bval);
    bvecs.push_back(g);
  }

  Phantom ph;
  ph.table = GradientTable(bvals, bvecs);
  ph.mask = Mask3D(dims, false);
  ph.clean = Volume4D({s, s, s, bvals.size()}, {2.0, 2.0, 2.0});
  const double c = 0.5 * static_cast<double>(s - 1);
  const double radius = 0.44 * static_cast<double>(s);
  const double half_width = 0.14 * static_cast<double>(s);
  const double shift = 0.12 * static_cast<double>(s);
  for (std::size_t z = 0; z < s; ++z) {
    for (std::size_t y = 0; y < s; ++y) {
      for (std::size_t x = 0; x < s; ++x) {
        const double dx = static_cast<double>(x) - c;
        const double dy = static_cast<double>(y) - c;
        const double dz = static_cast<double>(z) - c;
        if (dx * dx + dy * dy + dz * dz > radius * radius) continue;
        const std::size_t i = linear_index(dims, x, y, z);
        ph.mask.data[i] = 1;
        // Bundle along x sits slightly below the center in z, the one along y
        // slightly above; they overlap in a central slab.
        const bool along_x = std::abs(dy) <= half_width && std::abs(dz + 0.5 * shift) <= half_width;
        const bool along_y = std::abs(dx) <= half_width && std::abs(dz - 0.5 * shift) <= half_width;
        for (std::size_t v = 0; v < bvals.size(); ++v) {
          const double b = bvals[v];
          double sig;
          if (along_x && along_y) {
            sig = 0.5 * (stick_signal(bvecs[v], 0, b) + stick_signal(bvecs[v], 1, b));
          } else if (along_x) {
            sig = stick_signal(bvecs[v], 0, b);
          } else if (along_y) {
            sig = stick_signal(bvecs[v], 1, b);
          } else {
            sig = std::exp(-b * kIsotropic);
          }
          ph.clean(x, y, z, v) = cfg.s0 * sig;
        }
      }
    }
  }
  return ph;
}

}  // namespace nlsam

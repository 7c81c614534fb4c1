#include "nlsam/aggregate.hpp"

#include <string>

#include "nlsam/error.hpp"

namespace nlsam {

double block_weight(std::size_t l0, AggregationWeight mode) {
  const double w = 1.0 + static_cast<double>(l0);
  return mode == AggregationWeight::literal ? w : 1.0 / w;
}

Accumulator::Accumulator(const Shape3& dims, std::size_t members)
    : dims_(dims),
      members_(members),
      num_(element_count(dims) * members, 0.0),
      den_(num_.size(), 0.0),
      ref_(element_count(dims), 0.0) {}

void Accumulator::add(const double* column, const Index3& center, int patch_size, double weight) {
  const auto ps = static_cast<std::size_t>(patch_size);
  const std::size_t r = ps / 2;
  const std::size_t n = element_count(dims_);
  for (std::size_t k = 0; k < members_; ++k) {
    for (std::size_t dz = 0; dz < ps; ++dz) {
      for (std::size_t dy = 0; dy < ps; ++dy) {
        const std::size_t base =
            k * n + linear_index(dims_, center[0] - r, center[1] - r + dy, center[2] - r + dz);
        for (std::size_t dx = 0; dx < ps; ++dx) {
          // Weights are kept relative to the first one seen at the voxel so
          // that equal weights reduce to a plain sum.
          double& ref = ref_[base - k * n + dx];
          if (ref == 0.0) ref = weight;
          const double w = weight == ref ? 1.0 : weight / ref;
          num_[base + dx] += w * *column++;
          den_[base + dx] += w;
        }
      }
    }
  }
}

std::vector<Image3D> Accumulator::resolve(const std::vector<Image3D>& fallback) const {
  if (fallback.size() != members_) throw DimensionMismatchError("one fallback image per member is required");
  const std::size_t n = element_count(dims_);
  std::vector<Image3D> out;
  out.reserve(members_);
  for (std::size_t k = 0; k < members_; ++k) {
    if (fallback[k].dims != dims_) throw DimensionMismatchError("fallback image dims differ");
    Image3D img = fallback[k];
    for (std::size_t i = 0; i < n; ++i) {
      const double den = den_[k * n + i];
      if (den > 0.0) img.data[i] = num_[k * n + i] / den;
    }
    out.push_back(std::move(img));
  }
  return out;
}

Mask3D Accumulator::coverage() const {
  Mask3D m(dims_, false);
  for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = den_[i] > 0.0 ? 1 : 0;
  return m;
}

std::vector<Image3D> aggregate_blocks(const PatchMatrix& recon, const std::vector<std::size_t>& l0,
                                      AggregationWeight mode, const std::vector<Image3D>& fallback) {
  const auto ps = static_cast<std::size_t>(recon.patch_size);
  if (l0.size() != static_cast<std::size_t>(recon.cols()) || recon.centers.size() != l0.size()) {
    throw DimensionMismatchError("one sparsity count and one center per column are required");
  }
  if (static_cast<std::size_t>(recon.rows()) != ps * ps * ps * recon.members || fallback.size() != recon.members) {
    throw DimensionMismatchError("block geometry does not match the column length");
  }
  if (fallback.empty()) return {};
  const Shape3 dims = fallback.front().dims;
  const std::size_t r = ps / 2;
  for (const auto& c : recon.centers) {
    for (std::size_t a = 0; a < 3; ++a) {
      if (c[a] < r || c[a] + r >= dims[a]) throw DimensionMismatchError("block extends past the volume");
    }
  }
  Accumulator acc(dims, recon.members);
  for (Eigen::Index j = 0; j < recon.cols(); ++j) {
    acc.add(recon.data.col(j).data(), recon.centers[static_cast<std::size_t>(j)], recon.patch_size,
            block_weight(l0[static_cast<std::size_t>(j)], mode));
  }
  return acc.resolve(fallback);
}

std::vector<std::size_t> estimate_counts(const std::vector<SubsetEstimate>& estimates, std::size_t volumes) {
  std::vector<std::size_t> count(volumes, 0);
  for (const auto& e : estimates) {
    for (std::size_t v : e.members) {
      if (v >= volumes) throw DimensionMismatchError("estimate for a volume outside the dataset");
      ++count[v];
    }
  }
  return count;
}

Volume4D average_subset_outputs(const std::vector<SubsetEstimate>& estimates, const Shape4& dims,
                                const std::array<double, 3>& spacing) {
  const Shape3 spatial{dims[0], dims[1], dims[2]};
  const std::vector<std::size_t> count = estimate_counts(estimates, dims[3]);
  for (std::size_t v = 0; v < dims[3]; ++v) {
    if (count[v] == 0) throw DimensionMismatchError("volume " + std::to_string(v) + " has no denoised estimate");
  }
  Volume4D out(dims, spacing);
  for (const auto& e : estimates) {
    if (e.images.size() != e.members.size()) throw DimensionMismatchError("one image per member is required");
    for (std::size_t k = 0; k < e.members.size(); ++k) {
      if (e.images[k].dims != spatial) throw DimensionMismatchError("estimate dims differ from the dataset");
      auto dst = out.volume(e.members[k]);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += e.images[k].data[i];
    }
  }
  for (std::size_t v = 0; v < dims[3]; ++v) {
    const double c = static_cast<double>(count[v]);
    for (double& x : out.volume(v)) x /= c;
  }
  return out;
}

}  // namespace nlsam

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

namespace nlsam {

using Vec3 = std::array<double, 3>;

inline constexpr double kDefaultB0Threshold = 50.0;

/// Per-volume b-value (s/mm^2) and gradient direction. Directions are either
/// zero (b0 volumes) or unit norm.
class GradientTable {
 public:
  GradientTable() = default;
  /// Normalizes nonzero directions; throws GradientFormatError on length
  /// mismatch, negative b-values or a table without any b0.
  GradientTable(std::vector<double> bvals, std::vector<Vec3> bvecs, double b0_threshold = kDefaultB0Threshold);

  std::size_t size() const { return bvals_.size(); }
  double bval(std::size_t i) const { return bvals_[i]; }
  const Vec3& bvec(std::size_t i) const { return bvecs_[i]; }
  const std::vector<double>& bvals() const { return bvals_; }
  const std::vector<Vec3>& bvecs() const { return bvecs_; }
  double b0_threshold() const { return b0_threshold_; }

  bool is_b0(std::size_t i) const { return bvals_[i] <= b0_threshold_; }
  std::vector<std::size_t> b0_indices() const;
  std::vector<std::size_t> dwi_indices() const;

 private:
  std::vector<double> bvals_;
  std::vector<Vec3> bvecs_;
  double b0_threshold_ = kDefaultB0Threshold;
};

/// Reads FSL-style text files: one row of V b-values, three rows of V
/// direction components.
GradientTable read_gradients(const std::filesystem::path& bval_path, const std::filesystem::path& bvec_path,
                             double b0_threshold = kDefaultB0Threshold);

void write_gradients(const GradientTable& table, const std::filesystem::path& bval_path,
                     const std::filesystem::path& bvec_path);

/// Throws GradientFormatError unless the table has one entry per volume.
void check_matches(const GradientTable& table, std::size_t volumes);

}  // namespace nlsam

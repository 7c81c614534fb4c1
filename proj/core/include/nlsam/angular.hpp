#pragma once

#include <cstddef>
#include <vector>

#include "nlsam/gradients.hpp"

namespace nlsam {

/// Volumes stacked into one 4D block: [b0, target, neighbour_1 .. neighbour_an].
struct AngularSubset {
  std::size_t target = 0;
  std::vector<std::size_t> members;
};

struct BlockConfig {
  int patch_size = 3;
  int angular_neighbors = 4;
  int stride = 1;

  /// Column length m = ps^3 (an + 2).
  std::size_t signal_length() const;
};

/// Throws DomainError unless ps is odd and positive, an >= 1 and stride >= 1.
void validate(const BlockConfig& cfg);

/// arccos(|g1 . g2| / (|g1| |g2|)) in [0, pi/2]; antipodal directions are at distance 0.
double angular_distance(const Vec3& g1, const Vec3& g2);

/// The `an` DWIs closest to `target` across all shells, ties broken by lower
/// volume index, preceded by the first b0 of the table and the target.
AngularSubset find_neighbors(const GradientTable& table, std::size_t target, int an);

/// One subset per DWI, in volume order.
std::vector<AngularSubset> build_full_subsets(const GradientTable& table, int an);

/// Indices into `subsets` chosen greedily until every DWI member of any
/// subset is covered. Each pick covers the most uncovered DWIs; ties go to the
/// lowest target index.
std::vector<std::size_t> greedy_set_cover(const std::vector<AngularSubset>& subsets, const GradientTable& table);

}  // namespace nlsam

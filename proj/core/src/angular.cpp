#include "nlsam/angular.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "nlsam/error.hpp"

namespace nlsam {

std::size_t BlockConfig::signal_length() const {
  const auto ps = static_cast<std::size_t>(patch_size);
  return ps * ps * ps * static_cast<std::size_t>(angular_neighbors + 2);
}

void validate(const BlockConfig& cfg) {
  if (cfg.patch_size < 1 || cfg.patch_size % 2 == 0) throw DomainError("patch size must be odd and >= 1");
  if (cfg.angular_neighbors < 1) throw DomainError("angular neighbours must be >= 1");
  if (cfg.stride < 1) throw DomainError("stride must be >= 1");
}

double angular_distance(const Vec3& g1, const Vec3& g2) {
  const double n1 = std::sqrt(g1[0] * g1[0] + g1[1] * g1[1] + g1[2] * g1[2]);
  const double n2 = std::sqrt(g2[0] * g2[0] + g2[1] * g2[1] + g2[2] * g2[2]);
  if (n1 == 0.0 || n2 == 0.0) throw DomainError("angular distance of a zero vector");
  const double c = std::abs(g1[0] * g2[0] + g1[1] * g2[1] + g1[2] * g2[2]) / (n1 * n2);
  return std::acos(std::min(1.0, c));
}

AngularSubset find_neighbors(const GradientTable& table, std::size_t target, int an) {
  if (target >= table.size()) throw DomainError("target index out of range");
  if (table.is_b0(target)) throw DomainError("target volume " + std::to_string(target) + " is a b0");
  if (an < 1) throw DomainError("angular neighbours must be >= 1");
  const auto b0s = table.b0_indices();
  if (b0s.empty()) throw GradientFormatError("gradient table has no b0");

  std::vector<std::pair<double, std::size_t>> candidates;
  for (std::size_t i : table.dwi_indices()) {
    if (i != target) candidates.emplace_back(angular_distance(table.bvec(target), table.bvec(i)), i);
  }
  if (candidates.size() < static_cast<std::size_t>(an)) {
    throw DomainError("only " + std::to_string(candidates.size()) + " candidate DWIs for " + std::to_string(an) +
                      " angular neighbours");
  }
  std::partial_sort(candidates.begin(), candidates.begin() + an, candidates.end());

  AngularSubset s;
  s.target = target;
  s.members.reserve(static_cast<std::size_t>(an) + 2);
  s.members.push_back(b0s.front());
  s.members.push_back(target);
  for (int k = 0; k < an; ++k) s.members.push_back(candidates[static_cast<std::size_t>(k)].second);
  return s;
}

std::vector<AngularSubset> build_full_subsets(const GradientTable& table, int an) {
  std::vector<AngularSubset> out;
  for (std::size_t i : table.dwi_indices()) out.push_back(find_neighbors(table, i, an));
  return out;
}

std::vector<std::size_t> greedy_set_cover(const std::vector<AngularSubset>& subsets, const GradientTable& table) {
  std::vector<std::vector<std::size_t>> dwis(subsets.size());
  std::set<std::size_t> uncovered;
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    for (std::size_t v : subsets[s].members) {
      if (v < table.size() && !table.is_b0(v)) {
        dwis[s].push_back(v);
        uncovered.insert(v);
      }
    }
  }
  std::vector<std::size_t> order(subsets.size());
  for (std::size_t s = 0; s < order.size(); ++s) order[s] = s;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return subsets[a].target < subsets[b].target; });

  std::vector<std::size_t> selected;
  std::vector<bool> used(subsets.size(), false);
  while (!uncovered.empty()) {
    std::size_t best = subsets.size();
    std::size_t best_gain = 0;
    for (std::size_t s : order) {
      if (used[s]) continue;
      std::size_t gain = 0;
      for (std::size_t v : dwis[s]) gain += uncovered.count(v);
      if (gain > best_gain) {
        best_gain = gain;
        best = s;
      }
    }
    if (best == subsets.size()) break;
    used[best] = true;
    selected.push_back(best);
    for (std::size_t v : dwis[best]) uncovered.erase(v);
  }
  return selected;
}

}  // namespace nlsam

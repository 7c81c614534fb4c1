#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nlsam/aggregate.hpp"
#include "nlsam/angular.hpp"
#include "nlsam/gradients.hpp"
#include "nlsam/noise_estimation.hpp"
#include "nlsam/sparse.hpp"
#include "nlsam/stabilize.hpp"
#include "nlsam/volume.hpp"

namespace nlsam {

enum class DenoiseMode { full, fast };

struct DenoiseConfig {
  BlockConfig block;
  PenaltyRule penalty;
  DenoiseMode mode = DenoiseMode::full;
  bool stabilize = true;
  StabilizeOptions stabilize_options;
  AggregationWeight weight = AggregationWeight::inverse_sparsity;
  bool global_dictionary = false;
  int epochs = 150;
  std::size_t max_training_columns = 200000;
  LassoOptions lasso{1e-6, 2000};
  std::uint64_t seed = 0;
  int threads = 0;  ///< 0 keeps the OpenMP default
  std::function<void(const std::string&)> log;
};

struct DenoiseReport {
  std::size_t subsets_total = 0;
  std::size_t subsets_processed = 0;
  std::vector<std::size_t> targets;    ///< target volume of each processed subset (input indexing)
  std::size_t columns_encoded = 0;
  std::size_t bound_misses = 0;        ///< columns whose residual bound was unreachable
  std::size_t dictionaries_trained = 0;
  double seconds = 0.0;
};

/// Full denoising: optional stabilization, angular subsets (all DWIs or a
/// greedy cover), per-subset dictionary learning and bounded sparse coding,
/// overlap aggregation and averaging across subsets.
///
/// b0 volumes are averaged into one before block assembly and every b0 of the
/// output receives the denoised average. Voxels outside `mask` are copied
/// from the input; an empty mask selects every voxel. Output is clamped at 0.
Volume4D nlsam_denoise(const Volume4D& vol, const GradientTable& table, const NoiseField& field,
                       const Mask3D& mask, const DenoiseConfig& cfg, DenoiseReport* report = nullptr);

}  // namespace nlsam

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "nlsam/sparse.hpp"

namespace nlsam {

struct TrainConfig {
  std::size_t atoms = 0;  ///< 0 selects p = 2m
  int epochs = 150;
  double lambda = 0.0;    ///< 0 selects PenaltyRule::lambda_train(m)
  std::uint64_t seed = 0;
  std::size_t max_columns = 200000;
  LassoOptions lasso{1e-6, 2000};
};

struct TrainedDictionary {
  Dictionary dict;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  /// Mean of 1/2 ||x - D a||^2 + lambda ||a||_1 over the (unit-norm) training
  /// columns: entry 0 at initialization, entry e after epoch e.
  std::vector<double> objective_history;
  std::size_t training_columns = 0;
};

/// Alternating minimization of the nonnegative dictionary learning objective
/// over the columns of `samples`, each scaled to unit norm. Coding uses
/// nn_lasso warm-started from the previous epoch; the dictionary step is one
/// block-coordinate pass over the atoms with projection onto
/// {d >= 0, ||d|| <= 1}, after which shrunken atoms are rescaled to unit norm
/// and their coefficients scaled inversely. Atoms left unused are replaced by
/// the worst-represented training column.
TrainedDictionary train_dictionary(const Eigen::MatrixXd& samples, const TrainConfig& cfg = {});

/// Stores the atoms as an m x p x 1 float64 NIfTI-1 image plus `<path>.txt`
/// with m, p, lambda and seed.
void write_dictionary(const TrainedDictionary& dict, const std::filesystem::path& path);
TrainedDictionary read_dictionary(const std::filesystem::path& path);

}  // namespace nlsam

#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "nlsam/sparse.hpp"

namespace nlsam {

/// Solves  min ||w a||_1  s.t. 1/2 ||x - D a||^2 <= lambda_i, a >= 0  with
/// reweighting w = 1 / (|a| + eps), eps = max |D^T xi|, xi ~ N(0, sigma^2).
///
/// Each weighted problem is solved in Lagrangian form by bisection on the
/// multiplier until the residual lands in [0.95 lambda_i, lambda_i]; the
/// feasible side of the bracket is always returned. When even the
/// unpenalized fit misses the bound, that fit is returned with bound_met = false.
SparseCode encode_bounded(const Eigen::VectorXd& x, const NnLasso& solver, double lambda_i, double sigma_for_eps,
                          std::uint64_t seed, const PenaltyRule& rule = {});

SparseCode encode_bounded(const Eigen::VectorXd& x, const Dictionary& dict, double lambda_i, double sigma_for_eps,
                          std::uint64_t seed, const PenaltyRule& rule = {});

}  // namespace nlsam

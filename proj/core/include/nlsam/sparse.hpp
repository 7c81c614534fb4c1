#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace nlsam {

/// m x p nonnegative matrix whose columns (atoms) have unit l2 norm.
struct Dictionary {
  Eigen::MatrixXd atoms;

  Eigen::Index m() const { return atoms.rows(); }
  Eigen::Index p() const { return atoms.cols(); }
};

/// Throws DomainError if an entry is negative or an atom norm is off by more than `tol`.
void validate(const Dictionary& dict, double tol = 1e-8);

struct SparseCode {
  Eigen::VectorXd alpha;
  std::vector<Eigen::Index> support;
  double residual_sq = 0.0;  ///< 1/2 ||x - D alpha||^2
  Eigen::VectorXd weights;
  double epsilon = 0.0;
  int iterations = 0;        ///< reweighting passes (encode_bounded) or sweeps (nn_lasso)
  bool converged = true;
  bool bound_met = true;     ///< residual_sq <= lambda_i for encode_bounded
};

struct PenaltyRule {
  double reweight_tolerance = 1e-5;
  int max_reweight_iterations = 40;
  /// Multiplies both lambda formulas; 1 reproduces them as written.
  double lambda_scale = 1.0;

  /// 1.2 / sqrt(m), used for training on unit-norm columns.
  double lambda_train(std::size_t m) const;
  /// Read ||x - D a||^2 <= lambda_i (lambda_i bounds the squared norm of the
  /// noise); false applies lambda_i to 1/2 ||x - D a||^2 as printed.
  bool bound_on_squared_norm = true;

  /// sigma_i^2 (m + 3 sqrt(2m)).
  double lambda_local(double sigma_sq, std::size_t m) const;
  /// Bound on 1/2 ||x - D a||^2 handed to encode_bounded: lambda_i / 2 by default,
  /// lambda_i under the printed reading.
  double residual_bound(double sigma_sq, std::size_t m) const;
};

struct LassoOptions {
  /// KKT residual allowed, relative to ||x||.
  double kkt_tolerance = 1e-6;
  int max_sweeps = 100000;
};

/// Nonnegative weighted lasso  min_{a >= 0} 1/2 ||x - D a||^2 + mu sum_k w_k a_k.
/// An active-set method on the Gram matrix solves the support exactly; coordinate
/// descent takes over when the support becomes rank deficient. Both stop on the
/// KKT conditions.
class NnLasso {
 public:
  explicit NnLasso(const Dictionary& dict, LassoOptions opts = {});

  const Dictionary& dictionary() const { return *dict_; }
  const Eigen::MatrixXd& gram() const { return gram_; }
  const LassoOptions& options() const { return opts_; }

  /// `dtx` = D^T x, `x_norm` = ||x||. `alpha` is the warm start and receives
  /// the solution. Returns the number of iterations, negative if max_sweeps ran out.
  int solve(const Eigen::VectorXd& dtx, double x_norm, double mu, const Eigen::VectorXd& weights,
            Eigen::VectorXd& alpha) const;

  SparseCode solve(const Eigen::VectorXd& x, double mu, const Eigen::VectorXd& weights) const;

  double residual_sq(const Eigen::VectorXd& x, const Eigen::VectorXd& alpha) const;

 private:
  bool active_set(const Eigen::VectorXd& q, double tol, Eigen::VectorXd& alpha, int& steps) const;

  const Dictionary* dict_;
  Eigen::MatrixXd gram_;
  LassoOptions opts_;
};

SparseCode nn_lasso(const Eigen::VectorXd& x, const Dictionary& dict, double mu, const Eigen::VectorXd& weights,
                    const LassoOptions& opts = {});

std::vector<Eigen::Index> support_of(const Eigen::VectorXd& alpha);

}  // namespace nlsam

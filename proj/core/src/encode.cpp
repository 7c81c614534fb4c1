#include "nlsam/encode.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nlsam/error.hpp"

namespace nlsam {
namespace {

constexpr int kBisectionSteps = 20;
constexpr double kBandLow = 0.95;

struct BoundedFit {
  Eigen::VectorXd alpha;
  double residual_sq = 0.0;
  double mu = 0.0;
  bool feasible = false;
};

// Largest-multiplier feasible fit of one weighted problem.
BoundedFit fit_bound(const NnLasso& solver, const Eigen::VectorXd& x, const Eigen::VectorXd& dtx, double x_norm,
                     double lambda_i, const Eigen::VectorXd& w, double mu_guess, const Eigen::VectorXd& warm) {
  double lo = 0.0;
  double hi = (dtx.array() / w.array()).maxCoeff();
  BoundedFit best;
  bool have_feasible = false;
  Eigen::VectorXd alpha = warm;

  auto trial = [&](double mu) {
    solver.solve(dtx, x_norm, mu, w, alpha);
    const double r = solver.residual_sq(x, alpha);
    if (r <= lambda_i) {
      lo = mu;
      best.alpha = alpha;
      best.residual_sq = r;
      best.mu = mu;
      have_feasible = true;
      return r >= kBandLow * lambda_i;
    }
    hi = mu;
    return false;
  };

  bool done = false;
  if (mu_guess > 0.0 && mu_guess < hi) done = trial(mu_guess);
  for (int step = 0; step < kBisectionSteps && !done; ++step) done = trial(0.5 * (lo + hi));
  if (!have_feasible) {
    alpha = warm;
    trial(0.0);
  }
  best.feasible = have_feasible;
  if (!have_feasible) {
    best.alpha = alpha;
    best.residual_sq = solver.residual_sq(x, alpha);
  }
  return best;
}

}  // namespace

SparseCode encode_bounded(const Eigen::VectorXd& x, const NnLasso& solver, double lambda_i, double sigma_for_eps,
                          std::uint64_t seed, const PenaltyRule& rule) {
  const Dictionary& dict = solver.dictionary();
  if (x.size() != dict.m()) throw DimensionMismatchError("signal length differs from the dictionary");
  if (!(lambda_i > 0.0)) throw DomainError("lambda_i must be positive");
  const Eigen::Index p = dict.p();

  SparseCode code;
  code.alpha = Eigen::VectorXd::Zero(p);
  code.weights = Eigen::VectorXd::Ones(p);
  const double half_norm_sq = 0.5 * x.squaredNorm();
  if (half_norm_sq <= lambda_i) {
    code.residual_sq = half_norm_sq;
    return code;
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd xi(x.size());
  for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = std::max(0.0, sigma_for_eps) * normal(rng);
  code.epsilon = (dict.atoms.transpose() * xi).cwiseAbs().maxCoeff();
  if (!(code.epsilon > 0.0)) code.epsilon = 1e-12 * std::max(1.0, x.norm());

  const Eigen::VectorXd dtx = dict.atoms.transpose() * x;
  const double x_norm = x.norm();
  Eigen::VectorXd w = Eigen::VectorXd::Ones(p);
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(p);
  double mu = 0.0;
  BoundedFit fit;
  code.converged = false;
  for (int it = 1; it <= rule.max_reweight_iterations; ++it) {
    fit = fit_bound(solver, x, dtx, x_norm, lambda_i, w, mu, prev);
    code.iterations = it;
    mu = fit.mu;
    const double change = (fit.alpha - prev).cwiseAbs().maxCoeff();
    prev = fit.alpha;
    code.weights = w;
    if (!fit.feasible) break;
    if (change < rule.reweight_tolerance) {
      code.converged = true;
      break;
    }
    w = (fit.alpha.cwiseAbs().array() + code.epsilon).inverse().matrix();
  }
  code.alpha = fit.alpha;
  code.residual_sq = fit.residual_sq;
  code.bound_met = fit.feasible;
  code.support = support_of(code.alpha);
  return code;
}

SparseCode encode_bounded(const Eigen::VectorXd& x, const Dictionary& dict, double lambda_i, double sigma_for_eps,
                          std::uint64_t seed, const PenaltyRule& rule) {
  return encode_bounded(x, NnLasso(dict), lambda_i, sigma_for_eps, seed, rule);
}

}  // namespace nlsam

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlsam/error.hpp"
#include "nlsam/sparse.hpp"

namespace nlsam {
namespace {

// Largest KKT violation; `active_only` skips the zero coordinates.
double kkt_violation(const Eigen::VectorXd& c, const Eigen::VectorXd& alpha, double mu, const Eigen::VectorXd& w,
                     bool active_only) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    const double g = c[k] - mu * w[k];
    if (alpha[k] > 0.0) {
      worst = std::max(worst, std::abs(g));
    } else if (!active_only) {
      worst = std::max(worst, g);
    }
  }
  return worst;
}

}  // namespace

void validate(const Dictionary& dict, double tol) {
  if (dict.m() == 0 || dict.p() == 0) throw DomainError("empty dictionary");
  if ((dict.atoms.array() < 0.0).any()) throw DomainError("dictionary has negative entries");
  for (Eigen::Index j = 0; j < dict.p(); ++j) {
    if (std::abs(dict.atoms.col(j).norm() - 1.0) > tol) throw DomainError("dictionary atom without unit norm");
  }
}

double PenaltyRule::lambda_train(std::size_t m) const { return lambda_scale * 1.2 / std::sqrt(static_cast<double>(m)); }

double PenaltyRule::lambda_local(double sigma_sq, std::size_t m) const {
  const double md = static_cast<double>(m);
  return lambda_scale * sigma_sq * (md + 3.0 * std::sqrt(2.0 * md));
}

double PenaltyRule::residual_bound(double sigma_sq, std::size_t m) const {
  const double lambda_i = lambda_local(sigma_sq, m);
  return bound_on_squared_norm ? 0.5 * lambda_i : lambda_i;
}

std::vector<Eigen::Index> support_of(const Eigen::VectorXd& alpha) {
  std::vector<Eigen::Index> s;
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    if (alpha[k] > 0.0) s.push_back(k);
  }
  return s;
}

NnLasso::NnLasso(const Dictionary& dict, LassoOptions opts)
    : dict_(&dict), gram_(dict.atoms.transpose() * dict.atoms), opts_(opts) {}

// Lawson-Hanson active-set iteration on the Gram form
//   min 1/2 a^T G a - q^T a,  a >= 0,  q = D^T x - mu w.
// Returns false if it ran out of iterations.
bool NnLasso::active_set(const Eigen::VectorXd& q, double tol, Eigen::VectorXd& alpha, int& steps) const {
  const Eigen::Index p = gram_.rows();
  std::vector<Eigen::Index> set;
  for (Eigen::Index k = 0; k < p; ++k) {
    if (alpha[k] > 0.0) set.push_back(k);
  }
  std::vector<bool> in_set(static_cast<std::size_t>(p), false);
  for (Eigen::Index k : set) in_set[static_cast<std::size_t>(k)] = true;

  auto restricted_solve = [&](Eigen::VectorXd& z) {
    const auto n = static_cast<Eigen::Index>(set.size());
    Eigen::MatrixXd g(n, n);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      rhs[i] = q[set[static_cast<std::size_t>(i)]];
      for (Eigen::Index j = 0; j < n; ++j) g(i, j) = gram_(set[static_cast<std::size_t>(i)], set[static_cast<std::size_t>(j)]);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
    z = ldlt.solve(rhs);
    return ldlt.info() == Eigen::Success && z.allFinite();
  };

  // Moves alpha toward the restricted solution, dropping coordinates that hit zero.
  auto settle = [&]() {
    Eigen::VectorXd z;
    for (int guard = 0; guard < 4 * static_cast<int>(p) + 8; ++guard) {
      ++steps;
      if (set.empty()) return true;
      if (!restricted_solve(z)) return false;
      double t = 1.0;
      for (std::size_t i = 0; i < set.size(); ++i) {
        if (z[static_cast<Eigen::Index>(i)] <= 0.0) {
          const double a = alpha[set[i]];
          t = std::min(t, a / (a - z[static_cast<Eigen::Index>(i)]));
        }
      }
      for (std::size_t i = 0; i < set.size(); ++i) {
        alpha[set[i]] += t * (z[static_cast<Eigen::Index>(i)] - alpha[set[i]]);
      }
      if (t >= 1.0) return true;
      std::vector<Eigen::Index> kept;
      for (std::size_t i = 0; i < set.size(); ++i) {
        const Eigen::Index k = set[i];
        if (z[static_cast<Eigen::Index>(i)] <= 0.0 && alpha[k] <= 1e-14 * (1.0 + std::abs(z[static_cast<Eigen::Index>(i)]))) {
          alpha[k] = 0.0;
          in_set[static_cast<std::size_t>(k)] = false;
        } else if (alpha[k] <= 0.0) {
          alpha[k] = 0.0;
          in_set[static_cast<std::size_t>(k)] = false;
        } else {
          kept.push_back(k);
        }
      }
      if (kept.size() == set.size()) {
        // The blocking coordinate is the one with the smallest ratio; drop it.
        std::size_t drop = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < set.size(); ++i) {
          if (alpha[set[i]] < best) {
            best = alpha[set[i]];
            drop = i;
          }
        }
        alpha[set[drop]] = 0.0;
        in_set[static_cast<std::size_t>(set[drop])] = false;
        kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(drop));
      }
      set = std::move(kept);
    }
    return false;
  };

  if (!settle()) return false;
  const int limit = 4 * static_cast<int>(p) + 16;
  for (int outer = 0; outer < limit; ++outer) {
    Eigen::VectorXd g = q;
    for (Eigen::Index k : set) g.noalias() -= alpha[k] * gram_.col(k);
    Eigen::Index best = -1;
    double best_g = tol;
    for (Eigen::Index k = 0; k < p; ++k) {
      if (!in_set[static_cast<std::size_t>(k)] && g[k] > best_g) {
        best_g = g[k];
        best = k;
      }
    }
    if (best < 0) {
      double worst = 0.0;
      for (Eigen::Index k : set) worst = std::max(worst, std::abs(g[k]));
      return worst < tol;
    }
    set.push_back(best);
    in_set[static_cast<std::size_t>(best)] = true;
    if (!settle()) return false;
  }
  return false;
}

int NnLasso::solve(const Eigen::VectorXd& dtx, double x_norm, double mu, const Eigen::VectorXd& weights,
                   Eigen::VectorXd& alpha) const {
  const Eigen::Index p = gram_.rows();
  if (alpha.size() != p) alpha = Eigen::VectorXd::Zero(p);
  if (x_norm == 0.0) {
    alpha.setZero();
    return 0;
  }
  const double tol = opts_.kkt_tolerance * x_norm;
  const Eigen::VectorXd penalty = mu * weights;
  const Eigen::VectorXd q = dtx - penalty;

  int sweeps = 0;
  const Eigen::VectorXd start = alpha;
  if (active_set(q, 0.5 * tol, alpha, sweeps)) return sweeps;
  // Degenerate active set (rank-deficient support): coordinate descent from the warm start.
  alpha = start.cwiseMax(0.0);

  auto update = [&](Eigen::Index k, Eigen::VectorXd& c) {
    const double gkk = gram_(k, k);
    if (gkk <= 0.0) return;
    const double next = std::max(0.0, alpha[k] + (c[k] - penalty[k]) / gkk);
    const double delta = next - alpha[k];
    if (delta != 0.0) {
      c.noalias() -= delta * gram_.col(k);
      alpha[k] = next;
    }
  };

  const double inner_tol = 0.5 * tol;
  std::vector<Eigen::Index> active;
  while (sweeps < opts_.max_sweeps) {
    Eigen::VectorXd c = dtx;
    for (Eigen::Index k = 0; k < p; ++k) {
      if (alpha[k] > 0.0) c.noalias() -= alpha[k] * gram_.col(k);
    }
    if (kkt_violation(c, alpha, mu, weights, false) < tol) return sweeps;

    for (Eigen::Index k = 0; k < p; ++k) update(k, c);
    ++sweeps;
    while (sweeps < opts_.max_sweeps) {
      active.clear();
      for (Eigen::Index k = 0; k < p; ++k) {
        if (alpha[k] > 0.0) active.push_back(k);
      }
      double worst = 0.0;
      for (Eigen::Index k : active) worst = std::max(worst, std::abs(c[k] - penalty[k]));
      if (worst < inner_tol) break;
      for (Eigen::Index k : active) update(k, c);
      ++sweeps;
    }
  }
  return -sweeps;
}

double NnLasso::residual_sq(const Eigen::VectorXd& x, const Eigen::VectorXd& alpha) const {
  Eigen::VectorXd r = x;
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    if (alpha[k] > 0.0) r.noalias() -= alpha[k] * dict_->atoms.col(k);
  }
  return 0.5 * r.squaredNorm();
}

SparseCode NnLasso::solve(const Eigen::VectorXd& x, double mu, const Eigen::VectorXd& weights) const {
  if (x.size() != dict_->m() || weights.size() != dict_->p()) throw DimensionMismatchError("lasso dimensions disagree");
  if (!x.allFinite() || !weights.allFinite() || !std::isfinite(mu)) throw DomainError("non-finite lasso input");
  if (mu < 0.0 || (weights.array() <= 0.0).any()) throw DomainError("lasso penalty and weights must be positive");
  SparseCode code;
  code.alpha = Eigen::VectorXd::Zero(dict_->p());
  const int sweeps = solve(dict_->atoms.transpose() * x, x.norm(), mu, weights, code.alpha);
  code.iterations = std::abs(sweeps);
  code.converged = sweeps >= 0;
  code.support = support_of(code.alpha);
  code.residual_sq = residual_sq(x, code.alpha);
  code.weights = weights;
  return code;
}

SparseCode nn_lasso(const Eigen::VectorXd& x, const Dictionary& dict, double mu, const Eigen::VectorXd& weights,
                    const LassoOptions& opts) {
  return NnLasso(dict, opts).solve(x, mu, weights);
}

}  // namespace nlsam

#include "nlsam/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <string>

#include "nlsam/error.hpp"
#include "nlsam/nifti.hpp"

namespace nlsam {
namespace {

using Code = std::vector<std::pair<Eigen::Index, double>>;

constexpr Eigen::Index kChunk = 4096;
constexpr double kDuplicateCosine = 0.99;

Eigen::VectorXd dense(const Code& c, Eigen::Index p) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(p);
  for (const auto& [k, v] : c) a[k] = v;
  return a;
}

Code sparse(const Eigen::VectorXd& a) {
  Code c;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if (a[k] > 0.0) c.emplace_back(k, a[k]);
  }
  return c;
}

// 1/2 ||x - D a||^2 from ||x||^2, D^T x and the Gram matrix.
double half_residual(double x_sq, const Eigen::Ref<const Eigen::VectorXd>& dtx, const Eigen::MatrixXd& gram,
                     const Code& c) {
  double cross = 0.0;
  double quad = 0.0;
  for (const auto& [k, v] : c) {
    cross += v * dtx[k];
    for (const auto& [l, u] : c) quad += v * u * gram(k, l);
  }
  return std::max(0.0, 0.5 * x_sq - cross + 0.5 * quad);
}

double l1(const Code& c) {
  double s = 0.0;
  for (const auto& [k, v] : c) s += v;
  return s;
}

Eigen::MatrixXd prepare_samples(const Eigen::MatrixXd& samples, const TrainConfig& cfg, std::size_t p,
                                std::mt19937_64& rng) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    if (samples.col(j).norm() > 0.0) keep.push_back(j);
  }
  if (keep.empty()) throw DomainError("empty training set");
  if (keep.size() > cfg.max_columns) {
    std::shuffle(keep.begin(), keep.end(), rng);
    keep.resize(cfg.max_columns);
    std::sort(keep.begin(), keep.end());
  }
  const Eigen::Index m = samples.rows();
  const Eigen::Index n = static_cast<Eigen::Index>(std::max(keep.size(), p));
  Eigen::MatrixXd x(m, n);
  for (std::size_t j = 0; j < keep.size(); ++j) x.col(static_cast<Eigen::Index>(j)) = samples.col(keep[j]);
  // Too few columns: perturbed copies of random real ones.
  std::uniform_int_distribution<std::size_t> pick(0, keep.size() - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index j = static_cast<Eigen::Index>(keep.size()); j < n; ++j) {
    Eigen::VectorXd col = samples.col(keep[pick(rng)]);
    const double scale = 0.01 * col.norm() / std::sqrt(static_cast<double>(m));
    for (Eigen::Index i = 0; i < m; ++i) col[i] = std::max(0.0, col[i] + scale * normal(rng));
    x.col(j) = col;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const double nrm = x.col(j).norm();
    if (nrm > 0.0) x.col(j) /= nrm;
  }
  return x;
}

Eigen::VectorXd unit_nonnegative(const Eigen::VectorXd& v) {
  Eigen::VectorXd d = v.cwiseMax(0.0);
  const double nrm = d.norm();
  if (nrm > 0.0) return d / nrm;
  return Eigen::VectorXd::Constant(v.size(), 1.0 / std::sqrt(static_cast<double>(v.size())));
}

// k-means++ style seeding on the clipped unit columns of a random pool:
// each new atom is drawn with probability proportional to 1 - max cos^2
// against the atoms already chosen.
Eigen::MatrixXd seed_atoms(const Eigen::MatrixXd& x, Eigen::Index p, std::mt19937_64& rng) {
  const Eigen::Index m = x.rows();
  const Eigen::Index n = x.cols();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  const Eigen::Index pool_size = std::min(n, std::max<Eigen::Index>(20 * p, 1000));
  Eigen::MatrixXd pool(m, pool_size);
  for (Eigen::Index j = 0; j < pool_size; ++j) pool.col(j) = unit_nonnegative(x.col(order[static_cast<std::size_t>(j)]));

  Eigen::MatrixXd d(m, p);
  Eigen::VectorXd dist = Eigen::VectorXd::Ones(pool_size);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<char> taken(static_cast<std::size_t>(pool_size), 0);
  for (Eigen::Index k = 0; k < p; ++k) {
    const double total = dist.sum();
    Eigen::Index pick = -1;
    if (total > 1e-12) {
      double r = u(rng) * total;
      for (Eigen::Index j = 0; j < pool_size; ++j) {
        if (dist[j] <= 0.0) continue;
        pick = j;
        r -= dist[j];
        if (r <= 0.0) break;
      }
    } else {
      // Every pool column already has a matching atom: repeat unused ones first.
      for (Eigen::Index j = 0; j < pool_size && pick < 0; ++j)
        if (!taken[static_cast<std::size_t>(j)]) pick = j;
      if (pick < 0) pick = k % pool_size;
    }
    taken[static_cast<std::size_t>(pick)] = 1;
    d.col(k) = pool.col(pick);
    const Eigen::VectorXd cos = pool.transpose() * d.col(k);
    dist = dist.cwiseMin((1.0 - cos.array().square()).max(0.0).matrix());
  }
  return d;
}

}  // namespace

TrainedDictionary train_dictionary(const Eigen::MatrixXd& samples, const TrainConfig& cfg) {
  const Eigen::Index m = samples.rows();
  if (m == 0 || samples.cols() == 0) throw DomainError("empty training set");
  if (!samples.allFinite()) throw DomainError("non-finite training data");
  if (cfg.epochs < 0) throw DomainError("epochs must be >= 0");
  const std::size_t p_atoms = cfg.atoms == 0 ? 2 * static_cast<std::size_t>(m) : cfg.atoms;
  const auto p = static_cast<Eigen::Index>(p_atoms);

  TrainedDictionary out;
  out.seed = cfg.seed;
  out.lambda = cfg.lambda > 0.0 ? cfg.lambda : PenaltyRule{}.lambda_train(static_cast<std::size_t>(m));
  const double lambda = out.lambda;

  std::mt19937_64 rng(cfg.seed);
  const Eigen::MatrixXd x = prepare_samples(samples, cfg, p_atoms, rng);
  const Eigen::Index n = x.cols();
  out.training_columns = static_cast<std::size_t>(n);

  Eigen::MatrixXd d = seed_atoms(x, p, rng);

  std::vector<Code> codes(static_cast<std::size_t>(n));
  std::vector<double> residual(static_cast<std::size_t>(n), 0.0);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(p);

  // Objective of the current codes under the current dictionary; with
  // `recode`, also runs the coding step and records the new residuals.
  auto pass = [&](const Dictionary& dict, bool recode) {
    const NnLasso solver(dict, cfg.lasso);
    const Eigen::MatrixXd& gram = solver.gram();
    double total = 0.0;
    std::vector<double> obj(static_cast<std::size_t>(kChunk));
    for (Eigen::Index start = 0; start < n; start += kChunk) {
      const Eigen::Index len = std::min(kChunk, n - start);
      const Eigen::MatrixXd dtx = dict.atoms.transpose() * x.middleCols(start, len);
#pragma omp parallel for schedule(static)
      for (Eigen::Index j = 0; j < len; ++j) {
        const auto col = static_cast<std::size_t>(start + j);
        Code& c = codes[col];
        obj[static_cast<std::size_t>(j)] = half_residual(1.0, dtx.col(j), gram, c) + lambda * l1(c);
        if (recode) {
          Eigen::VectorXd a = dense(c, p);
          solver.solve(dtx.col(j), 1.0, lambda, ones, a);
          c = sparse(a);
          residual[col] = half_residual(1.0, dtx.col(j), gram, c);
        }
      }
      for (Eigen::Index j = 0; j < len; ++j) total += obj[static_cast<std::size_t>(j)];
    }
    return total / static_cast<double>(n);
  };

  Dictionary dict{d};
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    out.objective_history.push_back(pass(dict, true));

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m, p);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (const auto& [k, v] : codes[static_cast<std::size_t>(j)]) {
        b.col(k).noalias() += v * x.col(j);
        for (const auto& [l, u] : codes[static_cast<std::size_t>(j)]) a(k, l) += v * u;
      }
    }

    std::vector<Eigen::Index> dead;
    for (Eigen::Index k = 0; k < p; ++k) {
      if (a(k, k) <= 0.0) {
        dead.push_back(k);
        continue;
      }
      Eigen::VectorXd u = dict.atoms.col(k) + (b.col(k) - dict.atoms * a.col(k)) / a(k, k);
      u = u.cwiseMax(0.0);
      const double nrm = u.norm();
      if (nrm > 1.0) u /= nrm;
      dict.atoms.col(k) = u;
    }

    std::vector<double> scale(static_cast<std::size_t>(p), 1.0);
    for (Eigen::Index k = 0; k < p; ++k) {
      if (a(k, k) <= 0.0) continue;
      const double nrm = dict.atoms.col(k).norm();
      if (nrm <= 0.0) {
        dead.push_back(k);
        scale[static_cast<std::size_t>(k)] = 0.0;
      } else if (nrm < 1.0) {
        dict.atoms.col(k) /= nrm;
        scale[static_cast<std::size_t>(k)] = nrm;
      }
    }
    // Near-duplicate atoms: the less used one is freed for replacement.
    const Eigen::MatrixXd cos = dict.atoms.transpose() * dict.atoms;
    for (Eigen::Index k = 0; k < p; ++k) {
      if (scale[static_cast<std::size_t>(k)] == 0.0 || a(k, k) <= 0.0) continue;
      for (Eigen::Index l = k + 1; l < p; ++l) {
        if (scale[static_cast<std::size_t>(l)] == 0.0 || a(l, l) <= 0.0 || cos(k, l) <= kDuplicateCosine) continue;
        const Eigen::Index drop = a(l, l) < a(k, k) ? l : k;
        dead.push_back(drop);
        scale[static_cast<std::size_t>(drop)] = 0.0;
        if (drop == k) break;
      }
    }
    for (Code& c : codes) {
      for (auto& [k, v] : c) v *= scale[static_cast<std::size_t>(k)];
      std::erase_if(c, [](const auto& e) { return e.second <= 0.0; });
    }

    if (!dead.empty()) {
      std::sort(dead.begin(), dead.end());
      std::vector<Eigen::Index> worst(static_cast<std::size_t>(n));
      std::iota(worst.begin(), worst.end(), Eigen::Index{0});
      const std::size_t take = std::min(dead.size(), worst.size());
      std::partial_sort(worst.begin(), worst.begin() + static_cast<std::ptrdiff_t>(take), worst.end(),
                        [&](Eigen::Index i, Eigen::Index j) {
                          const double ri = residual[static_cast<std::size_t>(i)];
                          const double rj = residual[static_cast<std::size_t>(j)];
                          return ri != rj ? ri > rj : i < j;
                        });
      for (std::size_t i = 0; i < dead.size(); ++i) {
        dict.atoms.col(dead[i]) = unit_nonnegative(x.col(worst[i % take]));
      }
    }
  }
  out.objective_history.push_back(pass(dict, false));
  out.dict = std::move(dict);
  return out;
}

void write_dictionary(const TrainedDictionary& dict, const std::filesystem::path& path) {
  const auto m = static_cast<std::size_t>(dict.dict.m());
  const auto p = static_cast<std::size_t>(dict.dict.p());
  std::vector<double> data(dict.dict.atoms.data(), dict.dict.atoms.data() + m * p);
  write_volume(Volume4D({m, p, 1, 1}, {1.0, 1.0, 1.0}, std::move(data)), path, NiftiDatatype::float64);
  std::ofstream meta(path.string() + ".txt");
  if (!meta) throw IoError("cannot write " + path.string() + ".txt");
  meta.precision(17);
  meta << "m=" << m << "\np=" << p << "\nlambda=" << dict.lambda << "\nseed=" << dict.seed << "\n";
  if (!meta) throw IoError("cannot write " + path.string() + ".txt");
}

TrainedDictionary read_dictionary(const std::filesystem::path& path) {
  const Volume4D vol = read_volume_raw(path);
  std::ifstream meta(path.string() + ".txt");
  if (!meta) throw IoError("cannot read " + path.string() + ".txt");
  std::map<std::string, std::string> kv;
  for (std::string line; std::getline(meta, line);) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  TrainedDictionary out;
  try {
    const auto m = std::stoull(kv.at("m"));
    const auto p = std::stoull(kv.at("p"));
    if (vol.dims()[0] != m || vol.dims()[1] != p || vol.dims()[2] != 1) {
      throw DimensionMismatchError("dictionary image does not match its sidecar");
    }
    out.lambda = std::stod(kv.at("lambda"));
    out.seed = std::stoull(kv.at("seed"));
    out.dict.atoms = Eigen::Map<const Eigen::MatrixXd>(vol.data().data(), static_cast<Eigen::Index>(m),
                                                       static_cast<Eigen::Index>(p));
  } catch (const std::out_of_range&) {
    throw IoError("incomplete dictionary sidecar " + path.string() + ".txt");
  } catch (const std::invalid_argument&) {
    throw IoError("malformed dictionary sidecar " + path.string() + ".txt");
  }
  return out;
}

}  // namespace nlsam

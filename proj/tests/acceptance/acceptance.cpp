#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "nlsam/aggregate.hpp"
#include "nlsam/angular.hpp"
#include "nlsam/dictionary.hpp"
#include "nlsam/encode.hpp"
#include "nlsam/metrics.hpp"
#include "nlsam/ncchi.hpp"
#include "nlsam/noise_estimation.hpp"
#include "nlsam/phantom.hpp"
#include "nlsam/pipeline.hpp"
#include "nlsam/sparse.hpp"
#include "nlsam/stabilize.hpp"
#include "test_support.hpp"

using namespace nlsam;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlsam::testing::draw_ncchi;
using nlsam::testing::sample_moments;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---------------------------------------------------------------- shared phantom runs

struct PhantomRun {
  Volume4D out;
  double seconds = 0.0;
  DenoiseReport report;
};

struct PhantomCase {
  Phantom ph;
  NoisyVolume nv;
};

PhantomCase make_case(int n_coils, BetaMode beta, std::uint64_t seed) {
  PhantomCase c{make_crossing_phantom({}), {}};
  NoiseSpec spec;
  spec.snr = 10.0;
  spec.n_coils = n_coils;
  spec.beta = beta;
  spec.seed = seed;
  c.nv = add_noise(c.ph.clean, c.ph.table, c.ph.mask, spec);
  return c;
}

PhantomRun denoise_case(const PhantomCase& c, DenoiseMode mode, int threads) {
  DenoiseConfig cfg;
  cfg.mode = mode;
  cfg.threads = threads;
  cfg.seed = 2024;
  PhantomRun r;
  const auto t0 = Clock::now();
  r.out = nlsam_denoise(c.nv.noisy, c.ph.table, c.nv.truth, c.ph.mask, cfg, &r.report);
  r.seconds = seconds_since(t0);
  return r;
}

struct Shared {
  std::optional<PhantomCase> rician;
  std::optional<PhantomCase> ncchi;
  std::optional<PhantomRun> rician_full;
  std::optional<PhantomRun> ncchi_full;
  std::optional<PhantomRun> rician_fast;

  const PhantomCase& rician_case() {
    if (!rician) rician = make_case(1, BetaMode::constant, 8);
    return *rician;
  }
  const PhantomRun& full_rician() {
    if (!rician_full) rician_full = denoise_case(rician_case(), DenoiseMode::full, 1);
    return *rician_full;
  }
  const PhantomRun& fast_rician() {
    if (!rician_fast) rician_fast = denoise_case(rician_case(), DenoiseMode::fast, 1);
    return *rician_fast;
  }
  const PhantomRun& full_ncchi() {
    if (!ncchi) ncchi = make_case(12, BetaMode::sphere, 9);
    if (!ncchi_full) ncchi_full = denoise_case(*ncchi, DenoiseMode::full, 1);
    return *ncchi_full;
  }
};

// ---------------------------------------------------------------- 1

void criterion_1(Outcome& o, Shared&) {
  const auto t0 = Clock::now();
  const StabilizationResult r = stabilize(678.0, 200.0, 4);
  const double t = seconds_since(t0);
  o.detail << "eta=" << r.eta_hat << " alpha=" << r.alpha << " m_hat=" << r.m_hat;
  o.check(std::abs(r.eta_hat - 407.0) <= 1.0, "eta 407 +- 1");
  o.check(std::abs(r.alpha - 0.513) <= 0.005, "alpha 0.513 +- 0.005");
  o.check(std::abs(r.m_hat - 413.0) <= 1.0, "m_hat 413 +- 1");
  o.check(t < 1.0, "runtime < 1 s");
}

// ---------------------------------------------------------------- 2

void criterion_2(Outcome& o, Shared&) {
  const auto t0 = Clock::now();
  const double sigma = 50.0;
  const int n = 12;
  std::mt19937_64 rng(2);
  Volume4D v({47, 47, 47, 1});
  for (double& x : v.data()) x = draw_ncchi(rng, 300.0, sigma, n);
  const NoiseField f = NoiseField::constant(v.spatial_dims(), sigma, n, NoiseProvenance::ground_truth);
  const auto m = sample_moments(stabilize_volume(v, f).data());
  o.detail << "samples=" << v.size() << " mean=" << m.mean << " excess_kurtosis=" << m.excess_kurtosis;
  o.check(std::abs(m.mean - 300.0) <= 0.5, "mean 300 +- 0.5");
  o.check(std::abs(m.excess_kurtosis) < 0.05, "|excess kurtosis| < 0.05");

  // eta = 0: samples whose solved eta falls under the floor are clamped to 0.
  // They are the draws below m_star, the magnitude whose solved eta equals the
  // floor, and land on the lower tail of N(0, sigma) cut at sigma Phi^-1(F(m_star)).
  const double floor = sigma * std::sqrt(std::numbers::pi / 2.0);
  double lo = 0.0, hi = 20.0 * sigma;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (estimate_eta(mid, sigma, n) < floor ? lo : hi) = mid;
  }
  const double m_star = 0.5 * (lo + hi);
  const double p_clamp = ncx_cdf(m_star, {0.0, sigma, n});
  const boost::math::normal gauss(0.0, sigma);
  const double cut = boost::math::quantile(gauss, p_clamp);

  std::mt19937_64 rng0(3);
  std::vector<double> clamped;
  std::size_t non_positive = 0;
  const std::size_t draws = 100000;
  for (std::size_t i = 0; i < draws; ++i) {
    const StabilizationResult s = stabilize(draw_ncchi(rng0, 0.0, sigma, n), sigma, n);
    if (s.eta_hat == 0.0) clamped.push_back(s.m_hat);
    if (s.m_hat <= 0.0) ++non_positive;
  }
  const double frac = static_cast<double>(clamped.size()) / static_cast<double>(draws);
  const double frac_sd = std::sqrt(p_clamp * (1.0 - p_clamp) / static_cast<double>(draws));
  const double ks = nlsam::testing::ks_statistic(clamped, [&](double x) {
    return std::min(1.0, boost::math::cdf(gauss, x) / p_clamp);
  });
  const double top = *std::max_element(clamped.begin(), clamped.end());
  const double half = static_cast<double>(non_positive) / static_cast<double>(draws);
  o.detail << "; eta=0: clamped=" << frac << " expected=" << p_clamp << " truncation=" << cut
           << " max_clamped=" << top << " ks_truncated_normal=" << ks << " non_positive=" << half;
  o.check(std::abs(frac - p_clamp) < 5.0 * frac_sd, "clamped fraction matches F(m_star)");
  o.check(top <= cut + 1e-6 * sigma, "clamped outputs stay below the truncation point");
  o.check(ks < 0.01, "clamped outputs follow the truncated normal");
  o.check(std::abs(half - 0.5) < 0.01, "half of the outputs are non-positive");
  o.check(seconds_since(t0) < 10.0, "runtime < 10 s");
}

// ---------------------------------------------------------------- 3

std::vector<double> noise_slice(std::size_t nv, std::size_t vols, double sigma, int n, const std::vector<double>& eta,
                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> out(nv * vols);
  for (std::size_t v = 0; v < vols; ++v)
    for (std::size_t i = 0; i < nv; ++i) out[v * nv + i] = draw_ncchi(rng, eta[i], sigma, n);
  return out;
}

void criterion_3(Outcome& o, Shared&) {
  const auto t0 = Clock::now();
  const std::size_t nv = 64 * 64, vols = 16;
  const int n = 12;
  std::uint64_t seed = 30;
  for (double sigma : {10.0, 30.0}) {
    const auto pure = noise_slice(nv, vols, sigma, n, std::vector<double>(nv, 0.0), ++seed);
    const double s0 = piesno_slice(pure, nv, vols, n).sigma;

    std::mt19937_64 rng(++seed);
    std::uniform_real_distribution<double> level(10.0 * sigma, 30.0 * sigma);
    std::vector<double> eta(nv, 0.0);
    std::vector<std::size_t> order(nv);
    for (std::size_t i = 0; i < nv; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < nv / 2; ++i) eta[order[i]] = level(rng);
    const auto mixed = noise_slice(nv, vols, sigma, n, eta, ++seed);
    const PiesnoSliceResult r = piesno_slice(mixed, nv, vols, n);
    std::size_t wrong = 0;
    for (std::size_t i : r.background) wrong += eta[i] > 0.0 ? 1 : 0;

    const double e0 = std::abs(s0 - sigma) / sigma;
    const double e1 = std::abs(r.sigma - sigma) / sigma;
    o.detail << "sigma=" << sigma << ": pure_err=" << e0 << " mixed_err=" << e1 << " signal_selected=" << wrong << "; ";
    o.check(e0 <= 0.02, "pure noise within 2%");
    o.check(e1 <= 0.03, "half signal within 3%");
    o.check(wrong == 0, "no signal voxel selected");
  }
  o.check(seconds_since(t0) < 5.0, "runtime < 5 s");
}

// ---------------------------------------------------------------- 4

Dictionary random_dictionary(Index m, Index p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dictionary d{MatrixXd(m, p)};
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < m; ++i) d.atoms(i, j) = u(rng) < 0.6 ? u(rng) : 0.0;
    if (d.atoms.col(j).norm() == 0.0) d.atoms(j % m, j) = 1.0;
    d.atoms.col(j).normalize();
  }
  return d;
}

VectorXd random_signal(Index m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  VectorXd x(m);
  for (Index i = 0; i < m; ++i) x(i) = u(rng);
  return x;
}

bool kkt_holds(const Dictionary& d, const VectorXd& x, double mu, const VectorXd& w, const VectorXd& a) {
  const double tol = 1e-6 * x.norm();
  const VectorXd g = d.atoms.transpose() * (x - d.atoms * a);
  for (Index k = 0; k < a.size(); ++k) {
    if (a(k) < 0.0) return false;
    if (a(k) > 0.0 ? std::abs(g(k) - mu * w(k)) > tol : g(k) > mu * w(k) + tol) return false;
  }
  return true;
}

double objective(const Dictionary& d, const VectorXd& x, double mu, const VectorXd& w, const VectorXd& a) {
  return 0.5 * (x - d.atoms * a).squaredNorm() + mu * w.dot(a);
}

double brute_force_minimum(const Dictionary& d, const VectorXd& x, double mu, const VectorXd& w, int max_size) {
  double best = 0.5 * x.squaredNorm();
  std::vector<Index> support;
  const std::function<void(Index)> recurse = [&](Index start) {
    if (!support.empty()) {
      const auto s = static_cast<Index>(support.size());
      MatrixXd ds(d.m(), s);
      VectorXd ws(s);
      for (Index k = 0; k < s; ++k) {
        ds.col(k) = d.atoms.col(support[static_cast<std::size_t>(k)]);
        ws(k) = w(support[static_cast<std::size_t>(k)]);
      }
      const VectorXd a = (ds.transpose() * ds).ldlt().solve(ds.transpose() * x - mu * ws);
      if ((a.array() > 0.0).all()) best = std::min(best, 0.5 * (x - ds * a).squaredNorm() + mu * ws.dot(a));
    }
    if (static_cast<int>(support.size()) == max_size) return;
    for (Index j = start; j < d.p(); ++j) {
      support.push_back(j);
      recurse(j + 1);
      support.pop_back();
    }
  };
  recurse(0);
  return best;
}

void criterion_4(Outcome& o, Shared&) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<Index> mdist(2, 20);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  int kkt_fail = 0;
  for (int t = 0; t < 1000; ++t) {
    const Index m = mdist(rng);
    const Index p = std::uniform_int_distribution<Index>(1, 40)(rng);
    const Dictionary d = random_dictionary(m, p, rng);
    const VectorXd x = random_signal(m, rng);
    VectorXd w(p);
    for (Index k = 0; k < p; ++k) w(k) = 0.5 + u(rng);
    const double mu = (0.01 + 0.5 * u(rng)) * (d.atoms.transpose() * x).maxCoeff();
    const SparseCode c = nn_lasso(x, d, mu, w);
    if (!kkt_holds(d, x, mu, w, c.alpha)) ++kkt_fail;
  }
  o.detail << "nn_lasso KKT failures=" << kkt_fail << "/1000";
  o.check(kkt_fail == 0, "KKT at 1e-6 on 1000 instances");

  // Feasible bounds lie between the unpenalized fit and the zero code.
  int bound_fail = 0, infeasible_wrong = 0, infeasible = 0;
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const Index m = mdist(rng);
    const Index p = std::uniform_int_distribution<Index>(1, 40)(rng);
    const Dictionary d = random_dictionary(m, p, rng);
    const VectorXd x = random_signal(m, rng);
    const double floor = nn_lasso(x, d, 0.0, VectorXd::Ones(p)).residual_sq;
    const double top = 0.5 * x.squaredNorm();
    const double lambda = floor + (0.02 + 0.96 * u(rng)) * (top - floor);
    if (!(lambda > 0.0)) continue;
    const SparseCode c = encode_bounded(x, d, lambda, 0.05, static_cast<std::uint64_t>(t));
    const double res = 0.5 * (x - d.atoms * c.alpha).squaredNorm();
    worst = std::max(worst, res / lambda);
    if (res > lambda * (1.0 + 1e-6)) ++bound_fail;
  }
  for (int t = 0; t < 200; ++t) {
    const Index m = std::uniform_int_distribution<Index>(8, 20)(rng);
    const Index p = std::uniform_int_distribution<Index>(1, m / 2)(rng);
    const Dictionary d = random_dictionary(m, p, rng);
    const VectorXd x = random_signal(m, rng);
    const double floor = nn_lasso(x, d, 0.0, VectorXd::Ones(p)).residual_sq;
    if (!(floor > 1e-8)) continue;
    ++infeasible;
    const SparseCode c = encode_bounded(x, d, 0.5 * floor, 0.05, static_cast<std::uint64_t>(t));
    if (c.bound_met || std::abs(c.residual_sq - floor) > 1e-6 * floor) ++infeasible_wrong;
  }
  o.detail << "; encode_bounded feasible violations=" << bound_fail << "/1000 worst_ratio=" << worst
           << " unreachable bounds flagged=" << infeasible - infeasible_wrong << "/" << infeasible;
  o.check(bound_fail == 0, "residual <= lambda (1 + 1e-6) whenever the bound is reachable");
  o.check(infeasible_wrong == 0, "unreachable bounds return the unpenalized fit flagged");

  double gap = 0.0;
  for (int t = 0; t < 300; ++t) {
    const Dictionary d = random_dictionary(5, 8, rng);
    const VectorXd x = random_signal(5, rng);
    VectorXd w(8);
    for (Index k = 0; k < 8; ++k) w(k) = 0.5 + u(rng);
    const double mu = (0.01 + 0.3 * u(rng)) * (d.atoms.transpose() * x).maxCoeff();
    const SparseCode c = nn_lasso(x, d, mu, w);
    if (static_cast<int>(c.support.size()) > 3) continue;
    gap = std::max(gap, std::abs(objective(d, x, mu, w, c.alpha) - brute_force_minimum(d, x, mu, w, 3)));
  }
  o.detail << "; brute-force gap=" << gap;
  o.check(gap <= 1e-6, "brute-force objective within 1e-6");
  o.check(seconds_since(t0) < 60.0, "runtime < 60 s");
}

// ---------------------------------------------------------------- 5

void criterion_5(Outcome& o, Shared&) {
  const auto t0 = Clock::now();
  const Index p = 16, rows_per_atom = 4, m = p * rows_per_atom;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  MatrixXd planted = MatrixXd::Zero(m, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = j * rows_per_atom; i < (j + 1) * rows_per_atom; ++i) planted(i, j) = u(rng);
  planted.colwise().normalize();

  std::uniform_int_distribution<Index> pick(0, p - 1);
  std::normal_distribution<double> noise(0.0, 0.01);
  MatrixXd samples(m, 2000);
  for (Index c = 0; c < samples.cols(); ++c) {
    samples.col(c) = u(rng) * planted.col(pick(rng));
    for (Index i = 0; i < m; ++i) samples(i, c) += noise(rng);
  }
  TrainConfig cfg;
  cfg.atoms = static_cast<std::size_t>(p);
  cfg.epochs = 50;
  cfg.seed = 5;
  const TrainedDictionary t = train_dictionary(samples, cfg);

  double worst = 0.0;
  std::set<Index> matched;
  for (Index j = 0; j < p; ++j) {
    double best = -1.0;
    Index arg = 0;
    for (Index k = 0; k < t.dict.p(); ++k) {
      const double c = t.dict.atoms.col(k).dot(planted.col(j));
      if (c > best) {
        best = c;
        arg = k;
      }
    }
    matched.insert(arg);
    worst = std::max(worst, std::acos(std::min(1.0, best)) * 180.0 / std::numbers::pi);
  }
  o.detail << "atoms=" << p << " worst_angle_deg=" << worst << " distinct_matches=" << matched.size();
  o.check(worst < 5.0, "every atom within 5 degrees");
  o.check(static_cast<Index>(matched.size()) == p, "matching is a permutation");
  o.check(seconds_since(t0) < 60.0, "runtime < 60 s");
}

// ---------------------------------------------------------------- 6

void criterion_6(Outcome& o, Shared&) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> val(-5.0, 5.0);
  double worst = 0.0;
  int inexact = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int ps = trial % 2 == 0 ? 3 : 5;
    const std::size_t r = static_cast<std::size_t>(ps / 2);
    const Shape3 dims{static_cast<std::size_t>(ps) + std::uniform_int_distribution<std::size_t>(0, 6)(rng),
                      static_cast<std::size_t>(ps) + std::uniform_int_distribution<std::size_t>(0, 6)(rng),
                      static_cast<std::size_t>(ps) + std::uniform_int_distribution<std::size_t>(0, 6)(rng)};
    const std::size_t members = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
    const std::size_t cols = std::uniform_int_distribution<std::size_t>(1, 80)(rng);
    const std::size_t psz = static_cast<std::size_t>(ps * ps * ps);
    PatchMatrix pm;
    pm.patch_size = ps;
    pm.members = members;
    pm.data.resize(static_cast<Index>(members * psz), static_cast<Index>(cols));
    for (Index i = 0; i < pm.data.size(); ++i) pm.data.data()[i] = val(rng);
    for (std::size_t j = 0; j < cols; ++j) {
      pm.centers.push_back({std::uniform_int_distribution<std::size_t>(r, dims[0] - 1 - r)(rng),
                            std::uniform_int_distribution<std::size_t>(r, dims[1] - 1 - r)(rng),
                            std::uniform_int_distribution<std::size_t>(r, dims[2] - 1 - r)(rng)});
    }
    std::vector<std::size_t> l0(cols);
    for (auto& k : l0) k = std::uniform_int_distribution<std::size_t>(0, 12)(rng);
    const std::vector<Image3D> fallback(members, Image3D(dims, -7.0));

    const auto brute = [&](const std::vector<std::size_t>& counts, AggregationWeight mode, bool plain) {
      std::vector<Image3D> out;
      for (std::size_t k = 0; k < members; ++k) {
        std::vector<double> num(element_count(dims), 0.0), den(element_count(dims), 0.0);
        for (std::size_t j = 0; j < cols; ++j) {
          const double w = plain ? 1.0 : block_weight(counts[j], mode);
          const Index3 c = pm.centers[j];
          auto row = static_cast<Index>(k * psz);
          for (std::size_t dz = 0; dz < static_cast<std::size_t>(ps); ++dz)
            for (std::size_t dy = 0; dy < static_cast<std::size_t>(ps); ++dy)
              for (std::size_t dx = 0; dx < static_cast<std::size_t>(ps); ++dx) {
                const std::size_t i = linear_index(dims, c[0] + dx - r, c[1] + dy - r, c[2] + dz - r);
                num[i] += w * pm.data(row++, static_cast<Index>(j));
                den[i] += w;
              }
        }
        Image3D img(dims, -7.0);
        for (std::size_t i = 0; i < num.size(); ++i)
          if (den[i] > 0.0) img.data[i] = num[i] / den[i];
        out.push_back(std::move(img));
      }
      return out;
    };

    for (AggregationWeight mode : {AggregationWeight::literal, AggregationWeight::inverse_sparsity}) {
      const auto got = aggregate_blocks(pm, l0, mode, fallback);
      const auto want = brute(l0, mode, false);
      for (std::size_t k = 0; k < members; ++k)
        for (std::size_t i = 0; i < got[k].size(); ++i)
          worst = std::max(worst, std::abs(got[k].data[i] - want[k].data[i]));

      const std::vector<std::size_t> same(cols, l0[0]);
      const auto eq = aggregate_blocks(pm, same, mode, fallback);
      const auto mean = brute(same, mode, true);
      for (std::size_t k = 0; k < members; ++k)
        for (std::size_t i = 0; i < eq[k].size(); ++i) inexact += eq[k].data[i] == mean[k].data[i] ? 0 : 1;
    }
  }
  o.detail << "geometries=40 max_abs_diff=" << worst << " equal_l0_mismatches=" << inexact;
  o.check(worst <= 1e-12, "weighted mean within 1e-12");
  o.check(inexact == 0, "equal l0 equals the plain mean exactly");
  o.check(seconds_since(t0) < 5.0, "runtime < 5 s");
}

// ---------------------------------------------------------------- 7

Volume4D constant_volume(const Shape3& d, double value) {
  Volume4D v({d[0], d[1], d[2], 1});
  std::fill(v.data().begin(), v.data().end(), value);
  return v;
}

void criterion_7(Outcome& o, Shared&) {
  const auto t0 = Clock::now();
  const GradientTable b0({0.0}, {Vec3{0, 0, 0}});

  const Phantom ph = make_crossing_phantom({});
  NoiseSpec zero;
  zero.sigma = 0.0;
  zero.n_coils = 12;
  zero.beta = BetaMode::sphere;
  const bool exact = add_noise(ph.clean, ph.table, ph.mask, zero).noisy.data() == ph.clean.data();
  o.detail << "sigma0_exact=" << (exact ? "yes" : "no");
  o.check(exact, "sigma = 0 is bit-exact");

  const double eta = 30.0, sigma = 10.0;
  const Volume4D clean = constant_volume({50, 50, 40}, eta);
  NoiseSpec rice;
  rice.sigma = sigma;
  rice.seed = 71;
  const NoisyVolume nv = add_noise(clean, b0, Mask3D(clean.spatial_dims()), rice);
  const boost::math::non_central_chi_squared law(2.0, (eta / sigma) * (eta / sigma));
  const double ks = nlsam::testing::ks_statistic(
      nv.noisy.data(), [&](double m) { return boost::math::cdf(law, (m / sigma) * (m / sigma)); });
  o.detail << " rician_ks=" << ks << " (n=" << nv.noisy.size() << ")";
  o.check(ks < 0.01, "Rician KS < 0.01");

  for (int n : {1, 4, 12}) {
    const double intensity = 20.0, s = 5.0;
    const Volume4D flat = constant_volume({46, 46, 46}, intensity);
    const Mask3D mask(flat.spatial_dims());
    NoiseSpec spec;
    spec.sigma = s;
    spec.n_coils = n;
    spec.beta = BetaMode::sphere;
    spec.seed = 72 + static_cast<std::uint64_t>(n);
    const NoisyVolume noisy = add_noise(flat, b0, mask, spec);
    const Image3D beta = build_beta_field(mask, BetaMode::sphere);
    double observed = 0.0, expected = 0.0;
    for (std::size_t i = 0; i < flat.size(); ++i) {
      observed += noisy.noisy.data()[i] * noisy.noisy.data()[i];
      expected += intensity * intensity + 2.0 * n * (beta.data[i] * s) * (beta.data[i] * s);
    }
    const double rel = std::abs(observed / expected - 1.0);
    o.detail << " second_moment_N" << n << "=" << rel;
    o.check(rel <= 0.01, "second moment within 1%");
  }
  o.check(seconds_since(t0) < 10.0, "runtime < 10 s");
}

// ---------------------------------------------------------------- 8

struct Gain {
  double psnr_in, psnr_out, ssim_in, ssim_out;
};

Gain gain(const PhantomCase& c, const Volume4D& out) {
  const QualityReport before = evaluate_quality(c.ph.clean, c.nv.noisy, c.ph.mask);
  const QualityReport after = evaluate_quality(c.ph.clean, out, c.ph.mask);
  return {before.psnr.db, after.psnr.db, before.ssim, after.ssim};
}

void criterion_8(Outcome& o, Shared& s) {
  const PhantomRun& a = s.full_rician();
  const Gain g = gain(s.rician_case(), a.out);
  o.detail << "rician: psnr " << g.psnr_in << " -> " << g.psnr_out << " ssim " << g.ssim_in << " -> " << g.ssim_out
           << " (" << a.seconds << " s)";
  o.check(g.psnr_out - g.psnr_in >= 2.0, "Rician PSNR gain >= 2 dB");
  o.check(g.ssim_out - g.ssim_in >= 0.05, "Rician SSIM gain >= 0.05");

  const PhantomRun& b = s.full_ncchi();
  const Gain h = gain(*s.ncchi, b.out);
  o.detail << "; nc-chi N=12 sphere: psnr " << h.psnr_in << " -> " << h.psnr_out << " ssim " << h.ssim_in << " -> "
           << h.ssim_out << " (" << b.seconds << " s)";
  o.check(h.psnr_out - h.psnr_in >= 1.0, "nc-chi PSNR gain >= 1 dB");
  o.check(a.seconds + b.seconds < 900.0, "runtime < 15 min single-threaded");
}

// ---------------------------------------------------------------- 9

void criterion_9(Outcome& o, Shared& s) {
  const std::vector<Vec3> dirs = hemisphere_directions(64);
  std::vector<double> bvals(1, 0.0);
  std::vector<Vec3> bvecs(1, Vec3{0, 0, 0});
  for (const Vec3& d : dirs) {
    bvals.push_back(1000.0);
    bvecs.push_back(d);
  }
  const GradientTable table(bvals, bvecs);
  const auto subsets = build_full_subsets(table, BlockConfig{}.angular_neighbors);
  const auto cover = greedy_set_cover(subsets, table);
  std::set<std::size_t> covered;
  for (std::size_t i : cover)
    for (std::size_t v : subsets[i].members) covered.insert(v);
  std::size_t missing = 0;
  for (std::size_t v : table.dwi_indices()) missing += covered.count(v) ? 0 : 1;
  o.detail << "cover=" << cover.size() << "/" << subsets.size() << " uncovered=" << missing;
  o.check(cover.size() <= 32, "<= 32 subsets on 64 directions");
  o.check(missing == 0, "every DWI covered");

  const PhantomRun& full = s.full_rician();
  const PhantomRun& fast = s.fast_rician();
  const double speedup = full.seconds / fast.seconds;
  const Gain g = gain(s.rician_case(), fast.out);
  o.detail << "; phantom full=" << full.seconds << " s fast=" << fast.seconds << " s speedup=" << speedup
           << " fast_subsets=" << fast.report.subsets_processed << "/" << fast.report.subsets_total
           << " fast_psnr_gain=" << g.psnr_out - g.psnr_in;
  o.check(speedup >= 2.0, "fast mode >= 2x faster");
}

// ---------------------------------------------------------------- 10

void criterion_10(Outcome& o, Shared& s) {
  const PhantomRun& first = s.fast_rician();
  const PhantomRun second = denoise_case(s.rician_case(), DenoiseMode::fast, 1);
  const bool identical =
      std::memcmp(first.out.data().data(), second.out.data().data(), first.out.size() * sizeof(double)) == 0;
  const PhantomRun parallel = denoise_case(s.rician_case(), DenoiseMode::fast, 4);
  double worst = 0.0;
  for (std::size_t i = 0; i < first.out.size(); ++i) {
    const double a = first.out.data()[i], b = parallel.out.data()[i];
    const double scale = std::max(std::abs(a), std::abs(b));
    if (scale > 0.0) worst = std::max(worst, std::abs(a - b) / scale);
  }
  o.detail << "sequential_identical=" << (identical ? "yes" : "no") << " parallel_threads=4 max_rel_diff=" << worst;
  o.check(identical, "sequential runs byte-identical");
  o.check(worst < 1e-5, "parallel within 1e-5 relative");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, void (*)(Outcome&, Shared&)>> all = {
      {1, criterion_1}, {2, criterion_2}, {3, criterion_3}, {4, criterion_4}, {5, criterion_5},
      {6, criterion_6}, {7, criterion_7}, {8, criterion_8}, {9, criterion_9}, {10, criterion_10}};
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  Shared shared;
  int failures = 0;
  for (const auto& [id, fn] : all) {
    if (!wanted.empty() && !wanted.count(id)) continue;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      fn(o, shared);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    std::printf("criterion %2d: %s (%.2f s) %s\n", id, o.pass ? "PASS" : "FAIL", seconds_since(t0),
                o.detail.str().c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}

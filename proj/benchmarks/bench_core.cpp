#include <random>

#include <benchmark/benchmark.h>

#include "nlsam/aggregate.hpp"
#include "nlsam/dictionary.hpp"
#include "nlsam/encode.hpp"
#include "nlsam/ncchi.hpp"
#include "nlsam/phantom.hpp"
#include "nlsam/stabilize.hpp"

using namespace nlsam;

namespace {

Dictionary random_dictionary(Eigen::Index m, Eigen::Index p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dictionary d{Eigen::MatrixXd(m, p)};
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) d.atoms(i, j) = u(rng);
    d.atoms.col(j).normalize();
  }
  return d;
}

Eigen::MatrixXd sparse_columns(const Dictionary& d, Eigen::Index n, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, d.p() - 1);
  std::uniform_real_distribution<double> amp(0.5, 2.0);
  std::normal_distribution<double> g(0.0, noise);
  Eigen::MatrixXd x(d.m(), n);
  for (Eigen::Index c = 0; c < n; ++c) {
    x.col(c).setZero();
    for (int k = 0; k < 3; ++k) x.col(c) += amp(rng) * d.atoms.col(pick(rng));
    for (Eigen::Index i = 0; i < d.m(); ++i) x(i, c) += g(rng);
  }
  return x;
}

void BM_NcxCdf(benchmark::State& state) {
  const NcChiParams p{5.0, 1.0, static_cast<int>(state.range(0))};
  double m = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ncx_cdf(m, p));
    m = m > 12.0 ? 0.5 : m + 0.37;
  }
}
BENCHMARK(BM_NcxCdf)->Arg(1)->Arg(4)->Arg(12);

void BM_StabilizeScalar(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  double m = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(stabilize(m, 1.0, n));
    m = m > 20.0 ? 0.5 : m + 0.71;
  }
}
BENCHMARK(BM_StabilizeScalar)->Arg(1)->Arg(12);

void BM_StabilizeVolume(benchmark::State& state) {
  const Phantom ph = make_crossing_phantom({});
  NoiseSpec spec;
  spec.snr = 10.0;
  spec.seed = 1;
  const NoisyVolume nv = add_noise(ph.clean, ph.table, ph.mask, spec);
  for (auto _ : state) benchmark::DoNotOptimize(stabilize_volume(nv.noisy, nv.truth));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(nv.noisy.data().size()));
}
BENCHMARK(BM_StabilizeVolume)->Unit(benchmark::kMillisecond);

void BM_NnLasso(benchmark::State& state) {
  const Dictionary d = random_dictionary(162, 324, 1);
  const NnLasso solver(d);
  const Eigen::MatrixXd x = sparse_columns(d, 64, 0.05, 2);
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(d.p());
  Eigen::Index c = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solver.solve(Eigen::VectorXd(x.col(c)), 0.1, w));
    c = (c + 1) % x.cols();
  }
}
BENCHMARK(BM_NnLasso)->Unit(benchmark::kMicrosecond);

void BM_EncodeBounded(benchmark::State& state) {
  const Dictionary d = random_dictionary(162, 324, 3);
  const NnLasso solver(d);
  const double sigma = 0.05;
  const Eigen::MatrixXd x = sparse_columns(d, 64, sigma, 4);
  const PenaltyRule rule;
  const double bound = rule.residual_bound(sigma * sigma, 162);
  Eigen::Index c = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(encode_bounded(Eigen::VectorXd(x.col(c)), solver, bound, sigma, 7, rule));
    c = (c + 1) % x.cols();
  }
}
BENCHMARK(BM_EncodeBounded)->Unit(benchmark::kMicrosecond);

void BM_TrainEpoch(benchmark::State& state) {
  const Dictionary d = random_dictionary(54, 108, 5);
  const Eigen::MatrixXd x = sparse_columns(d, 2000, 0.02, 6);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.seed = 9;
  for (auto _ : state) benchmark::DoNotOptimize(train_dictionary(x, cfg));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

void BM_Aggregate(benchmark::State& state) {
  const Shape3 dims{24, 24, 24};
  const std::size_t members = 6;
  const int ps = 3;
  std::vector<Index3> centers;
  for (std::size_t z = 1; z + 1 < dims[2]; ++z)
    for (std::size_t y = 1; y + 1 < dims[1]; ++y)
      for (std::size_t x = 1; x + 1 < dims[0]; ++x) centers.push_back({x, y, z});
  PatchMatrix pm;
  pm.patch_size = ps;
  pm.members = members;
  pm.centers = centers;
  pm.data = Eigen::MatrixXd::Random(27 * static_cast<Eigen::Index>(members), static_cast<Eigen::Index>(centers.size()));
  std::vector<std::size_t> l0(centers.size());
  for (std::size_t i = 0; i < l0.size(); ++i) l0[i] = i % 7;
  const std::vector<Image3D> fallback(members, Image3D(dims));
  for (auto _ : state) {
    benchmark::DoNotOptimize(aggregate_blocks(pm, l0, AggregationWeight::inverse_sparsity, fallback));
  }
}
BENCHMARK(BM_Aggregate)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

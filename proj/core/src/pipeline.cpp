#include "nlsam/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "nlsam/dictionary.hpp"
#include "nlsam/encode.hpp"
#include "nlsam/error.hpp"
#include "nlsam/patches.hpp"
#include "nlsam/seeding.hpp"

namespace nlsam {
namespace {

struct Reduced {
  Volume4D vol;
  GradientTable table;
  std::vector<std::size_t> source;  ///< input volume index of each DWI slot (slot 0 is the b0 mean)
};

// One averaged b0 followed by the DWIs in input order.
Reduced reduce_b0(const Volume4D& vol, const GradientTable& table) {
  const auto b0s = table.b0_indices();
  const auto dwis = table.dwi_indices();
  const auto& d = vol.dims();
  Reduced r;
  r.vol = Volume4D({d[0], d[1], d[2], dwis.size() + 1}, vol.spacing());
  auto dst = r.vol.volume(0);
  for (std::size_t b : b0s) {
    const auto src = vol.volume(b);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  for (double& x : dst) x /= static_cast<double>(b0s.size());
  std::vector<double> bvals{0.0};
  std::vector<Vec3> bvecs{Vec3{0.0, 0.0, 0.0}};
  r.source.push_back(b0s.front());
  for (std::size_t k = 0; k < dwis.size(); ++k) {
    const auto src = vol.volume(dwis[k]);
    std::copy(src.begin(), src.end(), r.vol.volume(k + 1).begin());
    bvals.push_back(table.bval(dwis[k]));
    bvecs.push_back(table.bvec(dwis[k]));
    r.source.push_back(dwis[k]);
  }
  r.table = GradientTable(std::move(bvals), std::move(bvecs), table.b0_threshold());
  return r;
}

void say(const DenoiseConfig& cfg, const std::string& msg) {
  if (cfg.log) cfg.log(msg);
}

}  // namespace

Volume4D nlsam_denoise(const Volume4D& vol, const GradientTable& table, const NoiseField& field,
                       const Mask3D& mask_in, const DenoiseConfig& cfg, DenoiseReport* report) {
  const auto t0 = std::chrono::steady_clock::now();
  validate(vol);
  check_matches(table, vol.volumes());
  const Shape3 dims = vol.spatial_dims();
  validate(field, dims);
  validate(cfg.block);
  const Mask3D mask = mask_in.data.empty() ? Mask3D(dims, true) : mask_in;
  if (mask.dims != dims) throw DimensionMismatchError("mask dims differ from the volume");
#ifdef _OPENMP
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#endif

  const Volume4D stabilized = cfg.stabilize ? stabilize_volume(vol, field, cfg.stabilize_options) : vol;
  say(cfg, cfg.stabilize ? "stabilized " + std::to_string(vol.volumes()) + " volumes" : "stabilization skipped");

  const Reduced red = reduce_b0(stabilized, table);
  const std::vector<AngularSubset> all = build_full_subsets(red.table, cfg.block.angular_neighbors);
  std::vector<std::size_t> chosen;
  if (cfg.mode == DenoiseMode::fast) {
    chosen = greedy_set_cover(all, red.table);
  } else {
    for (std::size_t s = 0; s < all.size(); ++s) chosen.push_back(s);
  }
  say(cfg, "processing " + std::to_string(chosen.size()) + " of " + std::to_string(all.size()) + " subsets");

  DenoiseReport rep;
  rep.subsets_total = all.size();
  rep.subsets_processed = chosen.size();

  const BlockConfig dense{cfg.block.patch_size, cfg.block.angular_neighbors, 1};
  const std::vector<Index3> train_centers = patch_centers(dims, dense, mask);
  const std::vector<Index3> centers = patch_centers(dims, cfg.block, mask);
  const std::size_t m = cfg.block.signal_length();

  auto train = [&](const Eigen::MatrixXd& samples, std::uint64_t seed) {
    TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.lambda = cfg.penalty.lambda_train(m);
    tc.seed = seed;
    tc.max_columns = cfg.max_training_columns;
    tc.lasso = cfg.lasso;
    ++rep.dictionaries_trained;
    return train_dictionary(samples, tc).dict;
  };

  Dictionary global;
  if (cfg.global_dictionary) {
    std::vector<Eigen::MatrixXd> parts;
    Eigen::Index total = 0;
    for (std::size_t s : chosen) {
      parts.push_back(extract_blocks(red.vol, all[s].members, cfg.block.patch_size, train_centers).data);
      total += parts.back().cols();
    }
    Eigen::MatrixXd pooled(static_cast<Eigen::Index>(m), total);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
      pooled.middleCols(at, p.cols()) = p;
      at += p.cols();
    }
    global = train(pooled, derive_seed({cfg.seed, 0x676c6f62ULL}));
    say(cfg, "trained global dictionary on " + std::to_string(total) + " columns");
  }

  std::vector<SubsetEstimate> estimates;
  for (std::size_t s : chosen) {
    const AngularSubset& subset = all[s];
    const PatchMatrix blocks = extract_blocks(red.vol, subset.members, cfg.block.patch_size, centers);
    Dictionary local;
    if (!cfg.global_dictionary) {
      const Eigen::MatrixXd samples =
          cfg.block.stride == 1 ? blocks.data
                                : extract_blocks(red.vol, subset.members, cfg.block.patch_size, train_centers).data;
      local = train(samples, derive_seed({cfg.seed, subset.target}));
    }
    const Dictionary& dict = cfg.global_dictionary ? global : local;
    const NnLasso solver(dict, cfg.lasso);

    PatchMatrix recon = blocks;
    std::vector<std::size_t> l0(static_cast<std::size_t>(blocks.cols()), 0);
    std::size_t misses = 0;
#pragma omp parallel for schedule(dynamic, 16) reduction(+ : misses)
    for (Eigen::Index j = 0; j < blocks.cols(); ++j) {
      const Index3& c = blocks.centers[static_cast<std::size_t>(j)];
      const std::size_t lin = linear_index(dims, c[0], c[1], c[2]);
      const double sigma = field.sigma[lin];
      if (sigma <= 0.0) continue;
      const double lambda_i = cfg.penalty.residual_bound(sigma * sigma, m);
      const SparseCode code = encode_bounded(blocks.data.col(j), solver, lambda_i, sigma,
                                             derive_seed({cfg.seed, subset.target, lin}), cfg.penalty);
      recon.data.col(j).noalias() = dict.atoms * code.alpha;
      l0[static_cast<std::size_t>(j)] = code.support.size();
      if (!code.bound_met) ++misses;
    }
    rep.columns_encoded += static_cast<std::size_t>(blocks.cols());
    rep.bound_misses += misses;

    std::vector<Image3D> fallback;
    for (std::size_t v : subset.members) fallback.push_back(red.vol.volume_image(v));
    estimates.push_back({subset.members, aggregate_blocks(recon, l0, cfg.weight, fallback)});
    rep.targets.push_back(red.source[subset.target]);
    std::ostringstream msg;
    msg << "subset " << estimates.size() << "/" << chosen.size() << " target " << red.source[subset.target] << ": "
        << blocks.cols() << " blocks";
    if (misses > 0) msg << ", " << misses << " above bound";
    say(cfg, msg.str());
  }

  const Volume4D averaged = average_subset_outputs(estimates, red.vol.dims(), vol.spacing());

  Volume4D out = vol;
  const std::size_t n = vol.voxels_per_volume();
  auto write_back = [&](std::size_t slot, std::size_t target) {
    const auto src = averaged.volume(slot);
    auto dst = out.volume(target);
    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i]) dst[i] = std::max(0.0, src[i]);
    }
  };
  for (std::size_t b : table.b0_indices()) write_back(0, b);
  for (std::size_t k = 1; k < red.source.size(); ++k) write_back(k, red.source[k]);

  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (report) *report = std::move(rep);
  return out;
}

}  // namespace nlsam

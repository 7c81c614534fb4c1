#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "nlsam/error.hpp"
#include "nlsam/gradients.hpp"
#include "nlsam/metrics.hpp"
#include "nlsam/nifti.hpp"
#include "nlsam/noise_estimation.hpp"
#include "nlsam/phantom.hpp"
#include "nlsam/pipeline.hpp"
#include "nlsam/stabilize.hpp"

namespace fs = std::filesystem;
using namespace nlsam;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitInput = 2;

/// Error raised while reading or validating user input.
struct InputFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Current pipeline stage, named in error messages.
struct Stage {
  std::string name = "setup";
  bool input = true;

  void enter(std::string n, bool reads_input = false) {
    name = std::move(n);
    input = reads_input;
  }
};

/// Ordered key=value lines written next to an output file.
class Provenance {
 public:
  template <typename T>
  void set(const std::string& key, const T& value) {
    std::ostringstream os;
    os << std::setprecision(17) << value;
    entries_.emplace_back(key, os.str());
  }

  void write(const fs::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write provenance file '" + path.string() + "'");
    for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

fs::path sidecar_path(const fs::path& out) { return fs::path(out.string() + ".provenance"); }

std::string command_line(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i > 0) s += ' ';
    s += argv[i];
  }
  return s;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

void log_line(const std::string& msg) { std::cerr << msg << '\n'; }

NoiseField field_from_image(const Volume4D& img, const Shape3& dims, int n_coils) {
  if (img.spatial_dims() != dims || img.volumes() != 1) {
    throw DimensionMismatchError("sigma field must be a 3D image matching the input volume");
  }
  NoiseField f;
  f.dims = dims;
  f.n_coils = n_coils;
  f.provenance = NoiseProvenance::supplied;
  f.sigma = img.data();
  validate(f, dims);
  return f;
}

Volume4D field_to_image(const NoiseField& f, const std::array<double, 3>& spacing) {
  return Volume4D({f.dims[0], f.dims[1], f.dims[2], 1}, spacing, f.sigma);
}

struct NoiseChoice {
  std::string method = "piesno";
  std::string field_path;
  std::string map_path;
  int patch_radius = 1;
};

void add_noise_options(CLI::App* app, NoiseChoice& nc) {
  app->add_option("--noise", nc.method, "Noise estimator when no field or map is given")
      ->check(CLI::IsMember({"piesno", "field", "local"}))
      ->capture_default_str();
  app->add_option("--sigma-field", nc.field_path, "Precomputed per-voxel sigma (3D NIfTI)")->check(CLI::ExistingFile);
  app->add_option("--noise-map", nc.map_path, "Acquired noise-only scan (NIfTI)")->check(CLI::ExistingFile);
  app->add_option("--patch-radius", nc.patch_radius, "Patch radius of the local estimator")
      ->check(CLI::Range(1, 3))
      ->capture_default_str();
}

NoiseField resolve_noise(const Volume4D& vol, int n_coils, const NoiseChoice& nc, Stage& stage, Provenance& prov) {
  if (!nc.field_path.empty()) {
    stage.enter("reading sigma field", true);
    prov.set("noise_source", "file:" + nc.field_path);
    return field_from_image(read_volume_raw(nc.field_path), vol.spatial_dims(), n_coils);
  }
  if (!nc.map_path.empty()) {
    stage.enter("reading noise map", true);
    const Volume4D map = read_volume_raw(nc.map_path);
    if (map.spatial_dims() != vol.spatial_dims()) throw DimensionMismatchError("noise map dims differ from the input");
    stage.enter("noise estimation");
    prov.set("noise_source", "map:" + nc.map_path);
    return noise_field_from_map(map, n_coils);
  }
  stage.enter("noise estimation");
  prov.set("noise_source", nc.method);
  if (nc.method == "field") return estimate_noise_field(vol, n_coils);
  if (nc.method == "local") return local_noise_variance(vol, nc.patch_radius, n_coils);
  try {
    const PiesnoResult r = piesno(vol, n_coils);
    log_line("piesno sigma=" + std::to_string(r.sigma));
    return NoiseField::constant(vol.spatial_dims(), r.sigma, n_coils, NoiseProvenance::piesno);
  } catch (const NoBackgroundError&) {
    log_line("piesno found no background; using the residual noise field");
    prov.set("noise_fallback", "field");
    return estimate_noise_field(vol, n_coils);
  }
}

void record_field(Provenance& prov, const NoiseField& f) {
  prov.set("noise_provenance", to_string(f.provenance));
  prov.set("noise_sigma_median", median_of(f.sigma));
}

Mask3D load_mask(const std::string& path, const Shape3& dims, Stage& stage) {
  if (path.empty()) return Mask3D(dims, true);
  stage.enter("reading mask", true);
  Mask3D m = read_mask(path);
  if (m.dims != dims) throw DimensionMismatchError("mask '" + path + "' does not match the input dims");
  return m;
}

int set_threads(int threads) {
  const int n = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return n;
}

// ---------------------------------------------------------------- denoise

struct DenoiseArgs {
  std::string in, bval, bvec, out, mask;
  int coils = 1;
  int ps = 3;
  int an = 4;
  int stride = 1;
  std::string mode = "full";
  bool no_stabilize = false;
  bool beta_floor = false;
  std::string eta_source = "local";
  bool literal_weight = false;
  bool bound_literal = false;
  bool global_dict = false;
  int epochs = 150;
  std::uint64_t seed = 0;
  int threads = 0;
  NoiseChoice noise;
};

int run_denoise(const DenoiseArgs& a, const std::string& argv_line) {
  const auto t0 = std::chrono::steady_clock::now();
  Stage stage;
  Provenance prov;
  prov.set("command", "denoise");
  prov.set("argv", argv_line);
  try {
    stage.enter("reading input", true);
    const Volume4D vol = read_volume(a.in);
    stage.enter("reading gradients", true);
    const GradientTable table = read_gradients(a.bval, a.bvec);
    check_matches(table, vol.volumes());
    const Mask3D mask = load_mask(a.mask, vol.spatial_dims(), stage);

    DenoiseConfig cfg;
    cfg.block = {a.ps, a.an, a.stride};
    validate(cfg.block);
    cfg.mode = a.mode == "fast" ? DenoiseMode::fast : DenoiseMode::full;
    cfg.stabilize = !a.no_stabilize;
    cfg.stabilize_options.beta_floor_threshold = a.beta_floor;
    cfg.stabilize_options.eta_source = a.eta_source == "voxel" ? EtaSource::voxel : EtaSource::local_mean;
    cfg.weight = a.literal_weight ? AggregationWeight::literal : AggregationWeight::inverse_sparsity;
    cfg.penalty.bound_on_squared_norm = !a.bound_literal;
    cfg.global_dictionary = a.global_dict;
    cfg.epochs = a.epochs;
    cfg.seed = a.seed;
    cfg.threads = set_threads(a.threads);
    cfg.log = log_line;

    const NoiseField field = resolve_noise(vol, a.coils, a.noise, stage, prov);
    record_field(prov, field);

    stage.enter("denoising");
    DenoiseReport rep;
    const Volume4D out = nlsam_denoise(vol, table, field, mask, cfg, &rep);
    log_line("processed " + std::to_string(rep.subsets_processed) + " of " + std::to_string(rep.subsets_total) +
             " subsets");

    stage.enter("writing output");
    write_volume(out, a.out);

    prov.set("input", a.in);
    prov.set("bval", a.bval);
    prov.set("bvec", a.bvec);
    prov.set("mask", a.mask.empty() ? "all" : a.mask);
    prov.set("output", a.out);
    prov.set("coils", a.coils);
    prov.set("patch_size", a.ps);
    prov.set("angular_neighbors", a.an);
    prov.set("stride", a.stride);
    prov.set("mode", a.mode);
    prov.set("stabilize", cfg.stabilize ? "on" : "off");
    prov.set("eta_source", a.eta_source);
    prov.set("noise_floor", a.beta_floor ? "beta_n" : "sqrt_half_pi");
    prov.set("aggregation", a.literal_weight ? "literal" : "inverse_sparsity");
    prov.set("residual_bound", a.bound_literal ? "half_squared_norm" : "squared_norm");
    prov.set("dictionary", a.global_dict ? "global" : "per_subset");
    prov.set("epochs", a.epochs);
    prov.set("seed", a.seed);
    prov.set("threads", cfg.threads);
    prov.set("subsets_total", rep.subsets_total);
    prov.set("subsets_processed", rep.subsets_processed);
    prov.set("columns_encoded", rep.columns_encoded);
    prov.set("bound_misses", rep.bound_misses);
    prov.set("wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    prov.write(sidecar_path(a.out));
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "nlsam denoise: " << stage.name << ": " << e.what() << '\n';
    return stage.input ? kExitInput : kExitRuntime;
  }
}

// ---------------------------------------------------------------- stabilize

struct StabilizeArgs {
  std::string in, out;
  int coils = 1;
  double sigma = -1.0;
  bool beta_floor = false;
  std::string eta_source = "local";
  NoiseChoice noise;
};

int run_stabilize(const StabilizeArgs& a, const std::string& argv_line) {
  Stage stage;
  Provenance prov;
  prov.set("command", "stabilize");
  prov.set("argv", argv_line);
  try {
    stage.enter("reading input", true);
    const Volume4D vol = read_volume(a.in);
    NoiseField field;
    if (a.sigma >= 0.0) {
      field = NoiseField::constant(vol.spatial_dims(), a.sigma, a.coils, NoiseProvenance::supplied);
      prov.set("noise_source", "constant");
    } else {
      field = resolve_noise(vol, a.coils, a.noise, stage, prov);
    }
    record_field(prov, field);
    stage.enter("stabilization");
    StabilizeOptions opts;
    opts.beta_floor_threshold = a.beta_floor;
    opts.eta_source = a.eta_source == "voxel" ? EtaSource::voxel : EtaSource::local_mean;
    const Volume4D out = stabilize_volume(vol, field, opts);
    stage.enter("writing output");
    write_volume(out, a.out);
    prov.set("input", a.in);
    prov.set("output", a.out);
    prov.set("coils", a.coils);
    prov.set("eta_source", a.eta_source);
    prov.set("noise_floor", a.beta_floor ? "beta_n" : "sqrt_half_pi");
    prov.write(sidecar_path(a.out));
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "nlsam stabilize: " << stage.name << ": " << e.what() << '\n';
    return stage.input ? kExitInput : kExitRuntime;
  }
}

// ---------------------------------------------------------------- estimate-noise

struct EstimateArgs {
  std::string in, out;
  int coils = 1;
  std::string method = "piesno";
  std::string map;
  int patch_radius = 1;
};

int run_estimate(const EstimateArgs& a, const std::string& argv_line) {
  Stage stage;
  Provenance prov;
  prov.set("command", "estimate-noise");
  prov.set("argv", argv_line);
  try {
    stage.enter("reading input", true);
    const Volume4D vol = read_volume(a.in);
    NoiseChoice nc;
    nc.method = a.method;
    nc.map_path = a.map;
    nc.patch_radius = a.patch_radius;
    NoiseField field;
    if (a.method == "piesno" && a.map.empty()) {
      stage.enter("noise estimation");
      const PiesnoResult r = piesno(vol, a.coils);
      std::cout << "sigma=" << std::setprecision(10) << r.sigma << '\n';
      std::size_t ok = 0;
      for (double s : r.slice_sigma) ok += std::isnan(s) ? 0 : 1;
      std::cout << "slices_with_background=" << ok << '\n';
      prov.set("noise_source", "piesno");
      field = NoiseField::constant(vol.spatial_dims(), r.sigma, a.coils, NoiseProvenance::piesno);
    } else {
      field = resolve_noise(vol, a.coils, nc, stage, prov);
      std::cout << "sigma_median=" << std::setprecision(10) << median_of(field.sigma) << '\n';
    }
    std::cout << "provenance=" << to_string(field.provenance) << '\n';
    record_field(prov, field);
    if (!a.out.empty()) {
      stage.enter("writing output");
      write_volume(field_to_image(field, vol.spacing()), a.out, NiftiDatatype::float64);
      prov.set("input", a.in);
      prov.set("output", a.out);
      prov.set("coils", a.coils);
      prov.write(sidecar_path(a.out));
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "nlsam estimate-noise: " << stage.name << ": " << e.what() << '\n';
    return stage.input ? kExitInput : kExitRuntime;
  }
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string in, bval, bvec, mask;
  std::string out_dir = ".";
  std::string prefix = "sim";
  double snr = 10.0;
  double sigma = -1.0;
  int coils = 1;
  std::string beta = "constant";
  std::uint64_t seed = 0;
  std::size_t size = 24;
  std::size_t directions = 12;
};

int run_simulate(const SimulateArgs& a, const std::string& argv_line) {
  Stage stage;
  Provenance prov;
  prov.set("command", "simulate");
  prov.set("argv", argv_line);
  try {
    NoiseSpec spec;
    spec.snr = a.snr;
    spec.sigma = a.sigma;
    spec.n_coils = a.coils;
    spec.beta = a.beta == "sphere" ? BetaMode::sphere : BetaMode::constant;
    spec.seed = a.seed;
    validate(spec);

    Volume4D clean;
    GradientTable table;
    Mask3D mask;
    if (!a.in.empty()) {
      stage.enter("reading input", true);
      clean = read_volume(a.in);
      table = read_gradients(a.bval, a.bvec);
      check_matches(table, clean.volumes());
      mask = a.mask.empty() ? nonzero_mask(clean) : load_mask(a.mask, clean.spatial_dims(), stage);
      prov.set("source", a.in);
    } else {
      stage.enter("phantom generation");
      PhantomConfig pc;
      pc.size = a.size;
      pc.directions = a.directions;
      Phantom ph = make_crossing_phantom(pc);
      clean = std::move(ph.clean);
      table = std::move(ph.table);
      mask = std::move(ph.mask);
      prov.set("source", "crossing_phantom");
      prov.set("phantom_size", a.size);
      prov.set("phantom_directions", a.directions);
    }

    stage.enter("noise simulation");
    const NoisyVolume nv = add_noise(clean, table, mask, spec);

    stage.enter("writing output");
    const fs::path dir(a.out_dir);
    fs::create_directories(dir);
    const fs::path base = dir / a.prefix;
    write_volume(nv.noisy, base.string() + "_noisy.nii");
    write_volume(clean, base.string() + "_clean.nii");
    write_volume(field_to_image(nv.truth, clean.spacing()), base.string() + "_sigma.nii", NiftiDatatype::float64);
    write_mask(mask, base.string() + "_mask.nii");
    write_gradients(table, base.string() + ".bval", base.string() + ".bvec");
    std::cout << "sigma=" << std::setprecision(10) << nv.sigma << '\n';

    prov.set("snr", a.snr);
    prov.set("sigma", nv.sigma);
    prov.set("coils", a.coils);
    prov.set("beta", a.beta);
    prov.set("seed", a.seed);
    prov.set("noise_provenance", to_string(nv.truth.provenance));
    prov.write(base.string() + ".provenance");
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "nlsam simulate: " << stage.name << ": " << e.what() << '\n';
    return stage.input ? kExitInput : kExitRuntime;
  }
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string ref, test, mask, out;
  bool per_volume = false;
};

int run_evaluate(const EvaluateArgs& a) {
  Stage stage;
  try {
    stage.enter("reading reference", true);
    const Volume4D ref = read_volume(a.ref);
    stage.enter("reading test volume", true);
    const Volume4D test = read_volume(a.test);
    if (ref.dims() != test.dims()) throw DimensionMismatchError("reference and test dims differ");
    const Mask3D mask = a.mask.empty() ? nonzero_mask(ref) : load_mask(a.mask, ref.spatial_dims(), stage);
    stage.enter("evaluation");
    const QualityReport r = evaluate_quality(ref, test, mask);
    std::ostringstream os;
    os << std::setprecision(10);
    os << "psnr=" << (r.psnr.infinite ? std::string("inf") : std::to_string(r.psnr.db)) << '\n';
    os << "ssim=" << r.ssim << '\n';
    os << "mask_voxels=" << r.mask_voxels << '\n';
    os << "volumes=" << ref.volumes() << '\n';
    if (a.per_volume) {
      for (std::size_t v = 0; v < r.psnr_per_volume.size(); ++v) {
        os << "volume=" << v << " psnr="
           << (r.psnr_per_volume[v].infinite ? std::string("inf") : std::to_string(r.psnr_per_volume[v].db))
           << " ssim=" << r.ssim_per_volume[v] << '\n';
      }
    }
    std::cout << os.str();
    if (!a.out.empty()) {
      stage.enter("writing report");
      std::ofstream f(a.out);
      if (!f) throw IoError("cannot write report '" + a.out + "'");
      f << os.str();
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "nlsam evaluate: " << stage.name << ": " << e.what() << '\n';
    return stage.input ? kExitInput : kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NLSAM diffusion MRI denoising"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "nlsam 0.1.0");
  const std::string argv_line = command_line(argc, argv);

  DenoiseArgs da;
  auto* denoise = app.add_subcommand("denoise", "Denoise a diffusion-weighted dataset");
  denoise->add_option("--in", da.in, "Input 4D NIfTI")->required();
  denoise->add_option("--bval", da.bval, "b-values file")->required();
  denoise->add_option("--bvec", da.bvec, "b-vectors file")->required();
  denoise->add_option("--out", da.out, "Output NIfTI")->required();
  denoise->add_option("--mask", da.mask, "Processing mask");
  denoise->add_option("--coils", da.coils, "Effective number of coils N")->check(CLI::PositiveNumber)->capture_default_str();
  denoise->add_option("--ps", da.ps, "Patch size")->check(CLI::PositiveNumber)->capture_default_str();
  denoise->add_option("--an", da.an, "Angular neighbours")->check(CLI::PositiveNumber)->capture_default_str();
  denoise->add_option("--stride", da.stride, "Patch stride")->check(CLI::PositiveNumber)->capture_default_str();
  denoise->add_option("--mode", da.mode, "full: every DWI is a target; fast: greedy subset cover")
      ->check(CLI::IsMember({"full", "fast"}))
      ->capture_default_str();
  denoise->add_flag("--no-stabilize", da.no_stabilize, "Skip noise stabilization");
  denoise->add_flag("--beta-floor", da.beta_floor, "Use beta_N sigma as the noise-floor threshold");
  denoise->add_option("--eta-source", da.eta_source, "Signal estimate used by the stabilizer")
      ->check(CLI::IsMember({"local", "voxel"}))
      ->capture_default_str();
  denoise->add_flag("--literal-weight", da.literal_weight, "Weight blocks by 1 + l0 instead of 1 / (1 + l0)");
  denoise->add_flag("--bound-literal", da.bound_literal, "Apply lambda_i to half the squared residual");
  denoise->add_flag("--global-dict", da.global_dict, "Train one dictionary on all subsets");
  denoise->add_option("--epochs", da.epochs, "Dictionary learning epochs")->check(CLI::NonNegativeNumber)->capture_default_str();
  denoise->add_option("--seed", da.seed, "Random seed")->capture_default_str();
  denoise->add_option("--threads", da.threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  add_noise_options(denoise, da.noise);

  StabilizeArgs sa;
  auto* stabilize = app.add_subcommand("stabilize", "Map nc-chi magnitudes to Gaussian values");
  stabilize->add_option("--in", sa.in, "Input NIfTI")->required();
  stabilize->add_option("--out", sa.out, "Output NIfTI")->required();
  stabilize->add_option("--coils", sa.coils, "Effective number of coils N")->check(CLI::PositiveNumber)->capture_default_str();
  stabilize->add_option("--sigma", sa.sigma, "Constant noise standard deviation")->check(CLI::NonNegativeNumber);
  stabilize->add_flag("--beta-floor", sa.beta_floor, "Use beta_N sigma as the noise-floor threshold");
  stabilize->add_option("--eta-source", sa.eta_source, "Signal estimate")
      ->check(CLI::IsMember({"local", "voxel"}))
      ->capture_default_str();
  add_noise_options(stabilize, sa.noise);

  EstimateArgs ea;
  auto* estimate = app.add_subcommand("estimate-noise", "Estimate the noise standard deviation");
  estimate->add_option("--in", ea.in, "Input NIfTI")->required();
  estimate->add_option("--out", ea.out, "Sigma field output (3D NIfTI)");
  estimate->add_option("--coils", ea.coils, "Effective number of coils N")->check(CLI::PositiveNumber)->capture_default_str();
  estimate->add_option("--method", ea.method, "Estimator")
      ->check(CLI::IsMember({"piesno", "field", "local"}))
      ->capture_default_str();
  estimate->add_option("--noise-map", ea.map, "Acquired noise-only scan")->check(CLI::ExistingFile);
  estimate->add_option("--patch-radius", ea.patch_radius, "Patch radius of the local estimator")
      ->check(CLI::Range(1, 3))
      ->capture_default_str();

  SimulateArgs ma;
  auto* simulate = app.add_subcommand("simulate", "Corrupt a clean dataset (or the built-in phantom) with noise");
  simulate->add_option("--in", ma.in, "Clean 4D NIfTI; the crossing phantom when omitted");
  simulate->add_option("--bval", ma.bval, "b-values of --in");
  simulate->add_option("--bvec", ma.bvec, "b-vectors of --in");
  simulate->add_option("--mask", ma.mask, "Mask of --in (default: nonzero voxels)");
  simulate->add_option("--out-dir", ma.out_dir, "Output directory")->capture_default_str();
  simulate->add_option("--prefix", ma.prefix, "Output file prefix")->capture_default_str();
  simulate->add_option("--snr", ma.snr, "mean(b0) / sigma")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--sigma", ma.sigma, "Noise level overriding --snr")->check(CLI::NonNegativeNumber);
  simulate->add_option("--coils", ma.coils, "Number of coils N")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--beta", ma.beta, "Noise amplitude profile")
      ->check(CLI::IsMember({"constant", "sphere"}))
      ->capture_default_str();
  simulate->add_option("--seed", ma.seed, "Random seed")->capture_default_str();
  simulate->add_option("--size", ma.size, "Phantom edge length in voxels")->check(CLI::Range(8, 512))->capture_default_str();
  simulate->add_option("--directions", ma.directions, "Phantom gradient directions")
      ->check(CLI::Range(6, 512))
      ->capture_default_str();

  EvaluateArgs va;
  auto* evaluate = app.add_subcommand("evaluate", "PSNR and SSIM against a reference");
  evaluate->add_option("--ref", va.ref, "Reference NIfTI")->required();
  evaluate->add_option("--test", va.test, "Test NIfTI")->required();
  evaluate->add_option("--mask", va.mask, "Mask (default: nonzero reference voxels)");
  evaluate->add_option("--out", va.out, "Also write the report to this file");
  evaluate->add_flag("--per-volume", va.per_volume, "Print one line per volume");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  if (simulate->parsed() && !ma.in.empty() && (ma.bval.empty() || ma.bvec.empty())) {
    std::cerr << "nlsam simulate: --in requires --bval and --bvec\n";
    return kExitInput;
  }

  if (denoise->parsed()) return run_denoise(da, argv_line);
  if (stabilize->parsed()) return run_stabilize(sa, argv_line);
  if (estimate->parsed()) return run_estimate(ea, argv_line);
  if (simulate->parsed()) return run_simulate(ma, argv_line);
  return run_evaluate(va);
}

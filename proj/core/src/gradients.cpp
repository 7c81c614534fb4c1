#include "nlsam/gradients.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "nlsam/error.hpp"

namespace nlsam {
namespace {

std::vector<std::vector<double>> read_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open gradient file '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::vector<double> row;
    std::string token;
    while (ss >> token) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(token, &used));
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw GradientFormatError("non-numeric entry '" + token + "' in '" + path.string() + "'");
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

GradientTable::GradientTable(std::vector<double> bvals, std::vector<Vec3> bvecs, double b0_threshold)
    : bvals_(std::move(bvals)), bvecs_(std::move(bvecs)), b0_threshold_(b0_threshold) {
  if (bvals_.size() != bvecs_.size()) {
    throw GradientFormatError(std::to_string(bvals_.size()) + " b-values but " + std::to_string(bvecs_.size()) +
                              " directions");
  }
  bool any_b0 = false;
  for (std::size_t i = 0; i < bvals_.size(); ++i) {
    if (!(bvals_[i] >= 0.0) || !std::isfinite(bvals_[i])) throw GradientFormatError("b-values must be nonnegative");
    auto& g = bvecs_[i];
    const double n = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
    if (!std::isfinite(n)) throw GradientFormatError("non-finite gradient direction");
    if (n > 0.0) {
      for (double& c : g) c /= n;
    }
    if (is_b0(i)) {
      any_b0 = true;
    } else if (n == 0.0) {
      throw GradientFormatError("diffusion-weighted volume " + std::to_string(i) + " has a zero direction");
    }
  }
  if (!bvals_.empty() && !any_b0) throw GradientFormatError("gradient table has no b0 volume");
}

std::vector<std::size_t> GradientTable::b0_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (is_b0(i)) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> GradientTable::dwi_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (!is_b0(i)) out.push_back(i);
  }
  return out;
}

GradientTable read_gradients(const std::filesystem::path& bval_path, const std::filesystem::path& bvec_path,
                             double b0_threshold) {
  auto bval_rows = read_rows(bval_path);
  auto bvec_rows = read_rows(bvec_path);
  // A single column file is accepted as well as the row convention.
  if (bval_rows.size() > 1 && bval_rows.front().size() == 1) {
    std::vector<double> flat;
    for (const auto& r : bval_rows) flat.insert(flat.end(), r.begin(), r.end());
    bval_rows = {flat};
  }
  if (bval_rows.size() != 1) throw GradientFormatError("'" + bval_path.string() + "' must hold exactly one row");
  if (bvec_rows.size() != 3) {
    bool columns = !bvec_rows.empty();
    for (const auto& r : bvec_rows) columns = columns && r.size() == 3;
    if (!columns) throw GradientFormatError("'" + bvec_path.string() + "' must hold three rows");
    std::vector<std::vector<double>> t(3);
    for (const auto& r : bvec_rows) {
      for (int c = 0; c < 3; ++c) t[c].push_back(r[c]);
    }
    bvec_rows = std::move(t);
  }
  const std::size_t n = bvec_rows[0].size();
  if (bvec_rows[1].size() != n || bvec_rows[2].size() != n) {
    throw GradientFormatError("rows of '" + bvec_path.string() + "' differ in length");
  }
  if (bval_rows[0].size() != n) {
    throw GradientFormatError(std::to_string(bval_rows[0].size()) + " b-values in '" + bval_path.string() + "' but " +
                              std::to_string(n) + " directions in '" + bvec_path.string() + "'");
  }
  std::vector<Vec3> bvecs(n);
  for (std::size_t i = 0; i < n; ++i) bvecs[i] = {bvec_rows[0][i], bvec_rows[1][i], bvec_rows[2][i]};
  return GradientTable(std::move(bval_rows[0]), std::move(bvecs), b0_threshold);
}

void write_gradients(const GradientTable& table, const std::filesystem::path& bval_path,
                     const std::filesystem::path& bvec_path) {
  std::ofstream bval(bval_path);
  std::ofstream bvec(bvec_path);
  if (!bval || !bvec) throw IoError("cannot write gradient files next to '" + bval_path.string() + "'");
  bval << std::setprecision(10);
  bvec << std::setprecision(10);
  for (std::size_t i = 0; i < table.size(); ++i) bval << (i ? " " : "") << table.bval(i);
  bval << '\n';
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < table.size(); ++i) bvec << (i ? " " : "") << table.bvec(i)[c];
    bvec << '\n';
  }
}

void check_matches(const GradientTable& table, std::size_t volumes) {
  if (table.size() != volumes) {
    throw GradientFormatError("gradient table has " + std::to_string(table.size()) + " entries but the volume has " +
                              std::to_string(volumes) + " volumes");
  }
}

}  // namespace nlsam

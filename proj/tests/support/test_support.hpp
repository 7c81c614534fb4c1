#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace nlsam::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("nlsam_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Adaptive Gauss-Kronrod integral of f over [a, b].
template <typename F>
double integrate(F f, double a, double b, double tol = 1e-13) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, tol);
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

inline Moments sample_moments(const std::vector<double>& x) {
  Moments m;
  const auto n = static_cast<double>(x.size());
  for (double v : x) m.mean += v;
  m.mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - m.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  m.variance = m2;
  m.skewness = m3 / std::pow(m2, 1.5);
  m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  return m;
}

/// Magnitude of N complex Gaussian channels carrying eta / sqrt(N) on the real parts.
inline double draw_ncchi(std::mt19937_64& rng, double eta, double sigma, int n_coils) {
  std::normal_distribution<double> normal(0.0, sigma);
  const double s = eta / std::sqrt(static_cast<double>(n_coils));
  double acc = 0.0;
  for (int c = 0; c < n_coils; ++c) {
    const double re = s + normal(rng);
    const double im = normal(rng);
    acc += re * re + im * im;
  }
  return std::sqrt(acc);
}

/// Two-sided Kolmogorov-Smirnov statistic of `sample` against `cdf`.
template <typename Cdf>
double ks_statistic(std::vector<double> sample, Cdf cdf) {
  std::sort(sample.begin(), sample.end());
  const auto n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

}  // namespace nlsam::testing

#include "nlsam/ncchi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "nlsam/error.hpp"
#include "nlsam/special.hpp"

namespace nlsam {
namespace {

// Below this eta/sigma the central (eta = 0) closed forms are used.
constexpr double kCentralRatio = 1e-12;
// Above this Bessel argument a*b the series are replaced by quadrature.
constexpr double kSeriesLimit = 1e4;
constexpr double kSeriesRelTol = 1e-15;

double central_log_pdf(double m, double sigma, int n) {
  return std::log(2.0) * (1 - n) + (2.0 * n - 1.0) * std::log(m) - 2.0 * n * std::log(sigma) -
         m * m / (2.0 * sigma * sigma) - std::lgamma(static_cast<double>(n));
}

// Sum of exp(log_terms) over k = first.. with early termination once the
// terms are decreasing and negligible. `log_term(k)` returns -inf past the
// supplied Bessel table, which the caller detects via `exhausted`.
struct SeriesResult {
  double sum = 0.0;
  bool converged = false;
};

template <typename Fn>
SeriesResult sum_series(int first, int last, Fn&& log_term) {
  SeriesResult r;
  double prev = -std::numeric_limits<double>::infinity();
  for (int k = first; k <= last; ++k) {
    const double lt = log_term(k);
    const double t = std::exp(lt);
    r.sum += t;
    if (k > first + 1 && lt < prev && t <= kSeriesRelTol * r.sum) {
      r.converged = true;
      return r;
    }
    prev = lt;
  }
  return r;
}

// 1 - Q_N(a, b) = e^{-(a^2+b^2)/2} sum_{k>=N} (b/a)^k I_k(ab); all terms positive.
double cdf_lower_series(int n, double a, double b) {
  const double x = a * b;
  const double log_ratio = std::log(b / a);
  const double shift = -0.5 * (a * a + b * b);
  int kmax = n + 60 + static_cast<int>(std::ceil(std::max(x + 10.0 * std::sqrt(x), b * b + 10.0 * b)));
  for (;;) {
    const auto logi = special::log_bessel_i_sequence(x, kmax);
    auto r = sum_series(n, kmax, [&](int k) { return k * log_ratio + logi[k] + shift; });
    if (r.converged) return std::min(1.0, r.sum);
    kmax *= 2;
  }
}

// Q_N(a, b) = e^{-(a^2+b^2)/2} sum_{k>=1-N} (a/b)^k I_|k|(ab).
double q_upper_series(int n, double a, double b) {
  const double x = a * b;
  const double log_ratio = std::log(a / b);
  const double shift = -0.5 * (a * a + b * b);
  int kmax = n + 60 + static_cast<int>(std::ceil(x + 10.0 * std::sqrt(x)));
  for (;;) {
    const auto logi = special::log_bessel_i_sequence(x, kmax);
    auto r = sum_series(1 - n, kmax, [&](int k) { return k * log_ratio + logi[static_cast<std::size_t>(std::abs(k))] + shift; });
    if (r.converged) return std::min(1.0, r.sum);
    kmax *= 2;
  }
}

double cdf_by_quadrature(double m, const NcChiParams& p) {
  using boost::math::quadrature::gauss_kronrod;
  auto pdf = [&](double t) { return ncx_pdf(t, p); };
  const double span = 40.0 * p.sigma;
  // The density is negligible further than 40 sigma from eta when a*b > 1e4.
  if (m <= p.eta) {
    const double lo = std::max(0.0, p.eta - span);
    if (m <= lo) return 0.0;
    return std::clamp(gauss_kronrod<double, 61>::integrate(pdf, lo, m, 15, 1e-13), 0.0, 1.0);
  }
  const double hi = p.eta + span;
  if (m >= hi) return 1.0;
  return std::clamp(1.0 - gauss_kronrod<double, 61>::integrate(pdf, m, hi, 15, 1e-13), 0.0, 1.0);
}

}  // namespace

void validate(const NcChiParams& p) {
  if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) throw DomainError("nc-chi sigma must be positive");
  if (!(p.eta >= 0.0) || !std::isfinite(p.eta)) throw DomainError("nc-chi eta must be nonnegative");
  if (p.n_coils < 1) throw DomainError("nc-chi coil count must be >= 1");
}

double ncx_pdf(double m, const NcChiParams& p) {
  validate(p);
  if (!(m > 0.0)) return 0.0;
  if (!std::isfinite(m)) return 0.0;
  const double s2 = p.sigma * p.sigma;
  if (p.eta < kCentralRatio * p.sigma) return std::exp(central_log_pdf(m, p.sigma, p.n_coils));
  const int n = p.n_coils;
  const double z = m * p.eta / s2;
  const double log_pdf = std::log(m / s2) + (n - 1) * std::log(m / p.eta) - (m * m + p.eta * p.eta) / (2.0 * s2) +
                         special::log_bessel_i(n - 1, z);
  return std::exp(log_pdf);
}

double marcum_q(int order, double a, double b) {
  if (order < 1) throw DomainError("marcum_q: order must be >= 1");
  if (!(a >= 0.0) || !(b >= 0.0)) throw DomainError("marcum_q: arguments must be nonnegative");
  return 1.0 - ncx_cdf(b, NcChiParams{a, 1.0, order});
}

double ncx_cdf(double m, const NcChiParams& p) {
  validate(p);
  if (!(m > 0.0)) return 0.0;
  if (std::isinf(m)) return 1.0;
  const int n = p.n_coils;
  const double a = p.eta / p.sigma;
  const double b = m / p.sigma;
  if (a < kCentralRatio) return boost::math::gamma_p(static_cast<double>(n), 0.5 * b * b);
  if (a * b > kSeriesLimit) return cdf_by_quadrature(m, p);
  if (b <= a) return cdf_lower_series(n, a, b);
  const double cdf = 1.0 - q_upper_series(n, a, b);
  // Cancellation guard: far in the lower tail use the positive series.
  if (cdf < 1e-3) return cdf_lower_series(n, a, b);
  return std::clamp(cdf, 0.0, 1.0);
}

double gaussian_cdf(double x, double mu, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("gaussian_cdf: sigma must be positive");
  return boost::math::cdf(boost::math::normal_distribution<double>(mu, sigma), x);
}

double gaussian_icdf(double alpha, double mu, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("gaussian_icdf: sigma must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("gaussian_icdf: alpha must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(mu, sigma), alpha);
}

double beta_factor(int n_coils) {
  if (n_coils < 1) throw DomainError("beta_factor: N must be >= 1");
  // sqrt(2) Gamma(N + 1/2) / Gamma(N) is the double-factorial form rewritten.
  return std::sqrt(2.0) * std::exp(std::lgamma(n_coils + 0.5) - std::lgamma(static_cast<double>(n_coils)));
}

double mean_factor(double theta, int n_coils) {
  if (!(theta >= 0.0)) throw DomainError("mean_factor: theta must be nonnegative");
  return beta_factor(n_coils) * special::hyp1f1_neg_half(n_coils, -0.5 * theta * theta);
}

double xi_factor(double theta, int n_coils) {
  const double mf = mean_factor(theta, n_coils);
  return 2.0 * n_coils + theta * theta - mf * mf;
}

}  // namespace nlsam

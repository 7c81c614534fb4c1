#include "nlsam/special.hpp"

#include <cmath>
#include <limits>

#include "nlsam/error.hpp"

namespace nlsam::special {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 6.283185307179586476925;

// log I_0(x) for large x from the Hankel expansion (x >= 700 only).
double log_bessel_i0_large(double x) {
  const double inv = 1.0 / x;
  const double series = 1.0 + inv * (1.0 / 8.0 + inv * (9.0 / 128.0 + inv * (225.0 / 3072.0)));
  return x - 0.5 * std::log(kTwoPi * x) + std::log(series);
}

double log_bessel_i0(double x) {
  if (x < 700.0) return std::log(std::cyl_bessel_i(0.0, x));
  return log_bessel_i0_large(x);
}

// Small-argument power series, summed relative to the leading term.
double log_bessel_i_small(int nu, double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * (nu + k));
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return nu * std::log(0.5 * x) - std::lgamma(nu + 1.0) + std::log(sum);
}

}  // namespace

std::vector<double> log_bessel_i_sequence(double x, int kmax) {
  if (kmax < 0) throw DomainError("log_bessel_i_sequence: negative order");
  if (!(x >= 0.0)) throw DomainError("log_bessel_i_sequence: negative argument");
  std::vector<double> out(static_cast<std::size_t>(kmax) + 1, -kInf);
  if (x == 0.0) {
    out[0] = 0.0;
    return out;
  }
  // Backward recurrence for rho_k = I_{k+1}/I_k, started far enough past both
  // kmax and the turning point k ~ x that the start error has decayed.
  const int start = kmax + 64 + static_cast<int>(std::ceil(x + 10.0 * std::sqrt(x)));
  std::vector<double> rho(static_cast<std::size_t>(kmax) + 1);
  double r = 0.0;
  for (int k = start; k >= 0; --k) {
    r = 1.0 / (2.0 * (k + 1) / x + r);
    if (k <= kmax) rho[static_cast<std::size_t>(k)] = r;
  }
  out[0] = log_bessel_i0(x);
  for (int k = 0; k < kmax; ++k) out[k + 1] = out[k] + std::log(rho[k]);
  return out;
}

double log_bessel_i(int nu, double x) {
  if (nu < 0) nu = -nu;
  if (!(x >= 0.0)) throw DomainError("log_bessel_i: negative argument");
  if (x == 0.0) return nu == 0 ? 0.0 : -kInf;
  if (x < 1e-3 * std::sqrt(nu + 1.0)) return log_bessel_i_small(nu, x);
  if (x < 700.0) {
    const double v = std::cyl_bessel_i(static_cast<double>(nu), x);
    if (v > 0.0 && std::isfinite(v)) return std::log(v);
    return log_bessel_i_small(nu, x);
  }
  const double mu = 4.0 * nu * nu;
  if (mu < 0.5 * x) {
    // Hankel expansion: terms shrink while (mu - (2k-1)^2) / (8 k x) < 1.
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 60; ++k) {
      const double odd = 2.0 * k - 1.0;
      term *= -(mu - odd * odd) / (8.0 * k * x);
      sum += term;
      if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return x - 0.5 * std::log(kTwoPi * x) + std::log(sum);
  }
  return log_bessel_i_sequence(x, nu).back();
}

double hyp1f1_neg_half(int n, double x) {
  if (n < 1) throw DomainError("hyp1f1_neg_half: n must be >= 1");
  if (!(x <= 0.0)) throw DomainError("hyp1f1_neg_half: argument must be <= 0");
  const double b = n;
  if (x >= -30.0) {
    double term = 1.0;
    double sum = 1.0;
    for (int k = 0; k < 1000; ++k) {
      term *= (-0.5 + k) / (b + k) * x / (k + 1.0);
      sum += term;
      if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
  }
  const double t = -x;
  if (t >= 30.0 + 2.0 * b) {
    // 1F1(a; b; -t) ~ Gamma(b)/Gamma(b-a) t^{-a} sum_s (a)_s (a-b+1)_s / s! t^{-s}
    const double a = -0.5;
    double term = 1.0;
    double sum = 1.0;
    for (int s = 0; s < 60; ++s) {
      const double next = term * (a + s) * (a - b + 1.0 + s) / ((s + 1.0) * t);
      if (std::abs(next) > std::abs(term)) break;
      term = next;
      sum += term;
      if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return std::exp(std::lgamma(b) - std::lgamma(b + 0.5) + 0.5 * std::log(t)) * sum;
  }
  // Kummer: 1F1(a; b; x) = e^x 1F1(b - a; b; -x); every term is positive.
  double log_term = 0.0;
  double sum = 0.0;
  for (int k = 0; k < 100000; ++k) {
    const double contrib = std::exp(log_term + x);
    sum += contrib;
    if (k > t && contrib < 1e-17 * sum) break;
    log_term += std::log((b + 0.5 + k) / (b + k) * t / (k + 1.0));
  }
  return sum;
}

}  // namespace nlsam::special

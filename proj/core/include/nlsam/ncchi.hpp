#pragma once

namespace nlsam {

/// Non-central chi distribution of the magnitude of 2N i.i.d. Gaussian
/// channels with total signal amplitude eta and per-channel standard deviation
/// sigma. N = 1 is the Rician distribution.
struct NcChiParams {
  double eta = 0.0;
  double sigma = 1.0;
  int n_coils = 1;
};

/// Throws DomainError unless sigma > 0, eta >= 0 and n_coils >= 1.
void validate(const NcChiParams& p);

double ncx_pdf(double m, const NcChiParams& p);

/// 1 - Q_N(eta/sigma, m/sigma).
double ncx_cdf(double m, const NcChiParams& p);

/// Generalized Marcum Q function Q_order(a, b) for integer order >= 1.
double marcum_q(int order, double a, double b);

double gaussian_cdf(double x, double mu, double sigma);

/// Inverse Gaussian cdf; alpha must lie strictly inside (0, 1).
double gaussian_icdf(double alpha, double mu, double sigma);

/// beta_N = sqrt(pi/2) (2N-1)!! / (2^(N-1) (N-1)!), the mean of the central
/// nc-chi distribution in units of sigma.
double beta_factor(int n_coils);

/// E[m] / sigma = beta_N 1F1(-1/2; N; -theta^2/2) at SNR theta = eta/sigma.
double mean_factor(double theta, int n_coils);

/// Var[m] / sigma^2 = 2N + theta^2 - (E[m]/sigma)^2.
double xi_factor(double theta, int n_coils);

}  // namespace nlsam

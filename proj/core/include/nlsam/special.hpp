#pragma once

#include <vector>

namespace nlsam::special {

/// log I_nu(x) for integer order nu >= 0 and x >= 0 without overflow.
double log_bessel_i(int nu, double x);

/// log I_k(x) for k = 0..kmax, via backward recurrence on the ratios
/// I_{k+1}/I_k anchored at I_0. Entries are -inf when x == 0 and k > 0.
std::vector<double> log_bessel_i_sequence(double x, int kmax);

/// Confluent hypergeometric 1F1(-1/2; n; x) for x <= 0. Power series for
/// |x| <= 30, Kummer-transformed positive series above, large-argument
/// asymptotic expansion beyond |x| = 1000.
double hyp1f1_neg_half(int n, double x);

}  // namespace nlsam::special

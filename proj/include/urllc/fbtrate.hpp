#pragma once

#include <vector>

namespace urllc {

/// Shannon term, dispersion penalty and their difference, all in bits.
struct RateTerms {
    double shannon_bits = 0;     // sum of log2(1+gamma)
    double dispersion_bits = 0;  // a * Qinv(eps) * sqrt(sum V)
    double psi_bits = 0;         // shannon - dispersion
};

/// Inverse Gaussian Q-function: returns x with Q(x) = eps, relative accuracy
/// 1e-10 or better. Q(x) = 0.5*erfc(x/sqrt(2)). Throws std::domain_error for
/// eps outside (0, 1). q_inv(0.5) == 0 exactly.
double q_inv(double eps);

/// Channel dispersion V(gamma) = 1 - (1+gamma)^-2, in [0, 1).
double dispersion(double snr);

/// Normal-approximation rate over a set of resources with fractional
/// occupation weights (weights multiply both the Shannon and the dispersion
/// sums). Negative psi is returned as-is.
RateTerms rate_terms_weighted(const std::vector<double> &snrs,
                              const std::vector<double> &weights, double eps);

/// rate_terms_weighted with unit weights.
RateTerms rate_terms(const std::vector<double> &snrs, double eps);

/// Achievable bits Psi = sum log2(1+gamma_l) - log2(e)*Qinv(eps)*sqrt(sum V_l).
/// Empty allocation -> 0.
double psi(const std::vector<double> &snrs, double eps);

} // namespace urllc

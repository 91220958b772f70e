#include "urllc/fbtrate.hpp"

#include <cmath>
#include <stdexcept>

namespace urllc {

namespace {

double gaussian_q(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

// Acklam's rational approximation of the standard normal quantile, ~1e-9
// absolute; refined below by Newton on Q itself.
double norm_quantile_approx(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    if (p < p_low) {
        double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p <= 1.0 - p_low) {
        double q = p - 0.5;
        double r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

} // namespace

double q_inv(double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("q_inv: eps must be in (0,1)");
    if (eps == 0.5) return 0.0;
    // Q(x) = eps  <=>  x = Phi^-1(1-eps) = -Phi^-1(eps)
    double x = -norm_quantile_approx(eps);
    // Newton refinement on Q; Q'(x) = -phi(x). erfc keeps the tail in full
    // relative precision, so two steps reach ~1e-15 relative.
    for (int it = 0; it < 3; ++it) {
        double f = gaussian_q(x) - eps;
        double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
        if (pdf <= 0.0) break;
        double step = f / pdf;
        x += step;
        if (std::abs(step) < 1e-14 * (1.0 + std::abs(x))) break;
    }
    return x;
}

double dispersion(double snr) {
    if (snr < 0.0) throw std::domain_error("dispersion: snr must be >= 0");
    double r = 1.0 + snr;
    return 1.0 - 1.0 / (r * r);
}

RateTerms rate_terms_weighted(const std::vector<double> &snrs,
                              const std::vector<double> &weights, double eps) {
    if (snrs.size() != weights.size())
        throw std::invalid_argument("rate_terms_weighted: size mismatch");
    const double a = std::log2(std::exp(1.0));
    double shannon = 0.0, vsum = 0.0;
    for (size_t i = 0; i < snrs.size(); ++i) {
        shannon += weights[i] * std::log2(1.0 + snrs[i]);
        vsum += weights[i] * dispersion(snrs[i]);
    }
    RateTerms t;
    t.shannon_bits = shannon;
    t.dispersion_bits = a * q_inv(eps) * std::sqrt(std::max(0.0, vsum));
    t.psi_bits = t.shannon_bits - t.dispersion_bits;
    return t;
}

RateTerms rate_terms(const std::vector<double> &snrs, double eps) {
    std::vector<double> w(snrs.size(), 1.0);
    return rate_terms_weighted(snrs, w, eps);
}

double psi(const std::vector<double> &snrs, double eps) {
    if (snrs.empty()) {
        if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("psi: eps must be in (0,1)");
        return 0.0;
    }
    return rate_terms(snrs, eps).psi_bits;
}

} // namespace urllc

#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "urllc/fbtrate.hpp"

using namespace urllc;

namespace {

// Independent oracle: plain bisection on Q(x) = 0.5*erfc(x/sqrt(2)).
double q_inv_oracle(double eps) {
    auto Q = [](double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); };
    double lo = -40.0, hi = 40.0;  // Q(lo) ~ 1 > eps > Q(hi) ~ 0
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (Q(mid) > eps)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double gaussian_q(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

} // namespace

TEST_CASE("q_inv basics") {
    CHECK(q_inv(0.5) == 0.0);  // exact by symmetry
    CHECK(q_inv(1e-6) == doctest::Approx(4.7534).epsilon(1e-3));
    CHECK(q_inv(1e-6) == doctest::Approx(q_inv_oracle(1e-6)).epsilon(1e-10));
    CHECK(q_inv(0.05) == doctest::Approx(1.6449).epsilon(1e-3));
    CHECK(q_inv(0.05) == doctest::Approx(q_inv_oracle(0.05)).epsilon(1e-10));
    CHECK_THROWS_AS(q_inv(0.0), std::domain_error);
    CHECK_THROWS_AS(q_inv(1.0), std::domain_error);
    CHECK_THROWS_AS(q_inv(-0.3), std::domain_error);
}

TEST_CASE("q_inv accuracy and monotonicity") {
    std::vector<double> epss = {1e-9, 1e-7, 1e-6, 1e-4, 1e-2, 0.1, 0.3, 0.5, 0.7, 0.9, 0.999};
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : epss) {
        double x = q_inv(eps);
        CHECK(std::abs(gaussian_q(x) - eps) / eps <= 1e-10);
        CHECK(x < prev);
        prev = x;
    }
}

TEST_CASE("dispersion") {
    CHECK(dispersion(0.0) == 0.0);
    CHECK(dispersion(1.0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(std::abs(dispersion(1e6) - 1.0) < 1e-11);
    double prev = -1.0;
    for (double g = 0.0; g < 50.0; g += 0.37) {
        double v = dispersion(g);
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
        CHECK(v > prev);
        prev = v;
    }
    CHECK_THROWS_AS(dispersion(-1.0), std::domain_error);
}

TEST_CASE("psi examples") {
    // eps = 0.5: the dispersion term vanishes and psi is the Shannon sum.
    std::vector<double> snrs = {0.3, 1.7, 9.2, 100.0};
    double shannon = 0.0;
    for (double g : snrs) shannon += std::log2(1.0 + g);
    CHECK(psi(snrs, 0.5) == doctest::Approx(shannon).epsilon(1e-9));

    CHECK(psi({}, 1e-6) == 0.0);

    // Single resource, gamma = 3: value frozen from the bisection oracle.
    double expected = 2.0 - std::log2(std::exp(1.0)) * q_inv_oracle(1e-6) * std::sqrt(0.9375);
    CHECK(expected == doctest::Approx(-4.640).epsilon(1e-3));
    CHECK(psi({3.0}, 1e-6) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("psi never exceeds the Shannon sum") {
    std::vector<double> snrs = {0.2, 2.0, 40.0};
    double shannon = 0.0;
    for (double g : snrs) shannon += std::log2(1.0 + g);
    for (double eps : {1e-7, 1e-4, 1e-2, 0.3, 0.5}) {
        double p = psi(snrs, eps);
        CHECK(p <= shannon + 1e-12);
        if (eps == 0.5) CHECK(p == doctest::Approx(shannon).epsilon(1e-12));
    }
    // equality also at all-zero SNR
    CHECK(psi({0.0, 0.0}, 1e-6) == 0.0);
}

TEST_CASE("psi per-resource rate approaches Shannon as L grows") {
    // error term is a*Qinv*sqrt(V/L): pick points where it is below 1% of the
    // Shannon rate at L = 1e4.
    const int L = 10000;
    struct Case {
        double gamma, eps;
    } cases[] = {{1000.0, 1e-6}, {200.0, 1e-3}};
    for (const auto &c : cases) {
        std::vector<double> snrs(L, c.gamma);
        double per = psi(snrs, c.eps) / L;
        CHECK(per == doctest::Approx(std::log2(1.0 + c.gamma)).epsilon(0.01));
    }
}

TEST_CASE("psi increases in each SNR inside the nonnegative region") {
    uint64_t state = 12345;
    auto next = [&]() {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return static_cast<double>(state >> 11) * 0x1.0p-53;
    };
    int tested = 0;
    for (int trial = 0; trial < 400 && tested < 50; ++trial) {
        int L = 4 + static_cast<int>(next() * 28);
        double eps = std::pow(10.0, -7.0 + 5.0 * next());
        std::vector<double> snrs(L);
        for (auto &g : snrs) g = 1.0 + next() * 999.0;
        if (psi(snrs, eps) < 0.0) continue;
        ++tested;
        int l = static_cast<int>(next() * L);
        double base = psi(snrs, eps);
        snrs[l] *= 1.01;
        CHECK(psi(snrs, eps) > base);
    }
    CHECK(tested >= 30);  // generator must actually hit the region
}

TEST_CASE("rate_terms consistency") {
    RateTerms t = rate_terms({1.0, 3.0}, 1e-4);
    CHECK(t.psi_bits == doctest::Approx(t.shannon_bits - t.dispersion_bits).epsilon(1e-15));
    CHECK(t.dispersion_bits >= 0.0);
    std::vector<double> snrs = {1.0}, weights = {1.0, 2.0};
    CHECK_THROWS_AS(rate_terms_weighted(snrs, weights, 0.1), std::invalid_argument);
}

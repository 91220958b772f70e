#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "urllc/transform.hpp"

using namespace urllc;

namespace {

SystemConfig make_cfg(int K = 2, int M = 2, int N = 2) {
    SystemConfig cfg;
    cfg.K = K;
    cfg.M_u = cfg.M_d = M;
    cfg.N_u = cfg.N_d = N;
    cfg.tau = 1;
    cfg.bw_subcarrier_hz = 30e3;
    cfg.noise_psd_dbm_hz = -174.0;
    cfg.p_max_w = dbm_to_watt(45.0);
    cfg.p_user_max_w.assign(K, dbm_to_watt(23.0));
    cfg.task_bits.assign(K, 20.0);
    cfg.deadline_slots.assign(K, cfg.tau + N);
    cfg.gamma_ratio.assign(K, 1.0);
    cfg.eps_u.assign(K, 1e-6);
    cfg.eps_d.assign(K, 1e-6);
    cfg.weights.assign(K, 1.0);
    cfg.r_inner_m = 50.0;
    cfg.r_outer_m = 100.0;
    cfg.apply_default_penalties();
    cfg.validate();
    return cfg;
}

// Feasible pbar interval implied by the four envelope rows at fixed (s, p).
std::pair<double, double> pbar_interval(const std::vector<BigMRow> &rows, Link link, int k,
                                        int m, int n, double s, double p) {
    double lo = -1e30, hi = 1e30;
    for (const auto &r : rows) {
        if (r.link != link || r.k != k || r.m != m || r.n != n) continue;
        double fixed = r.coef_s * s + r.coef_p * p;
        if (r.coef_pbar > 0)
            hi = std::min(hi, (r.rhs - fixed) / r.coef_pbar);
        else
            lo = std::max(lo, (fixed - r.rhs) / (-r.coef_pbar));
    }
    return {lo, hi};
}

} // namespace

TEST_CASE("bigm envelope intervals") {
    SystemConfig cfg = make_cfg(1, 1, 1);
    double cap = cfg.p_user_max_w[0];
    auto rows = bigm_constraints(cfg);
    // 4 rows per cell per link, K*(M_u*N_u + M_d*N_d) cells
    CHECK(rows.size() == 8);

    // s = 0 forces pbar = 0 for any p <= cap
    auto [lo0, hi0] = pbar_interval(rows, Link::Uplink, 0, 0, 0, 0.0, 0.5 * cap);
    CHECK(lo0 == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(hi0 == doctest::Approx(0.0).epsilon(1e-15));

    // s = 1 forces pbar = p
    auto [lo1, hi1] = pbar_interval(rows, Link::Uplink, 0, 0, 0, 1.0, 0.3 * cap);
    CHECK(lo1 == doctest::Approx(0.3 * cap).epsilon(1e-12));
    CHECK(hi1 == doctest::Approx(0.3 * cap).epsilon(1e-12));

    // s = 0.5, p = cap: interval collapses to 0.5*cap
    auto [loh, hih] = pbar_interval(rows, Link::Uplink, 0, 0, 0, 0.5, cap);
    CHECK(loh == doctest::Approx(0.5 * cap).epsilon(1e-12));
    CHECK(hih == doctest::Approx(0.5 * cap).epsilon(1e-12));
}

TEST_CASE("bigm envelopes preserve the binary feasible set") {
    SystemConfig cfg = make_cfg(1, 1, 1);
    double cap = cfg.p_user_max_w[0];
    auto rows = bigm_constraints(cfg);
    for (double s : {0.0, 1.0})
        for (int gp = 0; gp <= 16; ++gp) {
            double p = cap * gp / 16.0;
            auto [lo, hi] = pbar_interval(rows, Link::Uplink, 0, 0, 0, s, p);
            CHECK(lo == doctest::Approx(s * p).epsilon(1e-12));
            CHECK(hi == doctest::Approx(s * p).epsilon(1e-12));
        }
}

TEST_CASE("e_minus_h") {
    Tensor3 s(2, 2, 1);
    CHECK(e_minus_h(s) == 0.0);  // all zero
    s(0, 0, 0) = 1.0;
    s(1, 1, 0) = 1.0;
    CHECK(e_minus_h(s) == 0.0);  // binary
    s(0, 1, 0) = 0.5;
    CHECK(e_minus_h(s) == doctest::Approx(0.25).epsilon(1e-15));
    s(1, 0, 0) = 1.5;
    CHECK_THROWS_AS(e_minus_h(s), std::domain_error);
    s(1, 0, 0) = -0.1;
    CHECK_THROWS_AS(e_minus_h(s), std::domain_error);
}

TEST_CASE("penalized objective") {
    SystemConfig cfg = make_cfg(2, 2, 1);
    Allocation alloc = Allocation::zeros(cfg);
    alloc.s_u(0, 0, 0) = 1.0;
    alloc.pbar_u(0, 0, 0) = 0.05;
    alloc.s_d(1, 1, 0) = 1.0;
    alloc.pbar_d(1, 1, 0) = 0.2;
    double phi = objective_bigm_w(alloc, cfg);
    CHECK(phi == doctest::Approx(0.25).epsilon(1e-12));
    // binary s: equals Phi exactly
    CHECK(penalized_objective(alloc, cfg) == doctest::Approx(phi).epsilon(1e-12));

    // eta = 0: equals Phi even for fractional s
    SystemConfig zero_eta = cfg;
    zero_eta.eta1_w = zero_eta.eta2_w = 1e-300;  // validate requires > 0 handling; use tiny
    Allocation frac = alloc;
    frac.s_u(1, 0, 0) = 0.5;
    CHECK(penalized_objective(frac, zero_eta) == doctest::Approx(phi).epsilon(1e-9));

    // one indicator at 0.5 with eta1 = 10*K*P_k_max adds 2.5*K*P_k_max
    double expected = phi + 0.25 * cfg.eta1_w;
    CHECK(cfg.eta1_w == doctest::Approx(10.0 * cfg.K * cfg.p_user_max_w[0]));
    CHECK(penalized_objective(frac, cfg) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("penalized objective dominates the raw surrogate objective") {
    SystemConfig cfg = make_cfg(2, 2, 2);
    uint64_t state = 31;
    auto rnd = [&]() {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return static_cast<double>(state >> 11) * 0x1.0p-53;
    };
    for (int trial = 0; trial < 200; ++trial) {
        Allocation alloc = Allocation::zeros(cfg);
        for (auto t : {&alloc.s_u, &alloc.s_d})
            for (auto &v : t->data()) v = rnd();
        for (auto t : {&alloc.pbar_u, &alloc.pbar_d})
            for (auto &v : t->data()) v = rnd() * 0.1;
        PenaltyState st = penalty_state(alloc, cfg);
        CHECK(st.gap_u >= 0.0);
        CHECK(st.gap_d >= 0.0);
        CHECK(penalized_objective(alloc, cfg) >= objective_bigm_w(alloc, cfg) - 1e-12);
    }
}

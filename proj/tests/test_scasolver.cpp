#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "urllc/fbtrate.hpp"
#include "urllc/scasolver.hpp"
#include "urllc/transform.hpp"

using namespace urllc;

namespace {

SystemConfig make_cfg(int K, int M, int N, int tau, double bits, double eps) {
    SystemConfig cfg;
    cfg.K = K;
    cfg.M_u = cfg.M_d = M;
    cfg.N_u = cfg.N_d = N;
    cfg.tau = tau;
    cfg.bw_subcarrier_hz = 30e3;
    cfg.noise_psd_dbm_hz = -174.0;
    cfg.p_max_w = dbm_to_watt(45.0);
    cfg.p_user_max_w.assign(K, dbm_to_watt(23.0));
    cfg.task_bits.assign(K, bits);
    cfg.deadline_slots.assign(K, tau + N);
    cfg.gamma_ratio.assign(K, 1.0);
    cfg.eps_u.assign(K, eps);
    cfg.eps_d.assign(K, eps);
    cfg.weights.assign(K, 1.0);
    cfg.r_inner_m = 50.0;
    cfg.r_outer_m = 100.0;
    cfg.apply_default_penalties();
    cfg.validate();
    return cfg;
}

struct Lcg {
    uint64_t state;
    explicit Lcg(uint64_t s) : state(s) {}
    double next() {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return static_cast<double>(state >> 11) * 0x1.0p-53;
    }
};

double h_of(const Tensor3 &s) {
    double out = 0.0;
    for (double v : s.data()) out += v * v;
    return out;
}

} // namespace

TEST_CASE("linearize_h tangency and underestimation") {
    Tensor3 point(1, 2, 2);
    point(0, 0, 0) = 0.3;
    point(0, 0, 1) = 0.9;
    point(0, 1, 0) = 0.0;
    point(0, 1, 1) = 1.0;
    CHECK(linearize_h(point, point) == doctest::Approx(h_of(point)).epsilon(1e-12));

    // zero expansion tensor: zero everywhere
    Tensor3 zeros(1, 2, 2);
    Tensor3 anything(1, 2, 2);
    anything(0, 0, 0) = 0.7;
    CHECK(linearize_h(anything, zeros) == 0.0);

    // scalar example: 0.25 + 2*0.5*0.5 = 0.75 <= H(1) = 1
    Tensor3 half(1, 1, 1), one(1, 1, 1);
    half(0, 0, 0) = 0.5;
    one(0, 0, 0) = 1.0;
    CHECK(linearize_h(one, half) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(linearize_h(one, half) <= h_of(one));

    // global underestimator over random points
    Lcg rng(42);
    for (int trial = 0; trial < 1000; ++trial) {
        Tensor3 a(2, 2, 2), b(2, 2, 2);
        for (auto &v : a.data()) v = rng.next();
        for (auto &v : b.data()) v = rng.next();
        CHECK(linearize_h(a, b) <= h_of(a) + 1e-10);
    }
}

TEST_CASE("linearize_v tangency, overestimation, singular point") {
    std::vector<double> gains = {2e5, 5e4, 1e5};
    std::vector<double> point = {1e-3, 5e-3, 2e-3};
    double eps = 1e-6;
    CHECK(linearize_v(point, point, gains, eps) ==
          doctest::Approx(v_bar(point, gains, eps)).epsilon(1e-12));

    Lcg rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> p(3);
        for (auto &v : p) v = rng.next() * 0.01;
        CHECK(linearize_v(p, point, gains, eps) >= v_bar(p, gains, eps) - 1e-10);
    }

    // all-zero expansion is signaled
    std::vector<double> zeros(3, 0.0);
    CHECK_THROWS_AS(v_bar_gradient(zeros, gains, eps), std::domain_error);
    // but eps = 0.5 short-circuits to an identically-zero term
    CHECK(linearize_v(point, zeros, gains, 0.5) == 0.0);
}

TEST_CASE("v_bar gradient matches central finite differences") {
    std::vector<double> gains = {3e4, 8e4, 1.2e5, 6e4};
    Lcg rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        double eps = std::pow(10.0, -7.0 + 5.0 * rng.next());
        std::vector<double> point(4);
        for (auto &v : point) v = 1e-4 + rng.next() * 0.01;
        std::vector<double> grad = v_bar_gradient(point, gains, eps);
        for (int i = 0; i < 4; ++i) {
            double h = std::max(1e-9, 1e-6 * point[i]);
            std::vector<double> up = point, dn = point;
            up[i] += h;
            dn[i] -= h;
            double fd = (v_bar(up, gains, eps) - v_bar(dn, gains, eps)) / (2.0 * h);
            CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("single-user single-cell run reaches the closed form") {
    // eps = 0.5, B = 1, g = 1: the power settles at (2^1 - 1)/1 = 1 W.
    SystemConfig cfg = make_cfg(1, 1, 1, 1, 1.0, 0.5);
    cfg.p_user_max_w = {4.0};
    cfg.p_max_w = 4.0;
    cfg.apply_default_penalties();
    ChannelRealization real;
    real.g_u = {{1.0}};
    real.g_d = {{1.0}};
    real.distance_m = {60.0};

    ScaConfig sca;
    ScaRun res = run(cfg, real, sca);
    CHECK(res.feasible);
    CHECK(res.allocation.s_u(0, 0, 0) == 1.0);
    CHECK(res.allocation.p_u(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-4));
    // downlink needs the same bit count on its own band
    CHECK(res.allocation.p_d(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(res.objective_w == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("fixed point: a converged run terminates quickly when restarted") {
    SystemConfig cfg = make_cfg(2, 2, 2, 1, 12.0, 1e-6);
    ChannelRealization real = draw_realization(cfg, 11);
    ScaConfig sca;
    ScaRun first = run(cfg, real, sca);
    REQUIRE(first.feasible);

    // restart from the final allocation: nothing should move
    ScaRun again = run(cfg, real, sca, first.allocation);
    CHECK(again.trace.rows.size() <= 2);
    CHECK(again.objective_w == doctest::Approx(first.objective_w).epsilon(1e-3));
}

TEST_CASE("penalized objective trace is monotone and gaps close") {
    ScaConfig sca;
    int checked = 0;
    for (uint64_t seed : {101, 202, 303, 404, 505}) {
        SystemConfig cfg = make_cfg(2, 4, 2, 1, 16.0, 1e-6);
        ChannelRealization real = draw_realization(cfg, seed);
        ScaRun res = run(cfg, real, sca);
        if (res.trace.rows.empty()) continue;
        ++checked;
        for (size_t i = 1; i < res.trace.rows.size(); ++i) {
            double prev = res.trace.rows[i - 1].penalized_obj_w;
            double cur = res.trace.rows[i].penalized_obj_w;
            CHECK(cur <= prev + 1e-6 * std::max(1.0, std::abs(prev)));
        }
        CHECK(res.trace.rows.back().gap_u + res.trace.rows.back().gap_d <= 1e-4);
        if (res.feasible) {
            CHECK(res.report.worst() <= res.report.tolerance);
            CHECK(res.report.violation.at("C3") == 0.0);
            CHECK(res.report.violation.at("C4") == 0.0);
            CHECK(res.report.violation.at("C5") == 0.0);
            CHECK(res.report.violation.at("C9") == 0.0);
        }
    }
    CHECK(checked >= 4);
}

TEST_CASE("power-only run on a fixed assignment") {
    SystemConfig cfg = make_cfg(2, 2, 2, 1, 10.0, 1e-6);
    ChannelRealization real = draw_realization(cfg, 17);
    Allocation assignment = round_robin_assignment(cfg);
    ScaConfig sca;
    ScaRun res = run_power_only(cfg, real, sca, assignment);
    CHECK(res.feasible);
    // indicators must be untouched
    for (size_t i = 0; i < assignment.s_u.data().size(); ++i)
        CHECK(res.allocation.s_u.data()[i] == assignment.s_u.data()[i]);
    // p == pbar on assigned cells
    for (int k = 0; k < 2; ++k)
        for (int m = 0; m < 2; ++m)
            for (int n = 0; n < 2; ++n)
                CHECK(res.allocation.p_u(k, m, n) == res.allocation.pbar_u(k, m, n));
}

TEST_CASE("round robin respects masks") {
    SystemConfig cfg = make_cfg(3, 4, 4, 3, 10.0, 1e-6);
    cfg.deadline_slots = {5, 6, 7};
    cfg.validate();
    Allocation a = round_robin_assignment(cfg);
    ConstraintMasks masks = build_masks(cfg);
    for (int k = 0; k < 3; ++k)
        for (int m = 0; m < 4; ++m)
            for (int n = 0; n < 4; ++n)
                if (a.s_d(k, m, n) > 0.5) {
                    CHECK(masks.downlink_allowed(k, n));
                    CHECK(n >= cfg.overlap());
                }
    // every sub-carrier belongs to exactly one user on the uplink
    for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) {
            double sum = 0;
            for (int k = 0; k < 3; ++k) sum += a.s_u(k, m, n);
            CHECK(sum == 1.0);
        }
}

TEST_CASE("infeasible task is reported, not papered over") {
    // 2000 bits through one narrow cell under a 0.2 W budget cannot work
    SystemConfig cfg = make_cfg(1, 1, 1, 1, 2000.0, 1e-6);
    ChannelRealization real;
    real.g_u = {{1e4}};
    real.g_d = {{1e4}};
    real.distance_m = {60.0};
    ScaConfig sca;
    ScaRun res = run(cfg, real, sca);
    CHECK(!res.feasible);
}

TEST_CASE("trace CSV format") {
    IterationTrace trace;
    trace.rows.push_back({1, 12.5, 0.5, 0.25, 0.125, -3.0, SolveStatus::Optimal});
    trace.rows.push_back({2, 11.0, 0.45, 0.1, 0.05, -1.0, SolveStatus::Optimal});
    std::string csv = trace_to_csv(trace);
    CHECK(csv.find("iteration,penalized_obj_W,raw_obj_W,gap_u,gap_d,status") == 0);
    CHECK(csv.find("1,12.5,0.5,0.25,0.125,optimal") != std::string::npos);
    CHECK(csv.find("2,11,0.45,0.1,0.05,optimal") != std::string::npos);
}

TEST_CASE("subproblem assembly dump carries readable names") {
    SystemConfig cfg = make_cfg(1, 2, 1, 1, 6.0, 1e-6);
    ChannelRealization real = draw_realization(cfg, 3);
    ConstraintMasks masks = build_masks(cfg);
    Allocation init = make_default_init(cfg, real);
    SubproblemAssembly assembly = assemble_full(cfg, real, masks, init, /*with_names=*/true);
    assembly.sub.validate();
    std::string json = assembly.sub.to_json();
    CHECK(json.find("pbar_u[0][1][0]") != std::string::npos);
    CHECK(json.find("\"C1\"") != std::string::npos);
}

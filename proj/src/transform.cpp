#include "urllc/transform.hpp"

#include <stdexcept>

namespace urllc {

std::vector<BigMRow> bigm_constraints(const SystemConfig &cfg) {
    std::vector<BigMRow> rows;
    rows.reserve(static_cast<size_t>(cfg.K) * 4 * (cfg.M_u * cfg.N_u + cfg.M_d * cfg.N_d));
    auto emit = [&](Link link, int k, int m, int n, double cap) {
        const char *t13 = (link == Link::Uplink) ? "C13" : "C17";
        const char *t14 = (link == Link::Uplink) ? "C14" : "C18";
        const char *t15 = (link == Link::Uplink) ? "C15" : "C19";
        const char *t16 = (link == Link::Uplink) ? "C16" : "C20";
        // pbar <= cap*s
        rows.push_back({t13, link, k, m, n, -cap, 0.0, 1.0, 0.0});
        // pbar <= p
        rows.push_back({t14, link, k, m, n, 0.0, -1.0, 1.0, 0.0});
        // pbar >= p - (1-s)*cap  <=>  cap*s + p - pbar <= cap
        rows.push_back({t15, link, k, m, n, cap, 1.0, -1.0, cap});
        // pbar >= 0
        rows.push_back({t16, link, k, m, n, 0.0, 0.0, -1.0, 0.0});
    };
    for (int k = 0; k < cfg.K; ++k) {
        for (int m = 0; m < cfg.M_u; ++m)
            for (int n = 0; n < cfg.N_u; ++n) emit(Link::Uplink, k, m, n, cfg.p_user_max_w[k]);
        for (int m = 0; m < cfg.M_d; ++m)
            for (int n = 0; n < cfg.N_d; ++n) emit(Link::Downlink, k, m, n, cfg.p_max_w);
    }
    return rows;
}

double e_minus_h(const Tensor3 &s) {
    double gap = 0.0;
    for (double x : s.data()) {
        if (x < 0.0 || x > 1.0) throw std::domain_error("e_minus_h: entry outside [0,1]");
        gap += x - x * x;
    }
    return gap;
}

PenaltyState penalty_state(const Allocation &alloc, const SystemConfig &cfg) {
    PenaltyState st;
    st.eta1_w = cfg.eta1_w;
    st.eta2_w = cfg.eta2_w;
    st.gap_u = e_minus_h(alloc.s_u);
    st.gap_d = e_minus_h(alloc.s_d);
    return st;
}

double penalized_objective(const Allocation &alloc, const SystemConfig &cfg) {
    return objective_bigm_w(alloc, cfg) + penalty_state(alloc, cfg).total();
}

} // namespace urllc

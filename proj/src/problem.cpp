#include "urllc/problem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "urllc/fbtrate.hpp"

namespace urllc {

Allocation Allocation::zeros(const SystemConfig &cfg) {
    Allocation a;
    a.s_u = Tensor3(cfg.K, cfg.M_u, cfg.N_u);
    a.p_u = Tensor3(cfg.K, cfg.M_u, cfg.N_u);
    a.pbar_u = Tensor3(cfg.K, cfg.M_u, cfg.N_u);
    a.s_d = Tensor3(cfg.K, cfg.M_d, cfg.N_d);
    a.p_d = Tensor3(cfg.K, cfg.M_d, cfg.N_d);
    a.pbar_d = Tensor3(cfg.K, cfg.M_d, cfg.N_d);
    return a;
}

bool Allocation::shape_matches(const SystemConfig &cfg) const {
    return s_u.dim_k() == cfg.K && s_u.dim_m() == cfg.M_u && s_u.dim_n() == cfg.N_u &&
           s_d.dim_k() == cfg.K && s_d.dim_m() == cfg.M_d && s_d.dim_n() == cfg.N_d &&
           s_u.same_shape(p_u) && s_u.same_shape(pbar_u) && s_d.same_shape(p_d) &&
           s_d.same_shape(pbar_d);
}

bool ConstraintMasks::downlink_allowed(int k, int n_d) const {
    const auto &f = delay_forbidden[k];
    return std::find(f.begin(), f.end(), n_d) == f.end();
}

ConstraintMasks build_masks(const SystemConfig &cfg) {
    ConstraintMasks masks;
    // Causality: for overlap index o = 1..Obar, uplink slot tau+o may not be
    // combined with downlink slots 1..o (1-based; stored 0-based).
    for (int o = 1; o <= cfg.overlap(); ++o)
        for (int nd = 1; nd <= o; ++nd)
            masks.causality_pairs.push_back({cfg.tau + o - 1, nd - 1});
    // Delay: downlink slot n_d (1-based) forbidden iff n_d > D_k - tau.
    masks.delay_forbidden.resize(cfg.K);
    for (int k = 0; k < cfg.K; ++k) {
        int limit = cfg.deadline_slots[k] - cfg.tau;
        for (int nd = limit + 1; nd <= cfg.N_d; ++nd)
            masks.delay_forbidden[k].push_back(nd - 1);
    }
    return masks;
}

namespace {

double tensor_weighted_sum(const Tensor3 &s, const Tensor3 &p, int k) {
    double out = 0.0;
    for (int m = 0; m < s.dim_m(); ++m)
        for (int n = 0; n < s.dim_n(); ++n) out += s(k, m, n) * p(k, m, n);
    return out;
}

} // namespace

double objective_w(const Allocation &alloc, const SystemConfig &cfg) {
    if (!alloc.shape_matches(cfg)) throw std::invalid_argument("objective_w: shape mismatch");
    double total = 0.0;
    for (int k = 0; k < cfg.K; ++k) {
        total += cfg.weights[k] * tensor_weighted_sum(alloc.s_u, alloc.p_u, k);
        total += tensor_weighted_sum(alloc.s_d, alloc.p_d, k);
    }
    return total;
}

double objective_bigm_w(const Allocation &alloc, const SystemConfig &cfg) {
    if (!alloc.shape_matches(cfg)) throw std::invalid_argument("objective_bigm_w: shape mismatch");
    double total = 0.0;
    for (int k = 0; k < cfg.K; ++k) {
        for (int m = 0; m < cfg.M_u; ++m)
            for (int n = 0; n < cfg.N_u; ++n) total += cfg.weights[k] * alloc.pbar_u(k, m, n);
        for (int m = 0; m < cfg.M_d; ++m)
            for (int n = 0; n < cfg.N_d; ++n) total += alloc.pbar_d(k, m, n);
    }
    return total;
}

double psi_user(const Allocation &alloc, const SystemConfig &cfg,
                const ChannelRealization &real, int k, Link link) {
    const Tensor3 &s = (link == Link::Uplink) ? alloc.s_u : alloc.s_d;
    const Tensor3 &p = (link == Link::Uplink) ? alloc.p_u : alloc.p_d;
    const auto &g = (link == Link::Uplink) ? real.g_u : real.g_d;
    double eps = (link == Link::Uplink) ? cfg.eps_u[k] : cfg.eps_d[k];
    std::vector<double> snrs, weights;
    for (int m = 0; m < s.dim_m(); ++m)
        for (int n = 0; n < s.dim_n(); ++n) {
            if (s(k, m, n) <= 0.0) continue;
            snrs.push_back(g[k][m] * p(k, m, n));
            weights.push_back(s(k, m, n));
        }
    if (snrs.empty()) return 0.0;
    return rate_terms_weighted(snrs, weights, eps).psi_bits;
}

double psi_user_bigm(const Allocation &alloc, const SystemConfig &cfg,
                     const ChannelRealization &real, int k, Link link) {
    const Tensor3 &pb = (link == Link::Uplink) ? alloc.pbar_u : alloc.pbar_d;
    const auto &g = (link == Link::Uplink) ? real.g_u : real.g_d;
    double eps = (link == Link::Uplink) ? cfg.eps_u[k] : cfg.eps_d[k];
    std::vector<double> snrs;
    for (int m = 0; m < pb.dim_m(); ++m)
        for (int n = 0; n < pb.dim_n(); ++n)
            if (pb(k, m, n) > 0.0) snrs.push_back(g[k][m] * pb(k, m, n));
    if (snrs.empty()) return 0.0;
    return rate_terms(snrs, eps).psi_bits;
}

double FeasibilityReport::worst() const {
    double w = 0.0;
    for (const auto &kv : violation) w = std::max(w, kv.second);
    return w;
}

FeasibilityReport check(const Allocation &alloc, const SystemConfig &cfg,
                        const ChannelRealization &real, double tol) {
    if (!alloc.shape_matches(cfg)) throw std::invalid_argument("check: shape mismatch");
    FeasibilityReport rep;
    rep.tolerance = tol;
    auto &v = rep.violation;
    for (int c = 1; c <= 20; ++c) v["C" + std::to_string(c)] = 0.0;
    auto bump = [&](const std::string &name, double amount) {
        if (amount > v[name]) v[name] = amount;
    };

    ConstraintMasks masks = build_masks(cfg);

    // C1/C2: QoS bit counts (bits of shortfall).
    for (int k = 0; k < cfg.K; ++k) {
        bump("C1", cfg.task_bits[k] - psi_user(alloc, cfg, real, k, Link::Uplink));
        bump("C2", cfg.gamma_ratio[k] * cfg.task_bits[k] -
                       psi_user(alloc, cfg, real, k, Link::Downlink));
    }

    // C3: per-user causality over all (m_u, m_d) pairs of a forbidden slot pair.
    for (const auto &pair : masks.causality_pairs)
        for (int k = 0; k < cfg.K; ++k) {
            double su_max = 0.0, sd_max = 0.0;
            for (int m = 0; m < cfg.M_u; ++m)
                su_max = std::max(su_max, alloc.s_u(k, m, pair.uplink_slot));
            for (int m = 0; m < cfg.M_d; ++m)
                sd_max = std::max(sd_max, alloc.s_d(k, m, pair.downlink_slot));
            bump("C3", su_max + sd_max - 1.0);
        }

    // C4: delay mask.
    for (int k = 0; k < cfg.K; ++k)
        for (int nd : masks.delay_forbidden[k])
            for (int m = 0; m < cfg.M_d; ++m) bump("C4", alloc.s_d(k, m, nd));

    // C5/C9: exclusivity.
    for (int m = 0; m < cfg.M_u; ++m)
        for (int n = 0; n < cfg.N_u; ++n) {
            double sum = 0.0;
            for (int k = 0; k < cfg.K; ++k) sum += alloc.s_u(k, m, n);
            bump("C5", sum - 1.0);
        }
    for (int m = 0; m < cfg.M_d; ++m)
        for (int n = 0; n < cfg.N_d; ++n) {
            double sum = 0.0;
            for (int k = 0; k < cfg.K; ++k) sum += alloc.s_d(k, m, n);
            bump("C9", sum - 1.0);
        }

    // C6/C10: distance from binariness (0 for rounded allocations).
    for (double s : alloc.s_u.data()) bump("C6", std::min(std::abs(s), std::abs(1.0 - s)));
    for (double s : alloc.s_d.data()) bump("C10", std::min(std::abs(s), std::abs(1.0 - s)));

    // C7/C11: power budgets on the indicator-weighted powers.
    for (int k = 0; k < cfg.K; ++k)
        bump("C7", tensor_weighted_sum(alloc.s_u, alloc.p_u, k) - cfg.p_user_max_w[k]);
    {
        double total_d = 0.0;
        for (int k = 0; k < cfg.K; ++k) total_d += tensor_weighted_sum(alloc.s_d, alloc.p_d, k);
        bump("C11", total_d - cfg.p_max_w);
    }

    // C8/C12: nonnegative powers.
    for (double p : alloc.p_u.data()) bump("C8", -p);
    for (double p : alloc.p_d.data()) bump("C12", -p);

    // C13..C20: Big-M envelopes on (s, p, pbar).
    for (int k = 0; k < cfg.K; ++k) {
        double cap_u = cfg.p_user_max_w[k];
        for (int m = 0; m < cfg.M_u; ++m)
            for (int n = 0; n < cfg.N_u; ++n) {
                double s = alloc.s_u(k, m, n), p = alloc.p_u(k, m, n), pb = alloc.pbar_u(k, m, n);
                bump("C13", pb - cap_u * s);
                bump("C14", pb - p);
                bump("C15", p - (1.0 - s) * cap_u - pb);
                bump("C16", -pb);
            }
        double cap_d = cfg.p_max_w;
        for (int m = 0; m < cfg.M_d; ++m)
            for (int n = 0; n < cfg.N_d; ++n) {
                double s = alloc.s_d(k, m, n), p = alloc.p_d(k, m, n), pb = alloc.pbar_d(k, m, n);
                bump("C17", pb - cap_d * s);
                bump("C18", pb - p);
                bump("C19", p - (1.0 - s) * cap_d - pb);
                bump("C20", -pb);
            }
    }

    for (auto &kv : v) kv.second = std::max(0.0, kv.second);
    rep.feasible = rep.worst() <= tol;
    return rep;
}

namespace {

using nlohmann::json;

json tensor_to_json(const Tensor3 &t) {
    return json{{"k", t.dim_k()}, {"m", t.dim_m()}, {"n", t.dim_n()}, {"data", t.data()}};
}

Tensor3 tensor_from_json(const json &j) {
    Tensor3 t(j.at("k").get<int>(), j.at("m").get<int>(), j.at("n").get<int>());
    auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != t.size()) throw std::invalid_argument("tensor_from_json: size mismatch");
    t.data() = std::move(data);
    return t;
}

} // namespace

std::string allocation_to_json(const Allocation &alloc) {
    json j{{"s_u", tensor_to_json(alloc.s_u)},     {"s_d", tensor_to_json(alloc.s_d)},
           {"p_u", tensor_to_json(alloc.p_u)},     {"p_d", tensor_to_json(alloc.p_d)},
           {"pbar_u", tensor_to_json(alloc.pbar_u)}, {"pbar_d", tensor_to_json(alloc.pbar_d)}};
    return j.dump(2);
}

Allocation allocation_from_json(const std::string &text) {
    json j = json::parse(text);
    Allocation a;
    a.s_u = tensor_from_json(j.at("s_u"));
    a.s_d = tensor_from_json(j.at("s_d"));
    a.p_u = tensor_from_json(j.at("p_u"));
    a.p_d = tensor_from_json(j.at("p_d"));
    a.pbar_u = tensor_from_json(j.at("pbar_u"));
    a.pbar_d = tensor_from_json(j.at("pbar_d"));
    return a;
}

void save_allocation(const Allocation &alloc, const std::string &path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_allocation: cannot open " + path);
    out << allocation_to_json(alloc) << "\n";
}

Allocation load_allocation(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_allocation: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return allocation_from_json(ss.str());
}

} // namespace urllc

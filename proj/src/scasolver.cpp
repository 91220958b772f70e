#include "urllc/scasolver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "urllc/fbtrate.hpp"
#include "urllc/transform.hpp"

namespace urllc {

double linearize_h(const Tensor3 &s, const Tensor3 &s_point) {
    if (!s.same_shape(s_point)) throw std::invalid_argument("linearize_h: shape mismatch");
    double out = 0.0;
    const auto &sv = s.data();
    const auto &pv = s_point.data();
    for (size_t i = 0; i < sv.size(); ++i)
        out += pv[i] * pv[i] + 2.0 * pv[i] * (sv[i] - pv[i]);
    return out;
}

double v_bar(const std::vector<double> &pbar, const std::vector<double> &gains, double eps) {
    if (pbar.size() != gains.size()) throw std::invalid_argument("v_bar: size mismatch");
    double vsum = 0.0;
    for (size_t i = 0; i < pbar.size(); ++i) vsum += dispersion(gains[i] * pbar[i]);
    return std::log2(std::exp(1.0)) * q_inv(eps) * std::sqrt(vsum);
}

std::vector<double> v_bar_gradient(const std::vector<double> &pbar_point,
                                   const std::vector<double> &gains, double eps) {
    if (pbar_point.size() != gains.size())
        throw std::invalid_argument("v_bar_gradient: size mismatch");
    const double factor = std::log2(std::exp(1.0)) * q_inv(eps);
    std::vector<double> grad(pbar_point.size(), 0.0);
    if (factor == 0.0) return grad;  // eps = 0.5: V-bar vanishes identically
    double vsum = 0.0;
    for (size_t i = 0; i < pbar_point.size(); ++i) vsum += dispersion(gains[i] * pbar_point[i]);
    if (vsum <= 0.0)
        throw std::domain_error("v_bar_gradient: zero dispersion at the expansion point");
    double root = std::sqrt(vsum);
    for (size_t i = 0; i < pbar_point.size(); ++i) {
        double arg = 1.0 + gains[i] * pbar_point[i];
        grad[i] = factor * gains[i] / (arg * arg * arg * root);
    }
    return grad;
}

double linearize_v(const std::vector<double> &pbar, const std::vector<double> &pbar_point,
                   const std::vector<double> &gains, double eps) {
    if (pbar.size() != pbar_point.size())
        throw std::invalid_argument("linearize_v: size mismatch");
    if (std::log2(std::exp(1.0)) * q_inv(eps) == 0.0) return 0.0;
    std::vector<double> grad = v_bar_gradient(pbar_point, gains, eps);
    double out = v_bar(pbar_point, gains, eps);
    for (size_t i = 0; i < pbar.size(); ++i) out += grad[i] * (pbar[i] - pbar_point[i]);
    return out;
}

namespace {

constexpr double kZeroPowerPerturbW = 1e-9;

struct CellRef {
    int k, m, n;
};

std::vector<double> expansion_powers(const Tensor3 &pbar_point, const std::vector<CellRef> &cells,
                                     const std::vector<double> &gains, double eps) {
    std::vector<double> point(cells.size());
    for (size_t i = 0; i < cells.size(); ++i)
        point[i] = std::max(0.0, pbar_point(cells[i].k, cells[i].m, cells[i].n));
    if (q_inv(eps) != 0.0) {
        double vsum = 0.0;
        for (size_t i = 0; i < cells.size(); ++i) vsum += dispersion(gains[i] * point[i]);
        if (vsum <= 0.0) std::fill(point.begin(), point.end(), kZeroPowerPerturbW);
    }
    return point;
}

void append_rate_constraint(ConvexSubproblem &sub, const std::string &tag,
                            const std::vector<int> &vars, const std::vector<double> &gains,
                            const std::vector<double> &point, double eps, double min_bits) {
    LogConstraint lc;
    lc.tag = tag;
    lc.vars = vars;
    lc.gains = gains;
    lc.min_bits = min_bits;
    if (q_inv(eps) != 0.0 && !vars.empty()) {
        std::vector<double> grad = v_bar_gradient(point, gains, eps);
        lc.linear_const = v_bar(point, gains, eps);
        for (size_t i = 0; i < vars.size(); ++i) {
            lc.linear.push_back({vars[i], grad[i]});
            lc.linear_const -= grad[i] * point[i];
        }
    }
    sub.logs.push_back(std::move(lc));
}

std::string cell_name(const char *base, int k, int m, int n) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s[%d][%d][%d]", base, k, m, n);
    return buf;
}

} // namespace

SubproblemAssembly assemble_full(const SystemConfig &cfg, const ChannelRealization &real,
                                 const ConstraintMasks &masks, const Allocation &point,
                                 bool with_names) {
    SubproblemAssembly out;
    VarMap &map = out.map;
    map.K = cfg.K;
    map.M_u = cfg.M_u;
    map.N_u = cfg.N_u;
    map.M_d = cfg.M_d;
    map.N_d = cfg.N_d;
    const int cu = cfg.K * cfg.M_u * cfg.N_u, cd = cfg.K * cfg.M_d * cfg.N_d;
    map.s_u.assign(cu, -1);
    map.p_u.assign(cu, -1);
    map.pb_u.assign(cu, -1);
    map.s_d.assign(cd, -1);
    map.p_d.assign(cd, -1);
    map.pb_d.assign(cd, -1);

    ConvexSubproblem &sub = out.sub;
    auto add_var = [&](std::vector<int> &slot, int flat, double lo, double hi,
                       const std::string &name) {
        slot[flat] = sub.n_vars++;
        sub.lower.push_back(lo);
        sub.upper.push_back(hi);
        if (with_names) sub.var_names.push_back(name);
        return slot[flat];
    };

    for (int k = 0; k < cfg.K; ++k)
        for (int m = 0; m < cfg.M_u; ++m)
            for (int n = 0; n < cfg.N_u; ++n) {
                int f = map.idx_u(k, m, n);
                add_var(map.s_u, f, 0.0, 1.0, with_names ? cell_name("s_u", k, m, n) : "");
                add_var(map.p_u, f, 0.0, cfg.p_user_max_w[k],
                        with_names ? cell_name("p_u", k, m, n) : "");
                add_var(map.pb_u, f, 0.0, cfg.p_user_max_w[k],
                        with_names ? cell_name("pbar_u", k, m, n) : "");
            }
    for (int k = 0; k < cfg.K; ++k)
        for (int m = 0; m < cfg.M_d; ++m)
            for (int n = 0; n < cfg.N_d; ++n) {
                if (!masks.downlink_allowed(k, n)) continue;  // C4: fixed to zero
                int f = map.idx_d(k, m, n);
                add_var(map.s_d, f, 0.0, 1.0, with_names ? cell_name("s_d", k, m, n) : "");
                add_var(map.p_d, f, 0.0, cfg.p_max_w, with_names ? cell_name("p_d", k, m, n) : "");
                add_var(map.pb_d, f, 0.0, cfg.p_max_w,
                        with_names ? cell_name("pbar_d", k, m, n) : "");
            }
    map.n_vars = sub.n_vars;

    // objective: weighted surrogate powers plus the linearized penalty
    // eta * (E - H_bar), whose s coefficient is eta*(1 - 2 s_point).
    sub.obj.assign(sub.n_vars, 0.0);
    sub.obj_const = 0.0;
    for (int k = 0; k < cfg.K; ++k) {
        for (int m = 0; m < cfg.M_u; ++m)
            for (int n = 0; n < cfg.N_u; ++n) {
                int f = map.idx_u(k, m, n);
                sub.obj[map.pb_u[f]] = cfg.weights[k];
                double s0 = std::clamp(point.s_u(k, m, n), 0.0, 1.0);
                sub.obj[map.s_u[f]] = cfg.eta1_w * (1.0 - 2.0 * s0);
                sub.obj_const += cfg.eta1_w * s0 * s0;
            }
        for (int m = 0; m < cfg.M_d; ++m)
            for (int n = 0; n < cfg.N_d; ++n) {
                int f = map.idx_d(k, m, n);
                if (map.pb_d[f] < 0) continue;
                sub.obj[map.pb_d[f]] = 1.0;
                double s0 = std::clamp(point.s_d(k, m, n), 0.0, 1.0);
                sub.obj[map.s_d[f]] = cfg.eta2_w * (1.0 - 2.0 * s0);
                sub.obj_const += cfg.eta2_w * s0 * s0;
            }
    }

    // C5 / C9 exclusivity
    for (int m = 0; m < cfg.M_u; ++m)
        for (int n = 0; n < cfg.N_u; ++n) {
            AffineRow row;
            row.tag = "C5";
            row.upper = 1.0;
            for (int k = 0; k < cfg.K; ++k) row.terms.push_back({map.s_u[map.idx_u(k, m, n)], 1.0});
            sub.rows.push_back(std::move(row));
        }
    for (int m = 0; m < cfg.M_d; ++m)
        for (int n = 0; n < cfg.N_d; ++n) {
            AffineRow row;
            row.tag = "C9";
            row.upper = 1.0;
            for (int k = 0; k < cfg.K; ++k) {
                int v = map.s_d[map.idx_d(k, m, n)];
                if (v >= 0) row.terms.push_back({v, 1.0});
            }
            if (!row.terms.empty()) sub.rows.push_back(std::move(row));
        }

    // C3 causality
    for (const auto &pair : masks.causality_pairs)
        for (int k = 0; k < cfg.K; ++k)
            for (int mu = 0; mu < cfg.M_u; ++mu)
                for (int md = 0; md < cfg.M_d; ++md) {
                    int vd = map.s_d[map.idx_d(k, md, pair.downlink_slot)];
                    if (vd < 0) continue;
                    AffineRow row;
                    row.tag = "C3";
                    row.upper = 1.0;
                    row.terms = {{map.s_u[map.idx_u(k, mu, pair.uplink_slot)], 1.0}, {vd, 1.0}};
                    sub.rows.push_back(std::move(row));
                }

    // C7 / C11 budgets over the surrogates
    for (int k = 0; k < cfg.K; ++k) {
        AffineRow row;
        row.tag = "C7";
        row.upper = cfg.p_user_max_w[k];
        for (int m = 0; m < cfg.M_u; ++m)
            for (int n = 0; n < cfg.N_u; ++n) row.terms.push_back({map.pb_u[map.idx_u(k, m, n)], 1.0});
        sub.rows.push_back(std::move(row));
    }
    {
        AffineRow row;
        row.tag = "C11";
        row.upper = cfg.p_max_w;
        for (int k = 0; k < cfg.K; ++k)
            for (int m = 0; m < cfg.M_d; ++m)
                for (int n = 0; n < cfg.N_d; ++n) {
                    int v = map.pb_d[map.idx_d(k, m, n)];
                    if (v >= 0) row.terms.push_back({v, 1.0});
                }
        sub.rows.push_back(std::move(row));
    }

    // C13..C15 envelopes (C16/C20 are the pbar lower box bounds)
    auto envelopes = [&](int vs, int vp, int vpb, double cap, bool uplink) {
        AffineRow r13;
        r13.tag = uplink ? "C13" : "C17";
        r13.upper = 0.0;
        r13.terms = {{vpb, 1.0}, {vs, -cap}};
        sub.rows.push_back(std::move(r13));
        AffineRow r14;
        r14.tag = uplink ? "C14" : "C18";
        r14.upper = 0.0;
        r14.terms = {{vpb, 1.0}, {vp, -1.0}};
        sub.rows.push_back(std::move(r14));
        AffineRow r15;
        r15.tag = uplink ? "C15" : "C19";
        r15.upper = cap;
        r15.terms = {{vs, cap}, {vp, 1.0}, {vpb, -1.0}};
        sub.rows.push_back(std::move(r15));
    };
    for (int k = 0; k < cfg.K; ++k) {
        for (int m = 0; m < cfg.M_u; ++m)
            for (int n = 0; n < cfg.N_u; ++n) {
                int f = map.idx_u(k, m, n);
                envelopes(map.s_u[f], map.p_u[f], map.pb_u[f], cfg.p_user_max_w[k], true);
            }
        for (int m = 0; m < cfg.M_d; ++m)
            for (int n = 0; n < cfg.N_d; ++n) {
                int f = map.idx_d(k, m, n);
                if (map.s_d[f] < 0) continue;
                envelopes(map.s_d[f], map.p_d[f], map.pb_d[f], cfg.p_max_w, false);
            }
    }

    // C1 / C2 rate constraints around the expansion point
    for (int k = 0; k < cfg.K; ++k) {
        std::vector<CellRef> cells;
        std::vector<int> vars;
        std::vector<double> gains;
        for (int m = 0; m < cfg.M_u; ++m)
            for (int n = 0; n < cfg.N_u; ++n) {
                cells.push_back({k, m, n});
                vars.push_back(map.pb_u[map.idx_u(k, m, n)]);
                gains.push_back(real.g_u[k][m]);
            }
        std::vector<double> pt = expansion_powers(point.pbar_u, cells, gains, cfg.eps_u[k]);
        append_rate_constraint(sub, "C1", vars, gains, pt, cfg.eps_u[k], cfg.task_bits[k]);

        cells.clear();
        vars.clear();
        gains.clear();
        for (int m = 0; m < cfg.M_d; ++m)
            for (int n = 0; n < cfg.N_d; ++n) {
                int v = map.pb_d[map.idx_d(k, m, n)];
                if (v < 0) continue;
                cells.push_back({k, m, n});
                vars.push_back(v);
                gains.push_back(real.g_d[k][m]);
            }
        std::vector<double> pt_d = expansion_powers(point.pbar_d, cells, gains, cfg.eps_d[k]);
        append_rate_constraint(sub, "C2", vars, gains, pt_d, cfg.eps_d[k],
                               cfg.gamma_ratio[k] * cfg.task_bits[k]);
    }

    // strictly interior anchor for the affine polytope
    sub.anchor.assign(sub.n_vars, 0.0);
    double s_anchor = 1.0 / (2.0 * cfg.K + 1.0);
    int dl_cells = 0;
    for (int f = 0; f < cd; ++f) dl_cells += (map.pb_d[f] >= 0) ? 1 : 0;
    for (int k = 0; k < cfg.K; ++k) {
        double share_u = cfg.p_user_max_w[k] / (2.0 * cfg.M_u * cfg.N_u);
        double pb_u0 = 0.5 * std::min(cfg.p_user_max_w[k] * s_anchor, share_u);
        for (int m = 0; m < cfg.M_u; ++m)
            for (int n = 0; n < cfg.N_u; ++n) {
                int f = map.idx_u(k, m, n);
                sub.anchor[map.s_u[f]] = s_anchor;
                sub.anchor[map.pb_u[f]] = pb_u0;
                sub.anchor[map.p_u[f]] = 2.0 * pb_u0;
            }
        double share_d = cfg.p_max_w / (2.0 * std::max(1, dl_cells));
        double pb_d0 = 0.5 * std::min(cfg.p_max_w * s_anchor, share_d);
        for (int m = 0; m < cfg.M_d; ++m)
            for (int n = 0; n < cfg.N_d; ++n) {
                int f = map.idx_d(k, m, n);
                if (map.s_d[f] < 0) continue;
                sub.anchor[map.s_d[f]] = s_anchor;
                sub.anchor[map.pb_d[f]] = pb_d0;
                sub.anchor[map.p_d[f]] = 2.0 * pb_d0;
            }
    }
    return out;
}

SubproblemAssembly assemble_power_only(const SystemConfig &cfg, const ChannelRealization &real,
                                       const ConstraintMasks &masks, const Allocation &assignment,
                                       const Allocation &point, bool with_names) {
    for (int k = 0; k < cfg.K; ++k)
        for (int m = 0; m < cfg.M_d; ++m)
            for (int n = 0; n < cfg.N_d; ++n)
                if (assignment.s_d(k, m, n) > 0.5 && !masks.downlink_allowed(k, n))
                    throw std::invalid_argument("assemble_power_only: assignment violates C4");

    SubproblemAssembly out;
    VarMap &map = out.map;
    map.K = cfg.K;
    map.M_u = cfg.M_u;
    map.N_u = cfg.N_u;
    map.M_d = cfg.M_d;
    map.N_d = cfg.N_d;
    const int cu = cfg.K * cfg.M_u * cfg.N_u, cd = cfg.K * cfg.M_d * cfg.N_d;
    map.s_u.assign(cu, -1);
    map.p_u.assign(cu, -1);
    map.pb_u.assign(cu, -1);
    map.s_d.assign(cd, -1);
    map.p_d.assign(cd, -1);
    map.pb_d.assign(cd, -1);
    ConvexSubproblem &sub = out.sub;

    // With s frozen at 1, C14/C18 and C15/C19 pin p to pbar; one variable
    // per assigned cell remains.
    for (int k = 0; k < cfg.K; ++k) {
        for (int m = 0; m < cfg.M_u; ++m)
            for (int n = 0; n < cfg.N_u; ++n)
                if (assignment.s_u(k, m, n) > 0.5) {
                    int f = map.idx_u(k, m, n);
                    map.pb_u[f] = sub.n_vars++;
                    sub.lower.push_back(0.0);
                    sub.upper.push_back(cfg.p_user_max_w[k]);
                    if (with_names) sub.var_names.push_back(cell_name("pbar_u", k, m, n));
                }
        for (int m = 0; m < cfg.M_d; ++m)
            for (int n = 0; n < cfg.N_d; ++n)
                if (assignment.s_d(k, m, n) > 0.5) {
                    int f = map.idx_d(k, m, n);
                    map.pb_d[f] = sub.n_vars++;
                    sub.lower.push_back(0.0);
                    sub.upper.push_back(cfg.p_max_w);
                    if (with_names) sub.var_names.push_back(cell_name("pbar_d", k, m, n));
                }
    }
    map.n_vars = sub.n_vars;
    if (sub.n_vars == 0) throw std::invalid_argument("assemble_power_only: empty assignment");

    sub.obj.assign(sub.n_vars, 0.0);
    int dl_count = 0;
    for (int k = 0; k < cfg.K; ++k) {
        AffineRow budget;
        budget.tag = "C7";
        budget.upper = cfg.p_user_max_w[k];
        for (int m = 0; m < cfg.M_u; ++m)
            for (int n = 0; n < cfg.N_u; ++n) {
                int v = map.pb_u[map.idx_u(k, m, n)];
                if (v < 0) continue;
                sub.obj[v] = cfg.weights[k];
                budget.terms.push_back({v, 1.0});
            }
        if (!budget.terms.empty()) sub.rows.push_back(std::move(budget));
    }
    {
        AffineRow row;
        row.tag = "C11";
        row.upper = cfg.p_max_w;
        for (int k = 0; k < cfg.K; ++k)
            for (int m = 0; m < cfg.M_d; ++m)
                for (int n = 0; n < cfg.N_d; ++n) {
                    int v = map.pb_d[map.idx_d(k, m, n)];
                    if (v < 0) continue;
                    sub.obj[v] = 1.0;
                    row.terms.push_back({v, 1.0});
                    ++dl_count;
                }
        if (!row.terms.empty()) sub.rows.push_back(std::move(row));
    }

    for (int k = 0; k < cfg.K; ++k) {
        std::vector<CellRef> cells;
        std::vector<int> vars;
        std::vector<double> gains;
        for (int m = 0; m < cfg.M_u; ++m)
            for (int n = 0; n < cfg.N_u; ++n) {
                int v = map.pb_u[map.idx_u(k, m, n)];
                if (v < 0) continue;
                cells.push_back({k, m, n});
                vars.push_back(v);
                gains.push_back(real.g_u[k][m]);
            }
        std::vector<double> pt = expansion_powers(point.pbar_u, cells, gains, cfg.eps_u[k]);
        append_rate_constraint(sub, "C1", vars, gains, pt, cfg.eps_u[k], cfg.task_bits[k]);

        cells.clear();
        vars.clear();
        gains.clear();
        for (int m = 0; m < cfg.M_d; ++m)
            for (int n = 0; n < cfg.N_d; ++n) {
                int v = map.pb_d[map.idx_d(k, m, n)];
                if (v < 0) continue;
                cells.push_back({k, m, n});
                vars.push_back(v);
                gains.push_back(real.g_d[k][m]);
            }
        std::vector<double> pt_d = expansion_powers(point.pbar_d, cells, gains, cfg.eps_d[k]);
        append_rate_constraint(sub, "C2", vars, gains, pt_d, cfg.eps_d[k],
                               cfg.gamma_ratio[k] * cfg.task_bits[k]);
    }

    sub.anchor.assign(sub.n_vars, 0.0);
    for (int k = 0; k < cfg.K; ++k) {
        int count_u = 0;
        for (int m = 0; m < cfg.M_u; ++m)
            for (int n = 0; n < cfg.N_u; ++n)
                count_u += (map.pb_u[map.idx_u(k, m, n)] >= 0) ? 1 : 0;
        double share = cfg.p_user_max_w[k] / (2.0 * std::max(1, count_u));
        for (int m = 0; m < cfg.M_u; ++m)
            for (int n = 0; n < cfg.N_u; ++n) {
                int v = map.pb_u[map.idx_u(k, m, n)];
                if (v >= 0) sub.anchor[v] = share;
            }
    }
    {
        double share = cfg.p_max_w / (2.0 * std::max(1, dl_count));
        for (int k = 0; k < cfg.K; ++k)
            for (int m = 0; m < cfg.M_d; ++m)
                for (int n = 0; n < cfg.N_d; ++n) {
                    int v = map.pb_d[map.idx_d(k, m, n)];
                    if (v >= 0) sub.anchor[v] = share;
                }
    }
    return out;
}

namespace {

Allocation allocation_from_solution(const SystemConfig &cfg, const VarMap &map,
                                    const std::vector<double> &x, const Allocation *assignment) {
    Allocation a = Allocation::zeros(cfg);
    auto get = [&](const std::vector<int> &slot, int f) { return slot[f] >= 0 ? x[slot[f]] : 0.0; };
    for (int k = 0; k < cfg.K; ++k) {
        for (int m = 0; m < cfg.M_u; ++m)
            for (int n = 0; n < cfg.N_u; ++n) {
                int f = map.idx_u(k, m, n);
                a.pbar_u(k, m, n) = get(map.pb_u, f);
                if (assignment) {
                    a.s_u(k, m, n) = assignment->s_u(k, m, n) > 0.5 ? 1.0 : 0.0;
                    a.p_u(k, m, n) = a.pbar_u(k, m, n);
                } else {
                    a.s_u(k, m, n) = get(map.s_u, f);
                    a.p_u(k, m, n) = get(map.p_u, f);
                }
            }
        for (int m = 0; m < cfg.M_d; ++m)
            for (int n = 0; n < cfg.N_d; ++n) {
                int f = map.idx_d(k, m, n);
                a.pbar_d(k, m, n) = get(map.pb_d, f);
                if (assignment) {
                    a.s_d(k, m, n) = assignment->s_d(k, m, n) > 0.5 ? 1.0 : 0.0;
                    a.p_d(k, m, n) = a.pbar_d(k, m, n);
                } else {
                    a.s_d(k, m, n) = get(map.s_d, f);
                    a.p_d(k, m, n) = get(map.p_d, f);
                }
            }
    }
    return a;
}

IterationRecord make_record(int iter, const Allocation &current, const SystemConfig &cfg,
                            const ChannelRealization &real, SolveStatus status) {
    IterationRecord rec;
    rec.iter = iter;
    rec.penalized_obj_w = penalized_objective(current, cfg);
    rec.raw_obj_w = objective_bigm_w(current, cfg);
    rec.gap_u = e_minus_h(current.s_u);
    rec.gap_d = e_minus_h(current.s_d);
    rec.status = status;
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 0; k < cfg.K; ++k) {
        worst = std::min(worst,
                         psi_user_bigm(current, cfg, real, k, Link::Uplink) - cfg.task_bits[k]);
        worst = std::min(worst, psi_user_bigm(current, cfg, real, k, Link::Downlink) -
                                    cfg.gamma_ratio[k] * cfg.task_bits[k]);
    }
    rec.worst_qos_slack_bits = worst;
    return rec;
}

Allocation blend(const Allocation &a, const Allocation &b, double theta) {
    Allocation out = a;
    auto mix = [theta](Tensor3 &x, const Tensor3 &ya, const Tensor3 &yb) {
        for (size_t i = 0; i < x.data().size(); ++i)
            x.data()[i] = (1.0 - theta) * ya.data()[i] + theta * yb.data()[i];
    };
    mix(out.s_u, a.s_u, b.s_u);
    mix(out.s_d, a.s_d, b.s_d);
    mix(out.p_u, a.p_u, b.p_u);
    mix(out.p_d, a.p_d, b.p_d);
    mix(out.pbar_u, a.pbar_u, b.pbar_u);
    mix(out.pbar_d, a.pbar_d, b.pbar_d);
    return out;
}

// Full-budget expansion point: the most permissive single linearization of
// the dispersion term (its gradient shrinks with power).
Allocation cap_expansion(const SystemConfig &cfg, const ConstraintMasks &masks,
                         const Allocation &base) {
    Allocation out = base;
    for (int k = 0; k < cfg.K; ++k) {
        double pu = cfg.p_user_max_w[k] / (cfg.M_u * cfg.N_u);
        for (int m = 0; m < cfg.M_u; ++m)
            for (int n = 0; n < cfg.N_u; ++n) {
                out.pbar_u(k, m, n) = pu;
                out.p_u(k, m, n) = pu;
            }
        double pd = cfg.p_max_w / (cfg.K * cfg.M_d * cfg.N_d);
        for (int m = 0; m < cfg.M_d; ++m)
            for (int n = 0; n < cfg.N_d; ++n) {
                bool ok = masks.downlink_allowed(k, n);
                out.pbar_d(k, m, n) = ok ? pd : 0.0;
                out.p_d(k, m, n) = ok ? pd : 0.0;
            }
    }
    return out;
}

// Threshold rounding with deterministic tie repair; C5/C9 hold by single
// winner per cell, C3/C4 enforced afterwards (uplink kept on conflicts: the
// task data must reach the server for the downlink to carry anything).
Allocation round_allocation(const Allocation &cont, const SystemConfig &cfg,
                            const ChannelRealization &real, const ConstraintMasks &masks,
                            double threshold) {
    std::vector<double> deficit(cfg.K, 0.0);
    for (int k = 0; k < cfg.K; ++k) {
        deficit[k] = std::max(0.0, cfg.task_bits[k] -
                                       psi_user_bigm(cont, cfg, real, k, Link::Uplink)) +
                     std::max(0.0, cfg.gamma_ratio[k] * cfg.task_bits[k] -
                                       psi_user_bigm(cont, cfg, real, k, Link::Downlink));
    }
    const double tie_eps = 1e-9;
    Allocation out = Allocation::zeros(cfg);
    auto round_link = [&](const Tensor3 &s, Tensor3 &s_out, const Tensor3 &pb, Tensor3 &pb_out,
                          Tensor3 &p_out, int M, int N) {
        for (int m = 0; m < M; ++m)
            for (int n = 0; n < N; ++n) {
                int winner = -1;
                double best = -1.0;
                for (int k = 0; k < cfg.K; ++k) {
                    double v = s(k, m, n);
                    if (v > best + tie_eps) {
                        best = v;
                        winner = k;
                    } else if (v > best - tie_eps) {
                        // tie: larger remaining deficit wins, then lower index
                        if (winner >= 0 && deficit[k] > deficit[winner]) winner = k;
                    }
                }
                if (winner < 0 || best <= threshold - tie_eps) continue;
                s_out(winner, m, n) = 1.0;
                pb_out(winner, m, n) = std::max(0.0, pb(winner, m, n));
                p_out(winner, m, n) = pb_out(winner, m, n);
            }
    };
    round_link(cont.s_u, out.s_u, cont.pbar_u, out.pbar_u, out.p_u, cfg.M_u, cfg.N_u);
    round_link(cont.s_d, out.s_d, cont.pbar_d, out.pbar_d, out.p_d, cfg.M_d, cfg.N_d);

    // C4 (defensive; masked cells were never variables)
    for (int k = 0; k < cfg.K; ++k)
        for (int nd : masks.delay_forbidden[k])
            for (int m = 0; m < cfg.M_d; ++m) {
                out.s_d(k, m, nd) = 0.0;
                out.pbar_d(k, m, nd) = 0.0;
                out.p_d(k, m, nd) = 0.0;
            }

    // C3: drop the downlink side of any rounded conflict
    for (const auto &pair : masks.causality_pairs)
        for (int k = 0; k < cfg.K; ++k) {
            bool ul_busy = false;
            for (int m = 0; m < cfg.M_u; ++m)
                if (out.s_u(k, m, pair.uplink_slot) > 0.5) ul_busy = true;
            if (!ul_busy) continue;
            for (int m = 0; m < cfg.M_d; ++m)
                if (out.s_d(k, m, pair.downlink_slot) > 0.5) {
                    out.s_d(k, m, pair.downlink_slot) = 0.0;
                    out.pbar_d(k, m, pair.downlink_slot) = 0.0;
                    out.p_d(k, m, pair.downlink_slot) = 0.0;
                }
        }
    return out;
}

bool assignment_nonempty(const Allocation &a) {
    for (double v : a.s_u.data())
        if (v > 0.5) return true;
    return false;
}

} // namespace

Allocation round_robin_assignment(const SystemConfig &cfg) {
    ConstraintMasks masks = build_masks(cfg);
    Allocation a = Allocation::zeros(cfg);
    // ascending user index over ascending sub-carriers; uplink uses every
    // slot, downlink the earliest slots that clear the overlap and deadline
    for (int m = 0; m < cfg.M_u; ++m) {
        int k = m % cfg.K;
        for (int n = 0; n < cfg.N_u; ++n) a.s_u(k, m, n) = 1.0;
    }
    for (int m = 0; m < cfg.M_d; ++m) {
        int k = m % cfg.K;
        for (int n = cfg.overlap(); n < cfg.N_d; ++n)
            if (masks.downlink_allowed(k, n)) a.s_d(k, m, n) = 1.0;
    }
    return a;
}

Allocation make_default_init(const SystemConfig &cfg, const ChannelRealization &real) {
    Allocation init = round_robin_assignment(cfg);
    auto set_powers = [&](Link link) {
        Tensor3 &s = (link == Link::Uplink) ? init.s_u : init.s_d;
        Tensor3 &p = (link == Link::Uplink) ? init.p_u : init.p_d;
        Tensor3 &pb = (link == Link::Uplink) ? init.pbar_u : init.pbar_d;
        const auto &g = (link == Link::Uplink) ? real.g_u : real.g_d;
        for (int k = 0; k < cfg.K; ++k) {
            double req = (link == Link::Uplink) ? cfg.task_bits[k]
                                                : cfg.gamma_ratio[k] * cfg.task_bits[k];
            int count = 0;
            for (int m = 0; m < s.dim_m(); ++m)
                for (int n = 0; n < s.dim_n(); ++n) count += s(k, m, n) > 0.5 ? 1 : 0;
            if (count == 0) continue;
            double bits_per_cell = req / count;
            for (int m = 0; m < s.dim_m(); ++m)
                for (int n = 0; n < s.dim_n(); ++n) {
                    if (s(k, m, n) < 0.5) continue;
                    // invert the eps = 0.5 rate and add a 3 dB margin
                    double pw = 2.0 * (std::exp2(bits_per_cell) - 1.0) / g[k][m];
                    p(k, m, n) = pw;
                    pb(k, m, n) = pw;
                }
        }
    };
    set_powers(Link::Uplink);
    set_powers(Link::Downlink);

    // one projection onto the budgets
    for (int k = 0; k < cfg.K; ++k) {
        double tot = 0.0;
        for (int m = 0; m < cfg.M_u; ++m)
            for (int n = 0; n < cfg.N_u; ++n) tot += init.pbar_u(k, m, n);
        if (tot > cfg.p_user_max_w[k]) {
            double scale = cfg.p_user_max_w[k] / tot;
            for (int m = 0; m < cfg.M_u; ++m)
                for (int n = 0; n < cfg.N_u; ++n) {
                    init.pbar_u(k, m, n) *= scale;
                    init.p_u(k, m, n) *= scale;
                }
        }
    }
    double tot_d = init.pbar_d.sum();
    if (tot_d > cfg.p_max_w) {
        double scale = cfg.p_max_w / tot_d;
        for (auto &v : init.pbar_d.data()) v *= scale;
        for (auto &v : init.p_d.data()) v *= scale;
    }
    return init;
}

Allocation make_random_init(const SystemConfig &cfg, const ChannelRealization &real,
                            uint64_t seed) {
    (void)real;
    Rng rng(seed ^ 0x5CA1AB1EULL);
    ConstraintMasks masks = build_masks(cfg);
    Allocation init = Allocation::zeros(cfg);
    double denom = std::max(cfg.K, 2);
    for (int k = 0; k < cfg.K; ++k) {
        for (int m = 0; m < cfg.M_u; ++m)
            for (int n = 0; n < cfg.N_u; ++n) {
                init.s_u(k, m, n) = rng.next_u01() / denom;
                double pw = rng.next_u01() * cfg.p_user_max_w[k] / (cfg.M_u * cfg.N_u);
                init.p_u(k, m, n) = pw;
                init.pbar_u(k, m, n) = pw;
            }
        for (int m = 0; m < cfg.M_d; ++m)
            for (int n = 0; n < cfg.N_d; ++n) {
                if (!masks.downlink_allowed(k, n)) continue;
                init.s_d(k, m, n) = rng.next_u01() / denom;
                double pw = rng.next_u01() * cfg.p_max_w / (cfg.K * cfg.M_d * cfg.N_d);
                init.p_d(k, m, n) = pw;
                init.pbar_d(k, m, n) = pw;
            }
    }
    return init;
}

ScaRun run(const SystemConfig &cfg, const ChannelRealization &real, const ScaConfig &sca) {
    Allocation init = sca.random_init ? make_random_init(cfg, real, sca.init_seed)
                                      : make_default_init(cfg, real);
    return run(cfg, real, sca, init);
}

ScaRun run(const SystemConfig &cfg, const ChannelRealization &real, const ScaConfig &sca,
           const Allocation &init) {
    if (!init.shape_matches(cfg)) throw std::invalid_argument("run: init shape mismatch");
    ConstraintMasks masks = build_masks(cfg);
    ScaRun out;
    Allocation expansion = init;
    Allocation fallback = sca.random_init ? make_default_init(cfg, real) : init;
    Allocation cap_point = cap_expansion(cfg, masks, init);
    std::vector<double> warm;
    Allocation current = init;
    bool have_solution = false;
    double prev_pen = std::numeric_limits<double>::infinity();

    for (int iter = 1; iter <= sca.max_iters; ++iter) {
        SubproblemSolution sol;
        bool solved = false;
        for (int attempt = 0; attempt <= sca.restore_retries; ++attempt) {
            if (attempt == 1)
                expansion = blend(expansion, fallback, 0.5);
            else if (attempt == 2)
                expansion = blend(expansion, cap_point, 0.5);
            else if (attempt >= 3)
                expansion = cap_point;
            SubproblemAssembly assembly = assemble_full(cfg, real, masks, expansion);
            sol = solve(assembly.sub, sca.solver, warm.empty() ? nullptr : &warm);
            if (sol.status != SolveStatus::Infeasible) {
                current = allocation_from_solution(cfg, assembly.map, sol.x, nullptr);
                solved = true;
                break;
            }
        }
        if (!solved) {
            out.trace.note = "subproblem infeasible after restoration retries";
            break;
        }
        have_solution = true;
        warm = sol.x;
        expansion = current;
        out.trace.rows.push_back(make_record(iter, current, cfg, real, sol.status));

        double pen = out.trace.rows.back().penalized_obj_w;
        double gap = out.trace.rows.back().gap_u + out.trace.rows.back().gap_d;
        if (iter >= 2 && std::abs(prev_pen - pen) <= sca.obj_rel_tol * std::max(std::abs(prev_pen), 1e-9) &&
            gap <= sca.gap_tol) {
            out.trace.converged = true;
            prev_pen = pen;
            break;
        }
        prev_pen = pen;
    }

    if (!have_solution) {
        out.allocation = init;
        out.report = check(out.allocation, cfg, real);
        out.feasible = false;
        out.objective_w = objective_w(out.allocation, cfg);
        out.iterations = static_cast<int>(out.trace.rows.size());
        return out;
    }

    // extraction: round, repair, restore powers on the frozen assignment
    Allocation rounded = round_allocation(current, cfg, real, masks, sca.rounding_threshold);
    Allocation final_alloc = rounded;
    if (assignment_nonempty(rounded)) {
        ScaRun resolve = run_power_only(cfg, real, sca, rounded, &rounded);
        if (!resolve.trace.rows.empty() && resolve.feasible) {
            final_alloc = resolve.allocation;
        } else {
            out.trace.note += (out.trace.note.empty() ? "" : "; ");
            out.trace.note += "power restoration " +
                              (resolve.trace.note.empty() ? std::string("did not reach feasibility")
                                                          : resolve.trace.note);
        }
    }
    out.allocation = final_alloc;
    out.report = check(out.allocation, cfg, real);
    out.feasible = out.report.feasible;
    out.objective_w = objective_w(out.allocation, cfg);
    out.iterations = static_cast<int>(out.trace.rows.size());
    return out;
}

ScaRun run_power_only(const SystemConfig &cfg, const ChannelRealization &real,
                      const ScaConfig &sca, const Allocation &assignment,
                      const Allocation *power_init) {
    ConstraintMasks masks = build_masks(cfg);
    ScaRun out;
    Allocation expansion = power_init ? *power_init : assignment;
    Allocation cap_point = cap_expansion(cfg, masks, assignment);
    std::vector<double> warm;
    Allocation current = assignment;
    bool have_solution = false;
    double prev_obj = std::numeric_limits<double>::infinity();

    for (int iter = 1; iter <= sca.max_iters; ++iter) {
        SubproblemSolution sol;
        bool solved = false;
        for (int attempt = 0; attempt <= sca.restore_retries; ++attempt) {
            if (attempt == 1)
                expansion = blend(expansion, cap_point, 0.5);
            else if (attempt >= 2)
                expansion = cap_point;
            SubproblemAssembly assembly =
                assemble_power_only(cfg, real, masks, assignment, expansion);
            sol = solve(assembly.sub, sca.solver, warm.empty() ? nullptr : &warm);
            if (sol.status != SolveStatus::Infeasible) {
                current = allocation_from_solution(cfg, assembly.map, sol.x, &assignment);
                solved = true;
                break;
            }
        }
        if (!solved) {
            out.trace.note = "fixed-assignment subproblem infeasible";
            break;
        }
        have_solution = true;
        warm = sol.x;
        expansion = current;
        out.trace.rows.push_back(make_record(iter, current, cfg, real, sol.status));
        double obj = out.trace.rows.back().raw_obj_w;
        if (iter >= 2 && std::abs(prev_obj - obj) <= sca.obj_rel_tol * std::max(std::abs(prev_obj), 1e-9)) {
            out.trace.converged = true;
            prev_obj = obj;
            break;
        }
        prev_obj = obj;
    }

    out.allocation = have_solution ? current : assignment;
    out.report = check(out.allocation, cfg, real);
    out.feasible = have_solution && out.report.feasible;
    out.objective_w = objective_w(out.allocation, cfg);
    out.iterations = static_cast<int>(out.trace.rows.size());
    return out;
}

std::string trace_to_csv(const IterationTrace &trace) {
    std::string out = "iteration,penalized_obj_W,raw_obj_W,gap_u,gap_d,status\n";
    char buf[256];
    for (const auto &r : trace.rows) {
        std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g,%.12g,%.12g,%s\n", r.iter,
                      r.penalized_obj_w, r.raw_obj_w, r.gap_u, r.gap_d,
                      to_string(r.status).c_str());
        out += buf;
    }
    return out;
}

void write_trace_csv(const IterationTrace &trace, const std::string &path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_trace_csv: cannot open " + path);
    f << trace_to_csv(trace);
}

} // namespace urllc

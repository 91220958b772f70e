#include "urllc/subproblem.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace urllc {

void ConvexSubproblem::validate() const {
    auto fail = [](const std::string &msg) {
        throw std::invalid_argument("ConvexSubproblem: " + msg);
    };
    if (n_vars <= 0) fail("no variables");
    auto chk_idx = [&](int i) {
        if (i < 0 || i >= n_vars) fail("variable index out of range");
    };
    if (static_cast<int>(obj.size()) != n_vars) fail("objective size mismatch");
    if (static_cast<int>(lower.size()) != n_vars || static_cast<int>(upper.size()) != n_vars)
        fail("bound size mismatch");
    for (double v : obj)
        if (!std::isfinite(v)) fail("non-finite objective coefficient");
    for (int i = 0; i < n_vars; ++i) {
        if (!std::isfinite(lower[i]) || !std::isfinite(upper[i])) fail("non-finite bound");
        if (!(lower[i] < upper[i])) fail("empty box");
    }
    for (const auto &r : rows)
        for (const auto &[i, c] : r.terms) {
            chk_idx(i);
            if (!std::isfinite(c)) fail("non-finite row coefficient");
        }
    for (const auto &lc : logs) {
        if (lc.vars.size() != lc.gains.size()) fail("log constraint size mismatch");
        for (int i : lc.vars) chk_idx(i);
        for (double g : lc.gains)
            if (!(g > 0.0) || !std::isfinite(g)) fail("log constraint gain must be positive");
        for (const auto &[i, c] : lc.linear) {
            chk_idx(i);
            if (!std::isfinite(c)) fail("non-finite log linear coefficient");
        }
    }
    if (!anchor.empty() && static_cast<int>(anchor.size()) != n_vars) fail("anchor size mismatch");
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::MaxIter: return "max-iter";
    }
    return "unknown";
}

std::string ConvexSubproblem::to_json() const {
    using nlohmann::json;
    json j;
    j["n_vars"] = n_vars;
    j["objective"] = {{"coeffs", obj}, {"const", obj_const}};
    j["lower"] = lower;
    j["upper"] = upper;
    json rows_j = json::array();
    for (const auto &r : rows) {
        json terms = json::array();
        for (const auto &[i, c] : r.terms) terms.push_back({i, c});
        rows_j.push_back({{"tag", r.tag}, {"terms", terms}, {"upper", r.upper}});
    }
    j["rows"] = rows_j;
    json logs_j = json::array();
    for (const auto &lc : logs) {
        json lin = json::array();
        for (const auto &[i, c] : lc.linear) lin.push_back({i, c});
        logs_j.push_back({{"tag", lc.tag},
                          {"vars", lc.vars},
                          {"gains", lc.gains},
                          {"linear", lin},
                          {"linear_const", lc.linear_const},
                          {"min_bits", lc.min_bits}});
    }
    j["log_constraints"] = logs_j;
    if (!var_names.empty()) j["var_names"] = var_names;
    return j.dump(2);
}

void ConvexSubproblem::dump(const std::string &path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("ConvexSubproblem::dump: cannot open " + path);
    out << to_json() << "\n";
}

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr int kDenseRowThreshold = 8;

// Internal model over scaled variables y in [0,1]^n, x = lo + span*y.
struct Model {
    int n = 0;
    Eigen::VectorXd c;
    double c0 = 0;

    struct Row {
        std::vector<std::pair<int, double>> a;
        double b = 0;
    };
    std::vector<Row> local_rows;
    std::vector<Row> dense_rows;

    // phi(y) = c0 + lin.y - sum_r log2(1 + g_r * y_{vars_r}) <= 0
    struct Log {
        std::vector<int> vars;
        std::vector<double> g;
        std::vector<std::pair<int, double>> lin;
        double c0 = 0;
    };
    std::vector<Log> logs;

    int m_total() const {
        return 2 * n + static_cast<int>(local_rows.size() + dense_rows.size() + logs.size());
    }
};

Model build_model(const ConvexSubproblem &sub) {
    Model md;
    md.n = sub.n_vars;
    md.c.resize(md.n);
    md.c0 = sub.obj_const;
    std::vector<double> span(md.n);
    for (int i = 0; i < md.n; ++i) {
        span[i] = sub.upper[i] - sub.lower[i];
        md.c[i] = sub.obj[i] * span[i];
        md.c0 += sub.obj[i] * sub.lower[i];
    }
    for (const auto &r : sub.rows) {
        Model::Row row;
        row.b = r.upper;
        for (const auto &[i, c] : r.terms) {
            row.a.push_back({i, c * span[i]});
            row.b -= c * sub.lower[i];
        }
        if (static_cast<int>(row.a.size()) > kDenseRowThreshold)
            md.dense_rows.push_back(std::move(row));
        else
            md.local_rows.push_back(std::move(row));
    }
    for (const auto &lc : sub.logs) {
        Model::Log lg;
        lg.c0 = lc.min_bits + lc.linear_const;
        for (const auto &[i, c] : lc.linear) {
            lg.lin.push_back({i, c * span[i]});
            lg.c0 += c * sub.lower[i];
        }
        for (size_t r = 0; r < lc.vars.size(); ++r) {
            int i = lc.vars[r];
            double g = lc.gains[r];
            double base = 1.0 + g * sub.lower[i];
            // log2(1+g*x) = log2(base) + log2(1 + g*span/base * y)
            lg.c0 -= std::log2(base);
            lg.vars.push_back(i);
            lg.g.push_back(g * span[i] / base);
        }
        md.logs.push_back(std::move(lg));
    }
    return md;
}

struct Evaluation {
    bool interior = false;
    double barrier = std::numeric_limits<double>::infinity();
    double linear_obj = 0;  // c.y (without c0)
    std::vector<double> sl_local, sl_dense, sl_logs;
    std::vector<double> phi;  // log-constraint values
};

// Slack floor rejects points that are technically interior but too close to
// the boundary for stable Newton steps during a line search.
Evaluation evaluate(const Model &md, const Eigen::VectorXd &y, double t) {
    Evaluation ev;
    double logsum = 0.0;
    for (int i = 0; i < md.n; ++i) {
        double lo = y[i], hi = 1.0 - y[i];
        if (lo <= 0.0 || hi <= 0.0) return ev;
        logsum += std::log(lo) + std::log(hi);
    }
    ev.sl_local.reserve(md.local_rows.size());
    for (const auto &r : md.local_rows) {
        double s = r.b;
        for (const auto &[i, c] : r.a) s -= c * y[i];
        if (s <= 0.0) return ev;
        ev.sl_local.push_back(s);
        logsum += std::log(s);
    }
    ev.sl_dense.reserve(md.dense_rows.size());
    for (const auto &r : md.dense_rows) {
        double s = r.b;
        for (const auto &[i, c] : r.a) s -= c * y[i];
        if (s <= 0.0) return ev;
        ev.sl_dense.push_back(s);
        logsum += std::log(s);
    }
    ev.phi.reserve(md.logs.size());
    for (const auto &lg : md.logs) {
        double v = lg.c0;
        for (const auto &[i, c] : lg.lin) v += c * y[i];
        for (size_t r = 0; r < lg.vars.size(); ++r)
            v -= std::log2(1.0 + lg.g[r] * y[lg.vars[r]]);
        ev.phi.push_back(v);
        double s = -v;
        if (s <= 0.0) return ev;
        ev.sl_logs.push_back(s);
        logsum += std::log(s);
    }
    ev.linear_obj = md.c.dot(y);
    ev.barrier = t * ev.linear_obj - logsum;
    ev.interior = true;
    return ev;
}

// Violations of the model constraints at y (0 when feasible); used to probe
// warm-start candidates.
double max_affine_violation(const Model &md, const Eigen::VectorXd &y, double margin) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < md.n; ++i) {
        worst = std::max(worst, margin - y[i]);
        worst = std::max(worst, margin - (1.0 - y[i]));
    }
    auto probe_rows = [&](const std::vector<Model::Row> &rows) {
        for (const auto &r : rows) {
            double s = r.b;
            for (const auto &[i, c] : r.a) s -= c * y[i];
            worst = std::max(worst, margin * (1.0 + std::abs(r.b)) - s);
        }
    };
    probe_rows(md.local_rows);
    probe_rows(md.dense_rows);
    return worst;
}

double max_log_violation(const Model &md, const Eigen::VectorXd &y) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto &lg : md.logs) {
        double v = lg.c0;
        for (const auto &[i, c] : lg.lin) v += c * y[i];
        for (size_t r = 0; r < lg.vars.size(); ++r) {
            double arg = 1.0 + lg.g[r] * y[lg.vars[r]];
            v -= (arg > 0.0) ? std::log2(arg) : -1e30;
        }
        worst = std::max(worst, v);
    }
    return worst;
}

// Barrier Newton machinery with a local sparse Hessian plus a low-rank
// correction for the dense rows and the log-constraint rank-1 terms.
class NewtonSolver {
  public:
    explicit NewtonSolver(const Model &md) : md_(md) {
        build_pattern();
    }

    struct StepResult {
        bool ok = false;
        double decrement_sq = 0;  // lambda^2
    };

    // One damped Newton step at y for barrier parameter t; ev must be the
    // evaluation at y. Updates y and ev in place.
    StepResult step(Eigen::VectorXd &y, Evaluation &ev, double t) {
        StepResult res;
        const int n = md_.n;
        const int q = static_cast<int>(md_.dense_rows.size() + md_.logs.size());

        Eigen::VectorXd grad = t * md_.c;
        Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) {
            double lo = y[i], hi = 1.0 - y[i];
            grad[i] += -1.0 / lo + 1.0 / hi;
            diag[i] += 1.0 / (lo * lo) + 1.0 / (hi * hi);
        }

        std::fill(hvals_.begin(), hvals_.end(), 0.0);
        for (size_t r = 0; r < md_.local_rows.size(); ++r) {
            const auto &row = md_.local_rows[r];
            double inv = 1.0 / ev.sl_local[r];
            for (size_t a = 0; a < row.a.size(); ++a) {
                grad[row.a[a].first] += row.a[a].second * inv;
                for (size_t b = a; b < row.a.size(); ++b) {
                    double v = row.a[a].second * row.a[b].second * inv * inv;
                    hvals_[pair_slot(r, a, b)] += v;
                }
            }
        }

        Eigen::MatrixXd U = Eigen::MatrixXd::Zero(n, q);
        int col = 0;
        for (size_t r = 0; r < md_.dense_rows.size(); ++r, ++col) {
            double inv = 1.0 / ev.sl_dense[r];
            for (const auto &[i, c] : md_.dense_rows[r].a) {
                grad[i] += c * inv;
                U(i, col) = c * inv;
            }
        }
        for (size_t j = 0; j < md_.logs.size(); ++j, ++col) {
            const auto &lg = md_.logs[j];
            double inv = 1.0 / ev.sl_logs[j];
            for (const auto &[i, c] : lg.lin) {
                grad[i] += c * inv;
                U(i, col) += c * inv;
            }
            for (size_t r = 0; r < lg.vars.size(); ++r) {
                int i = lg.vars[r];
                double arg = 1.0 + lg.g[r] * y[i];
                double dphi = -lg.g[r] / (kLn2 * arg);
                grad[i] += dphi * inv;
                U(i, col) += dphi * inv;
                // curvature of -log2 term, scaled by 1/slack
                diag[i] += lg.g[r] * lg.g[r] / (kLn2 * arg * arg) * inv;
            }
        }

        if (!factorize(diag)) return res;

        Eigen::MatrixXd rhs(n, q + 1);
        rhs.leftCols(q) = U;
        rhs.col(q) = grad;
        Eigen::MatrixXd Z = llt_.solve(rhs);
        Eigen::VectorXd hg = Z.col(q);
        Eigen::VectorXd delta;
        if (q > 0) {
            Eigen::MatrixXd S = Eigen::MatrixXd::Identity(q, q) + U.transpose() * Z.leftCols(q);
            Eigen::VectorXd w = S.ldlt().solve(U.transpose() * hg);
            delta = -(hg - Z.leftCols(q) * w);
        } else {
            delta = -hg;
        }

        double lambda_sq = -grad.dot(delta);
        if (!(lambda_sq > 0.0) || !std::isfinite(lambda_sq)) {
            // Numerically flat; treat as centered.
            res.ok = true;
            res.decrement_sq = 0.0;
            return res;
        }
        res.decrement_sq = lambda_sq;

        // Barrier change evaluated in delta form: at large t the absolute
        // barrier dwarfs the per-step decrement, so F_new - F_old computed
        // from full evaluations cancels to noise. Row slack changes are exact
        // dot products; only the log rows need re-evaluation.
        std::vector<double> local_dots(md_.local_rows.size()), dense_dots(md_.dense_rows.size());
        for (size_t r = 0; r < md_.local_rows.size(); ++r) {
            double d = 0.0;
            for (const auto &[i, c] : md_.local_rows[r].a) d += c * delta[i];
            local_dots[r] = d;
        }
        for (size_t r = 0; r < md_.dense_rows.size(); ++r) {
            double d = 0.0;
            for (const auto &[i, c] : md_.dense_rows[r].a) d += c * delta[i];
            dense_dots[r] = d;
        }
        const double obj_dot = md_.c.dot(delta);

        auto barrier_delta = [&](double alpha, bool &interior) -> double {
            interior = false;
            double dF = t * alpha * obj_dot;
            for (int i = 0; i < n; ++i) {
                double rlo = alpha * delta[i] / y[i];
                double rhi = -alpha * delta[i] / (1.0 - y[i]);
                if (rlo <= -1.0 || rhi <= -1.0) return 0.0;
                dF -= std::log1p(rlo) + std::log1p(rhi);
            }
            for (size_t r = 0; r < md_.local_rows.size(); ++r) {
                double rel = -alpha * local_dots[r] / ev.sl_local[r];
                if (rel <= -1.0) return 0.0;
                dF -= std::log1p(rel);
            }
            for (size_t r = 0; r < md_.dense_rows.size(); ++r) {
                double rel = -alpha * dense_dots[r] / ev.sl_dense[r];
                if (rel <= -1.0) return 0.0;
                dF -= std::log1p(rel);
            }
            for (size_t j = 0; j < md_.logs.size(); ++j) {
                const auto &lg = md_.logs[j];
                double v = lg.c0;
                for (const auto &[i, c] : lg.lin) v += c * (y[i] + alpha * delta[i]);
                for (size_t r = 0; r < lg.vars.size(); ++r) {
                    double arg = 1.0 + lg.g[r] * (y[lg.vars[r]] + alpha * delta[lg.vars[r]]);
                    if (arg <= 0.0) return 0.0;
                    v -= std::log2(arg);
                }
                double rel = (-v - ev.sl_logs[j]) / ev.sl_logs[j];
                if (rel <= -1.0) return 0.0;
                dF -= std::log1p(rel);
            }
            interior = true;
            return dF;
        };

        double alpha = 1.0;
        for (int ls = 0; ls < 60; ++ls) {
            bool interior = false;
            double dF = barrier_delta(alpha, interior);
            if (interior && dF <= -0.25 * alpha * lambda_sq) {
                y += alpha * delta;
                ev = evaluate(md_, y, t);
                res.ok = true;
                return res;
            }
            alpha *= 0.5;
            if (alpha < 1e-14) break;
        }
        return res;  // line search failed
    }

  private:
    void build_pattern() {
        // slot map for each local row's upper-triangle contribution
        std::vector<Eigen::Triplet<double>> trips;
        slots_.resize(md_.local_rows.size());
        std::map<std::pair<int, int>, int> slot_of;
        auto slot = [&](int i, int j) {
            if (i > j) std::swap(i, j);
            auto key = std::make_pair(i, j);
            auto it = slot_of.find(key);
            if (it != slot_of.end()) return it->second;
            int s = static_cast<int>(slot_of.size());
            slot_of[key] = s;
            return s;
        };
        for (int i = 0; i < md_.n; ++i) slot(i, i);
        for (size_t r = 0; r < md_.local_rows.size(); ++r) {
            const auto &row = md_.local_rows[r];
            slots_[r].resize(row.a.size() * (row.a.size() + 1) / 2);
            size_t idx = 0;
            for (size_t a = 0; a < row.a.size(); ++a)
                for (size_t b = a; b < row.a.size(); ++b)
                    slots_[r][idx++] = slot(row.a[a].first, row.a[b].first);
        }
        hvals_.assign(slot_of.size(), 0.0);
        entries_.assign(slot_of.begin(), slot_of.end());
        H_.resize(md_.n, md_.n);
        std::vector<Eigen::Triplet<double>> pattern;
        pattern.reserve(entries_.size());
        for (const auto &[key, s] : entries_) pattern.emplace_back(key.first, key.second, 1.0);
        H_.setFromTriplets(pattern.begin(), pattern.end());
        H_.makeCompressed();
        llt_.analyzePattern(H_);
        analyzed_ = true;
    }

    int pair_slot(size_t row, size_t a, size_t b) const {
        const auto &rw = md_.local_rows[row];
        size_t na = rw.a.size();
        // index into the packed upper triangle enumeration used in build_pattern
        size_t idx = a * na - a * (a + 1) / 2 + b;
        return slots_[row][idx];
    }

    bool factorize(const Eigen::VectorXd &diag) {
        for (double ridge : {0.0, 1e-12, 1e-9, 1e-6}) {
            double *vals = H_.valuePtr();
            std::fill(vals, vals + H_.nonZeros(), 0.0);
            for (const auto &[key, s] : entries_) {
                double v = hvals_[s];
                if (key.first == key.second) v += diag[key.first] + ridge;
                H_.coeffRef(key.first, key.second) = v;
            }
            llt_.factorize(H_);
            if (llt_.info() == Eigen::Success) return true;
        }
        return false;
    }

    const Model &md_;
    std::vector<std::vector<int>> slots_;
    std::vector<double> hvals_;
    std::vector<std::pair<std::pair<int, int>, int>> entries_;
    Eigen::SparseMatrix<double> H_;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Upper> llt_;
    bool analyzed_ = false;
};

struct PathResult {
    Eigen::VectorXd y;
    double gap_abs = std::numeric_limits<double>::infinity();
    double decrement = 0;
    int newton_used = 0;
    bool converged = false;
};

// Standard barrier path following from a strictly feasible start. The stage
// loop stops once the certified gap m/t falls below
// max(rel_gap_tol*|objective|, gap_floor); gap_floor is an absolute watt-scale
// floor that keeps near-zero objectives from demanding gaps beyond double
// precision. stop_early, when set, is polled after every accepted step
// (phase-1 exit).
PathResult follow_path(const Model &md, Eigen::VectorXd y, const SolverOptions &opts,
                       int newton_budget, double gap_floor,
                       const std::function<bool(const Eigen::VectorXd &)> &stop_early = nullptr) {
    PathResult out;
    NewtonSolver newton(md);
    const int m = md.m_total();
    Evaluation ev = evaluate(md, y, 1.0);
    if (!ev.interior) throw std::logic_error("follow_path: start point not strictly interior");

    double obj_scale = std::max(std::abs(ev.linear_obj + md.c0), 1e-6);
    double t = m / std::max(0.5 * obj_scale, 1e-6);
    int used = 0;
    for (int stage = 0; stage < 80 && used < newton_budget; ++stage) {
        ev = evaluate(md, y, t);
        int stage_steps = 0;
        const int stage_cap = 50;  // approximate centering suffices for the next stage
        for (; used < newton_budget && stage_steps < stage_cap;) {
            auto st = newton.step(y, ev, t);
            ++used;
            ++stage_steps;
            out.decrement = st.decrement_sq;
            if (stop_early && stop_early(y)) {
                out.y = y;
                out.newton_used = used;
                out.gap_abs = static_cast<double>(m) / t;
                out.converged = true;
                return out;
            }
            if (!st.ok) break;  // line search stalled: accept stage result
            if (st.decrement_sq / 2.0 <= opts.center_tol) break;
        }
        if (opts.verbose)
            std::fprintf(stderr, "  [barrier] stage=%d t=%.3g steps=%d decr=%.3g obj=%.9g\n",
                         stage, t, stage_steps, out.decrement, ev.linear_obj + md.c0);
        double gap = static_cast<double>(m) / t;
        double target =
            std::max(opts.rel_gap_tol * std::abs(ev.linear_obj + md.c0), gap_floor);
        if (gap <= target) {
            out.converged = true;
            break;
        }
        t *= opts.barrier_mu;
    }
    out.y = y;
    out.newton_used = used;
    out.gap_abs = static_cast<double>(m) / t;
    return out;
}

} // namespace

SubproblemSolution solve(const ConvexSubproblem &sub, const SolverOptions &opts,
                         const std::vector<double> *warm_start) {
    sub.validate();
    Model md = build_model(sub);
    const int n = md.n;

    auto scale_point = [&](const std::vector<double> &x) {
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            double span = sub.upper[i] - sub.lower[i];
            y[i] = std::clamp((x[i] - sub.lower[i]) / span, 1e-12, 1.0 - 1e-12);
        }
        return y;
    };

    // Candidate starts: warm point nudged toward the anchor, then the anchor.
    std::vector<Eigen::VectorXd> candidates;
    if (warm_start && static_cast<int>(warm_start->size()) == n) {
        Eigen::VectorXd yw = scale_point(*warm_start);
        if (!sub.anchor.empty()) {
            Eigen::VectorXd ya = scale_point(sub.anchor);
            for (double theta : {0.01, 0.05, 0.25}) candidates.push_back((1 - theta) * yw + theta * ya);
        }
        candidates.push_back(yw);
    }
    if (!sub.anchor.empty()) candidates.push_back(scale_point(sub.anchor));
    if (candidates.empty()) candidates.push_back(Eigen::VectorXd::Constant(n, 0.5));

    double bits_scale = 1.0;
    for (const auto &lg : sub.logs) bits_scale = std::max(bits_scale, std::abs(lg.min_bits));

    Eigen::VectorXd y0;
    bool have_start = false;
    bool logs_ok = false;
    for (const auto &cand : candidates) {
        if (max_affine_violation(md, cand, 1e-10) >= 0.0) continue;
        bool cand_logs_ok = max_log_violation(md, cand) < -1e-12 * bits_scale;
        if (!have_start) {
            y0 = cand;
            have_start = true;
            logs_ok = cand_logs_ok;
        } else if (cand_logs_ok && !logs_ok) {
            y0 = cand;
            logs_ok = true;
        }
        if (logs_ok) break;
    }
    if (!have_start)
        throw std::logic_error("solve: no strictly feasible start for the affine constraints "
                               "(anchor contract violated)");

    SubproblemSolution sol;
    int newton_total = 0;

    if (!logs_ok && !md.logs.empty()) {
        // Phase 1: minimize a shared slack sigma over phi_j(y) - sigma <= 0.
        double viol0 = max_log_violation(md, y0);
        double exit_slack = std::min(1.0, 0.01 * bits_scale);
        double sigma_hi = viol0 + std::max(1.0, 0.5 * std::abs(viol0));
        double sigma_lo = -std::max(10.0 * exit_slack, 1e-6 * bits_scale) * 10.0;

        Model p1 = md;
        p1.n = n + 1;
        double span_sigma = sigma_hi - sigma_lo;
        p1.c = Eigen::VectorXd::Zero(n + 1);
        p1.c[n] = span_sigma;
        p1.c0 = sigma_lo;
        for (auto &lg : p1.logs) {
            lg.lin.push_back({n, -span_sigma});
            lg.c0 -= sigma_lo;
        }
        Eigen::VectorXd y1(n + 1);
        y1.head(n) = y0;
        y1[n] = std::clamp((viol0 + 0.5 * std::max(1.0, std::abs(viol0)) - sigma_lo) / span_sigma,
                           1e-6, 1.0 - 1e-6);

        auto early = [&](const Eigen::VectorXd &y) {
            return max_log_violation(md, y.head(n)) <= -exit_slack;
        };
        SolverOptions p1opts = opts;
        p1opts.rel_gap_tol = 1e-9;
        PathResult pr =
            follow_path(p1, y1, p1opts, opts.max_newton / 2, 1e-9 * bits_scale, early);
        newton_total += pr.newton_used;
        y0 = pr.y.head(n);
        double residual_viol = max_log_violation(md, y0);
        if (residual_viol >= 0.0) {
            for (int i = 0; i < n; ++i)
                sol.x.push_back(sub.lower[i] + (sub.upper[i] - sub.lower[i]) * y0[i]);
            sol.objective = md.c.dot(y0) + md.c0;
            sol.status = SolveStatus::Infeasible;
            sol.primal_residual = residual_viol;
            sol.newton_iters = newton_total;
            sol.message = "phase-1 could not reach the rate constraints";
            return sol;
        }
    }

    PathResult pr = follow_path(md, y0, opts, opts.max_newton - newton_total, 1e-10);
    newton_total += pr.newton_used;

    sol.x.resize(n);
    for (int i = 0; i < n; ++i)
        sol.x[i] = sub.lower[i] + (sub.upper[i] - sub.lower[i]) * pr.y[i];
    sol.objective = md.c.dot(pr.y) + md.c0;
    sol.newton_iters = newton_total;
    sol.dual_residual = pr.decrement;
    // gap reported relative to max(|objective|, 0.1 W) so near-zero optima
    // stay meaningful
    sol.rel_duality_gap = pr.gap_abs / std::max(std::abs(sol.objective), 0.1);

    // Interior point: violations can only come from the unscaling arithmetic.
    double pres = 0.0;
    for (size_t r = 0; r < sub.rows.size(); ++r) {
        double v = -sub.rows[r].upper;
        for (const auto &[i, c] : sub.rows[r].terms) v += c * sol.x[i];
        pres = std::max(pres, v);
    }
    pres = std::max(pres, max_log_violation(md, pr.y));
    sol.primal_residual = std::max(0.0, pres);

    if (pr.converged || sol.rel_duality_gap <= 1e-6)
        sol.status = SolveStatus::Optimal;
    else
        sol.status = SolveStatus::MaxIter;
    return sol;
}

} // namespace urllc

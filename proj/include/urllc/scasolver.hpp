#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "urllc/problem.hpp"
#include "urllc/subproblem.hpp"

namespace urllc {

struct ScaConfig {
    int max_iters = 30;
    double obj_rel_tol = 1e-5;         // relative change of the penalized objective
    double gap_tol = 1e-4;             // E - H exactness requirement at exit
    double rounding_threshold = 0.5;
    int restore_retries = 3;
    bool random_init = false;
    uint64_t init_seed = 1;
    SolverOptions solver;
};

struct IterationRecord {
    int iter = 0;
    double penalized_obj_w = 0;
    double raw_obj_w = 0;  // Big-M surrogate power objective
    double gap_u = 0, gap_d = 0;
    double worst_qos_slack_bits = 0;  // min over users/links of psi - requirement
    SolveStatus status = SolveStatus::MaxIter;
};

struct IterationTrace {
    std::vector<IterationRecord> rows;
    bool converged = false;
    std::string note;
};

struct ScaRun {
    Allocation allocation;  // binary-rounded, powers restored
    IterationTrace trace;
    bool feasible = false;
    FeasibilityReport report;
    double objective_w = 0;  // weighted power of the final allocation
    int iterations = 0;
};

/// Affine underestimator of H(s) = sum s^2 around s_point:
/// H(point) + sum 2*point*(s - point).
double linearize_h(const Tensor3 &s, const Tensor3 &s_point);

/// V-bar over a flat cell list: a*Qinv(eps)*sqrt(sum V(g*pbar)).
double v_bar(const std::vector<double> &pbar, const std::vector<double> &gains, double eps);

/// Gradient of v_bar at pbar_point. Throws std::domain_error if the point has
/// zero total dispersion while Qinv(eps) != 0 (the SCA driver perturbs zero
/// powers to 1e-9 W before calling).
std::vector<double> v_bar_gradient(const std::vector<double> &pbar_point,
                                   const std::vector<double> &gains, double eps);

/// Affine overestimator of v_bar built at pbar_point, evaluated at pbar.
double linearize_v(const std::vector<double> &pbar, const std::vector<double> &pbar_point,
                   const std::vector<double> &gains, double eps);

/// Variable index map of an assembled subproblem; -1 marks quantities that
/// are fixed (delay-masked cells, frozen indicators).
struct VarMap {
    int K = 0, M_u = 0, N_u = 0, M_d = 0, N_d = 0;
    std::vector<int> s_u, s_d, p_u, p_d, pb_u, pb_d;
    int n_vars = 0;
    int idx_u(int k, int m, int n) const { return (k * M_u + m) * N_u + n; }
    int idx_d(int k, int m, int n) const { return (k * M_d + m) * N_d + n; }
};

struct SubproblemAssembly {
    ConvexSubproblem sub;
    VarMap map;
};

/// Convex program of one SCA iteration around `point` (full variable set).
SubproblemAssembly assemble_full(const SystemConfig &cfg, const ChannelRealization &real,
                                 const ConstraintMasks &masks, const Allocation &point,
                                 bool with_names = false);

/// Power-only variant: indicators frozen at the binary `assignment`; the
/// surviving variables are the pbar entries of assigned cells (p == pbar
/// there by the collapsed envelope rows).
SubproblemAssembly assemble_power_only(const SystemConfig &cfg, const ChannelRealization &real,
                                       const ConstraintMasks &masks, const Allocation &assignment,
                                       const Allocation &point, bool with_names = false);

/// Deterministic channel-independent split: sub-carrier m goes to user
/// m mod K on every uplink slot; downlink uses the earliest slots that clear
/// the frame overlap and the user's deadline. Powers are left at zero.
Allocation round_robin_assignment(const SystemConfig &cfg);

/// Feasibility-oriented initialization: round-robin assignment respecting the
/// masks, powers from inverting the QoS bits at eps=0.5 rates plus 3 dB,
/// then one projection onto the power budgets.
Allocation make_default_init(const SystemConfig &cfg, const ChannelRealization &real);

/// Random initial point (retained as an option).
Allocation make_random_init(const SystemConfig &cfg, const ChannelRealization &real,
                            uint64_t seed);

/// Algorithm: iterate convex subproblems around the current point until the
/// penalized objective settles and the integrality gap closes, then round,
/// repair the masks/exclusivity exactly, and re-solve powers on the fixed
/// assignment.
ScaRun run(const SystemConfig &cfg, const ChannelRealization &real, const ScaConfig &sca,
           const Allocation &init);
ScaRun run(const SystemConfig &cfg, const ChannelRealization &real, const ScaConfig &sca);

/// Power-only solve over a fixed binary assignment (also the FSA engine and
/// the post-rounding restoration step). `power_init`, when given, seeds the
/// first linearization.
ScaRun run_power_only(const SystemConfig &cfg, const ChannelRealization &real,
                      const ScaConfig &sca, const Allocation &assignment,
                      const Allocation *power_init = nullptr);

void write_trace_csv(const IterationTrace &trace, const std::string &path);
std::string trace_to_csv(const IterationTrace &trace);

} // namespace urllc

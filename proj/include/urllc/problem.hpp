#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "urllc/common.hpp"
#include "urllc/sysmodel.hpp"

namespace urllc {

/// Decision variables of the joint allocation problem. Indicators live in
/// [0,1] (binary after rounding); powers in watts. pbar_* are the Big-M
/// product surrogates s*p.
struct Allocation {
    Tensor3 s_u, s_d;        // [k][m][n] indicators
    Tensor3 p_u, p_d;        // [k][m][n] powers (W)
    Tensor3 pbar_u, pbar_d;  // [k][m][n] surrogate powers (W)

    static Allocation zeros(const SystemConfig &cfg);
    bool shape_matches(const SystemConfig &cfg) const;
};

/// One causality pair: the uplink slot and downlink slot that may not both be
/// occupied by the same user (any sub-carrier combination).
struct CausalityPair {
    int uplink_slot;    // 0-based
    int downlink_slot;  // 0-based
};

struct ConstraintMasks {
    std::vector<CausalityPair> causality_pairs;          // shared across users
    std::vector<std::vector<int>> delay_forbidden;       // [k] -> 0-based downlink slots
    bool downlink_allowed(int k, int n_d) const;
};

/// Worst violation per constraint family C1..C20 plus an overall verdict.
struct FeasibilityReport {
    std::map<std::string, double> violation;  // keyed "C1".."C20"
    bool feasible = false;
    double tolerance = 0.0;
    double worst() const;
};

/// Causality (Eq. of C3) and delay (C4) masks. Downlink slot n_d is forbidden
/// for user k iff n_d+1 > D_k - tau (slots counted 1-based in the config).
ConstraintMasks build_masks(const SystemConfig &cfg);

/// Total weighted network power  sum_k w_k sum s_u*p_u + sum s_d*p_d  (W).
double objective_w(const Allocation &alloc, const SystemConfig &cfg);

/// Big-M objective over surrogates: sum_k w_k sum pbar_u + sum pbar_d (W).
double objective_bigm_w(const Allocation &alloc, const SystemConfig &cfg);

/// Evaluates every constraint family of the problem (QoS C1/C2, causality C3,
/// delay C4, exclusivity C5/C9, binariness C6/C10, budgets C7/C11,
/// nonnegativity C8/C12, and the Big-M envelopes C13..C20). Never rejects a
/// shape-compatible allocation; violations land in the report.
FeasibilityReport check(const Allocation &alloc, const SystemConfig &cfg,
                        const ChannelRealization &real, double tol = 1e-6);

/// Per-user achievable bits of the current allocation (original problem form:
/// indicator-weighted sums over s and p).
double psi_user(const Allocation &alloc, const SystemConfig &cfg,
                const ChannelRealization &real, int k, Link link);

/// Same in the Big-M surrogate form: unweighted sums over the pbar tensor
/// (zero-power cells contribute nothing).
double psi_user_bigm(const Allocation &alloc, const SystemConfig &cfg,
                     const ChannelRealization &real, int k, Link link);

/// JSON (de)serialization for debugging and test fixtures.
std::string allocation_to_json(const Allocation &alloc);
Allocation allocation_from_json(const std::string &text);
void save_allocation(const Allocation &alloc, const std::string &path);
Allocation load_allocation(const std::string &path);

} // namespace urllc

#pragma once

#include <string>
#include <vector>

#include "urllc/problem.hpp"

namespace urllc {

/// Penalty bookkeeping for the DC reformulation: gap_j = E_j - H_j is zero
/// exactly at binary indicator tensors.
struct PenaltyState {
    double eta1_w = 0, eta2_w = 0;
    double gap_u = 0, gap_d = 0;
    double total() const { return eta1_w * gap_u + eta2_w * gap_d; }
};

/// One affine inequality of the Big-M envelope over one (k,m,n,link) cell,
/// in the form  a_s*s + a_p*p + a_pbar*pbar <= rhs.
struct BigMRow {
    std::string tag;  // C13..C20
    Link link;
    int k, m, n;
    double coef_s, coef_p, coef_pbar, rhs;
};

/// Emits the full C13..C20 family (the C16/C20 nonnegativity rows included)
/// with the exact budget caps as Big-M constants.
std::vector<BigMRow> bigm_constraints(const SystemConfig &cfg);

/// E(s) - H(s) = sum s - sum s^2 over one indicator tensor. Entries outside
/// [0,1] raise std::domain_error.
double e_minus_h(const Tensor3 &s);

/// Gap state of an allocation under the config's penalty factors.
PenaltyState penalty_state(const Allocation &alloc, const SystemConfig &cfg);

/// Phi(pbar) + eta1*(E_u - H_u) + eta2*(E_d - H_d), with Phi the Big-M
/// objective (surrogate power sums).
double penalized_objective(const Allocation &alloc, const SystemConfig &cfg);

} // namespace urllc

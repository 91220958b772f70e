#pragma once

#include <string>
#include <utility>
#include <vector>

namespace urllc {

/// Sparse affine inequality: sum_i coef_i * x_{var_i} <= upper.
struct AffineRow {
    std::string tag;
    std::vector<std::pair<int, double>> terms;
    double upper = 0;
};

/// Concave rate constraint:
///   sum_r log2(1 + gains[r] * x[vars[r]]) - (sum linear . x + linear_const) >= min_bits
struct LogConstraint {
    std::string tag;
    std::vector<int> vars;
    std::vector<double> gains;
    std::vector<std::pair<int, double>> linear;
    double linear_const = 0;
    double min_bits = 0;
};

/// One SCA iteration's convex program: linear objective, affine rows, box
/// bounds, and concave log-rate rows. Variables are indexed 0..n_vars-1; the
/// builder keeps its own map from (tensor, k, m, n) to indices.
///
/// `anchor`, when provided, must be strictly feasible for the boxes and all
/// affine rows (the builder can always construct one for this problem
/// family); the solver relies on it to start and to recover feasibility for
/// the log rows via its phase-1 sweep.
struct ConvexSubproblem {
    int n_vars = 0;
    std::vector<double> obj;
    double obj_const = 0;
    std::vector<double> lower, upper;  // finite box bounds per variable
    std::vector<AffineRow> rows;
    std::vector<LogConstraint> logs;
    std::vector<double> anchor;
    std::vector<std::string> var_names;  // optional, used by dump()

    /// Throws std::invalid_argument on malformed input (nonpositive gains,
    /// non-finite coefficients, indices out of range, lower >= upper).
    void validate() const;

    std::string to_json() const;
    void dump(const std::string &path) const;
};

enum class SolveStatus { Optimal, Infeasible, MaxIter };

std::string to_string(SolveStatus s);

struct SubproblemSolution {
    std::vector<double> x;
    double objective = 0;  // obj . x + obj_const
    SolveStatus status = SolveStatus::MaxIter;
    double primal_residual = 0;   // max constraint violation at x
    double dual_residual = 0;     // Newton decrement at exit
    double rel_duality_gap = 0;
    int newton_iters = 0;
    std::string message;
};

struct SolverOptions {
    double rel_gap_tol = 1e-8;   // tighter than the reporting contract on purpose
    int max_newton = 800;
    double barrier_mu = 40.0;
    double center_tol = 1e-10;   // Newton decrement^2 / 2 threshold
    bool verbose = false;        // stage diagnostics on stderr
};

/// Deterministic log-barrier interior-point solve. `warm_start` (natural
/// units) is used when it can be nudged into the strict interior; otherwise
/// the anchor seeds the run. Infeasible subproblems get status Infeasible
/// with the best phase-1 iterate attached.
SubproblemSolution solve(const ConvexSubproblem &sub, const SolverOptions &opts = {},
                         const std::vector<double> *warm_start = nullptr);

} // namespace urllc

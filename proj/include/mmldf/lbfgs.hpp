#pragma once

#include <Eigen/Core>
#include <functional>
#include <utility>
#include <vector>

namespace mmldf {

struct LbfgsConfig {
    int memory = 10;                 // stored (s, y) pairs; 0 = steepest descent
    double wolfe_c1 = 1e-4;          // sufficient decrease, in (0, 0.5)
    double wolfe_c2 = 0.9;           // curvature, in (c1, 1)
    double grad_tol = 1e-6;          // infinity-norm stopping threshold
    int max_iters = 200;
    int max_line_search_steps = 40;  // oracle evaluations per line search

    void validate() const;  // throws ConfigError
};

/// One accepted line-search step, recorded so the strong Wolfe inequalities
/// can be re-checked after the fact:
///   f1 <= f0 + c1 * alpha * g0d   and   |g1d| <= c2 * |g0d|.
struct LbfgsStep {
    double alpha;
    double f0;   // value at the step origin
    double g0d;  // directional derivative at the origin (negative)
    double f1;   // value at the accepted point
    double g1d;  // directional derivative at the accepted point
};

enum class LbfgsStatus {
    gradient_converged,
    max_iterations,
    line_search_failed,  // best point found so far was kept
};

struct LbfgsReport {
    LbfgsStatus status = LbfgsStatus::max_iterations;
    int iterations = 0;
    long value_evals = 0;
    long gradient_evals = 0;
    double final_grad_norm = 0.0;          // infinity norm
    std::vector<double> value_trace;       // f at x0, then after each iteration
    std::vector<LbfgsStep> steps;          // accepted steps, in order
};

/// Objective oracle: fills `grad` and returns the value at `x`.
using LbfgsOracle = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/// Minimizes the oracle from x0. Search directions come from the two-loop
/// recursion over stored curvature pairs with gamma-scaled identity seeding;
/// non-descent directions fall back to -grad and clear the memory. Steps are
/// accepted under the strong Wolfe conditions. Pairs failing the curvature
/// check s^T y > 1e-12 ||s|| ||y|| are skipped. Non-finite oracle output
/// throws NumericError; a failed line search keeps the best point seen and
/// terminates with LbfgsStatus::line_search_failed.
std::pair<Eigen::VectorXd, LbfgsReport> lbfgs_minimize(const LbfgsOracle& oracle,
                                                       const Eigen::VectorXd& x0,
                                                       const LbfgsConfig& cfg = {});

}  // namespace mmldf

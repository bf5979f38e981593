#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "mmldf/dataset.hpp"
#include "mmldf/graph.hpp"
#include "mmldf/lbfgs.hpp"
#include "mmldf/numerics.hpp"
#include "mmldf/objective.hpp"

namespace mmldf {

struct TrainConfig {
    double outer_tol = 1e-5;      // relative objective change between outer iterations
    int max_outer_iters = 50;
    std::uint64_t seed = 0;
    int active_set_refreshes = 3;  // bounded fixed-point passes inside the w update
    bool safeguard = true;         // reject block updates that increase the objective

    void validate() const;
};

/// Per-fit instrumentation. With the safeguard on, objective_trace is
/// non-increasing. The counters mirror the per-phase cost model:
/// outer iterations t, L-BFGS iterations t1, gradient evaluations t2,
/// objective evaluations t3 (t2 <= t3, both >= t1).
struct TrainReport {
    std::vector<double> objective_trace;  // initial value, then one per outer iteration
    std::vector<long> active_set_sizes;   // |Theta| (binary) or violating pair count
    int outer_iters = 0;
    long lbfgs_iters = 0;
    long gradient_evals = 0;
    long objective_evals = 0;
    long safeguard_rejections = 0;
    bool converged = false;
    double seconds_w = 0.0;
    double seconds_b = 0.0;
    double seconds_p = 0.0;
    double seconds_omega = 0.0;
};

struct FitResult {
    ProjectionModel projection;
    MarginModel margin;
    TrainReport report;
};

/// Seeded start: P entries are standard normal scaled by 1/sqrt(d); W and
/// bias start at zero; Omega = I/K for K >= 3.
std::pair<ProjectionModel, MarginModel> init_params(Eigen::Index d, int r, int K,
                                                    std::uint64_t seed);

/// Closed-form w update on embedded features Z (rows z_i = P^T x_i) with
/// signed targets y. Solves (I + 2C sum_active z z^T) w = 2C sum_active
/// (y_i - b) z_i, refreshing the active set up to `refreshes` times; an empty
/// active set returns w = 0.
Eigen::VectorXd solve_w_quadratic_hinge(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                        const Eigen::VectorXd& w_in, double b, double C,
                                        int refreshes);

/// Closed-form b update on embedded features: the mean active residual
/// y_i - w^T z_i, or b_in when no sample is active.
double solve_b_quadratic_hinge(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& w, double b_in);

Eigen::VectorXd update_w_binary(const LabeledDataset& ds, const Eigen::MatrixXd& P,
                                const Eigen::VectorXd& w_in, double b, double C,
                                int refreshes = 3);

double update_b_binary(const LabeledDataset& ds, const Eigen::MatrixXd& P,
                       const Eigen::VectorXd& w, double b_in);

/// L-BFGS descent on the P-dependent terms of the objective with the margin
/// parameters held fixed. Appends evaluation counts to `report` when given.
ProjectionModel update_P(const LabeledDataset& ds, const ProjectionModel& P_in,
                         const MarginModel& margin, const Hyperparams& hp,
                         const ClassPartition& part, const LbfgsConfig& lbfgs_cfg,
                         LbfgsReport* lbfgs_report = nullptr);

/// Convex block update for class m: minimizes the frozen-active-set quadratic
/// in (w_m, b_m) including the ridge and correlation coupling. When no active
/// pair involves m the b_m coordinate is held fixed and only the reduced r x r
/// system is solved.
std::pair<Eigen::VectorXd, double> update_block_multi(const LabeledDataset& ds,
                                                      const Eigen::MatrixXd& P,
                                                      const Eigen::MatrixXd& W,
                                                      const Eigen::VectorXd& bias,
                                                      const SymMatrix& Omega,
                                                      const Hyperparams& hp, int m);

/// Closed-form covariance update: (W^T W + ridge I)^{1/2} normalized to unit
/// trace. Minimizes tr(W Omega^{-1} W^T) over unit-trace PD matrices.
SymMatrix update_omega(const Eigen::MatrixXd& W, double omega_ridge);

/// Alternating optimization: per outer iteration the binary path updates
/// w, b, then P; the multi-class path updates each (w_m, b_m) block, Omega,
/// then P. Stops when the relative objective change drops below outer_tol.
FitResult fit(const LabeledDataset& ds, const Hyperparams& hp, const TrainConfig& train_cfg,
              const LbfgsConfig& lbfgs_cfg = {});

/// Row i of the result is P^T x_i.
Eigen::MatrixXd transform(const ProjectionModel& projection, const Eigen::MatrixXd& X);

}  // namespace mmldf

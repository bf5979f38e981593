#pragma once

#include <Eigen/Core>
#include <optional>
#include <utility>
#include <vector>

#include "mmldf/dataset.hpp"
#include "mmldf/graph.hpp"
#include "mmldf/numerics.hpp"

namespace mmldf {

/// Trade-off parameters and smoothing constants. The quadratic-hinge margins
/// are fixed by the objective definitions: 1 for the binary loss, 2 for the
/// multi-class score-gap loss.
struct Hyperparams {
    double C = 1.0;           // hinge trade-off, > 0
    double eta = 0.0;         // within-class scatter trade-off, >= 0
    double lambda = 0.0;      // l2,1 trade-off, >= 0
    double rho = 0.0;         // task-correlation trade-off, >= 0
    int r = 2;                // target dimension, 1 <= r < d
    double eps_smooth = 1e-10;  // row-norm smoothing, > 0
    double omega_ridge = 1e-8;  // ridge inside the covariance update, >= 0

    static constexpr double margin_binary = 1.0;
    static constexpr double margin_multi = 2.0;

    void validate(Eigen::Index d) const;  // throws ConfigError
};

/// The learned d x r transformation.
struct ProjectionModel {
    Eigen::MatrixXd P;

    Eigen::Index d() const { return P.rows(); }
    Eigen::Index r() const { return P.cols(); }
};

/// Classifier parameters. Binary problems store K = 1 (the single weight
/// vector and bias); multi-class stores one column per class plus the
/// unit-trace task covariance Omega.
struct MarginModel {
    Eigen::MatrixXd W;       // r x K
    Eigen::VectorXd bias;    // length K
    std::optional<SymMatrix> Omega;  // K x K, absent for binary
};

/// Smoothed l2,1 norm: sum_i sqrt(||p_i||^2 + eps_smooth).
double l21_smoothed(const Eigen::MatrixXd& P, double eps_smooth);

/// Diagonal of the row-weight matrix: entry i = 1 / (2 sqrt(||p_i||^2 + eps)).
/// 2 * lambda * diag(...) * P is the exact gradient of lambda * l21_smoothed.
Eigen::VectorXd row_weight_diagonal(const Eigen::MatrixXd& P, double eps_smooth);

/// Quadratic hinge [min(0, y * score - 1)]^2 for y in {-1, +1}.
double hinge_binary(double score, double y);

/// Signed targets for a binary dataset: class 0 -> -1, class 1 -> +1.
Eigen::VectorXd binary_targets(const LabeledDataset& ds);

/// Sample indices with y_i (w^T P^T x_i + b) - 1 <= 0 (non-strict).
std::vector<int> active_set_binary(const LabeledDataset& ds, const Eigen::MatrixXd& P,
                                   const Eigen::VectorXd& w, double b);

/// Binary objective: 0.5 ||w||^2 + C sum hinge + eta * scatter + lambda * l21.
double objective_binary(const LabeledDataset& ds, const Eigen::MatrixXd& P,
                        const Eigen::VectorXd& w, double b, const Hyperparams& hp,
                        const ClassPartition& part);

/// Exact gradient of objective_binary in P (w, b fixed).
Eigen::MatrixXd grad_P_binary(const LabeledDataset& ds, const Eigen::MatrixXd& P,
                              const Eigen::VectorXd& w, double b, const Hyperparams& hp,
                              const ClassPartition& part);

/// Pairs (i, m != y_i) whose score gap violates the margin strictly:
/// score(y_i) - score(m) - 2 < 0.
std::vector<std::pair<int, int>> active_set_multi(const LabeledDataset& ds,
                                                  const Eigen::MatrixXd& P,
                                                  const Eigen::MatrixXd& W,
                                                  const Eigen::VectorXd& bias);

/// Multi-class objective: 0.5 sum ||w_m||^2 + C sum of squared gap violations
/// + eta * scatter + lambda * l21 + rho * tr(W (Omega + ridge I)^{-1} W^T).
double objective_multi(const LabeledDataset& ds, const Eigen::MatrixXd& P,
                       const Eigen::MatrixXd& W, const Eigen::VectorXd& bias,
                       const std::optional<SymMatrix>& Omega, const Hyperparams& hp,
                       const ClassPartition& part);

/// Exact gradient of objective_multi in P (the correlation term is constant).
Eigen::MatrixXd grad_P_multi(const LabeledDataset& ds, const Eigen::MatrixXd& P,
                             const Eigen::MatrixXd& W, const Eigen::VectorXd& bias,
                             const Hyperparams& hp, const ClassPartition& part);

/// rho * tr(W (Omega + ridge I)^{-1} W^T).
double correlation_penalty(const Eigen::MatrixXd& W, const SymMatrix& Omega, double rho,
                           double omega_ridge);

/// Gradient of correlation_penalty in W: 2 rho W (Omega + ridge I)^{-1}.
Eigen::MatrixXd correlation_penalty_grad_W(const Eigen::MatrixXd& W, const SymMatrix& Omega,
                                           double rho, double omega_ridge);

}  // namespace mmldf

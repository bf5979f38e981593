#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "mmldf/dataset.hpp"
#include "mmldf/numerics.hpp"
#include "mmldf/objective.hpp"
#include "mmldf/solver.hpp"

namespace mmldf {

/// Objective-term ablations: mmpp zeroes lambda, eta and rho; variant_i
/// (lambda only) zeroes eta and rho; variant_ii zeroes rho; full keeps all.
enum class Variant { full, no_rho, no_eta_no_rho, mmpp };

const char* variant_name(Variant v);
Variant variant_from_string(const std::string& name);  // throws ConfigError
Hyperparams apply_variant(Hyperparams hp, Variant v);

/// Experimental protocol configuration: dimension sweep, repeated seeded
/// splits, downstream SVM, and the cross-validation grid (lambda is fixed).
struct ProtocolSpec {
    std::vector<int> dims = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    int trials = 10;
    int train_count = 0;
    std::uint64_t seed = 0;
    double svm_C = 1.0;
    double lambda = 1e-4;
    bool standardize = true;
    std::vector<double> cv_C = {1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
    std::vector<double> cv_eta = {1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
    std::vector<double> cv_rho = {1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
    TrainConfig train_cfg;
    LbfgsConfig lbfgs_cfg;

    void validate(const LabeledDataset& ds) const;
};

struct AccuracyRow {
    std::string variant;
    int dim = 0;
    std::string param_value;  // empty unless produced by a sensitivity sweep
    double mean_acc = 0.0;
    double std_acc = 0.0;
    int trials = 0;
    std::uint64_t seed = 0;
};

struct AccuracyTable {
    std::vector<AccuracyRow> rows;
};

/// Linear classifier on embedded features: one weight column for binary
/// (sign of the single score) or one per class (argmax) for K >= 3.
struct LinearSvmModel {
    Eigen::MatrixXd W;     // r x (1 or K)
    Eigen::VectorXd bias;
    int num_classes = 0;
};

/// Quadratic-hinge linear SVM trained by alternating the closed-form w and b
/// updates (one-vs-rest for K >= 3), polished until the gradient in w is
/// below 1e-6.
LinearSvmModel train_linear_svm(const Eigen::MatrixXd& Z, const std::vector<int>& labels, int K,
                                double C);

std::vector<int> predict(const LinearSvmModel& model, const Eigen::MatrixXd& Z);

/// Percent of matching entries; empty input is an error.
double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

/// For each (dim, trial): seeded split -> standardize on train -> fit ->
/// transform -> downstream SVM -> test accuracy; aggregated mean +/- std per
/// dim. Trials run in parallel (capped by MMLDF_THREADS) with a fixed merge
/// order, so the result depends only on spec.seed.
AccuracyTable run_protocol(const LabeledDataset& ds, const Hyperparams& hp,
                           const ProtocolSpec& spec, Variant variant);

/// 3-fold stratified CV over the (C, eta, rho) grid at the first sweep
/// dimension; ties resolve to the lexicographically smallest triple. Folds
/// whose training part misses a class are skipped; all folds skipped is an
/// error.
std::tuple<double, double, double> cross_validate(const LabeledDataset& train_ds,
                                                  const ProtocolSpec& spec);

/// l2 norm of each projection row; near-zero entries mark pruned features.
Eigen::VectorXd row_norm_profile(const Eigen::MatrixXd& P);

/// Correlation coefficients Omega_jk / sqrt(Omega_jj Omega_kk).
Eigen::MatrixXd correlation_matrix(const SymMatrix& Omega);

enum class SweepParam { C, lambda, eta, rho };
SweepParam sweep_param_from_string(const std::string& name);

/// Repeats run_protocol with one parameter overridden per value; rows carry
/// the overriding value in param_value.
AccuracyTable sensitivity_sweep(const LabeledDataset& ds, const Hyperparams& hp,
                                const ProtocolSpec& spec, SweepParam param,
                                const std::vector<double>& values);

}  // namespace mmldf

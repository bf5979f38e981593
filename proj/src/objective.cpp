#include "mmldf/objective.hpp"

#include <cmath>
#include <string>

#include "mmldf/errors.hpp"

namespace mmldf {

void Hyperparams::validate(Eigen::Index d) const {
    if (!(C > 0.0)) throw ConfigError("Hyperparams: C must be > 0");
    if (eta < 0.0 || lambda < 0.0 || rho < 0.0) {
        throw ConfigError("Hyperparams: eta, lambda, rho must be >= 0");
    }
    if (r < 1 || r >= d) {
        throw ConfigError("Hyperparams: r must be < d (got r=" + std::to_string(r) +
                          ", d=" + std::to_string(d) + ")");
    }
    if (!(eps_smooth > 0.0)) throw ConfigError("Hyperparams: eps_smooth must be > 0");
    if (omega_ridge < 0.0) throw ConfigError("Hyperparams: omega_ridge must be >= 0");
}

double l21_smoothed(const Eigen::MatrixXd& P, double eps_smooth) {
    if (eps_smooth < 0.0) throw ConfigError("l21_smoothed: eps_smooth must be >= 0");
    double total = 0.0;
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
        total += std::sqrt(P.row(i).squaredNorm() + eps_smooth);
    }
    return total;
}

Eigen::VectorXd row_weight_diagonal(const Eigen::MatrixXd& P, double eps_smooth) {
    Eigen::VectorXd diag(P.rows());
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
        diag(i) = 1.0 / (2.0 * std::sqrt(P.row(i).squaredNorm() + eps_smooth));
    }
    return diag;
}

double hinge_binary(double score, double y) {
    const double v = std::min(0.0, y * score - Hyperparams::margin_binary);
    return v * v;
}

Eigen::VectorXd binary_targets(const LabeledDataset& ds) {
    if (ds.num_classes() != 2) {
        throw ConfigError("binary_targets: dataset has " + std::to_string(ds.num_classes()) +
                          " classes, expected 2");
    }
    Eigen::VectorXd y(ds.n());
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        y(i) = ds.labels[static_cast<size_t>(i)] == 0 ? -1.0 : 1.0;
    }
    return y;
}

namespace {

void check_projection(const LabeledDataset& ds, const Eigen::MatrixXd& P, const char* op) {
    if (P.rows() != ds.d()) {
        throw ConfigError(std::string(op) + ": P has " + std::to_string(P.rows()) +
                          " rows, dataset dimension is " + std::to_string(ds.d()));
    }
}

Eigen::VectorXd binary_scores(const LabeledDataset& ds, const Eigen::MatrixXd& P,
                              const Eigen::VectorXd& w, double b) {
    if (w.size() != P.cols()) {
        throw ConfigError("binary scores: w has size " + std::to_string(w.size()) +
                          ", P has " + std::to_string(P.cols()) + " columns");
    }
    return (ds.features * (P * w)).array() + b;
}

// Scores matrix n x K for the multi-class model.
Eigen::MatrixXd multi_scores(const LabeledDataset& ds, const Eigen::MatrixXd& P,
                             const Eigen::MatrixXd& W, const Eigen::VectorXd& bias) {
    if (W.rows() != P.cols() || bias.size() != W.cols()) {
        throw ConfigError("multi scores: inconsistent W/bias/P shapes");
    }
    return ((ds.features * P) * W).rowwise() + bias.transpose();
}

}  // namespace

std::vector<int> active_set_binary(const LabeledDataset& ds, const Eigen::MatrixXd& P,
                                   const Eigen::VectorXd& w, double b) {
    check_projection(ds, P, "active_set_binary");
    const Eigen::VectorXd y = binary_targets(ds);
    const Eigen::VectorXd s = binary_scores(ds, P, w, b);
    std::vector<int> active;
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        if (y(i) * s(i) - Hyperparams::margin_binary <= 0.0) active.push_back(static_cast<int>(i));
    }
    return active;
}

double objective_binary(const LabeledDataset& ds, const Eigen::MatrixXd& P,
                        const Eigen::VectorXd& w, double b, const Hyperparams& hp,
                        const ClassPartition& part) {
    check_projection(ds, P, "objective_binary");
    const Eigen::VectorXd y = binary_targets(ds);
    const Eigen::VectorXd s = binary_scores(ds, P, w, b);
    double hinge = 0.0;
    for (Eigen::Index i = 0; i < ds.n(); ++i) hinge += hinge_binary(s(i), y(i));
    double value = 0.5 * w.squaredNorm() + hp.C * hinge;
    if (hp.eta != 0.0) value += hp.eta * scatter_value(ds.features * P, part);
    if (hp.lambda != 0.0) value += hp.lambda * l21_smoothed(P, hp.eps_smooth);
    return value;
}

Eigen::MatrixXd grad_P_binary(const LabeledDataset& ds, const Eigen::MatrixXd& P,
                              const Eigen::VectorXd& w, double b, const Hyperparams& hp,
                              const ClassPartition& part) {
    check_projection(ds, P, "grad_P_binary");
    const Eigen::VectorXd y = binary_targets(ds);
    const Eigen::VectorXd s = binary_scores(ds, P, w, b);

    // Hinge part: 2C sum_{active} (s_i - y_i) x_i w^T, using y_i^2 = 1.
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(ds.n());
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        if (y(i) * s(i) - Hyperparams::margin_binary <= 0.0) coef(i) = s(i) - y(i);
    }
    Eigen::MatrixXd grad = (2.0 * hp.C) * (ds.features.transpose() * coef) * w.transpose();

    if (hp.eta != 0.0) {
        grad.noalias() += (2.0 * hp.eta) * ds.features.transpose() *
                          laplacian_apply(ds.features * P, part);
    }
    if (hp.lambda != 0.0) {
        grad += (2.0 * hp.lambda) *
                (row_weight_diagonal(P, hp.eps_smooth).asDiagonal() * P);
    }
    return grad;
}

std::vector<std::pair<int, int>> active_set_multi(const LabeledDataset& ds,
                                                  const Eigen::MatrixXd& P,
                                                  const Eigen::MatrixXd& W,
                                                  const Eigen::VectorXd& bias) {
    check_projection(ds, P, "active_set_multi");
    const int k = ds.num_classes();
    if (k < 3) throw ConfigError("active_set_multi: requires K >= 3");
    const Eigen::MatrixXd s = multi_scores(ds, P, W, bias);
    std::vector<std::pair<int, int>> pairs;
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        const int yi = ds.labels[static_cast<size_t>(i)];
        for (int m = 0; m < k; ++m) {
            if (m == yi) continue;
            if (s(i, yi) - s(i, m) - Hyperparams::margin_multi < 0.0) {
                pairs.emplace_back(static_cast<int>(i), m);
            }
        }
    }
    return pairs;
}

double objective_multi(const LabeledDataset& ds, const Eigen::MatrixXd& P,
                       const Eigen::MatrixXd& W, const Eigen::VectorXd& bias,
                       const std::optional<SymMatrix>& Omega, const Hyperparams& hp,
                       const ClassPartition& part) {
    check_projection(ds, P, "objective_multi");
    const int k = ds.num_classes();
    const Eigen::MatrixXd s = multi_scores(ds, P, W, bias);
    double hinge = 0.0;
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        const int yi = ds.labels[static_cast<size_t>(i)];
        for (int m = 0; m < k; ++m) {
            if (m == yi) continue;
            const double gap = s(i, yi) - s(i, m) - Hyperparams::margin_multi;
            if (gap < 0.0) hinge += gap * gap;
        }
    }
    double value = 0.5 * W.squaredNorm() + hp.C * hinge;
    if (hp.eta != 0.0) value += hp.eta * scatter_value(ds.features * P, part);
    if (hp.lambda != 0.0) value += hp.lambda * l21_smoothed(P, hp.eps_smooth);
    if (hp.rho != 0.0) {
        if (!Omega) throw ConfigError("objective_multi: rho > 0 requires Omega");
        value += correlation_penalty(W, *Omega, hp.rho, hp.omega_ridge);
    }
    return value;
}

Eigen::MatrixXd grad_P_multi(const LabeledDataset& ds, const Eigen::MatrixXd& P,
                             const Eigen::MatrixXd& W, const Eigen::VectorXd& bias,
                             const Hyperparams& hp, const ClassPartition& part) {
    check_projection(ds, P, "grad_P_multi");
    const int k = ds.num_classes();
    const Eigen::MatrixXd s = multi_scores(ds, P, W, bias);

    // Per-sample class coefficients: an active pair (i, m) contributes
    // 2C * gap * x_i (w_{y_i} - w_m)^T, accumulated as X^T Q W^T.
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(ds.n(), k);
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        const int yi = ds.labels[static_cast<size_t>(i)];
        for (int m = 0; m < k; ++m) {
            if (m == yi) continue;
            const double gap = s(i, yi) - s(i, m) - Hyperparams::margin_multi;
            if (gap < 0.0) {
                const double c = 2.0 * hp.C * gap;
                q(i, yi) += c;
                q(i, m) -= c;
            }
        }
    }
    Eigen::MatrixXd grad = ds.features.transpose() * (q * W.transpose());

    if (hp.eta != 0.0) {
        grad.noalias() += (2.0 * hp.eta) * ds.features.transpose() *
                          laplacian_apply(ds.features * P, part);
    }
    if (hp.lambda != 0.0) {
        grad += (2.0 * hp.lambda) *
                (row_weight_diagonal(P, hp.eps_smooth).asDiagonal() * P);
    }
    return grad;
}

double correlation_penalty(const Eigen::MatrixXd& W, const SymMatrix& Omega, double rho,
                           double omega_ridge) {
    if (Omega.order() != W.cols()) {
        throw ConfigError("correlation_penalty: Omega order " + std::to_string(Omega.order()) +
                          " does not match W columns " + std::to_string(W.cols()));
    }
    const SymMatrix gamma = psd_inv(Omega, omega_ridge);
    return rho * (W * gamma.mat()).cwiseProduct(W).sum();
}

Eigen::MatrixXd correlation_penalty_grad_W(const Eigen::MatrixXd& W, const SymMatrix& Omega,
                                           double rho, double omega_ridge) {
    const SymMatrix gamma = psd_inv(Omega, omega_ridge);
    return 2.0 * rho * W * gamma.mat();
}

}  // namespace mmldf

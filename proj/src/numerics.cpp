#include "mmldf/numerics.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "mmldf/errors.hpp"

namespace mmldf {

SymMatrix::SymMatrix(Eigen::MatrixXd m, const NumericsConfig& cfg) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) {
        throw ConfigError("SymMatrix: matrix is not square (" + std::to_string(m_.rows()) +
                          "x" + std::to_string(m_.cols()) + ")");
    }
    if (!m_.allFinite()) {
        throw NumericError("SymMatrix: non-finite entries");
    }
    const double scale = m_.cwiseAbs().maxCoeff();
    const double asym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
    if (asym > cfg.symmetry_tol * std::max(1.0, scale)) {
        throw ConfigError("SymMatrix: input is not symmetric (max asymmetry " +
                          std::to_string(asym) + ")");
    }
}

SymMatrix SymMatrix::identity(Eigen::Index order) {
    return SymMatrix(Eigen::MatrixXd::Identity(order, order));
}

namespace {

// Unblocked lower Cholesky; kept in-repo so a non-PD failure can report the
// exact pivot that broke down.
Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& a) {
    const Eigen::Index n = a.rows();
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double diag = a(j, j);
        for (Eigen::Index k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > 0.0) || !std::isfinite(diag)) {
            throw NumericError("solve_spd: matrix is not positive definite at pivot " +
                               std::to_string(j));
        }
        const double ljj = std::sqrt(diag);
        l(j, j) = ljj;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

}  // namespace

Eigen::MatrixXd solve_spd(const SymMatrix& M, const Eigen::MatrixXd& rhs) {
    if (rhs.rows() != M.order()) {
        throw ConfigError("solve_spd: rhs has " + std::to_string(rhs.rows()) +
                          " rows, expected " + std::to_string(M.order()));
    }
    const Eigen::MatrixXd l = cholesky_lower(M.mat());
    Eigen::MatrixXd x = l.triangularView<Eigen::Lower>().solve(rhs);
    l.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
    return x;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> sym_eig(const SymMatrix& M) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M.mat());
    if (es.info() != Eigen::Success) {
        throw NumericError("sym_eig: eigendecomposition did not converge");
    }
    // Eigen returns ascending order; flip to descending.
    return {es.eigenvalues().reverse(), es.eigenvectors().rowwise().reverse()};
}

SymMatrix psd_sqrt(const SymMatrix& M, const NumericsConfig& cfg) {
    auto [vals, vecs] = sym_eig(M);
    const double scale = vals.size() > 0 ? vals.cwiseAbs().maxCoeff() : 0.0;
    const double clamp = cfg.eig_clamp_rel * std::max(1.0, scale);
    if (vals.size() > 0 && vals.minCoeff() < -clamp) {
        throw NumericError("psd_sqrt: input is indefinite (min eigenvalue " +
                           std::to_string(vals.minCoeff()) + ")");
    }
    Eigen::VectorXd roots = vals.cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXd s = vecs * roots.asDiagonal() * vecs.transpose();
    return SymMatrix(0.5 * (s + s.transpose()));
}

SymMatrix psd_inv(const SymMatrix& M, double ridge, const NumericsConfig& cfg) {
    auto [vals, vecs] = sym_eig(M);
    const double scale = vals.size() > 0 ? vals.cwiseAbs().maxCoeff() : 0.0;
    const double clamp = cfg.eig_clamp_rel * std::max(1.0, scale);
    if (vals.size() > 0 && vals.minCoeff() < -clamp) {
        throw NumericError("psd_inv: input is indefinite (min eigenvalue " +
                           std::to_string(vals.minCoeff()) + ")");
    }
    Eigen::VectorXd shifted = vals.cwiseMax(0.0).array() + ridge;
    if (shifted.size() == 0 || shifted.minCoeff() <= 0.0) {
        throw NumericError("psd_inv: matrix plus ridge is singular");
    }
    Eigen::MatrixXd inv = vecs * shifted.cwiseInverse().asDiagonal() * vecs.transpose();
    return SymMatrix(0.5 * (inv + inv.transpose()));
}

}  // namespace mmldf

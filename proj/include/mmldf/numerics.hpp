#pragma once

#include <Eigen/Core>
#include <utility>

namespace mmldf {

/// Tolerances for the symmetric dense kernels. Defaults pass double-precision
/// residual checks on matrices up to order ~2000.
struct NumericsConfig {
    /// Relative symmetry tolerance used when constructing a SymMatrix.
    double symmetry_tol = 1e-12;
    /// Eigenvalues above -eig_clamp_rel * ||M|| are treated as rounding noise
    /// and clamped to zero by the PSD operations.
    double eig_clamp_rel = 1e-10;
};

/// Dense symmetric matrix. Construction validates symmetry (relative to the
/// largest absolute entry) and finiteness.
class SymMatrix {
public:
    explicit SymMatrix(Eigen::MatrixXd m, const NumericsConfig& cfg = {});

    static SymMatrix identity(Eigen::Index order);

    Eigen::Index order() const { return m_.rows(); }
    const Eigen::MatrixXd& mat() const { return m_; }

private:
    Eigen::MatrixXd m_;
};

/// Solves M X = rhs for symmetric positive definite M via an unblocked
/// Cholesky factorization. Throws NumericError naming the failing pivot
/// index when M is not positive definite.
Eigen::MatrixXd solve_spd(const SymMatrix& M, const Eigen::MatrixXd& rhs);

/// Eigendecomposition of a symmetric matrix. Eigenvalues are returned in
/// descending order; eigenvector columns match that order and are orthonormal.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> sym_eig(const SymMatrix& M);

/// Symmetric PSD square root: negative eigenvalues within the clamp
/// threshold are set to zero; strongly indefinite input is an error.
SymMatrix psd_sqrt(const SymMatrix& M, const NumericsConfig& cfg = {});

/// (M + ridge I)^{-1} through the eigendecomposition. The zero matrix with
/// ridge = 0 (or any non-positive shifted spectrum) is an error.
SymMatrix psd_inv(const SymMatrix& M, double ridge, const NumericsConfig& cfg = {});

}  // namespace mmldf

#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "mmldf/errors.hpp"
#include "mmldf/numerics.hpp"

using namespace mmldf;

namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) m(i, j) = normal(rng);
    }
    return m;
}

}  // namespace

TEST_SUITE("numerics") {

TEST_CASE("symmatrix rejects asymmetric and non-square input") {
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 0.5, 0.2, 1.0;
    CHECK_THROWS_AS(SymMatrix{bad}, ConfigError);
    CHECK_THROWS_AS(SymMatrix{Eigen::MatrixXd::Zero(2, 3)}, ConfigError);
}

TEST_CASE("solve_spd identity returns rhs") {
    Eigen::MatrixXd rhs(3, 2);
    rhs << 1, 2, 3, 4, 5, 6;
    const Eigen::MatrixXd x = solve_spd(SymMatrix::identity(3), rhs);
    CHECK((x - rhs).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("solve_spd diagonal system") {
    Eigen::MatrixXd m = Eigen::Vector2d(2.0, 4.0).asDiagonal();
    Eigen::VectorXd rhs(2);
    rhs << 2.0, 8.0;
    const Eigen::MatrixXd x = solve_spd(SymMatrix{m}, rhs);
    CHECK(x(0, 0) == doctest::Approx(1.0));
    CHECK(x(1, 0) == doctest::Approx(2.0));
}

TEST_CASE("solve_spd names the failing pivot on non-PD input") {
    try {
        solve_spd(SymMatrix{Eigen::MatrixXd::Zero(2, 2)}, Eigen::VectorXd::Ones(2));
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("pivot 0") != std::string::npos);
    }
}

TEST_CASE("solve_spd residual on random SPD systems") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 3 + trial;
        const Eigen::MatrixXd a = random_matrix(rng, n, n);
        Eigen::MatrixXd m = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
        m = 0.5 * (m + m.transpose());
        const Eigen::MatrixXd rhs = random_matrix(rng, n, 2);
        const Eigen::MatrixXd x = solve_spd(SymMatrix{m}, rhs);
        const double residual = (m * x - rhs).cwiseAbs().maxCoeff();
        CHECK(residual <= 1e-8 * (1.0 + rhs.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("sym_eig on fixed 2x2 cases") {
    auto [vals, vecs] = sym_eig(SymMatrix{Eigen::Vector2d(3.0, 1.0).asDiagonal().toDenseMatrix()});
    CHECK(vals(0) == doctest::Approx(3.0));
    CHECK(vals(1) == doctest::Approx(1.0));

    Eigen::MatrixXd flip(2, 2);
    flip << 0, 1, 1, 0;
    auto [vals2, vecs2] = sym_eig(SymMatrix{flip});
    CHECK(vals2(0) == doctest::Approx(1.0));
    CHECK(vals2(1) == doctest::Approx(-1.0));
}

TEST_CASE("sym_eig reconstructs random symmetric matrices") {
    std::mt19937_64 rng(7);
    const Eigen::MatrixXd a = random_matrix(rng, 5, 5);
    const Eigen::MatrixXd m = 0.5 * (a + a.transpose());
    auto [vals, vecs] = sym_eig(SymMatrix{m});
    const Eigen::MatrixXd rebuilt = vecs * vals.asDiagonal() * vecs.transpose();
    const double scale = m.cwiseAbs().maxCoeff();
    CHECK((m - rebuilt).cwiseAbs().maxCoeff() <= 1e-10 * scale);
    CHECK((vecs.transpose() * vecs - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() <=
          1e-10);
    for (int i = 1; i < vals.size(); ++i) CHECK(vals(i - 1) >= vals(i));
}

TEST_CASE("psd_sqrt fixed values and squaring oracle") {
    const SymMatrix s = psd_sqrt(SymMatrix{Eigen::Vector2d(9.0, 16.0).asDiagonal().toDenseMatrix()});
    CHECK(s.mat()(0, 0) == doctest::Approx(3.0));
    CHECK(s.mat()(1, 1) == doctest::Approx(4.0));

    CHECK((psd_sqrt(SymMatrix::identity(3)).mat() - Eigen::MatrixXd::Identity(3, 3))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);

    std::mt19937_64 rng(23);
    const Eigen::MatrixXd a = random_matrix(rng, 4, 4);
    Eigen::MatrixXd m = a.transpose() * a;
    m = 0.5 * (m + m.transpose());
    const SymMatrix root = psd_sqrt(SymMatrix{m});
    const double residual = (root.mat() * root.mat() - m).cwiseAbs().maxCoeff();
    CHECK(residual <= 1e-8 * (1.0 + m.cwiseAbs().maxCoeff()));
}

TEST_CASE("psd_sqrt scaling property") {
    std::mt19937_64 rng(29);
    const Eigen::MatrixXd a = random_matrix(rng, 3, 3);
    Eigen::MatrixXd m = a.transpose() * a;
    m = 0.5 * (m + m.transpose());
    const double c = 2.5;
    const Eigen::MatrixXd lhs = psd_sqrt(SymMatrix{c * c * m}).mat();
    const Eigen::MatrixXd rhs = c * psd_sqrt(SymMatrix{m}).mat();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + rhs.cwiseAbs().maxCoeff()));
}

TEST_CASE("psd_sqrt rejects indefinite input") {
    Eigen::MatrixXd m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    CHECK_THROWS_AS(psd_sqrt(SymMatrix{m}), NumericError);
}

TEST_CASE("psd_inv fixed values") {
    const SymMatrix inv =
        psd_inv(SymMatrix{Eigen::Vector2d(2.0, 4.0).asDiagonal().toDenseMatrix()}, 0.0);
    CHECK(inv.mat()(0, 0) == doctest::Approx(0.5));
    CHECK(inv.mat()(1, 1) == doctest::Approx(0.25));

    const SymMatrix from_zero = psd_inv(SymMatrix{Eigen::MatrixXd::Zero(3, 3)}, 1.0);
    CHECK((from_zero.mat() - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("psd_inv multiplication oracle") {
    std::mt19937_64 rng(31);
    const Eigen::MatrixXd a = random_matrix(rng, 4, 4);
    Eigen::MatrixXd m = a.transpose() * a;
    m = 0.5 * (m + m.transpose());
    const double ridge = 0.3;
    const SymMatrix inv = psd_inv(SymMatrix{m}, ridge);
    const Eigen::MatrixXd shifted = m + ridge * Eigen::MatrixXd::Identity(4, 4);
    CHECK((shifted * inv.mat() - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("psd_inv rejects the zero matrix without ridge") {
    CHECK_THROWS_AS(psd_inv(SymMatrix{Eigen::MatrixXd::Zero(2, 2)}, 0.0), NumericError);
}

}  // TEST_SUITE

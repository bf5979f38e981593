#include "mmldf/solver.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <string>

#include "mmldf/errors.hpp"
#include "mmldf/random.hpp"

namespace mmldf {

void TrainConfig::validate() const {
    if (!(outer_tol > 0.0)) throw ConfigError("TrainConfig: outer_tol must be > 0");
    if (max_outer_iters < 1) throw ConfigError("TrainConfig: max_outer_iters must be >= 1");
    if (active_set_refreshes < 1) {
        throw ConfigError("TrainConfig: active_set_refreshes must be >= 1");
    }
}

std::pair<ProjectionModel, MarginModel> init_params(Eigen::Index d, int r, int K,
                                                    std::uint64_t seed) {
    if (r < 1 || r >= d) {
        throw ConfigError("init_params: r must satisfy 1 <= r < d");
    }
    if (K < 2) throw ConfigError("init_params: K must be >= 2");
    std::mt19937_64 rng(splitmix64(seed));
    std::normal_distribution<double> normal(0.0, 1.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));

    ProjectionModel proj;
    proj.P.resize(d, r);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < r; ++j) proj.P(i, j) = scale * normal(rng);
    }

    MarginModel margin;
    const int cols = K == 2 ? 1 : K;
    margin.W = Eigen::MatrixXd::Zero(r, cols);
    margin.bias = Eigen::VectorXd::Zero(cols);
    if (K >= 3) {
        margin.Omega = SymMatrix(Eigen::MatrixXd::Identity(K, K) / static_cast<double>(K));
    }
    return {std::move(proj), std::move(margin)};
}

namespace {

std::vector<int> active_on_embedded(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& w, double b) {
    std::vector<int> active;
    const Eigen::VectorXd s = (Z * w).array() + b;
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        if (y(i) * s(i) - Hyperparams::margin_binary <= 0.0) active.push_back(static_cast<int>(i));
    }
    return active;
}

}  // namespace

Eigen::VectorXd solve_w_quadratic_hinge(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                        const Eigen::VectorXd& w_in, double b, double C,
                                        int refreshes) {
    const Eigen::Index r = Z.cols();
    Eigen::VectorXd w = w_in;
    std::vector<int> frozen;
    for (int pass = 0; pass < refreshes; ++pass) {
        std::vector<int> active = active_on_embedded(Z, y, w, b);
        if (active.empty()) return Eigen::VectorXd::Zero(r);
        if (pass > 0 && active == frozen) break;
        frozen = std::move(active);

        Eigen::MatrixXd m = Eigen::MatrixXd::Identity(r, r);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(r);
        for (int i : frozen) {
            m.noalias() += (2.0 * C) * Z.row(i).transpose() * Z.row(i);
            rhs.noalias() += (2.0 * C) * (y(i) - b) * Z.row(i).transpose();
        }
        const SymMatrix sys(0.5 * (m + m.transpose()));
        w = solve_spd(sys, rhs);
        // One step of iterative refinement keeps the frozen-subproblem
        // gradient comfortably inside the 1e-8 contract.
        Eigen::VectorXd residual = rhs - m * w;
        w += solve_spd(sys, residual);
    }
    return w;
}

double solve_b_quadratic_hinge(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& w, double b_in) {
    const std::vector<int> active = active_on_embedded(Z, y, w, b_in);
    if (active.empty()) return b_in;
    double sum = 0.0;
    for (int i : active) sum += y(i) - Z.row(i).dot(w);
    return sum / static_cast<double>(active.size());
}

Eigen::VectorXd update_w_binary(const LabeledDataset& ds, const Eigen::MatrixXd& P,
                                const Eigen::VectorXd& w_in, double b, double C, int refreshes) {
    return solve_w_quadratic_hinge(ds.features * P, binary_targets(ds), w_in, b, C, refreshes);
}

double update_b_binary(const LabeledDataset& ds, const Eigen::MatrixXd& P,
                       const Eigen::VectorXd& w, double b_in) {
    return solve_b_quadratic_hinge(ds.features * P, binary_targets(ds), w, b_in);
}

ProjectionModel update_P(const LabeledDataset& ds, const ProjectionModel& P_in,
                         const MarginModel& margin, const Hyperparams& hp,
                         const ClassPartition& part, const LbfgsConfig& lbfgs_cfg,
                         LbfgsReport* lbfgs_report) {
    const Eigen::Index d = P_in.d();
    const Eigen::Index r = P_in.r();
    const bool binary = ds.num_classes() == 2;
    Hyperparams hp_no_rho = hp;
    hp_no_rho.rho = 0.0;  // the correlation term is constant in P

    LbfgsOracle oracle = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
        const Eigen::MatrixXd p = Eigen::Map<const Eigen::MatrixXd>(x.data(), d, r);
        Eigen::MatrixXd g;
        double value;
        if (binary) {
            const Eigen::VectorXd w = margin.W.col(0);
            const double b = margin.bias(0);
            // J1 drops the 0.5 ||w||^2 constant.
            value = objective_binary(ds, p, w, b, hp, part) - 0.5 * w.squaredNorm();
            g = grad_P_binary(ds, p, w, b, hp, part);
        } else {
            value = objective_multi(ds, p, margin.W, margin.bias, std::nullopt, hp_no_rho, part) -
                    0.5 * margin.W.squaredNorm();
            g = grad_P_multi(ds, p, margin.W, margin.bias, hp, part);
        }
        grad = Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
        return value;
    };

    const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(P_in.P.data(), d * r);
    auto [x_final, report] = lbfgs_minimize(oracle, x0, lbfgs_cfg);
    if (lbfgs_report) *lbfgs_report = std::move(report);

    ProjectionModel out;
    out.P = Eigen::Map<const Eigen::MatrixXd>(x_final.data(), d, r);
    return out;
}

std::pair<Eigen::VectorXd, double> update_block_multi(const LabeledDataset& ds,
                                                      const Eigen::MatrixXd& P,
                                                      const Eigen::MatrixXd& W,
                                                      const Eigen::VectorXd& bias,
                                                      const SymMatrix& Omega,
                                                      const Hyperparams& hp, int m) {
    const Eigen::Index r = P.cols();
    const int k = ds.num_classes();
    if (k < 3) throw ConfigError("update_block_multi: requires K >= 3");
    if (m < 0 || m >= k) throw ConfigError("update_block_multi: class index out of range");

    const Eigen::MatrixXd gamma = psd_inv(Omega, hp.omega_ridge).mat();
    const Eigen::MatrixXd Z = ds.features * P;
    const Eigen::MatrixXd scores = (Z * W).rowwise() + bias.transpose();

    // Frozen active pairs involving class m, reduced to (a^T u - c)^2 terms
    // with u = (w_m; b_m) and a = (z_i; 1).
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(r + 1, r + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(r + 1);
    long terms = 0;
    Eigen::VectorXd a(r + 1);
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        const int yi = ds.labels[static_cast<size_t>(i)];
        for (int other = 0; other < k; ++other) {
            if (other == yi) continue;
            const double gap = scores(i, yi) - scores(i, other) - Hyperparams::margin_multi;
            if (gap >= 0.0) continue;
            double c;
            if (yi == m) {
                c = scores(i, other) + Hyperparams::margin_multi;  // m is the true class
            } else if (other == m) {
                c = scores(i, yi) - Hyperparams::margin_multi;  // m is the violated class
            } else {
                continue;
            }
            a.head(r) = Z.row(i).transpose();
            a(r) = 1.0;
            h.noalias() += (2.0 * hp.C) * a * a.transpose();
            rhs.noalias() += (2.0 * hp.C) * c * a;
            ++terms;
        }
    }

    const double ridge_coeff = 1.0 + 2.0 * hp.rho * gamma(m, m);
    h.topLeftCorner(r, r) += ridge_coeff * Eigen::MatrixXd::Identity(r, r);
    Eigen::VectorXd cross = Eigen::VectorXd::Zero(r);
    for (int j = 0; j < k; ++j) {
        if (j != m) cross += gamma(m, j) * W.col(j);
    }
    rhs.head(r) -= 2.0 * hp.rho * cross;

    if (terms == 0) {
        // b_m has no curvature; hold it and solve the reduced system, which
        // is diagonal here.
        return {rhs.head(r) / ridge_coeff, bias(m)};
    }
    try {
        const SymMatrix sys(0.5 * (h + h.transpose()));
        Eigen::VectorXd u = solve_spd(sys, rhs);
        Eigen::VectorXd residual = rhs - h * u;
        u += solve_spd(sys, residual);
        return {u.head(r), u(r)};
    } catch (const NumericError&) {
        // Singular in the b_m coordinate: fix b_m and solve for w_m alone.
        const Eigen::MatrixXd hww = h.topLeftCorner(r, r);
        const Eigen::VectorXd rw = rhs.head(r) - h.topRightCorner(r, 1) * bias(m);
        const SymMatrix sys(0.5 * (hww + hww.transpose()));
        return {solve_spd(sys, rw), bias(m)};
    }
}

SymMatrix update_omega(const Eigen::MatrixXd& W, double omega_ridge) {
    if (!W.allFinite()) throw NumericError("update_omega: W has non-finite entries");
    const Eigen::Index k = W.cols();
    Eigen::MatrixXd gram = W.transpose() * W;
    gram += omega_ridge * Eigen::MatrixXd::Identity(k, k);
    const SymMatrix root = psd_sqrt(SymMatrix(0.5 * (gram + gram.transpose())));
    const double trace = root.mat().trace();
    if (!(trace > 0.0)) {
        throw NumericError("update_omega: zero trace; use a positive ridge");
    }
    return SymMatrix(root.mat() / trace);
}

namespace {

class PhaseTimer {
public:
    explicit PhaseTimer(double& sink)
        : sink_(sink), start_(std::chrono::steady_clock::now()) {}
    ~PhaseTimer() {
        sink_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    double& sink_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace

FitResult fit(const LabeledDataset& ds, const Hyperparams& hp, const TrainConfig& train_cfg,
              const LbfgsConfig& lbfgs_cfg) {
    hp.validate(ds.d());
    train_cfg.validate();
    lbfgs_cfg.validate();
    const int k = ds.num_classes();
    if (k < 2) throw ConfigError("fit: dataset must have at least 2 classes");

    const ClassPartition part = build_partition(ds.labels);
    if (part.num_classes() != k) {
        throw ConfigError("fit: labels reference fewer classes than label_map");
    }
    for (int c = 0; c < k; ++c) {
        if (part.sizes[c] == 0) {
            throw ConfigError("fit: class " + std::to_string(c) + " has no training samples");
        }
    }

    const bool binary = (k == 2);
    auto [proj, margin] = init_params(ds.d(), hp.r, k, train_cfg.seed);
    FitResult result;
    TrainReport& report = result.report;

    auto full_objective = [&](const ProjectionModel& p, const MarginModel& mm) {
        ++report.objective_evals;
        if (binary) {
            return objective_binary(ds, p.P, mm.W.col(0), mm.bias(0), hp, part);
        }
        return objective_multi(ds, p.P, mm.W, mm.bias, mm.Omega, hp, part);
    };

    double j_current = full_objective(proj, margin);
    report.objective_trace.push_back(j_current);

    // Applies a candidate margin-block change under the safeguard: a change
    // that raises the full objective is rolled back and logged.
    auto try_accept = [&](MarginModel& candidate) {
        const double j_try = full_objective(proj, candidate);
        if (train_cfg.safeguard && j_try > j_current) {
            ++report.safeguard_rejections;
            return false;
        }
        margin = std::move(candidate);
        j_current = j_try;
        return true;
    };

    for (int t = 1; t <= train_cfg.max_outer_iters; ++t) {
        const double j_before = j_current;

        if (binary) {
            {
                PhaseTimer timer(report.seconds_w);
                MarginModel candidate = margin;
                candidate.W.col(0) = update_w_binary(ds, proj.P, margin.W.col(0), margin.bias(0),
                                                     hp.C, train_cfg.active_set_refreshes);
                try_accept(candidate);
            }
            {
                PhaseTimer timer(report.seconds_b);
                MarginModel candidate = margin;
                candidate.bias(0) = update_b_binary(ds, proj.P, margin.W.col(0), margin.bias(0));
                try_accept(candidate);
            }
        } else {
            {
                PhaseTimer timer(report.seconds_w);
                for (int m = 0; m < k; ++m) {
                    MarginModel candidate = margin;
                    auto [wm, bm] = update_block_multi(ds, proj.P, margin.W, margin.bias,
                                                       *margin.Omega, hp, m);
                    candidate.W.col(m) = wm;
                    candidate.bias(m) = bm;
                    try_accept(candidate);
                }
            }
            {
                PhaseTimer timer(report.seconds_omega);
                MarginModel candidate = margin;
                candidate.Omega = update_omega(margin.W, hp.omega_ridge);
                try_accept(candidate);
            }
        }

        {
            PhaseTimer timer(report.seconds_p);
            LbfgsReport lbfgs_report;
            ProjectionModel p_new = update_P(ds, proj, margin, hp, part, lbfgs_cfg, &lbfgs_report);
            report.lbfgs_iters += lbfgs_report.iterations;
            report.gradient_evals += lbfgs_report.gradient_evals;
            report.objective_evals += lbfgs_report.value_evals;
            const double j_try = full_objective(p_new, margin);
            if (train_cfg.safeguard && j_try > j_current) {
                ++report.safeguard_rejections;
            } else {
                proj = std::move(p_new);
                j_current = j_try;
            }
        }

        report.objective_trace.push_back(j_current);
        if (binary) {
            report.active_set_sizes.push_back(static_cast<long>(
                active_set_binary(ds, proj.P, margin.W.col(0), margin.bias(0)).size()));
        } else {
            report.active_set_sizes.push_back(static_cast<long>(
                active_set_multi(ds, proj.P, margin.W, margin.bias).size()));
        }
        report.outer_iters = t;

        if (std::fabs(j_before - j_current) / std::max(1.0, std::fabs(j_before)) <=
            train_cfg.outer_tol) {
            report.converged = true;
            break;
        }
    }

    result.projection = std::move(proj);
    result.margin = std::move(margin);
    return result;
}

Eigen::MatrixXd transform(const ProjectionModel& projection, const Eigen::MatrixXd& X) {
    if (X.cols() != projection.d()) {
        throw ConfigError("transform: input has " + std::to_string(X.cols()) +
                          " columns, projection expects " + std::to_string(projection.d()));
    }
    return X * projection.P;
}

}  // namespace mmldf

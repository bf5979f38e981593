#include "mmldf/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include "mmldf/errors.hpp"
#include "mmldf/random.hpp"

namespace mmldf {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::no_rho: return "no_rho";
        case Variant::no_eta_no_rho: return "no_eta_no_rho";
        case Variant::mmpp: return "mmpp";
    }
    return "unknown";
}

Variant variant_from_string(const std::string& name) {
    if (name == "full") return Variant::full;
    if (name == "no_rho") return Variant::no_rho;
    if (name == "no_eta_no_rho") return Variant::no_eta_no_rho;
    if (name == "mmpp") return Variant::mmpp;
    throw ConfigError("unknown variant '" + name +
                      "' (expected full|no_rho|no_eta_no_rho|mmpp)");
}

Hyperparams apply_variant(Hyperparams hp, Variant v) {
    switch (v) {
        case Variant::full:
            break;
        case Variant::no_rho:
            hp.rho = 0.0;
            break;
        case Variant::no_eta_no_rho:
            hp.eta = 0.0;
            hp.rho = 0.0;
            break;
        case Variant::mmpp:
            hp.lambda = 0.0;
            hp.eta = 0.0;
            hp.rho = 0.0;
            break;
    }
    return hp;
}

void ProtocolSpec::validate(const LabeledDataset& ds) const {
    if (dims.empty()) throw ConfigError("ProtocolSpec: dims must be nonempty");
    for (int dim : dims) {
        if (dim < 1 || dim >= ds.d()) {
            throw ConfigError("ProtocolSpec: dim " + std::to_string(dim) +
                              " must be in [1, d) with d = " + std::to_string(ds.d()));
        }
    }
    if (trials < 1) throw ConfigError("ProtocolSpec: trials must be >= 1");
    if (train_count < 1 || train_count >= ds.n()) {
        throw ConfigError("ProtocolSpec: train_count must be in (0, n)");
    }
    if (!(svm_C > 0.0)) throw ConfigError("ProtocolSpec: svm_C must be > 0");
    if (lambda < 0.0) throw ConfigError("ProtocolSpec: lambda must be >= 0");
}

namespace {

int max_threads(size_t tasks) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("MMLDF_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(cap));
    }
    return static_cast<int>(std::min<size_t>(hw, tasks));
}

// Runs body(i) for i in [0, count) on up to MMLDF_THREADS workers. Tasks
// write to disjoint slots, so scheduling never affects the result.
template <typename Body>
void parallel_for(size_t count, const Body& body) {
    const int workers = max_threads(count);
    if (workers <= 1) {
        for (size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(run);
    for (auto& thread : pool) thread.join();
    if (error) std::rethrow_exception(error);
}

Eigen::VectorXd signed_targets(const std::vector<int>& labels, int positive_class) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(labels.size()));
    for (size_t i = 0; i < labels.size(); ++i) {
        y(static_cast<Eigen::Index>(i)) = labels[i] == positive_class ? 1.0 : -1.0;
    }
    return y;
}

double hinge_objective(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& w, double b, double C) {
    const Eigen::VectorXd s = (Z * w).array() + b;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < Z.rows(); ++i) loss += hinge_binary(s(i), y(i));
    return 0.5 * w.squaredNorm() + C * loss;
}

// Trains one signed-target quadratic-hinge classifier. Alternates the
// closed-form w and b updates under a monotonicity guard, then falls back to
// L-BFGS on the smooth convex objective if the gradient is not yet tight.
std::pair<Eigen::VectorXd, double> train_signed_hinge(const Eigen::MatrixXd& Z,
                                                      const Eigen::VectorXd& y, double C) {
    const Eigen::Index r = Z.cols();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(r);
    double b = 0.0;
    double j = hinge_objective(Z, y, w, b, C);
    for (int iter = 0; iter < 100; ++iter) {
        const double j_before = j;
        Eigen::VectorXd w_try = solve_w_quadratic_hinge(Z, y, w, b, C, 10);
        double j_try = hinge_objective(Z, y, w_try, b, C);
        if (j_try <= j) {
            w = std::move(w_try);
            j = j_try;
        }
        const double b_try = solve_b_quadratic_hinge(Z, y, w, b);
        j_try = hinge_objective(Z, y, w, b_try, C);
        if (j_try <= j) {
            b = b_try;
            j = j_try;
        }
        if (j_before - j <= 1e-14 * std::max(1.0, std::fabs(j_before))) break;
    }

    auto gradient_norm = [&](const Eigen::VectorXd& wv, double bv) {
        const Eigen::VectorXd s = (Z * wv).array() + bv;
        Eigen::VectorXd gw = wv;
        double gb = 0.0;
        for (Eigen::Index i = 0; i < Z.rows(); ++i) {
            if (y(i) * s(i) - 1.0 <= 0.0) {
                gw.noalias() += (2.0 * C) * (s(i) - y(i)) * Z.row(i).transpose();
                gb += 2.0 * C * (s(i) - y(i));
            }
        }
        return std::max(gw.lpNorm<Eigen::Infinity>(), std::fabs(gb));
    };

    if (gradient_norm(w, b) > 1e-6) {
        LbfgsOracle oracle = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
            const Eigen::VectorXd wv = x.head(r);
            const double bv = x(r);
            const Eigen::VectorXd s = (Z * wv).array() + bv;
            Eigen::VectorXd gw = wv;
            double gb = 0.0;
            double loss = 0.0;
            for (Eigen::Index i = 0; i < Z.rows(); ++i) {
                const double v = y(i) * s(i) - 1.0;
                if (v <= 0.0) {
                    loss += v * v;
                    gw.noalias() += (2.0 * C) * (s(i) - y(i)) * Z.row(i).transpose();
                    gb += 2.0 * C * (s(i) - y(i));
                }
            }
            grad.resize(r + 1);
            grad.head(r) = gw;
            grad(r) = gb;
            return 0.5 * wv.squaredNorm() + C * loss;
        };
        Eigen::VectorXd x0(r + 1);
        x0.head(r) = w;
        x0(r) = b;
        LbfgsConfig cfg;
        cfg.grad_tol = 1e-8;
        cfg.max_iters = 500;
        auto [x_final, report] = lbfgs_minimize(oracle, x0, cfg);
        if (hinge_objective(Z, y, x_final.head(r), x_final(r), C) <= j) {
            w = x_final.head(r);
            b = x_final(r);
        }
    }
    return {std::move(w), b};
}

}  // namespace

LinearSvmModel train_linear_svm(const Eigen::MatrixXd& Z, const std::vector<int>& labels, int K,
                                double C) {
    if (static_cast<Eigen::Index>(labels.size()) != Z.rows()) {
        throw ConfigError("train_linear_svm: labels and Z disagree on sample count");
    }
    if (K < 2) throw ConfigError("train_linear_svm: need at least 2 classes");
    if (!(C > 0.0)) throw ConfigError("train_linear_svm: C must be > 0");
    if (labels.empty()) throw ConfigError("train_linear_svm: empty input");
    bool mixed = false;
    for (int label : labels) {
        if (label < 0 || label >= K) throw ConfigError("train_linear_svm: label out of range");
        mixed = mixed || label != labels[0];
    }
    if (!mixed) throw ConfigError("train_linear_svm: single-class input");

    LinearSvmModel model;
    model.num_classes = K;
    if (K == 2) {
        auto [w, b] = train_signed_hinge(Z, signed_targets(labels, 1), C);
        model.W = w;
        model.bias = Eigen::VectorXd::Constant(1, b);
    } else {
        model.W.resize(Z.cols(), K);
        model.bias.resize(K);
        for (int m = 0; m < K; ++m) {
            auto [w, b] = train_signed_hinge(Z, signed_targets(labels, m), C);
            model.W.col(m) = w;
            model.bias(m) = b;
        }
    }
    return model;
}

std::vector<int> predict(const LinearSvmModel& model, const Eigen::MatrixXd& Z) {
    if (Z.cols() != model.W.rows()) {
        throw ConfigError("predict: feature dimension mismatch");
    }
    std::vector<int> out(static_cast<size_t>(Z.rows()));
    if (model.num_classes == 2) {
        const Eigen::VectorXd s = (Z * model.W.col(0)).array() + model.bias(0);
        for (Eigen::Index i = 0; i < Z.rows(); ++i) out[static_cast<size_t>(i)] = s(i) >= 0.0;
    } else {
        const Eigen::MatrixXd s = (Z * model.W).rowwise() + model.bias.transpose();
        for (Eigen::Index i = 0; i < Z.rows(); ++i) {
            Eigen::Index best;
            s.row(i).maxCoeff(&best);
            out[static_cast<size_t>(i)] = static_cast<int>(best);
        }
    }
    return out;
}

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.size() != labels.size()) {
        throw ConfigError("accuracy: length mismatch");
    }
    if (predictions.empty()) throw ConfigError("accuracy: empty input");
    long correct = 0;
    for (size_t i = 0; i < predictions.size(); ++i) correct += predictions[i] == labels[i];
    return 100.0 * static_cast<double>(correct) / static_cast<double>(predictions.size());
}

namespace {

// One protocol cell: split, standardize, fit, embed, downstream SVM.
double protocol_trial(const LabeledDataset& ds, const Hyperparams& hp, const ProtocolSpec& spec,
                      int dim, int trial) {
    auto [train, test] = split(ds, spec.train_count, derive_seed(spec.seed, trial));
    if (spec.standardize) {
        const StandardizationStats stats = fit_standardize(train);
        train = apply_standardize(train, stats);
        test = apply_standardize(test, stats);
    }
    Hyperparams hp_run = hp;
    hp_run.r = dim;
    TrainConfig train_cfg = spec.train_cfg;
    train_cfg.seed = derive_seed(spec.seed, trial, static_cast<std::uint64_t>(dim));
    const FitResult result = fit(train, hp_run, train_cfg, spec.lbfgs_cfg);
    const Eigen::MatrixXd z_train = transform(result.projection, train.features);
    const Eigen::MatrixXd z_test = transform(result.projection, test.features);
    const LinearSvmModel svm = train_linear_svm(z_train, train.labels, train.num_classes(),
                                                spec.svm_C);
    return accuracy(predict(svm, z_test), test.labels);
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    return {mean, std::sqrt(var / n)};
}

}  // namespace

AccuracyTable run_protocol(const LabeledDataset& ds, const Hyperparams& hp,
                           const ProtocolSpec& spec, Variant variant) {
    spec.validate(ds);
    const Hyperparams hp_variant = apply_variant(hp, variant);
    const size_t cells = spec.dims.size() * static_cast<size_t>(spec.trials);
    std::vector<double> acc(cells, 0.0);
    parallel_for(cells, [&](size_t cell) {
        const int dim = spec.dims[cell / static_cast<size_t>(spec.trials)];
        const int trial = static_cast<int>(cell % static_cast<size_t>(spec.trials));
        acc[cell] = protocol_trial(ds, hp_variant, spec, dim, trial);
    });

    AccuracyTable table;
    for (size_t di = 0; di < spec.dims.size(); ++di) {
        std::vector<double> per_dim(acc.begin() + static_cast<long>(di * spec.trials),
                                    acc.begin() + static_cast<long>((di + 1) * spec.trials));
        const auto [mean, sd] = mean_std(per_dim);
        AccuracyRow row;
        row.variant = variant_name(variant);
        row.dim = spec.dims[di];
        row.mean_acc = mean;
        row.std_acc = sd;
        row.trials = spec.trials;
        row.seed = spec.seed;
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::tuple<double, double, double> cross_validate(const LabeledDataset& train_ds,
                                                  const ProtocolSpec& spec) {
    if (spec.cv_C.empty() || spec.cv_eta.empty() || spec.cv_rho.empty()) {
        throw ConfigError("cross_validate: empty grid");
    }
    if (spec.dims.empty()) throw ConfigError("cross_validate: dims must be nonempty");
    const int cv_dim = spec.dims.front();
    const int k = train_ds.num_classes();
    constexpr int kFolds = 3;

    // Stratified fold assignment, fixed by spec.seed.
    std::vector<int> fold_of(static_cast<size_t>(train_ds.n()), 0);
    {
        const ClassPartition part = build_partition(train_ds.labels);
        for (int c = 0; c < part.num_classes(); ++c) {
            std::vector<int> order = part.groups[static_cast<size_t>(c)];
            std::mt19937_64 rng(derive_seed(spec.seed, 0xcf01d, static_cast<std::uint64_t>(c)));
            std::shuffle(order.begin(), order.end(), rng);
            for (size_t i = 0; i < order.size(); ++i) {
                fold_of[static_cast<size_t>(order[i])] = static_cast<int>(i % kFolds);
            }
        }
    }

    auto fold_subsets = [&](int fold) {
        std::vector<int> fit_idx, valid_idx;
        for (size_t i = 0; i < fold_of.size(); ++i) {
            (fold_of[i] == fold ? valid_idx : fit_idx).push_back(static_cast<int>(i));
        }
        return std::make_pair(fit_idx, valid_idx);
    };
    auto subset = [&](const std::vector<int>& idx) {
        LabeledDataset out;
        out.features.resize(static_cast<Eigen::Index>(idx.size()), train_ds.d());
        out.labels.resize(idx.size());
        out.label_map = train_ds.label_map;
        for (size_t i = 0; i < idx.size(); ++i) {
            out.features.row(static_cast<Eigen::Index>(i)) = train_ds.features.row(idx[i]);
            out.labels[i] = train_ds.labels[static_cast<size_t>(idx[i])];
        }
        return out;
    };

    std::vector<int> usable_folds;
    for (int fold = 0; fold < kFolds; ++fold) {
        auto [fit_idx, valid_idx] = fold_subsets(fold);
        if (fit_idx.empty() || valid_idx.empty()) continue;
        std::vector<bool> present(static_cast<size_t>(k), false);
        for (int i : fit_idx) present[static_cast<size_t>(train_ds.labels[i])] = true;
        if (std::find(present.begin(), present.end(), false) != present.end()) continue;
        usable_folds.push_back(fold);
    }
    if (usable_folds.empty()) {
        throw ConfigError("cross_validate: every fold misses a class");
    }

    struct GridPoint {
        double C, eta, rho;
    };
    std::vector<GridPoint> grid;
    for (double c : spec.cv_C) {
        for (double eta : spec.cv_eta) {
            for (double rho : spec.cv_rho) grid.push_back({c, eta, rho});
        }
    }

    std::vector<double> scores(grid.size(), 0.0);
    parallel_for(grid.size(), [&](size_t g) {
        Hyperparams hp;
        hp.C = grid[g].C;
        hp.eta = grid[g].eta;
        hp.rho = k == 2 ? 0.0 : grid[g].rho;
        hp.lambda = spec.lambda;
        hp.r = cv_dim;
        double total = 0.0;
        for (int fold : usable_folds) {
            auto [fit_idx, valid_idx] = fold_subsets(fold);
            LabeledDataset fit_ds = subset(fit_idx);
            LabeledDataset valid_ds = subset(valid_idx);
            if (spec.standardize) {
                const StandardizationStats stats = fit_standardize(fit_ds);
                fit_ds = apply_standardize(fit_ds, stats);
                valid_ds = apply_standardize(valid_ds, stats);
            }
            TrainConfig train_cfg = spec.train_cfg;
            train_cfg.seed = derive_seed(spec.seed, 0xcf02, static_cast<std::uint64_t>(fold));
            const FitResult result = fit(fit_ds, hp, train_cfg, spec.lbfgs_cfg);
            const LinearSvmModel svm =
                train_linear_svm(transform(result.projection, fit_ds.features), fit_ds.labels,
                                 k, spec.svm_C);
            total += accuracy(predict(svm, transform(result.projection, valid_ds.features)),
                              valid_ds.labels);
        }
        scores[g] = total / static_cast<double>(usable_folds.size());
    });

    size_t best = 0;
    for (size_t g = 1; g < grid.size(); ++g) {
        const auto as_tuple = [](const GridPoint& p) { return std::tie(p.C, p.eta, p.rho); };
        if (scores[g] > scores[best] ||
            (scores[g] == scores[best] && as_tuple(grid[g]) < as_tuple(grid[best]))) {
            best = g;
        }
    }
    return {grid[best].C, grid[best].eta, grid[best].rho};
}

Eigen::VectorXd row_norm_profile(const Eigen::MatrixXd& P) {
    return P.rowwise().norm();
}

Eigen::MatrixXd correlation_matrix(const SymMatrix& Omega) {
    const Eigen::Index k = Omega.order();
    const Eigen::MatrixXd& m = Omega.mat();
    for (Eigen::Index i = 0; i < k; ++i) {
        if (!(m(i, i) > 0.0)) {
            throw NumericError("correlation_matrix: non-positive diagonal entry at index " +
                               std::to_string(i));
        }
    }
    Eigen::MatrixXd out(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            out(i, j) = m(i, j) / std::sqrt(m(i, i) * m(j, j));
        }
    }
    return out;
}

SweepParam sweep_param_from_string(const std::string& name) {
    if (name == "C") return SweepParam::C;
    if (name == "lambda") return SweepParam::lambda;
    if (name == "eta") return SweepParam::eta;
    if (name == "rho") return SweepParam::rho;
    throw ConfigError("unknown sweep parameter '" + name + "' (expected C|lambda|eta|rho)");
}

AccuracyTable sensitivity_sweep(const LabeledDataset& ds, const Hyperparams& hp,
                                const ProtocolSpec& spec, SweepParam param,
                                const std::vector<double>& values) {
    if (values.empty()) throw ConfigError("sensitivity_sweep: values must be nonempty");
    AccuracyTable table;
    for (double value : values) {
        Hyperparams hp_run = hp;
        switch (param) {
            case SweepParam::C: hp_run.C = value; break;
            case SweepParam::lambda: hp_run.lambda = value; break;
            case SweepParam::eta: hp_run.eta = value; break;
            case SweepParam::rho: hp_run.rho = value; break;
        }
        AccuracyTable part = run_protocol(ds, hp_run, spec, Variant::full);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", value);
        for (auto& row : part.rows) {
            row.param_value = buf;
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

}  // namespace mmldf

#include "mmldf/cli.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "mmldf/errors.hpp"
#include "mmldf/eval.hpp"
#include "mmldf/model_io.hpp"
#include "mmldf/objective.hpp"
#include "mmldf/random.hpp"
#include "mmldf/solver.hpp"

namespace mmldf::cli {

namespace {

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
}

std::vector<std::string> split_list(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) out.push_back(item);
    return out;
}

long parse_long(const std::string& s, const std::string& what) {
    long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ConfigError("invalid " + what + " '" + s + "'");
    }
    return v;
}

double parse_num(const std::string& s, const std::string& what) {
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw ConfigError("invalid " + what + " '" + s + "'");
    }
    return v;
}

}  // namespace

LabeledDataset load_dataset(const DataOptions& opts) {
    std::ifstream in(opts.path, std::ios::binary);
    if (!in) throw ConfigError("cannot open dataset '" + opts.path + "'");
    if (opts.format == "libsvm") {
        std::optional<int> expected;
        if (opts.expected_dim > 0) expected = opts.expected_dim;
        return parse_libsvm(in, expected);
    }
    if (opts.format == "csv") {
        return parse_csv(in, opts.label_col, opts.has_header);
    }
    throw ConfigError("unknown format '" + opts.format + "' (expected libsvm|csv)");
}

std::vector<int> parse_dims(const std::string& text) {
    std::vector<int> dims;
    if (text.find(':') != std::string::npos) {
        const auto parts = split_list(text, ':');
        if (parts.size() != 3) {
            throw ConfigError("dims range must be start:stop:step, got '" + text + "'");
        }
        const long start = parse_long(parts[0], "dims start");
        const long stop = parse_long(parts[1], "dims stop");
        const long step = parse_long(parts[2], "dims step");
        if (start < 1 || step < 1 || stop < start) {
            throw ConfigError("dims range must satisfy 1 <= start <= stop, step >= 1");
        }
        for (long v = start; v <= stop; v += step) dims.push_back(static_cast<int>(v));
    } else {
        for (const auto& item : split_list(text, ',')) {
            dims.push_back(static_cast<int>(parse_long(item, "dim")));
        }
    }
    if (dims.empty()) throw ConfigError("dims list is empty");
    return dims;
}

SynthSpec parse_synth_spec(const std::string& text) {
    SynthSpec spec;
    for (const auto& item : split_list(text, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("synth spec entries must be key=value, got '" + item + "'");
        }
        const std::string key = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        if (key == "classes") spec.classes = static_cast<int>(parse_long(value, key));
        else if (key == "per_class") spec.samples_per_class = static_cast<int>(parse_long(value, key));
        else if (key == "informative") spec.informative_dims = static_cast<int>(parse_long(value, key));
        else if (key == "noise") spec.noise_dims = static_cast<int>(parse_long(value, key));
        else if (key == "redundant") spec.redundant_dims = static_cast<int>(parse_long(value, key));
        else if (key == "separation") spec.class_separation = parse_num(value, key);
        else if (key == "noise_scale") spec.noise_scale = parse_num(value, key);
        else throw ConfigError("unknown synth spec key '" + key + "'");
    }
    spec.validate();
    return spec;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text, ',')) out.push_back(parse_num(item, "value"));
    if (out.empty()) throw ConfigError("value list is empty");
    return out;
}

int run_train(const TrainOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const LabeledDataset raw = load_dataset(opts.data);
        if (opts.dim < 1 || opts.dim >= raw.d()) {
            throw ConfigError("r must be < d (got r=" + std::to_string(opts.dim) +
                              ", d=" + std::to_string(raw.d()) + ")");
        }
        Hyperparams hp;
        hp.C = opts.C;
        hp.eta = opts.eta;
        hp.lambda = opts.lambda;
        hp.rho = opts.rho;
        hp.r = opts.dim;
        hp.validate(raw.d());

        if (opts.cv) {
            ProtocolSpec spec;
            spec.dims = {opts.dim};
            spec.trials = 1;
            spec.train_count = static_cast<int>(raw.n()) - 1;
            spec.seed = opts.seed;
            spec.svm_C = opts.svm_C;
            spec.lambda = opts.lambda;
            spec.standardize = opts.standardize;
            spec.train_cfg.max_outer_iters = opts.max_iters;
            spec.train_cfg.outer_tol = opts.tol;
            const auto [best_c, best_eta, best_rho] = cross_validate(raw, spec);
            hp.C = best_c;
            hp.eta = best_eta;
            hp.rho = raw.num_classes() > 2 ? best_rho : 0.0;
            out << "cross-validation selected C=" << best_c << " eta=" << best_eta
                << " rho=" << hp.rho << '\n';
        }

        LabeledDataset ds = raw;
        std::optional<StandardizationStats> stats;
        if (opts.standardize) {
            stats = fit_standardize(raw);
            ds = apply_standardize(raw, *stats);
        }

        TrainConfig train_cfg;
        train_cfg.seed = opts.seed;
        train_cfg.max_outer_iters = opts.max_iters;
        train_cfg.outer_tol = opts.tol;
        const FitResult result = fit(ds, hp, train_cfg);

        ModelFile model;
        model.mode = ds.num_classes() == 2 ? "binary" : "multiclass";
        model.d = ds.d();
        model.r = hp.r;
        model.K = ds.num_classes();
        model.P = result.projection.P;
        model.W = result.margin.W;
        model.bias = result.margin.bias;
        if (result.margin.Omega) model.Omega = result.margin.Omega->mat();
        model.label_map = ds.label_map;
        model.standardization = stats;
        model.hyperparams = hp;
        model.seed = opts.seed;
        model.dataset_digest = dataset_digest(raw);
        model.timestamp = provenance_timestamp();
        save_model(model, opts.out_path);

        const std::string report_path =
            opts.report_path.empty() ? opts.out_path + ".report.json" : opts.report_path;
        write_train_report(result.report, hp, opts.seed, report_path);

        out << "trained " << model.mode << " model: n=" << ds.n() << " d=" << ds.d()
            << " K=" << model.K << " r=" << hp.r << '\n';
        out << "final objective " << result.report.objective_trace.back() << " after "
            << result.report.outer_iters << " outer iterations ("
            << (result.report.converged ? "converged" : "iteration limit") << ")\n";
        out << "model written to " << opts.out_path << ", report to " << report_path << '\n';
        return kExitOk;
    });
}

int run_transform(const TransformOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ModelFile model = load_model(opts.model_path);
        LabeledDataset ds = load_dataset(opts.data);
        if (ds.d() != model.d) {
            throw ConfigError("dimension mismatch: data has d=" + std::to_string(ds.d()) +
                              ", model expects d=" + std::to_string(model.d));
        }
        if (model.standardization) ds = apply_standardize(ds, *model.standardization);
        const Eigen::MatrixXd z = ds.features * model.P;

        std::ofstream file(opts.out_path, std::ios::binary);
        if (!file) throw ConfigError("cannot open '" + opts.out_path + "' for writing");
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
            for (Eigen::Index j = 0; j < z.cols(); ++j) {
                if (j > 0) file << ',';
                file << format_double(z(i, j));
            }
            file << '\n';
        }
        if (!file.good()) throw ConfigError("failed writing '" + opts.out_path + "'");
        out << "wrote " << z.rows() << " x " << z.cols() << " embedding to " << opts.out_path
            << '\n';
        return kExitOk;
    });
}

int run_evaluate(const EvaluateOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ModelFile model = load_model(opts.model_path);
        LabeledDataset train = load_dataset(opts.train);
        LabeledDataset test = load_dataset(opts.test);
        if (train.d() != model.d || test.d() != model.d) {
            throw ConfigError("dimension mismatch: model expects d=" + std::to_string(model.d) +
                              ", got train d=" + std::to_string(train.d()) + ", test d=" +
                              std::to_string(test.d()));
        }
        test = align_labels(test, train.label_map);
        if (model.standardization) {
            train = apply_standardize(train, *model.standardization);
            test = apply_standardize(test, *model.standardization);
        }
        const Eigen::MatrixXd z_train = train.features * model.P;
        const Eigen::MatrixXd z_test = test.features * model.P;
        const LinearSvmModel svm =
            train_linear_svm(z_train, train.labels, train.num_classes(), opts.svm_C);
        const double acc = accuracy(predict(svm, z_test), test.labels);

        const std::string report_path =
            opts.report_path.empty() ? opts.model_path + ".eval.json" : opts.report_path;
        nlohmann::json j;
        j["accuracy"] = acc;
        j["n_train"] = train.n();
        j["n_test"] = test.n();
        j["r"] = model.r;
        j["svm_C"] = opts.svm_C;
        j["model"] = opts.model_path;
        std::ofstream file(report_path, std::ios::binary);
        if (!file) throw ConfigError("cannot open '" + report_path + "' for writing");
        file << j.dump(2) << '\n';

        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.1f", acc);
        out << "accuracy: " << buf << '\n';
        return kExitOk;
    });
}

int run_benchmark(const BenchmarkOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        LabeledDataset ds;
        if (!opts.synth_spec.empty()) {
            ds = synth_blobs(parse_synth_spec(opts.synth_spec), opts.synth_seed);
        } else if (!opts.data.path.empty()) {
            ds = load_dataset(opts.data);
        } else {
            throw ConfigError("benchmark requires --data or --synth");
        }

        ProtocolSpec spec;
        spec.dims = parse_dims(opts.dims);
        spec.trials = opts.trials;
        spec.seed = opts.seed;
        spec.svm_C = opts.svm_C;
        spec.lambda = opts.lambda;
        spec.standardize = !opts.no_standardize;
        spec.train_cfg.max_outer_iters = opts.max_outer_iters;
        spec.train_count = opts.train_count;
        if (spec.train_count == 0) {
            const int k = ds.num_classes();
            spec.train_count = std::max<int>(k, static_cast<int>(ds.n() / 5));
            spec.train_count = std::min<int>(spec.train_count, static_cast<int>(ds.n()) - 1);
        }

        Hyperparams hp;
        hp.C = opts.C;
        hp.eta = opts.eta;
        hp.lambda = opts.lambda;
        hp.rho = opts.rho;
        hp.r = spec.dims.front();

        const Variant variant = variant_from_string(opts.variant);
        AccuracyTable table;
        if (!opts.sweep_param.empty()) {
            const SweepParam param = sweep_param_from_string(opts.sweep_param);
            const std::vector<double> values = parse_double_list(opts.sweep_values);
            table = sensitivity_sweep(ds, apply_variant(hp, variant), spec, param, values);
        } else {
            table = run_protocol(ds, hp, spec, variant);
        }
        write_accuracy_csv(table, opts.out_path);
        out << "wrote " << table.rows.size() << " rows to " << opts.out_path << " (variant "
            << opts.variant << ", train_count " << spec.train_count << ", trials "
            << spec.trials << ")\n";
        return kExitOk;
    });
}

namespace {

LabeledDataset random_instance(std::mt19937_64& rng, int n, int d, int k) {
    std::normal_distribution<double> normal(0.0, 1.0);
    LabeledDataset ds;
    ds.features.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) ds.features(i, j) = normal(rng);
    }
    ds.labels.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) ds.labels[static_cast<size_t>(i)] = i % k;
    for (int c = 0; c < k; ++c) ds.label_map.push_back(std::to_string(c));
    return ds;
}

}  // namespace

int run_gradcheck(const GradcheckOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (opts.r >= opts.d || opts.r < 1) {
            throw ConfigError("r must be < d (got r=" + std::to_string(opts.r) +
                              ", d=" + std::to_string(opts.d) + ")");
        }
        if (opts.K < 3) throw ConfigError("K must be >= 3 for the multi-class check");
        if (opts.n < opts.K) throw ConfigError("n must be >= K");

        std::mt19937_64 rng(splitmix64(opts.seed));
        std::normal_distribution<double> normal(0.0, 1.0);
        const double step = 1e-5;

        Hyperparams hp;
        hp.C = 0.7;
        hp.eta = 0.3;
        hp.lambda = 0.2;
        hp.rho = 0.4;
        hp.r = opts.r;

        auto fd_error = [&](auto&& value_fn, const Eigen::MatrixXd& analytic, Eigen::MatrixXd p) {
            double max_diff = 0.0;
            for (Eigen::Index i = 0; i < p.rows(); ++i) {
                for (Eigen::Index j = 0; j < p.cols(); ++j) {
                    const double saved = p(i, j);
                    p(i, j) = saved + step;
                    const double plus = value_fn(p);
                    p(i, j) = saved - step;
                    const double minus = value_fn(p);
                    p(i, j) = saved;
                    const double fd = (plus - minus) / (2.0 * step);
                    max_diff = std::max(max_diff, std::fabs(fd - analytic(i, j)));
                }
            }
            return max_diff / std::max(1.0, analytic.cwiseAbs().maxCoeff());
        };

        auto random_projection = [&]() {
            Eigen::MatrixXd p(opts.d, opts.r);
            const double scale = 1.0 / std::sqrt(static_cast<double>(opts.d));
            for (Eigen::Index i = 0; i < p.rows(); ++i) {
                for (Eigen::Index j = 0; j < p.cols(); ++j) p(i, j) = scale * normal(rng);
            }
            return p;
        };

        // Binary instance.
        const LabeledDataset ds2 = random_instance(rng, opts.n, opts.d, 2);
        const ClassPartition part2 = build_partition(ds2.labels);
        Eigen::MatrixXd p = random_projection();
        Eigen::VectorXd w(opts.r);
        for (int i = 0; i < opts.r; ++i) w(i) = normal(rng);
        const double b = normal(rng);
        const double err_binary =
            fd_error([&](const Eigen::MatrixXd& pp) {
                return objective_binary(ds2, pp, w, b, hp, part2);
            }, grad_P_binary(ds2, p, w, b, hp, part2), p);

        // Multi-class instance.
        const LabeledDataset dsk = random_instance(rng, opts.n, opts.d, opts.K);
        const ClassPartition partk = build_partition(dsk.labels);
        p = random_projection();
        Eigen::MatrixXd bigw(opts.r, opts.K);
        Eigen::VectorXd bias(opts.K);
        for (Eigen::Index i = 0; i < bigw.rows(); ++i) {
            for (Eigen::Index j = 0; j < bigw.cols(); ++j) bigw(i, j) = normal(rng);
        }
        for (int i = 0; i < opts.K; ++i) bias(i) = normal(rng);
        const std::optional<SymMatrix> omega =
            SymMatrix(Eigen::MatrixXd::Identity(opts.K, opts.K) / opts.K);
        const double err_multi =
            fd_error([&](const Eigen::MatrixXd& pp) {
                return objective_multi(dsk, pp, bigw, bias, omega, hp, partk);
            }, grad_P_multi(dsk, p, bigw, bias, hp, partk), p);

        out << "binary max relative gradient error: " << err_binary << '\n';
        out << "multi-class max relative gradient error: " << err_multi << '\n';
        if (err_binary <= 1e-5 && err_multi <= 1e-5) {
            out << "gradcheck passed\n";
            return kExitOk;
        }
        err << "gradcheck failed (threshold 1e-5)\n";
        return kExitNumeric;
    });
}

}  // namespace mmldf::cli

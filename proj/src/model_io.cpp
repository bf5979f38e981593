#include "mmldf/model_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "mmldf/errors.hpp"

namespace mmldf {

namespace {

std::string escape_json(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

void write_array_row_major(std::ostream& out, const Eigen::MatrixXd& m) {
    out << '[';
    bool first = true;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (!first) out << ", ";
            out << format_double(m(i, j));
            first = false;
        }
    }
    out << ']';
}

void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
    out << '[';
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i > 0) out << ", ";
        out << format_double(v(i));
    }
    out << ']';
}

Eigen::MatrixXd read_matrix(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols,
                            const char* name) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows * cols) {
        throw ParseError(std::string("model: field '") + name + "' must be an array of " +
                         std::to_string(rows * cols) + " numbers");
    }
    Eigen::MatrixXd m(rows, cols);
    Eigen::Index idx = 0;
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index jj = 0; jj < cols; ++jj) {
            m(i, jj) = j[static_cast<size_t>(idx++)].get<double>();
        }
    }
    if (!m.allFinite()) {
        throw ParseError(std::string("model: field '") + name + "' has non-finite entries");
    }
    return m;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string provenance_timestamp() {
    const char* epoch = std::getenv("SOURCE_DATE_EPOCH");
    if (!epoch || !*epoch) return "";
    const long long t = std::strtoll(epoch, nullptr, 10);
    std::time_t tt = static_cast<std::time_t>(t);
    std::tm tm_utc{};
    if (!gmtime_r(&tt, &tm_utc)) return "";
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

void ModelFile::validate() const {
    if (mode != "binary" && mode != "multiclass") {
        throw ConfigError("model: mode must be binary or multiclass");
    }
    const Eigen::Index cols = mode == "binary" ? 1 : K;
    if (P.rows() != d || P.cols() != r) throw ConfigError("model: P shape mismatch");
    if (W.rows() != r || W.cols() != cols) throw ConfigError("model: W shape mismatch");
    if (bias.size() != cols) throw ConfigError("model: bias length mismatch");
    if (mode == "multiclass") {
        if (!Omega || Omega->rows() != K || Omega->cols() != K) {
            throw ConfigError("model: multiclass requires a K x K Omega");
        }
    } else if (Omega) {
        throw ConfigError("model: binary mode must not carry Omega");
    }
    if (static_cast<int>(label_map.size()) != K) {
        throw ConfigError("model: label_map must have K entries");
    }
    if (standardization &&
        (standardization->mean.size() != d || standardization->stddev.size() != d)) {
        throw ConfigError("model: standardization stats length mismatch");
    }
}

void save_model(const ModelFile& model, std::ostream& out) {
    model.validate();
    out << "{\n";
    out << "  \"format_version\": " << model.format_version << ",\n";
    out << "  \"mode\": \"" << model.mode << "\",\n";
    out << "  \"shapes\": {\"d\": " << model.d << ", \"r\": " << model.r
        << ", \"K\": " << model.K << "},\n";
    out << "  \"P\": ";
    write_array_row_major(out, model.P);
    out << ",\n  \"W\": ";
    write_array_row_major(out, model.W);
    out << ",\n  \"bias\": ";
    write_vector(out, model.bias);
    out << ",\n  \"Omega\": ";
    if (model.Omega) {
        write_array_row_major(out, *model.Omega);
    } else {
        out << "null";
    }
    out << ",\n  \"label_map\": [";
    for (size_t i = 0; i < model.label_map.size(); ++i) {
        if (i > 0) out << ", ";
        out << '"' << escape_json(model.label_map[i]) << '"';
    }
    out << "],\n  \"standardization\": ";
    if (model.standardization) {
        out << "{\"mean\": ";
        write_vector(out, model.standardization->mean);
        out << ", \"stddev\": ";
        write_vector(out, model.standardization->stddev);
        out << "}";
    } else {
        out << "null";
    }
    const Hyperparams& hp = model.hyperparams;
    out << ",\n  \"hyperparams\": {\"C\": " << format_double(hp.C)
        << ", \"eta\": " << format_double(hp.eta) << ", \"lambda\": " << format_double(hp.lambda)
        << ", \"rho\": " << format_double(hp.rho) << ", \"r\": " << hp.r
        << ", \"eps_smooth\": " << format_double(hp.eps_smooth)
        << ", \"omega_ridge\": " << format_double(hp.omega_ridge) << "},\n";
    out << "  \"provenance\": {\"seed\": " << model.seed << ", \"dataset_digest\": \""
        << escape_json(model.dataset_digest) << "\", \"timestamp\": \""
        << escape_json(model.timestamp) << "\"}\n";
    out << "}\n";
}

void save_model(const ModelFile& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    save_model(model, out);
    if (!out.good()) throw ConfigError("failed writing model to '" + path + "'");
}

ModelFile load_model(std::istream& in) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model: invalid JSON: ") + e.what());
    }
    try {
        ModelFile model;
        model.format_version = j.at("format_version").get<int>();
        if (model.format_version != 1) {
            throw ParseError("model: unsupported format_version " +
                             std::to_string(model.format_version));
        }
        model.mode = j.at("mode").get<std::string>();
        const auto& shapes = j.at("shapes");
        model.d = shapes.at("d").get<Eigen::Index>();
        model.r = shapes.at("r").get<int>();
        model.K = shapes.at("K").get<int>();
        const Eigen::Index cols = model.mode == "binary" ? 1 : model.K;
        model.P = read_matrix(j.at("P"), model.d, model.r, "P");
        model.W = read_matrix(j.at("W"), model.r, cols, "W");
        model.bias = read_matrix(j.at("bias"), cols, 1, "bias");
        if (!j.at("Omega").is_null()) {
            model.Omega = read_matrix(j.at("Omega"), model.K, model.K, "Omega");
        }
        model.label_map = j.at("label_map").get<std::vector<std::string>>();
        if (!j.at("standardization").is_null()) {
            StandardizationStats stats;
            stats.mean = read_matrix(j.at("standardization").at("mean"), model.d, 1, "mean");
            stats.stddev = read_matrix(j.at("standardization").at("stddev"), model.d, 1, "stddev");
            model.standardization = std::move(stats);
        }
        const auto& hp = j.at("hyperparams");
        model.hyperparams.C = hp.at("C").get<double>();
        model.hyperparams.eta = hp.at("eta").get<double>();
        model.hyperparams.lambda = hp.at("lambda").get<double>();
        model.hyperparams.rho = hp.at("rho").get<double>();
        model.hyperparams.r = hp.at("r").get<int>();
        model.hyperparams.eps_smooth = hp.at("eps_smooth").get<double>();
        model.hyperparams.omega_ridge = hp.at("omega_ridge").get<double>();
        const auto& prov = j.at("provenance");
        model.seed = prov.at("seed").get<std::uint64_t>();
        model.dataset_digest = prov.at("dataset_digest").get<std::string>();
        model.timestamp = prov.at("timestamp").get<std::string>();
        model.validate();
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model: missing or mistyped field: ") + e.what());
    }
}

ModelFile load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open model file '" + path + "'");
    return load_model(in);
}

void write_accuracy_csv(const AccuracyTable& table, std::ostream& out) {
    out << "variant,dim,param_value,mean_acc,std_acc,trials,seed\n";
    for (const auto& row : table.rows) {
        out << row.variant << ',' << row.dim << ',' << row.param_value << ','
            << format_double(row.mean_acc) << ',' << format_double(row.std_acc) << ','
            << row.trials << ',' << row.seed << '\n';
    }
}

void write_accuracy_csv(const AccuracyTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    write_accuracy_csv(table, out);
    if (!out.good()) throw ConfigError("failed writing table to '" + path + "'");
}

void write_train_report(const TrainReport& report, const Hyperparams& hp, std::uint64_t seed,
                        std::ostream& out) {
    nlohmann::json j;
    j["objective_trace"] = report.objective_trace;
    j["active_set_sizes"] = report.active_set_sizes;
    j["outer_iters"] = report.outer_iters;
    j["lbfgs_iters"] = report.lbfgs_iters;
    j["gradient_evals"] = report.gradient_evals;
    j["objective_evals"] = report.objective_evals;
    j["safeguard_rejections"] = report.safeguard_rejections;
    j["converged"] = report.converged;
    j["seconds"] = {{"w", report.seconds_w},
                    {"b", report.seconds_b},
                    {"p", report.seconds_p},
                    {"omega", report.seconds_omega}};
    j["hyperparams"] = {{"C", hp.C},          {"eta", hp.eta},
                        {"lambda", hp.lambda}, {"rho", hp.rho},
                        {"r", hp.r},           {"eps_smooth", hp.eps_smooth},
                        {"omega_ridge", hp.omega_ridge}};
    j["seed"] = seed;
    j["scatter_convention"] = "tr(P^T X L X^T P)";
    j["stddev_convention"] = "population";
    j["split_convention"] = "stratified";
    out << j.dump(2) << '\n';
}

void write_train_report(const TrainReport& report, const Hyperparams& hp, std::uint64_t seed,
                        const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    write_train_report(report, hp, seed, out);
}

}  // namespace mmldf

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "mmldf/dataset.hpp"

namespace mmldf::cli {

// Exit codes: 0 success, 2 usage/parse/config errors, 3 numerical failures.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

/// Shared dataset-loading flags.
struct DataOptions {
    std::string path;
    std::string format = "libsvm";  // libsvm | csv
    std::string label_col = "0";    // csv: header name or 0-based index
    bool has_header = false;
    int expected_dim = 0;  // libsvm: pad to this dimension (0 = infer)
};

LabeledDataset load_dataset(const DataOptions& opts);

struct TrainOptions {
    DataOptions data;
    int dim = 2;
    double C = 1.0;
    double eta = 0.0;
    double lambda = 0.0;
    double rho = 0.0;
    std::uint64_t seed = 0;
    std::string out_path = "model.json";
    std::string report_path;  // default: <out_path>.report.json
    bool standardize = false;
    int max_iters = 50;
    double tol = 1e-5;
    bool cv = false;
    double svm_C = 1.0;  // downstream classifier used inside --cv
};

struct TransformOptions {
    std::string model_path;
    DataOptions data;
    std::string out_path = "embedded.csv";
};

struct EvaluateOptions {
    std::string model_path;
    DataOptions train;
    DataOptions test;
    double svm_C = 1.0;
    std::string report_path;  // default: <model>.eval.json
};

struct BenchmarkOptions {
    DataOptions data;        // used when synth_spec is empty
    std::string synth_spec;  // classes=3,per_class=100,informative=6,...
    std::uint64_t synth_seed = 1;
    std::string dims = "10:100:10";  // start:stop:step or comma list
    int trials = 10;
    std::string variant = "full";
    std::uint64_t seed = 0;
    std::string out_path = "benchmark.csv";
    double C = 1.0;
    double eta = 0.0;
    double lambda = 1e-4;
    double rho = 0.0;
    double svm_C = 1.0;
    int train_count = 0;  // 0 = n / 5 clamped to [K, n-1]
    bool no_standardize = false;
    int max_outer_iters = 50;
    std::string sweep_param;   // C | lambda | eta | rho; empty = plain run
    std::string sweep_values;  // comma-separated values
};

struct GradcheckOptions {
    std::uint64_t seed = 0;
    int n = 20;
    int d = 12;
    int r = 4;
    int K = 4;
};

int run_train(const TrainOptions& opts, std::ostream& out, std::ostream& err);
int run_transform(const TransformOptions& opts, std::ostream& out, std::ostream& err);
int run_evaluate(const EvaluateOptions& opts, std::ostream& out, std::ostream& err);
int run_benchmark(const BenchmarkOptions& opts, std::ostream& out, std::ostream& err);
int run_gradcheck(const GradcheckOptions& opts, std::ostream& out, std::ostream& err);

/// Parses "start:stop:step" (inclusive) or a comma-separated list.
std::vector<int> parse_dims(const std::string& text);

/// Parses the synth spec key=value list.
SynthSpec parse_synth_spec(const std::string& text);

std::vector<double> parse_double_list(const std::string& text);

}  // namespace mmldf::cli

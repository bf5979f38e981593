#include <iostream>

#include <CLI11.hpp>

#include "mmldf/cli.hpp"

namespace {

void add_data_flags(CLI::App* cmd, mmldf::cli::DataOptions& data, const std::string& flag,
                    bool required) {
    auto* opt = cmd->add_option(flag, data.path, "dataset file");
    if (required) opt->required();
    cmd->add_option("--format", data.format, "dataset format: libsvm|csv")
        ->capture_default_str();
    cmd->add_option("--label-col", data.label_col, "csv label column (name or 0-based index)")
        ->capture_default_str();
    cmd->add_flag("--has-header", data.has_header, "csv file starts with a header row");
    cmd->add_option("--expected-dim", data.expected_dim,
                    "libsvm: pad features to this dimension");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"max-margin discriminative feature learning toolkit"};
    app.require_subcommand(1);

    mmldf::cli::TrainOptions train;
    auto* cmd_train = app.add_subcommand("train", "learn a projection and margin classifier");
    add_data_flags(cmd_train, train.data, "--data", true);
    cmd_train->add_option("--dim", train.dim, "reduced dimension r")->required();
    cmd_train->add_option("--C", train.C, "hinge trade-off")->capture_default_str();
    cmd_train->add_option("--eta", train.eta, "within-class scatter trade-off")
        ->capture_default_str();
    cmd_train->add_option("--lambda", train.lambda, "row-sparsity trade-off")
        ->capture_default_str();
    cmd_train->add_option("--rho", train.rho, "task-correlation trade-off")
        ->capture_default_str();
    cmd_train->add_option("--seed", train.seed, "random seed")->capture_default_str();
    cmd_train->add_option("--out", train.out_path, "output model path")->capture_default_str();
    cmd_train->add_option("--report", train.report_path,
                          "training report path (default <out>.report.json)");
    cmd_train->add_flag("--standardize", train.standardize, "z-score features before training");
    cmd_train->add_option("--max-iters", train.max_iters, "outer iteration cap")
        ->capture_default_str();
    cmd_train->add_option("--tol", train.tol, "relative objective tolerance")
        ->capture_default_str();
    cmd_train->add_flag("--cv", train.cv, "select C/eta/rho by 3-fold cross-validation");
    cmd_train->add_option("--svm-C", train.svm_C, "downstream SVM C used inside --cv")
        ->capture_default_str();

    mmldf::cli::TransformOptions transform;
    auto* cmd_transform = app.add_subcommand("transform", "embed data with a trained model");
    cmd_transform->add_option("--model", transform.model_path, "model file")->required();
    add_data_flags(cmd_transform, transform.data, "--data", true);
    cmd_transform->add_option("--out", transform.out_path, "output csv path")
        ->capture_default_str();

    mmldf::cli::EvaluateOptions evaluate;
    auto* cmd_evaluate =
        app.add_subcommand("evaluate", "downstream linear-SVM accuracy on embedded data");
    cmd_evaluate->add_option("--model", evaluate.model_path, "model file")->required();
    cmd_evaluate->add_option("--train", evaluate.train.path, "training dataset")->required();
    cmd_evaluate->add_option("--test", evaluate.test.path, "test dataset")->required();
    cmd_evaluate->add_option("--format", evaluate.train.format, "dataset format: libsvm|csv")
        ->capture_default_str();
    cmd_evaluate->add_option("--label-col", evaluate.train.label_col, "csv label column")
        ->capture_default_str();
    cmd_evaluate->add_flag("--has-header", evaluate.train.has_header, "csv header row");
    cmd_evaluate->add_option("--svm-C", evaluate.svm_C, "downstream SVM C")
        ->capture_default_str();
    cmd_evaluate->add_option("--out", evaluate.report_path,
                             "report path (default <model>.eval.json)");

    mmldf::cli::BenchmarkOptions benchmark;
    auto* cmd_benchmark =
        app.add_subcommand("benchmark", "dimension sweeps, ablations, and sensitivity tables");
    add_data_flags(cmd_benchmark, benchmark.data, "--data", false);
    cmd_benchmark->add_option("--synth", benchmark.synth_spec,
                              "synthetic spec: classes=3,per_class=100,informative=6,"
                              "noise=44,redundant=10,separation=4,noise_scale=1");
    cmd_benchmark->add_option("--synth-seed", benchmark.synth_seed, "synthetic data seed")
        ->capture_default_str();
    cmd_benchmark->add_option("--dims", benchmark.dims, "start:stop:step or comma list")
        ->capture_default_str();
    cmd_benchmark->add_option("--trials", benchmark.trials, "repeats per dimension")
        ->capture_default_str();
    cmd_benchmark->add_option("--variant", benchmark.variant,
                              "full|no_rho|no_eta_no_rho|mmpp")
        ->capture_default_str();
    cmd_benchmark->add_option("--seed", benchmark.seed, "protocol seed")->capture_default_str();
    cmd_benchmark->add_option("--out", benchmark.out_path, "output csv path")
        ->capture_default_str();
    cmd_benchmark->add_option("--C", benchmark.C, "hinge trade-off")->capture_default_str();
    cmd_benchmark->add_option("--eta", benchmark.eta, "scatter trade-off")
        ->capture_default_str();
    cmd_benchmark->add_option("--lambda", benchmark.lambda, "row-sparsity trade-off")
        ->capture_default_str();
    cmd_benchmark->add_option("--rho", benchmark.rho, "correlation trade-off")
        ->capture_default_str();
    cmd_benchmark->add_option("--svm-C", benchmark.svm_C, "downstream SVM C")
        ->capture_default_str();
    cmd_benchmark->add_option("--train-count", benchmark.train_count,
                              "train samples per split (0 = n/5)");
    cmd_benchmark->add_flag("--no-standardize", benchmark.no_standardize,
                            "skip per-split standardization");
    cmd_benchmark->add_option("--max-iters", benchmark.max_outer_iters, "outer iteration cap")
        ->capture_default_str();
    cmd_benchmark->add_option("--sweep-param", benchmark.sweep_param,
                              "sensitivity sweep parameter: C|lambda|eta|rho");
    cmd_benchmark->add_option("--sweep-values", benchmark.sweep_values,
                              "comma-separated sweep values");

    mmldf::cli::GradcheckOptions gradcheck;
    auto* cmd_gradcheck =
        app.add_subcommand("gradcheck", "finite-difference check of the projection gradient");
    cmd_gradcheck->add_option("--seed", gradcheck.seed, "random seed")->capture_default_str();
    cmd_gradcheck->add_option("--n", gradcheck.n, "samples")->capture_default_str();
    cmd_gradcheck->add_option("--d", gradcheck.d, "input dimension")->capture_default_str();
    cmd_gradcheck->add_option("--r", gradcheck.r, "reduced dimension")->capture_default_str();
    cmd_gradcheck->add_option("--K", gradcheck.K, "classes for the multi-class check")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : mmldf::cli::kExitConfig;
    }

    if (cmd_train->parsed()) return mmldf::cli::run_train(train, std::cout, std::cerr);
    if (cmd_transform->parsed()) return mmldf::cli::run_transform(transform, std::cout, std::cerr);
    if (cmd_evaluate->parsed()) {
        evaluate.test.format = evaluate.train.format;
        evaluate.test.label_col = evaluate.train.label_col;
        evaluate.test.has_header = evaluate.train.has_header;
        return mmldf::cli::run_evaluate(evaluate, std::cout, std::cerr);
    }
    if (cmd_benchmark->parsed()) return mmldf::cli::run_benchmark(benchmark, std::cout, std::cerr);
    if (cmd_gradcheck->parsed()) return mmldf::cli::run_gradcheck(gradcheck, std::cout, std::cerr);
    return mmldf::cli::kExitConfig;
}

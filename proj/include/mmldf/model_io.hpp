#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mmldf/dataset.hpp"
#include "mmldf/eval.hpp"
#include "mmldf/objective.hpp"
#include "mmldf/solver.hpp"

namespace mmldf {

/// On-disk model. Serialization is deterministic: fixed key order and 17
/// significant digits for doubles, so identical models produce identical
/// bytes and write -> read -> write is byte-stable.
struct ModelFile {
    int format_version = 1;
    std::string mode;  // "binary" | "multiclass"
    Eigen::Index d = 0;
    int r = 0;
    int K = 0;
    Eigen::MatrixXd P;     // d x r
    Eigen::MatrixXd W;     // r x 1 (binary) or r x K
    Eigen::VectorXd bias;
    std::optional<Eigen::MatrixXd> Omega;  // K x K, multiclass only
    std::vector<std::string> label_map;
    std::optional<StandardizationStats> standardization;
    Hyperparams hyperparams;
    std::uint64_t seed = 0;
    std::string dataset_digest;
    std::string timestamp;  // from SOURCE_DATE_EPOCH; empty otherwise

    void validate() const;  // shape consistency; throws ConfigError
};

/// ISO-8601 UTC timestamp from SOURCE_DATE_EPOCH, or "" when unset. Model
/// bytes stay reproducible unless the caller opts into a real timestamp.
std::string provenance_timestamp();

/// 17-significant-digit decimal (printf %.17g); round-trips a double exactly.
std::string format_double(double v);

void save_model(const ModelFile& model, std::ostream& out);
void save_model(const ModelFile& model, const std::string& path);
ModelFile load_model(std::istream& in);
ModelFile load_model(const std::string& path);

/// CSV with header variant,dim,param_value,mean_acc,std_acc,trials,seed.
void write_accuracy_csv(const AccuracyTable& table, std::ostream& out);
void write_accuracy_csv(const AccuracyTable& table, const std::string& path);

/// Machine-readable training report (objective trace, counters, timings).
void write_train_report(const TrainReport& report, const Hyperparams& hp, std::uint64_t seed,
                        std::ostream& out);
void write_train_report(const TrainReport& report, const Hyperparams& hp, std::uint64_t seed,
                        const std::string& path);

}  // namespace mmldf

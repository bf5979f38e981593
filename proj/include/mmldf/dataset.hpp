#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mmldf {

/// Dense labeled dataset. Rows of `features` are samples. `labels[i]` is the
/// internal class index in [0, K); `label_map[k]` holds the original label
/// token for class k, sorted ascending (numerically when every token parses
/// as a number, lexicographically otherwise).
struct LabeledDataset {
    Eigen::MatrixXd features;           // n x d
    std::vector<int> labels;            // length n
    std::vector<std::string> label_map; // length K

    Eigen::Index n() const { return features.rows(); }
    Eigen::Index d() const { return features.cols(); }
    int num_classes() const { return static_cast<int>(label_map.size()); }
};

/// Per-column mean and population standard deviation of a fitting dataset.
struct StandardizationStats {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;
};

/// Parameters for the synthetic blob generator.
struct SynthSpec {
    int classes = 2;
    int samples_per_class = 50;
    int informative_dims = 5;
    int noise_dims = 0;
    int redundant_dims = 0;
    double class_separation = 4.0;
    double noise_scale = 1.0;

    int total_dims() const { return informative_dims + noise_dims + redundant_dims; }
    void validate() const;  // throws ConfigError
};

/// Parses LIBSVM text (`<label> <idx>:<val> ...`, 1-based strictly ascending
/// indices). Absent indices become 0.0 in the dense matrix. d is the largest
/// index seen, or expected_dim when that is larger; an index beyond
/// expected_dim is an error.
LabeledDataset parse_libsvm(std::istream& in, std::optional<int> expected_dim = {});
LabeledDataset parse_libsvm(const std::string& text, std::optional<int> expected_dim = {});

/// Emits sparse LIBSVM lines (zero entries skipped, original label tokens).
void serialize_libsvm(const LabeledDataset& ds, std::ostream& out);

/// Parses a rectangular CSV table. `label_column` is a header name (when
/// has_header) or a 0-based column index; the remaining columns become
/// features in their original order.
LabeledDataset parse_csv(std::istream& in, const std::string& label_column, bool has_header);
LabeledDataset parse_csv(const std::string& text, const std::string& label_column, bool has_header);

StandardizationStats fit_standardize(const LabeledDataset& ds);

/// z-scores each column; columns with stddev < 1e-12 are centered only.
LabeledDataset apply_standardize(const LabeledDataset& ds, const StandardizationStats& stats);

/// Deterministic stratified split: each class contributes proportionally
/// (largest-remainder rounding) and at least one train sample when
/// train_count >= K. train_count < K is an error.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds, int train_count,
                                                std::uint64_t seed);

/// Seeded Gaussian blobs: class means are class_separation * u_c on the
/// informative block (u_c seeded unit vectors), unit spread; noise dims are
/// class-independent with spread noise_scale; each redundant dim is a seeded
/// linear combination of the informative dims plus small jitter.
LabeledDataset synth_blobs(const SynthSpec& spec, std::uint64_t seed);

/// Content hash (FNV-1a over shapes, feature bytes, and labels), used to tie
/// saved models to the dataset they were trained on.
std::string dataset_digest(const LabeledDataset& ds);

/// Re-indexes labels against a reference label_map (token-matched); a token
/// absent from the reference is an error.
LabeledDataset align_labels(const LabeledDataset& ds,
                            const std::vector<std::string>& reference_map);

}  // namespace mmldf

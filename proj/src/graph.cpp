#include "mmldf/graph.hpp"

#include <numeric>
#include <string>

#include "mmldf/errors.hpp"

namespace mmldf {

int ClassPartition::num_samples() const {
    return std::accumulate(sizes.begin(), sizes.end(), 0);
}

ClassPartition build_partition(const std::vector<int>& labels) {
    int k = 0;
    for (int label : labels) {
        if (label < 0) throw ConfigError("build_partition: negative class index");
        k = std::max(k, label + 1);
    }
    ClassPartition part;
    part.groups.resize(static_cast<size_t>(k));
    for (size_t i = 0; i < labels.size(); ++i) {
        part.groups[static_cast<size_t>(labels[i])].push_back(static_cast<int>(i));
    }
    part.sizes.resize(static_cast<size_t>(k));
    for (int c = 0; c < k; ++c) part.sizes[c] = static_cast<int>(part.groups[c].size());
    return part;
}

static void check_rows(const Eigen::MatrixXd& Z, const ClassPartition& part, const char* op) {
    if (Z.rows() != part.num_samples()) {
        throw ConfigError(std::string(op) + ": Z has " + std::to_string(Z.rows()) +
                          " rows, partition covers " + std::to_string(part.num_samples()));
    }
}

double scatter_value(const Eigen::MatrixXd& Z, const ClassPartition& part) {
    check_rows(Z, part, "scatter_value");
    double total = 0.0;
    Eigen::RowVectorXd class_sum(Z.cols());
    for (size_t c = 0; c < part.groups.size(); ++c) {
        const auto& group = part.groups[c];
        const double size = static_cast<double>(group.size());
        class_sum.setZero();
        double sq = 0.0;
        for (int i : group) {
            sq += Z.row(i).squaredNorm();
            class_sum += Z.row(i);
        }
        total += size * sq - class_sum.squaredNorm();
    }
    return total;
}

Eigen::MatrixXd laplacian_apply(const Eigen::MatrixXd& Z, const ClassPartition& part) {
    check_rows(Z, part, "laplacian_apply");
    Eigen::MatrixXd out(Z.rows(), Z.cols());
    Eigen::RowVectorXd class_sum(Z.cols());
    for (size_t c = 0; c < part.groups.size(); ++c) {
        const auto& group = part.groups[c];
        const double size = static_cast<double>(group.size());
        class_sum.setZero();
        for (int i : group) class_sum += Z.row(i);
        for (int i : group) out.row(i) = size * Z.row(i) - class_sum;
    }
    return out;
}

}  // namespace mmldf

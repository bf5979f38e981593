#pragma once

#include <Eigen/Core>
#include <vector>

namespace mmldf {

/// Class partition of sample indices 0..n-1. Represents the within-class
/// adjacency (weight 1 for same-class pairs) and its Laplacian L = D - A
/// implicitly; the block structure means neither matrix is ever materialized.
struct ClassPartition {
    std::vector<std::vector<int>> groups;  // per class, ascending sample indices
    std::vector<int> sizes;

    int num_samples() const;
    int num_classes() const { return static_cast<int>(groups.size()); }
};

/// Groups sample indices by class; groups are ordered by class index with
/// ascending sample indices inside each group.
ClassPartition build_partition(const std::vector<int>& labels);

/// Within-class scatter tr(Z^T L Z), computed blockwise as
/// sum_c ( |c| * sum_{i in c} ||z_i||^2 - ||sum_{i in c} z_i||^2 ).
double scatter_value(const Eigen::MatrixXd& Z, const ClassPartition& part);

/// L * Z without materializing L: row i becomes |c(i)| * z_i - sum_{j in c(i)} z_j.
Eigen::MatrixXd laplacian_apply(const Eigen::MatrixXd& Z, const ClassPartition& part);

}  // namespace mmldf

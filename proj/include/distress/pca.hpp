#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace distress {

/// Principal components of the correlation structure of the training rows.
/// Constant columns are dropped before standardization.
struct PcaModel {
    std::vector<std::string> input_names;  // full input schema, in order
    std::vector<int> kept;                 // indices of non-constant inputs
    std::vector<std::string> dropped;      // names of constant inputs
    Eigen::VectorXd mean;                  // over kept inputs
    Eigen::VectorXd sd;
    Eigen::MatrixXd loadings;              // kept x kept, columns are components
    Eigen::VectorXd eigenvalues;           // descending
    Eigen::VectorXd explained;             // eigenvalues / their sum
    int k = 0;                             // retained components

    std::vector<std::string> component_names() const;  // "pc1" .. "pck"
};

/// Retains the smallest k whose cumulative explained ratio reaches `threshold`.
/// Rows must be complete; throws DataError with fewer than 2 rows or no
/// non-constant column.
PcaModel pca_fit(const Eigen::MatrixXd& X, const std::vector<std::string>& names, double threshold = 0.95);

/// First k component scores of rows standardized with the training statistics.
Eigen::MatrixXd pca_transform(const PcaModel& model, const Eigen::MatrixXd& X, const std::vector<std::string>& names);

}  // namespace distress

#pragma once

// Integer codes for feature columns, shared by the tree learners. Code c of
// feature j is the rank of the value among that feature's distinct training
// values; -1 marks a missing value.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace distress::detail {

struct ColumnCodes {
    std::vector<std::vector<double>> values;  // sorted distinct values per feature
    Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic> code;

    Eigen::Index rows() const { return code.rows(); }
    Eigen::Index cols() const { return code.cols(); }

    static ColumnCodes build(const Eigen::MatrixXd& X) {
        ColumnCodes c;
        c.values.resize(static_cast<std::size_t>(X.cols()));
        c.code.resize(X.rows(), X.cols());
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            auto& v = c.values[static_cast<std::size_t>(j)];
            v.reserve(static_cast<std::size_t>(X.rows()));
            for (Eigen::Index i = 0; i < X.rows(); ++i)
                if (!std::isnan(X(i, j))) v.push_back(X(i, j));
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
            for (Eigen::Index i = 0; i < X.rows(); ++i) {
                const double x = X(i, j);
                c.code(i, j) = std::isnan(x)
                                   ? -1
                                   : static_cast<std::int32_t>(std::lower_bound(v.begin(), v.end(), x) - v.begin());
            }
        }
        return c;
    }
};

/// Sorts `rows` by the code of feature j (stable, missing first). Counting
/// sort when the node is large relative to the number of distinct values.
inline void sort_by_code(const ColumnCodes& c, Eigen::Index j, std::vector<int>& rows, std::vector<int>& scratch,
                         std::vector<int>& counts) {
    const auto distinct = static_cast<std::size_t>(c.values[static_cast<std::size_t>(j)].size());
    if (rows.size() < 64 || distinct > 4 * rows.size()) {
        std::stable_sort(rows.begin(), rows.end(), [&](int a, int b) { return c.code(a, j) < c.code(b, j); });
        return;
    }
    counts.assign(distinct + 2, 0);
    for (int r : rows) ++counts[static_cast<std::size_t>(c.code(r, j) + 2)];
    for (std::size_t k = 1; k < counts.size(); ++k) counts[k] += counts[k - 1];
    scratch.resize(rows.size());
    for (int r : rows) scratch[static_cast<std::size_t>(counts[static_cast<std::size_t>(c.code(r, j) + 1)]++)] = r;
    rows.swap(scratch);
}

}  // namespace distress::detail

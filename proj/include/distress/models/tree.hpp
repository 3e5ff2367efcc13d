#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace distress {

/// Binary split node; rows with x <= threshold (or missing) go left. A node
/// with feature < 0 is a leaf holding `value`.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;

    int leaf_index(const Eigen::MatrixXd& X, Eigen::Index row) const;
    double predict_row(const Eigen::MatrixXd& X, Eigen::Index row) const { return nodes[leaf_index(X, row)].value; }
    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
    int depth() const;
};

/// Gini impurity of a two-class node.
double gini(double positives, double total);

struct CartOptions {
    int max_depth = 0;  // 0 = unlimited
    int min_leaf = 1;
    int mtry = 0;       // features tried per node; 0 = all
};

/// Greedy CART on the multiset `rows` (duplicates allowed, as in a bootstrap
/// sample). Splits maximize the exact Gini decrease; ties go to the lowest
/// feature index, then the lowest threshold. Leaves hold the default fraction.
Tree train_cart(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::span<const int> rows,
                const CartOptions& options, std::mt19937_64& rng);

struct ForestOptions {
    int trees = 100;
    CartOptions cart;
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

struct Forest {
    std::vector<Tree> trees;
    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;  // mean of tree outputs
};

Forest train_random_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ForestOptions& options);

/// Features drawn for one node: `mtry` distinct indices in ascending order.
std::vector<int> draw_features(int p, int mtry, std::mt19937_64& rng);

}  // namespace distress

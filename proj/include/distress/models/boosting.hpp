#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "distress/models/tree.hpp"

namespace distress {

enum class GrowthPolicy {
    level_wise,  // exact greedy over presorted features, every node grown to max_depth
    leaf_wise,   // histogram splits, always expanding the leaf with the best gain
};

struct BoostOptions {
    GrowthPolicy policy = GrowthPolicy::level_wise;
    int rounds = 100;
    double learning_rate = 0.1;
    int max_depth = 6;    // level_wise depth; leaf_wise optional cap (0 = none)
    int max_leaves = 31;  // leaf_wise only
    double l2_reg = 1.0;
    double min_child_weight = 1e-3;
    int max_bins = 255;   // leaf_wise only
    double subsample = 1.0;
    std::uint64_t seed = 0;
};

struct BoostedEnsemble {
    double base_margin = 0.0;  // log-odds of the training default rate
    std::vector<Tree> trees;   // leaf values are already scaled by the learning rate

    Eigen::VectorXd margin(const Eigen::MatrixXd& X) const;
    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
};

/// Training logistic loss (summed) before the first round and after each round.
struct BoostTrace {
    std::vector<double> loss;
};

/// Logistic-loss boosting. Each leaf takes the regularized Newton weight
/// -G/(H + l2_reg) times the learning rate, halved while it would raise that
/// leaf's loss, so the training loss never increases.
BoostedEnsemble train_gbt(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const BoostOptions& options,
                          BoostTrace* trace = nullptr);

}  // namespace distress

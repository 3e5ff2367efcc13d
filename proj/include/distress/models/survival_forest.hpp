#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "distress/models/tree.hpp"

namespace distress {

/// Nelson-Aalen cumulative hazard as a right-continuous step function over the
/// distinct event times of a node.
struct CumulativeHazard {
    std::vector<double> times;
    std::vector<double> values;

    double at(double t) const;
};

CumulativeHazard nelson_aalen(const Eigen::VectorXd& time, const Eigen::VectorXd& status, std::span<const int> rows);

/// Two-sample log-rank statistic |O - E| / sqrt(V) of `left` against the rest
/// of `rows`; 0 when the variance vanishes.
double log_rank_statistic(const Eigen::VectorXd& time, const Eigen::VectorXd& status, std::span<const int> rows,
                          std::span<const char> in_left);

struct SurvivalTree {
    Tree tree;  // leaf `value` indexes into `hazards`
    std::vector<CumulativeHazard> hazards;
};

struct SurvivalForestOptions {
    int trees = 100;
    int mtry = 0;      // 0 = all features
    int min_leaf = 5;  // minimum rows per daughter
    int max_depth = 0;
    bool bootstrap = true;
    double horizon = 1.0;
    std::uint64_t seed = 0;
};

struct SurvivalForest {
    std::vector<SurvivalTree> trees;
    double horizon = 1.0;

    /// Ensemble-mean cumulative hazard at time t.
    Eigen::VectorXd cumulative_hazard(const Eigen::MatrixXd& X, double t) const;
    /// Risk score: cumulative hazard at the horizon.
    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const { return cumulative_hazard(X, horizon); }
};

SurvivalTree train_survival_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& time, const Eigen::VectorXd& status,
                                 std::span<const int> rows, const SurvivalForestOptions& options,
                                 std::mt19937_64& rng);

SurvivalForest train_survival_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& time,
                                     const Eigen::VectorXd& status, const SurvivalForestOptions& options);

}  // namespace distress

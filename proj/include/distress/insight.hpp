#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "distress/eval.hpp"
#include "distress/models/model.hpp"
#include "distress/pca.hpp"

namespace distress {

struct FeatureImportance {
    std::string feature;
    double mean_delta_auc = kUndefined;  // baseline AUC - shuffled AUC, mean over kept repeats
    int repeats_used = 0;
    int repeats_discarded = 0;  // shuffled AUC undefined
};

struct ImportanceTable {
    std::string model;
    double baseline_auc = kUndefined;
    int repeats = 0;
    std::uint64_t seed = 0;
    std::vector<FeatureImportance> features;  // model schema order
};

/// A fitted model with the rows it is scored on. Several blocks (one per
/// walk-forward step) pool into one AUC.
struct EvalBlock {
    const TrainedModel* model;
    const Dataset* data;
};

/// Reorders `order` in place; the default is std::shuffle.
using Permuter = std::function<void(std::vector<Eigen::Index>& order, std::mt19937_64& rng)>;

/// Shuffles one column at a time (a fresh permutation per repeat and block,
/// seeded from (seed, feature, repeat, block)) and reports the pooled AUC drop.
ImportanceTable permutation_importance(std::span<const EvalBlock> blocks, const std::string& model_name, int repeats,
                                       std::uint64_t seed, const Permuter& permuter = {});

ImportanceTable permutation_importance(const TrainedModel& model, const Dataset& data, int repeats, std::uint64_t seed,
                                       const Permuter& permuter = {});

struct RankGrid {
    std::vector<std::string> models;
    std::vector<std::string> features;  // sorted by ascending rank sum, ties by name
    Eigen::MatrixXi ranks;              // features x models, dense, 1 = most important
    std::vector<int> rank_sum;
};

/// Dense ranks per model (undefined importances rank last), rows ordered by
/// the sum of ranks; the first `top_n` rows are kept.
RankGrid rank_heatmap(const std::vector<ImportanceTable>& tables, int top_n = 25);

/// The eight predictors of the reduced specification, in a fixed order.
const std::vector<std::string>& reduced_predictor_set();

/// feature, then one mean-delta column per model.
std::string importance_csv(const std::vector<ImportanceTable>& tables);
/// feature, one rank column per model, rank_sum.
std::string rank_grid_csv(const RankGrid& grid);

}  // namespace distress

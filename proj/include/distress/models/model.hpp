#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "distress/models/boosting.hpp"
#include "distress/models/dataset.hpp"
#include "distress/models/hazard.hpp"
#include "distress/models/mlp.hpp"
#include "distress/models/survival_forest.hpp"
#include "distress/models/tree.hpp"

namespace distress {

enum class Family { lasso, ridge, random_forest, xgb_like, lgbm_like, survival_forest, nn3, nn5 };

/// The eight families in their canonical order.
const std::vector<Family>& all_families();
std::string to_string(Family f);
Family parse_family(std::string_view name);  // ManifestError on unknown names

/// Families that reject residual missing values (regressions and networks).
bool requires_complete_inputs(Family f);

using Hyperparameters = std::map<std::string, double>;

struct ModelSpec {
    Family family = Family::lasso;
    Hyperparameters params;  // unset names take the family default
    std::uint64_t seed = 0;
};

/// Hyperparameter names accepted by a family, with their defaults.
const Hyperparameters& default_hyperparameters(Family f);

/// Throws ManifestError on unknown names or out-of-range values.
void validate(const ModelSpec& spec);

/// "family{name=value,...}" with every effective hyperparameter.
std::string describe(const ModelSpec& spec);

/// mtry encoding shared by both forests: 0 = floor(sqrt(p)), a value in (0,1)
/// is a fraction of p, anything else a count; clamped to [1, p].
int resolve_mtry(double mtry, int p);

struct LinearHazard {
    double intercept = 0.0;
    Eigen::VectorXd coef;
};

using FittedParameters = std::variant<LinearHazard, Forest, BoostedEnsemble, SurvivalForest, Network>;

/// Fitted scorer. Inputs are standardized with the training statistics before
/// they reach the family-specific parameters.
struct TrainedModel {
    ModelSpec spec;
    std::vector<std::string> feature_names;
    std::uint64_t fingerprint = 0;
    Standardizer standardizer;
    FittedParameters parameters;

    /// Scores for raw (unstandardized) rows; higher = riskier. Probabilities
    /// for every family except survival_forest, which yields the ensemble
    /// cumulative hazard at the horizon.
    Eigen::VectorXd predict(const Eigen::MatrixXd& X, std::uint64_t schema) const;
};

TrainedModel train(const ModelSpec& spec, const Dataset& data);
Eigen::VectorXd predict(const TrainedModel& model, const Dataset& data);

/// Versioned JSON container ("distress-model", version 1).
std::string serialize(const TrainedModel& model);
TrainedModel deserialize(std::string_view text);

}  // namespace distress

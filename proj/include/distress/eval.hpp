#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "distress/core.hpp"
#include "distress/models/model.hpp"
#include "distress/panel.hpp"

namespace distress {

// ---------------------------------------------------------------------------
// Expanding window

/// One walk-forward step: train on [train_first, t-3], validate on {t-2, t-1},
/// test on t.
struct SplitPlan {
    int train_first = 0;
    int train_last = 0;
    int validation_first = 0;
    int validation_last = 0;
    int test_year = 0;

    bool in_train(int year) const { return year >= train_first && year <= train_last; }
    bool in_validation(int year) const { return year >= validation_first && year <= validation_last; }
};

std::vector<SplitPlan> expanding_window_plan(int first_data_year, int first_test_year, int last_test_year);

/// train <= t-3, validation = {t-2, t-1}, test = t.
bool follows_protocol(const SplitPlan& plan);

// ---------------------------------------------------------------------------
// ROC / AUC

struct RocPoint {
    double fpr = 0.0;  // 1 - specificity
    double tpr = 0.0;  // sensitivity
};

namespace detail {

template <typename DS, typename DL>
std::vector<Eigen::Index> order_by_score(const Eigen::MatrixBase<DS>& scores, const Eigen::MatrixBase<DL>& labels) {
    if (scores.size() != labels.size()) throw DataError("auc: score and label counts differ");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(scores.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return scores[a] < scores[b]; });
    return order;
}

}  // namespace detail

/// Mann-Whitney AUC with ties counted one half; kUndefined unless both classes
/// are present. Exact: the statistic is accumulated in half-integer counts.
template <typename DS, typename DL>
double auc(const Eigen::MatrixBase<DS>& scores, const Eigen::MatrixBase<DL>& labels) {
    const auto order = detail::order_by_score(scores, labels);
    double negatives_below = 0.0, concordant = 0.0, positives = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        double pos = 0.0, neg = 0.0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] != 0 ? pos : neg) += 1.0;
            ++j;
        }
        concordant += pos * negatives_below + 0.5 * pos * neg;
        negatives_below += neg;
        positives += pos;
        i = j;
    }
    if (positives == 0.0 || negatives_below == 0.0) return kUndefined;
    return concordant / (positives * negatives_below);
}

/// (0,0), then one point per distinct score threshold from the highest down;
/// the last point is (1,1). Empty unless both classes are present.
template <typename DS, typename DL>
std::vector<RocPoint> roc_curve(const Eigen::MatrixBase<DS>& scores, const Eigen::MatrixBase<DL>& labels) {
    auto order = detail::order_by_score(scores, labels);
    std::reverse(order.begin(), order.end());
    double total_pos = 0.0, total_neg = 0.0;
    for (Eigen::Index i = 0; i < labels.size(); ++i) (labels[i] != 0 ? total_pos : total_neg) += 1.0;
    if (total_pos == 0.0 || total_neg == 0.0) return {};
    std::vector<RocPoint> points = {{0.0, 0.0}};
    double tp = 0.0, fp = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] != 0 ? tp : fp) += 1.0;
            ++j;
        }
        points.push_back({fp / total_neg, tp / total_pos});
        i = j;
    }
    return points;
}

double trapezoid_area(const std::vector<RocPoint>& points);

// ---------------------------------------------------------------------------
// Design matrices

/// Names of the twelve industry indicator columns.
const std::vector<std::string>& industry_dummy_names();

/// Panel features of the requested groups in schema order; the industry
/// indicators are appended whenever the structural group is requested.
std::vector<std::string> predictor_columns(const Panel& panel, const std::vector<FeatureGroup>& groups);

struct DesignMatrix {
    Dataset data;
    std::vector<std::size_t> records;  // panel record index of each row
    std::size_t dropped_missing = 0;   // rows skipped for residual missing values
};

/// Rows of years [first_year, last_year] with every selected column present.
/// Survival pairs are censored at `censor_year`: duration counts years from the
/// record to min(event_time, censor_year) inclusive, status is 1 only for a
/// bankruptcy at or before censor_year.
DesignMatrix design_matrix(const Panel& panel, const std::vector<std::string>& columns, int first_year, int last_year,
                           int censor_year);

// ---------------------------------------------------------------------------
// Tuning

/// Cartesian product of hyperparameter axes (axes in name order, values in the
/// given order), each point carrying `seed`.
std::vector<ModelSpec> expand_grid(Family family, const std::map<std::string, std::vector<double>>& axes,
                                   std::uint64_t seed);
const std::map<std::string, std::vector<double>>& default_grid_axes(Family family);

struct GridResult {
    ModelSpec spec;
    double validation_auc = kUndefined;  // undefined: point skipped
};

struct ForecastOptions {
    bool pca = false;  // replace the predictors by training-sample principal components
    double pca_threshold = 0.95;
};

struct ForecastSet {
    Family family = Family::lasso;
    int test_year = 0;
    std::vector<std::string> firm_ids;
    Eigen::VectorXd scores;
    Eigen::VectorXd labels;
    ModelSpec winner;
    double validation_auc = kUndefined;
    std::vector<GridResult> grid;
    int components = 0;  // retained principal components (pca runs)
    TrainedModel model;  // winning spec refit on the training years
    Dataset test;        // model inputs of the test rows
    Dataset validation;  // model inputs of the validation rows
};

/// Validation AUC per grid point (pooled over both validation years), argmax
/// with ties to the first point, refit on the training years, test-year scores.
ForecastSet tune_and_forecast(const Panel& panel, const std::vector<ModelSpec>& grid, const SplitPlan& plan,
                              const std::vector<FeatureGroup>& groups, const ForecastOptions& options = {});

/// Same, over an explicit column list.
ForecastSet tune_and_forecast(const Panel& panel, const std::vector<ModelSpec>& grid, const SplitPlan& plan,
                              const std::vector<std::string>& columns, const ForecastOptions& options = {});

/// Every plan, evaluated concurrently; results in plan order.
std::vector<ForecastSet> walk_forward(const Panel& panel, const std::vector<ModelSpec>& grid,
                                      const std::vector<SplitPlan>& plans, const std::vector<std::string>& columns,
                                      const ForecastOptions& options = {});

// ---------------------------------------------------------------------------
// Reports

struct YearSet {
    std::string name;
    std::vector<int> years;
};

/// "dotcom" (1999-2001), "gfc" (2007-2009), "non_crisis" (all covered years
/// outside both) and "all" (every covered year).
YearSet named_window(std::string_view name, const std::vector<int>& covered_years);

struct SubsetResult {
    std::string name;
    double auc = kUndefined;
    std::size_t firm_years = 0;
    std::size_t defaults = 0;
    std::vector<RocPoint> roc;
};

/// Pooled AUC of all firm-years of each subset that the forecasts cover.
/// DataError when a subset selects no forecast year.
std::vector<SubsetResult> subset_report(const std::vector<ForecastSet>& forecasts, const std::vector<YearSet>& subsets);

struct BenchmarkCell {
    Family family;
    std::string stage;
    std::string subset;
    double auc = kUndefined;
};

/// Table 2 layout for one subset: rows = families, columns = stages.
std::string table2_csv(const std::vector<BenchmarkCell>& cells, const std::vector<Family>& families,
                       const std::vector<std::string>& stages, const std::string& subset);

/// test_year, firm_id, family, score, label.
std::string forecasts_csv(const std::vector<ForecastSet>& forecasts);

/// test_year, family, winning spec, validation AUC, retained components.
std::string tuning_csv(const std::vector<ForecastSet>& forecasts);

}  // namespace distress

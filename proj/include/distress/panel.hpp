#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "distress/core.hpp"

namespace distress {

enum class FeatureGroup { accounting, market, industry, macro, text, structural };

std::string_view to_string(FeatureGroup group);
FeatureGroup parse_feature_group(std::string_view text);

/// Group a well-known predictor name belongs to; accounting for unknown names.
FeatureGroup default_group_for(std::string_view feature_name);

enum class EventStatus { censored, bankrupt };

struct FeatureSpec {
    std::string name;
    FeatureGroup group = FeatureGroup::accounting;

    friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

struct FirmYearRecord {
    std::string firm_id;
    int year = 0;
    int defaulted_next_year = 0;
    int event_time = 0;
    EventStatus event_status = EventStatus::censored;
    int industry = 1;  // 1..12
    std::vector<double> features;  // schema order; kMissing marks missing values
};

/// Immutable firm-year panel. Records are sorted by (year, firm_id) and each
/// carries one value (possibly kMissing) per schema entry.
class Panel {
public:
    Panel() = default;
    Panel(std::vector<FeatureSpec> schema, std::vector<FirmYearRecord> records);

    const std::vector<FeatureSpec>& schema() const { return schema_; }
    const std::vector<FirmYearRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    std::pair<int, int> year_range() const { return year_range_; }

    std::optional<std::size_t> find_feature(std::string_view name) const;
    std::size_t feature_index(std::string_view name) const;  // throws DataError
    std::vector<std::size_t> features_in(FeatureGroup group) const;

    /// Feature column with missing entries as NaN.
    Eigen::VectorXd column(std::size_t feature) const;
    Eigen::VectorXd labels() const;

private:
    std::vector<FeatureSpec> schema_;
    std::vector<FirmYearRecord> records_;
    std::pair<int, int> year_range_{0, 0};
};

/// Every bankrupt firm has its record labeled 1 at event_time. Alignment may
/// drop records, so the constructor does not enforce this direction.
bool survival_consistent(const Panel& panel);

// ---------------------------------------------------------------------------
// Ingestion

struct ColumnMapping {
    std::string column;
    std::string feature;
    FeatureGroup group = FeatureGroup::accounting;
};

struct DataManifest {
    std::filesystem::path path;
    std::string firm_column = "firm_id";
    std::string year_column = "year";
    std::string label_column = "defaulted_next_year";
    std::string event_time_column = "event_time";
    std::string event_status_column = "event_status";
    std::string industry_column = "industry";
    std::string missing_token = "NA";
    std::vector<ColumnMapping> features;
};

/// Reads a manifest from a JSON file. Relative data paths resolve against the
/// manifest's directory.
DataManifest read_data_manifest(const std::filesystem::path& manifest_path);
std::string data_manifest_json(const DataManifest& manifest);

Panel load_panel(const DataManifest& manifest);

/// CSV text of the panel, columns in schema order after the key columns.
std::string panel_csv(const Panel& panel, std::string_view missing_token = "NA");
void write_panel(const Panel& panel, const std::filesystem::path& csv_path);
DataManifest manifest_for(const Panel& panel, const std::filesystem::path& csv_path);

// ---------------------------------------------------------------------------
// Transformations

/// Last-observation-carried-forward within each firm, accounting features only.
Panel impute_last_observation(const Panel& panel);

/// Clamps every feature at its [lower, upper] quantiles (type-7). Off by default
/// in every pipeline.
Panel winsorize(const Panel& panel, double lower = 0.01, double upper = 0.99);

struct SyntheticSpec {
    std::uint64_t seed = 7;
    int n_firms = 500;
    std::pair<int, int> years{1990, 2005};
    double base_hazard = 0.02;
    std::vector<std::pair<std::string, double>> signal_weights;
    int noise_features = 0;
    double persistence = 0.7;      // AR(1) coefficient of firm features
    double missing_rate = 0.0;     // per accounting value
    std::vector<std::pair<std::string, FeatureGroup>> group_overrides;
};

void validate(const SyntheticSpec& spec);

/// Intercept such that E[sigmoid(b0 + s*Z)] = base_hazard for Z ~ N(0,1),
/// where s is the Euclidean norm of the signal weights.
double calibrated_intercept(double base_hazard, double signal_scale);

/// Logit of the generating model for a record, missing values taken as drawn.
/// Only meaningful on a panel fresh from synthesize_panel with missing_rate 0.
double true_logit(const SyntheticSpec& spec, const Panel& panel, const FirmYearRecord& record);

/// true_logit for every record, in panel order.
Eigen::VectorXd true_logits(const SyntheticSpec& spec, const Panel& panel);

Panel synthesize_panel(const SyntheticSpec& spec);

// ---------------------------------------------------------------------------
// Reporting

struct FeatureSummary {
    std::string name;
    bool present = false;  // false when the feature has fewer than two values
    std::size_t count = 0;
    double mean = kUndefined;
    double sd = kUndefined;
    double p25 = kUndefined;
    double median = kUndefined;
    double p75 = kUndefined;
};

/// Type-7 quantile of sorted data (linear interpolation between closest ranks).
double quantile_sorted(const std::vector<double>& sorted, double q);

std::vector<FeatureSummary> summarize(const Panel& panel);

struct FeatureCorrelation {
    std::string name;
    double correlation = kUndefined;  // undefined for zero-variance features
    std::size_t pairs = 0;
};

std::vector<FeatureCorrelation> correlation_with_default(const Panel& panel);

}  // namespace distress

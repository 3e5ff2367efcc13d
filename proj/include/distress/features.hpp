#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "distress/panel.hpp"

namespace distress {

// ---------------------------------------------------------------------------
// Market model

struct EquitySeries {
    std::string firm_id;
    std::vector<double> returns;        // simple periodic returns over year t-1, in date order
    std::vector<double> index_returns;  // matching market-index returns
    double market_equity = 0.0;         // end-of-period equity value
    double face_debt = 0.0;
    double risk_free = 0.0;             // annualized, decimal
    double periods_per_year = 0.0;      // 0 means "one year of observations": returns.size()

    double annualization() const {
        return periods_per_year > 0.0 ? periods_per_year : static_cast<double>(returns.size());
    }
};

inline constexpr std::size_t kMinReturnObservations = 30;

void validate(const EquitySeries& series);

struct MarketModelStats {
    double beta = 0.0;
    double sigma = 0.0;  // sample sd of OLS residuals (per period)
    double annual_excess_return = 0.0;
};

MarketModelStats market_model_stats(const EquitySeries& series);

/// log(firm / total); both must be positive.
double relative_size(double firm_mktcap, double total_mktcap);

// ---------------------------------------------------------------------------
// Merton structural model

double normal_cdf(double x);

/// Black-Scholes value of equity as a call on assets.
double equity_call_value(double assets, double face_debt, double rate, double asset_vol, double horizon);

/// Asset value that prices `equity` exactly, by bisection on [E, E + F e^{-rT} 1e3].
double implied_asset_value(double equity, double face_debt, double rate, double asset_vol, double horizon);

double distance_to_default(double assets, double face_debt, double drift, double asset_vol, double horizon);

struct MertonOptions {
    double horizon = 1.0;
    double tolerance = 1e-4;  // on successive asset-volatility iterates
    int max_iterations = 500;
    bool floor_drift = true;  // drift >= r - 0.10
    double drift_floor_gap = 0.10;
};

struct StructuralResult {
    double asset_value = 0.0;
    double asset_volatility = 0.0;
    double drift = 0.0;
    double distance_to_default = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> equity_path;  // reconstructed from returns, ends at market_equity
    std::vector<double> asset_path;   // implied asset values at the final volatility
};

/// Iterated estimator: invert the option identity period by period, re-estimate
/// asset volatility from implied log asset returns, repeat to a fixed point.
StructuralResult merton_dd(const EquitySeries& series, const MertonOptions& options = {});

/// Closed-form "naive" variant for comparison runs.
double naive_distance_to_default(const EquitySeries& series, double prior_year_return, double horizon = 1.0);

// ---------------------------------------------------------------------------
// Industry aggregates

struct IndustryAggregate {
    double hh_sales = kMissing;
    double median_sigma = kMissing;
    double median_tl_at = kMissing;
    double defaults_last_1yr = kMissing;
    double defaults_last_2yr = kMissing;
};

struct IndustryColumns {
    std::string sales = "sales";
    std::string sigma = "sigma";
    std::string tl_at = "liabilities_assets";
};

/// Aggregates for every industry code 1..12 in `year`. Default counts use only
/// labels resolved before January 1 of `year` (records of year-2 and year-3).
std::map<int, IndustryAggregate> industry_aggregates(const Panel& panel, int year,
                                                     const IndustryColumns& columns = {});

// ---------------------------------------------------------------------------
// Timing alignment

struct Date {
    int year = 0;
    int month = 1;
    int day = 1;
    auto operator<=>(const Date&) const = default;
};

Date parse_date(std::string_view text);

/// A statement is usable for forecasts of `year` when it ended at least six
/// months before January 1 of that year, i.e. on or before June 30 of year-1.
bool statement_eligible(const Date& period_end, int year);

struct StatementTable {
    std::vector<std::string> fields;  // accounting columns
    struct Row {
        std::string firm_id;
        Date period_end;
        std::vector<double> values;
    };
    std::vector<Row> rows;
};

struct MacroRow {
    int year = 0;
    double term_spread = 0.0;
    double credit_spread = 0.0;
    double recession = 0.0;
    double inflation = 0.0;
    double gdp_growth = 0.0;
    double unemployment = 0.0;
    double industrial_production = 0.0;
};

inline const std::vector<std::string>& macro_feature_names() {
    static const std::vector<std::string> names = {"term_spread", "credit_spread", "recession", "inflation",
                                                   "gdp_growth", "unemployment", "industrial_production"};
    return names;
}

/// Market-derived values observed at the end of `year` for one firm.
struct MarketFeatureRow {
    std::string firm_id;
    int year = 0;
    std::map<std::string, double> values;
};

struct AlignInputs {
    Panel universe;  // firm-years with labels/survival/industry; features ignored
    StatementTable statements;
    std::vector<MarketFeatureRow> market;
    std::vector<MacroRow> macro;
    std::vector<std::string> market_fields;  // schema order for market-group columns
};

struct AlignResult {
    Panel panel;
    std::size_t dropped_missing_macro = 0;
};

/// Builds year-t predictors from information dated before January 1 of t:
/// lagged statements, year t-1 market values and the December t-1 macro row.
AlignResult align_predictors(const AlignInputs& inputs);

/// Appends the five industry aggregate columns to an aligned panel.
Panel add_industry_features(const Panel& panel, const IndustryColumns& columns = {});

// ---------------------------------------------------------------------------
// Raw tables

struct EquityObservation {
    std::string firm_id;
    Date date;
    double ret = 0.0;
    double index_ret = 0.0;
};

struct FirmMarketRow {
    std::string firm_id;
    int year = 0;
    double market_equity = 0.0;
    double face_debt = 0.0;
    double total_market_cap = 0.0;
    double risk_free = 0.0;
};

struct RawTables {
    Panel universe;
    StatementTable statements;
    std::vector<EquityObservation> equity;
    std::vector<FirmMarketRow> firm_market;
    std::vector<MacroRow> macro;
};

std::vector<MacroRow> load_macro(const std::filesystem::path& path);
StatementTable load_statements(const std::filesystem::path& path, const std::string& missing_token = "NA");
std::vector<EquityObservation> load_equity(const std::filesystem::path& path);
std::vector<FirmMarketRow> load_firm_market(const std::filesystem::path& path);

void write_raw_tables(const RawTables& raw, const std::filesystem::path& dir);

struct FeatureBuildOptions {
    MertonOptions merton;
    bool naive_dd = false;
    bool impute = true;
};

struct FeatureBuildReport {
    std::size_t series_used = 0;
    std::size_t series_skipped = 0;
    std::size_t dd_not_converged = 0;
    std::size_t dropped_missing_macro = 0;
};

/// Market-model statistics, relative size and distance to default per
/// firm-year of observation, then alignment, industry aggregates and imputation.
Panel build_feature_panel(const RawTables& raw, const FeatureBuildOptions& options = {},
                          FeatureBuildReport* report = nullptr);

/// Raw tables consistent with a synthetic universe, for exercising the
/// feature pipeline without vendor data.
RawTables synthesize_raw(const SyntheticSpec& spec, int periods_per_year = 52);

}  // namespace distress

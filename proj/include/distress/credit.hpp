#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "distress/core.hpp"
#include "distress/eval.hpp"

namespace distress {

enum class IncomeAverage {
    per_year,  // totals divided by the number of simulated years
    per_loan,  // totals divided by the algorithm's funded loans
};

struct MarketConfig {
    std::int64_t market_size_cents = 100'000'000LL * 100;  // per year
    double lgd = 0.45;
    std::map<int, double> k_by_year;  // base spread applied to loans of that forecast year
    IncomeAverage average = IncomeAverage::per_year;
};

void validate(const MarketConfig& config);

/// Two-column file `year,k`.
std::map<int, double> load_base_spreads(const std::filesystem::path& path);

/// p/(1-p) * LGD + k; +infinity at p = 1 (such a quote never wins).
double quote_spread(double p, const MarketConfig& config, int year);

struct Loan {
    int year = 0;
    std::string firm_id;
    bool defaulted = false;
};

/// One competing algorithm: default probabilities keyed by (year, firm).
struct Competitor {
    std::string name;
    std::map<std::pair<int, std::string>, double> probability;
};

struct AlgorithmEconomics {
    std::string name;
    std::int64_t loans_funded = 0;
    std::int64_t loans_defaulted = 0;
    std::int64_t funded_cents = 0;
    std::int64_t income_cents = 0;
    std::int64_t losses_cents = 0;
    std::int64_t profit_cents = 0;  // income - losses
    double default_rate_pct = kUndefined;
    double market_share_pct = 0.0;
    double annual_income_thousands = 0.0;
    double annual_losses_thousands = 0.0;
    double annual_profit_thousands = 0.0;
    double roa_pct = kUndefined;  // profit / funded face value
};

struct MarketResult {
    std::vector<AlgorithmEconomics> algorithms;  // competitor order
    std::int64_t total_loans = 0;
    std::int64_t unfunded_loans = 0;  // every quote infinite
    int years = 0;
    std::vector<std::string> ties;  // "year,firm: a=b -> a"
};

/// Equal loans per year summing to the market size (remainder in the last loan
/// of the year, firms in id order); each loan goes to the lowest spread, ties to
/// the earliest competitor. Non-defaulted loans earn spread x size, defaulted
/// loans lose LGD x size, both rounded to the cent.
MarketResult simulate_competition(const std::vector<Loan>& loans, const std::vector<Competitor>& competitors,
                                  const MarketConfig& config);

/// Maps survival-forest risk scores s >= 0 into [0,1) by s/(1+s).
double squash_risk_score(double s);

/// Loans and competitors from walk-forward forecasts, one forecast list per
/// algorithm over the same firm-years. Survival-forest scores are squashed.
std::pair<std::vector<Loan>, std::vector<Competitor>> competition_inputs(
    const std::vector<std::vector<ForecastSet>>& per_algorithm);

/// Table 5 layout.
std::string table5_csv(const MarketResult& result);

}  // namespace distress

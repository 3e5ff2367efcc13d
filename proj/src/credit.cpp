#include "distress/credit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace distress {

void validate(const MarketConfig& c) {
    if (c.market_size_cents <= 0) throw ManifestError("credit market: market size must be positive");
    if (!(c.lgd > 0.0 && c.lgd < 1.0)) throw ManifestError("credit market: LGD must lie in (0,1)");
    for (const auto& [year, k] : c.k_by_year)
        if (!(k >= 0.0) || !std::isfinite(k))
            throw ManifestError("credit market: base spread for " + std::to_string(year) + " must be >= 0");
}

std::map<int, double> load_base_spreads(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path);
    const std::size_t cy = t.column("year"), ck = t.column("k");
    std::map<int, double> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const std::string ctx = path.string() + " row " + std::to_string(r + 1);
        const int year = static_cast<int>(parse_int(t.rows[r][cy], ctx));
        const double k = parse_double(t.rows[r][ck], ctx);
        if (!(k >= 0.0)) throw DataError(ctx + ": base spread must be >= 0");
        if (!out.emplace(year, k).second) throw DataError(ctx + ": duplicate year " + std::to_string(year));
    }
    return out;
}

double quote_spread(double p, const MarketConfig& config, int year) {
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("quote_spread: probability outside [0,1]: " + format_double(p));
    const auto it = config.k_by_year.find(year);
    if (it == config.k_by_year.end()) throw DataError("quote_spread: no base spread for year " + std::to_string(year));
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    return p / (1.0 - p) * config.lgd + it->second;
}

double squash_risk_score(double s) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw DataError("risk score must be finite and >= 0");
    return std::min(s / (1.0 + s), std::nextafter(1.0, 0.0));
}

MarketResult simulate_competition(const std::vector<Loan>& loans, const std::vector<Competitor>& competitors,
                                  const MarketConfig& config) {
    validate(config);
    if (competitors.empty()) throw DataError("credit market: no competing algorithms");
    MarketResult result;
    for (const auto& c : competitors) result.algorithms.push_back({.name = c.name});

    std::map<int, std::vector<const Loan*>> by_year;
    for (const auto& loan : loans) by_year[loan.year].push_back(&loan);
    result.years = static_cast<int>(by_year.size());

    std::vector<double> spreads(competitors.size());
    for (auto& [year, year_loans] : by_year) {
        std::sort(year_loans.begin(), year_loans.end(),
                  [](const Loan* a, const Loan* b) { return a->firm_id < b->firm_id; });
        const auto n = static_cast<std::int64_t>(year_loans.size());
        const std::int64_t size = config.market_size_cents / n;
        const std::int64_t remainder = config.market_size_cents - size * n;
        for (std::int64_t i = 0; i < n; ++i) {
            const Loan& loan = *year_loans[static_cast<std::size_t>(i)];
            const std::int64_t face = size + (i == n - 1 ? remainder : 0);
            ++result.total_loans;
            for (std::size_t a = 0; a < competitors.size(); ++a) {
                const auto it = competitors[a].probability.find({year, loan.firm_id});
                if (it == competitors[a].probability.end())
                    throw DataError("credit market: no score from " + competitors[a].name + " for firm " + loan.firm_id +
                                    " in " + std::to_string(year));
                spreads[a] = quote_spread(it->second, config, year);
            }
            const auto best = std::min_element(spreads.begin(), spreads.end());
            if (std::isinf(*best)) {
                ++result.unfunded_loans;
                continue;
            }
            const auto winner = static_cast<std::size_t>(best - spreads.begin());
            std::vector<std::string> tied;
            for (std::size_t a = 0; a < spreads.size(); ++a)
                if (spreads[a] == *best) tied.push_back(competitors[a].name);
            if (tied.size() > 1) {
                std::string entry = std::to_string(year) + "," + loan.firm_id + ": ";
                for (std::size_t k = 0; k < tied.size(); ++k) entry += (k ? "=" : "") + tied[k];
                result.ties.push_back(entry + " -> " + competitors[winner].name);
            }
            auto& e = result.algorithms[winner];
            ++e.loans_funded;
            e.funded_cents += face;
            if (loan.defaulted) {
                ++e.loans_defaulted;
                e.losses_cents += std::llround(config.lgd * static_cast<double>(face));
            } else {
                e.income_cents += std::llround(*best * static_cast<double>(face));
            }
        }
    }

    const std::int64_t funded_total = result.total_loans - result.unfunded_loans;
    for (auto& e : result.algorithms) {
        e.profit_cents = e.income_cents - e.losses_cents;
        if (e.loans_funded > 0) {
            e.default_rate_pct = 100.0 * static_cast<double>(e.loans_defaulted) / static_cast<double>(e.loans_funded);
            e.roa_pct = 100.0 * static_cast<double>(e.profit_cents) / static_cast<double>(e.funded_cents);
        }
        e.market_share_pct =
            funded_total > 0 ? 100.0 * static_cast<double>(e.loans_funded) / static_cast<double>(funded_total) : 0.0;
        const double divisor = config.average == IncomeAverage::per_year ? static_cast<double>(result.years)
                                                                         : static_cast<double>(e.loans_funded);
        auto thousands = [&](std::int64_t cents) {
            return divisor > 0.0 ? static_cast<double>(cents) / 100.0 / 1000.0 / divisor : 0.0;
        };
        e.annual_income_thousands = thousands(e.income_cents);
        e.annual_losses_thousands = thousands(e.losses_cents);
        e.annual_profit_thousands = thousands(e.profit_cents);
    }
    return result;
}

std::pair<std::vector<Loan>, std::vector<Competitor>> competition_inputs(
    const std::vector<std::vector<ForecastSet>>& per_algorithm) {
    if (per_algorithm.empty()) throw DataError("credit market: no forecasts");
    std::vector<Loan> loans;
    for (const auto& f : per_algorithm.front())
        for (Eigen::Index i = 0; i < f.scores.size(); ++i)
            loans.push_back({f.test_year, f.firm_ids[static_cast<std::size_t>(i)], f.labels[i] != 0.0});
    std::vector<Competitor> competitors;
    for (const auto& forecasts : per_algorithm) {
        if (forecasts.empty()) throw DataError("credit market: an algorithm has no forecasts");
        Competitor c;
        c.name = to_string(forecasts.front().family);
        for (const auto& f : forecasts) {
            const bool squash = f.family == Family::survival_forest;
            for (Eigen::Index i = 0; i < f.scores.size(); ++i)
                c.probability[{f.test_year, f.firm_ids[static_cast<std::size_t>(i)]}] =
                    squash ? squash_risk_score(f.scores[i]) : f.scores[i];
        }
        competitors.push_back(std::move(c));
    }
    return {std::move(loans), std::move(competitors)};
}

std::string table5_csv(const MarketResult& r) {
    CsvTable t;
    t.header = {"algorithm",           "loans_funded",   "loans_defaulted", "default_rate_pct", "market_share_pct",
                "annual_interest_income", "annual_losses", "annual_profit",   "roa_pct"};
    for (const auto& e : r.algorithms)
        t.rows.push_back({e.name, std::to_string(e.loans_funded), std::to_string(e.loans_defaulted),
                          format_double(e.default_rate_pct), format_double(e.market_share_pct),
                          format_double(e.annual_income_thousands), format_double(e.annual_losses_thousands),
                          format_double(e.annual_profit_thousands), format_double(e.roa_pct)});
    return to_csv(t);
}

}  // namespace distress

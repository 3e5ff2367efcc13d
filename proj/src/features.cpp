#include "distress/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

namespace distress {

namespace {

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double compounded(const std::vector<double>& returns) {
    double g = 1.0;
    for (double r : returns) g *= 1.0 + r;
    return g - 1.0;
}

}  // namespace

void validate(const EquitySeries& s) {
    if (s.returns.size() != s.index_returns.size())
        throw DataError(s.firm_id + ": firm and index return series differ in length");
    if (s.returns.size() < kMinReturnObservations)
        throw DataError(s.firm_id + ": " + std::to_string(s.returns.size()) + " return observations, need " +
                        std::to_string(kMinReturnObservations));
    if (!(s.face_debt > 0.0)) throw DataError(s.firm_id + ": face value of debt must be positive");
    if (!(s.market_equity > 0.0)) throw DataError(s.firm_id + ": market equity must be positive");
    for (double r : s.returns)
        if (!(r > -1.0) || !std::isfinite(r)) throw DataError(s.firm_id + ": return outside (-1, inf)");
}

MarketModelStats market_model_stats(const EquitySeries& s) {
    validate(s);
    const std::size_t n = s.returns.size();
    const double mf = mean_of(s.returns);
    const double mm = mean_of(s.index_returns);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sxy += (s.index_returns[k] - mm) * (s.returns[k] - mf);
        sxx += (s.index_returns[k] - mm) * (s.index_returns[k] - mm);
    }
    const bool flat = std::all_of(s.index_returns.begin(), s.index_returns.end(),
                                  [&](double x) { return x == s.index_returns.front(); });
    if (flat || !(sxx > 0.0)) throw DataError(s.firm_id + ": index returns have zero variance");
    MarketModelStats out;
    out.beta = sxy / sxx;
    const double alpha = mf - out.beta * mm;
    std::vector<double> resid(n);
    for (std::size_t k = 0; k < n; ++k) resid[k] = s.returns[k] - alpha - out.beta * s.index_returns[k];
    out.sigma = sample_sd(resid);
    out.annual_excess_return = compounded(s.returns) - compounded(s.index_returns);
    return out;
}

double relative_size(double firm_mktcap, double total_mktcap) {
    if (!(firm_mktcap > 0.0) || !(total_mktcap > 0.0))
        throw DataError("relative_size: market capitalizations must be positive");
    return std::log(firm_mktcap / total_mktcap);
}

// ---------------------------------------------------------------------------

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double equity_call_value(double assets, double face_debt, double rate, double asset_vol, double horizon) {
    const double st = asset_vol * std::sqrt(horizon);
    const double d1 = (std::log(assets / face_debt) + (rate + 0.5 * asset_vol * asset_vol) * horizon) / st;
    const double d2 = d1 - st;
    return assets * normal_cdf(d1) - face_debt * std::exp(-rate * horizon) * normal_cdf(d2);
}

double implied_asset_value(double equity, double face_debt, double rate, double asset_vol, double horizon) {
    const double discounted = face_debt * std::exp(-rate * horizon);
    double lo = equity;
    double hi = equity + discounted * 1e3;
    auto f = [&](double v) { return equity_call_value(v, face_debt, rate, asset_vol, horizon) - equity; };
    double f_lo = f(lo);
    const double f_hi = f(hi);
    if (f_lo > 0.0 || f_hi < 0.0 || !std::isfinite(f_lo) || !std::isfinite(f_hi))
        throw NumericalError("implied_asset_value: root not bracketed");
    if (f_lo == 0.0) return lo;
    double best = hi, best_err = std::abs(f_hi);
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (std::abs(fm) < best_err) {
            best = mid;
            best_err = std::abs(fm);
        }
        if (fm == 0.0) break;
        if (fm < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= 1e-10 * lo && best_err <= 1e-12 * equity) break;
    }
    return best;
}

double distance_to_default(double assets, double face_debt, double drift, double asset_vol, double horizon) {
    return (std::log(assets / face_debt) + (drift - 0.5 * asset_vol * asset_vol) * horizon) /
           (asset_vol * std::sqrt(horizon));
}

StructuralResult merton_dd(const EquitySeries& s, const MertonOptions& opt) {
    validate(s);
    if (s.risk_free < 0.0) throw DataError(s.firm_id + ": negative risk-free rate");
    const std::size_t n = s.returns.size();
    const double ppy = s.annualization();
    const double F = s.face_debt;
    const double r = s.risk_free;
    const double T = opt.horizon;

    StructuralResult out;
    out.equity_path.resize(n + 1);
    out.equity_path[n] = s.market_equity;
    for (std::size_t k = n; k > 0; --k) out.equity_path[k - 1] = out.equity_path[k] / (1.0 + s.returns[k - 1]);

    std::vector<double> log_equity(n);
    for (std::size_t k = 0; k < n; ++k) log_equity[k] = std::log(out.equity_path[k + 1] / out.equity_path[k]);
    const double sigma_e = sample_sd(log_equity) * std::sqrt(ppy);
    if (!(sigma_e > 0.0)) throw NumericalError(s.firm_id + ": equity volatility is zero");

    double sigma_v = sigma_e * s.market_equity / (s.market_equity + F);
    std::vector<double> assets(n + 1);
    std::vector<double> log_assets(n);
    auto solve_path = [&](double vol) {
        for (std::size_t k = 0; k <= n; ++k) assets[k] = implied_asset_value(out.equity_path[k], F, r, vol, T);
        for (std::size_t k = 0; k < n; ++k) log_assets[k] = std::log(assets[k + 1] / assets[k]);
    };

    for (out.iterations = 1; out.iterations <= opt.max_iterations; ++out.iterations) {
        solve_path(sigma_v);
        const double next = sample_sd(log_assets) * std::sqrt(ppy);
        const double change = std::abs(next - sigma_v);
        sigma_v = next;
        if (!(sigma_v > 0.0) || !std::isfinite(sigma_v)) break;
        if (change < opt.tolerance) {
            out.converged = true;
            break;
        }
    }
    out.iterations = std::min(out.iterations, opt.max_iterations);
    if (!(sigma_v > 0.0) || !std::isfinite(sigma_v)) {
        out.converged = false;
        out.asset_volatility = sigma_v;
        out.asset_value = assets[n];
        out.distance_to_default = kMissing;
        return out;
    }
    solve_path(sigma_v);
    double drift = mean_of(log_assets) * ppy;
    if (opt.floor_drift) drift = std::max(drift, r - opt.drift_floor_gap);

    out.asset_volatility = sigma_v;
    out.asset_value = assets[n];
    out.drift = drift;
    out.asset_path = assets;
    out.distance_to_default = distance_to_default(out.asset_value, F, drift, sigma_v, T);
    return out;
}

double naive_distance_to_default(const EquitySeries& s, double prior_year_return, double horizon) {
    validate(s);
    std::vector<double> log_returns(s.returns.size());
    for (std::size_t k = 0; k < s.returns.size(); ++k) log_returns[k] = std::log1p(s.returns[k]);
    const double sigma_e = sample_sd(log_returns) * std::sqrt(s.annualization());
    const double E = s.market_equity;
    const double F = s.face_debt;
    const double sigma_d = 0.05 + 0.25 * sigma_e;
    const double sigma_v = E / (E + F) * sigma_e + F / (E + F) * sigma_d;
    return distance_to_default(E + F, F, prior_year_return, sigma_v, horizon);
}

// ---------------------------------------------------------------------------

std::map<int, IndustryAggregate> industry_aggregates(const Panel& panel, int year, const IndustryColumns& cols) {
    const std::size_t j_sales = panel.feature_index(cols.sales);
    const std::size_t j_sigma = panel.feature_index(cols.sigma);
    const std::size_t j_tlat = panel.feature_index(cols.tl_at);

    struct Acc {
        std::size_t members = 0;
        std::vector<double> sales, sigma, tlat;
        int defaults_1 = 0;
        int defaults_2 = 0;
    };
    std::map<int, Acc> acc;
    for (const auto& r : panel.records()) {
        if (r.year == year) {
            auto& a = acc[r.industry];
            ++a.members;
            const double s = r.features[j_sales];
            if (!is_missing(s) && s >= 0.0) a.sales.push_back(s);
            if (!is_missing(r.features[j_sigma])) a.sigma.push_back(r.features[j_sigma]);
            if (!is_missing(r.features[j_tlat])) a.tlat.push_back(r.features[j_tlat]);
        }
        if (r.defaulted_next_year == 1) {
            if (r.year == year - 2) {
                ++acc[r.industry].defaults_1;
                ++acc[r.industry].defaults_2;
            } else if (r.year == year - 3) {
                ++acc[r.industry].defaults_2;
            }
        }
    }

    auto median = [](std::vector<double> v) {
        if (v.empty()) return kMissing;
        std::sort(v.begin(), v.end());
        return quantile_sorted(v, 0.5);
    };

    std::map<int, IndustryAggregate> out;
    for (int code = 1; code <= 12; ++code) {
        IndustryAggregate agg;
        auto it = acc.find(code);
        if (it != acc.end() && it->second.members > 0) {
            const auto& a = it->second;
            const double total = std::accumulate(a.sales.begin(), a.sales.end(), 0.0);
            if (total > 0.0) {
                double hh = 0.0;
                for (double s : a.sales) hh += (s / total) * (s / total);
                agg.hh_sales = hh;
            }
            agg.median_sigma = median(a.sigma);
            agg.median_tl_at = median(a.tlat);
            agg.defaults_last_1yr = a.defaults_1;
            agg.defaults_last_2yr = a.defaults_2;
        }
        out[code] = agg;
    }
    return out;
}

Panel add_industry_features(const Panel& panel, const IndustryColumns& columns) {
    auto schema = panel.schema();
    for (const char* name : {"industry_hh_sales", "industry_median_sigma", "industry_median_tl_at",
                             "industry_defaults_last_1yr", "industry_defaults_last_2yr"})
        schema.push_back({name, FeatureGroup::industry});

    std::map<int, std::map<int, IndustryAggregate>> by_year;
    for (int y = panel.year_range().first; y <= panel.year_range().second && !panel.empty(); ++y)
        by_year[y] = industry_aggregates(panel, y, columns);

    auto records = panel.records();
    for (auto& r : records) {
        const auto& a = by_year.at(r.year).at(r.industry);
        r.features.insert(r.features.end(),
                          {a.hh_sales, a.median_sigma, a.median_tl_at, a.defaults_last_1yr, a.defaults_last_2yr});
    }
    return Panel(std::move(schema), std::move(records));
}

// ---------------------------------------------------------------------------

Date parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        throw DataError("date '" + std::string(text) + "' is not YYYY-MM-DD");
    Date d;
    d.year = static_cast<int>(parse_int(text.substr(0, 4), "date year"));
    d.month = static_cast<int>(parse_int(text.substr(5, 2), "date month"));
    d.day = static_cast<int>(parse_int(text.substr(8, 2), "date day"));
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31)
        throw DataError("date '" + std::string(text) + "' out of range");
    return d;
}

namespace {

std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

}  // namespace

bool statement_eligible(const Date& period_end, int year) { return period_end <= Date{year - 1, 6, 30}; }

AlignResult align_predictors(const AlignInputs& in) {
    std::unordered_map<std::string, std::vector<const StatementTable::Row*>> statements;
    for (const auto& row : in.statements.rows) statements[row.firm_id].push_back(&row);
    for (auto& [firm, rows] : statements)
        std::stable_sort(rows.begin(), rows.end(),
                         [](const auto* a, const auto* b) { return a->period_end < b->period_end; });

    std::map<std::pair<std::string, int>, const MarketFeatureRow*> market;
    for (const auto& row : in.market) market[{row.firm_id, row.year}] = &row;
    std::map<int, const MacroRow*> macro;
    for (const auto& row : in.macro) {
        if (!macro.emplace(row.year, &row).second)
            throw DataError("macro table has two rows for " + std::to_string(row.year));
        if (row.recession != 0.0 && row.recession != 1.0)
            throw DataError("macro recession flag outside {0,1} in " + std::to_string(row.year));
    }

    std::vector<FeatureSpec> schema;
    for (const auto& f : in.statements.fields) schema.push_back({f, FeatureGroup::accounting});
    for (const auto& f : in.market_fields) {
        const auto g = default_group_for(f);
        schema.push_back({f, g == FeatureGroup::structural ? g : FeatureGroup::market});
    }
    for (const auto& f : macro_feature_names()) schema.push_back({f, FeatureGroup::macro});

    AlignResult out;
    std::vector<FirmYearRecord> records;
    for (const auto& u : in.universe.records()) {
        auto m = macro.find(u.year - 1);
        if (m == macro.end()) {
            ++out.dropped_missing_macro;
            continue;
        }
        FirmYearRecord r = u;
        r.features.clear();
        r.features.reserve(schema.size());

        const StatementTable::Row* chosen = nullptr;
        if (auto it = statements.find(u.firm_id); it != statements.end())
            for (const auto* row : it->second)
                if (statement_eligible(row->period_end, u.year)) chosen = row;
        for (std::size_t k = 0; k < in.statements.fields.size(); ++k)
            r.features.push_back(chosen ? chosen->values[k] : kMissing);

        auto mk = market.find({u.firm_id, u.year - 1});
        for (const auto& f : in.market_fields) {
            double v = kMissing;
            if (mk != market.end())
                if (auto vit = mk->second->values.find(f); vit != mk->second->values.end()) v = vit->second;
            r.features.push_back(v);
        }

        const MacroRow& mr = *m->second;
        r.features.insert(r.features.end(), {mr.term_spread, mr.credit_spread, mr.recession, mr.inflation,
                                             mr.gdp_growth, mr.unemployment, mr.industrial_production});
        records.push_back(std::move(r));
    }
    out.panel = Panel(std::move(schema), std::move(records));
    return out;
}

// ---------------------------------------------------------------------------

std::vector<MacroRow> load_macro(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path);
    const std::string src = path.string();
    const std::size_t c_year = t.column("year");
    std::vector<std::size_t> cols;
    for (const auto& name : macro_feature_names()) cols.push_back(t.column(name));
    std::vector<MacroRow> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::string ctx = src + " row " + std::to_string(i + 1);
        MacroRow m;
        m.year = static_cast<int>(parse_int(row[c_year], ctx));
        double* fields[] = {&m.term_spread, &m.credit_spread, &m.recession,           &m.inflation,
                            &m.gdp_growth,  &m.unemployment,  &m.industrial_production};
        for (std::size_t k = 0; k < cols.size(); ++k) *fields[k] = parse_double(row[cols[k]], ctx);
        out.push_back(m);
    }
    return out;
}

StatementTable load_statements(const std::filesystem::path& path, const std::string& missing_token) {
    const CsvTable t = read_csv(path);
    const std::size_t c_firm = t.column("firm_id");
    const std::size_t c_end = t.column("period_end");
    StatementTable out;
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < t.header.size(); ++c)
        if (c != c_firm && c != c_end) {
            out.fields.push_back(t.header[c]);
            cols.push_back(c);
        }
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::string ctx = path.string() + " row " + std::to_string(i + 1);
        StatementTable::Row r;
        r.firm_id = row[c_firm];
        r.period_end = parse_date(row[c_end]);
        for (std::size_t c : cols)
            r.values.push_back(row[c] == missing_token || row[c].empty() ? kMissing : parse_double(row[c], ctx));
        out.rows.push_back(std::move(r));
    }
    return out;
}

std::vector<EquityObservation> load_equity(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path);
    const std::size_t c_firm = t.column("firm_id");
    const std::size_t c_date = t.column("date");
    const std::size_t c_ret = t.column("return");
    const std::size_t c_idx = t.column("index_return");
    std::vector<EquityObservation> out;
    out.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::string ctx = path.string() + " row " + std::to_string(i + 1);
        out.push_back({row[c_firm], parse_date(row[c_date]), parse_double(row[c_ret], ctx),
                       parse_double(row[c_idx], ctx)});
    }
    return out;
}

std::vector<FirmMarketRow> load_firm_market(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path);
    const std::size_t c[] = {t.column("firm_id"),    t.column("year"),             t.column("market_equity"),
                             t.column("face_debt"), t.column("total_market_cap"), t.column("risk_free")};
    std::vector<FirmMarketRow> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::string ctx = path.string() + " row " + std::to_string(i + 1);
        out.push_back({row[c[0]], static_cast<int>(parse_int(row[c[1]], ctx)), parse_double(row[c[2]], ctx),
                       parse_double(row[c[3]], ctx), parse_double(row[c[4]], ctx), parse_double(row[c[5]], ctx)});
    }
    return out;
}

void write_raw_tables(const RawTables& raw, const std::filesystem::path& dir) {
    write_file_atomic(dir / "events.csv", panel_csv(raw.universe));

    CsvTable st;
    st.header = {"firm_id", "period_end"};
    st.header.insert(st.header.end(), raw.statements.fields.begin(), raw.statements.fields.end());
    for (const auto& r : raw.statements.rows) {
        std::vector<std::string> row = {r.firm_id, format_date(r.period_end)};
        for (double v : r.values) row.push_back(format_double(v));
        st.rows.push_back(std::move(row));
    }
    write_file_atomic(dir / "statements.csv", to_csv(st));

    CsvTable eq;
    eq.header = {"firm_id", "date", "return", "index_return"};
    eq.rows.reserve(raw.equity.size());
    for (const auto& e : raw.equity)
        eq.rows.push_back({e.firm_id, format_date(e.date), format_double(e.ret), format_double(e.index_ret)});
    write_file_atomic(dir / "equity.csv", to_csv(eq));

    CsvTable fm;
    fm.header = {"firm_id", "year", "market_equity", "face_debt", "total_market_cap", "risk_free"};
    for (const auto& m : raw.firm_market)
        fm.rows.push_back({m.firm_id, std::to_string(m.year), format_double(m.market_equity),
                           format_double(m.face_debt), format_double(m.total_market_cap),
                           format_double(m.risk_free)});
    write_file_atomic(dir / "firm_market.csv", to_csv(fm));

    CsvTable mc;
    mc.header = {"year"};
    for (const auto& n : macro_feature_names()) mc.header.push_back(n);
    for (const auto& m : raw.macro)
        mc.rows.push_back({std::to_string(m.year), format_double(m.term_spread), format_double(m.credit_spread),
                           format_double(m.recession), format_double(m.inflation), format_double(m.gdp_growth),
                           format_double(m.unemployment), format_double(m.industrial_production)});
    write_file_atomic(dir / "macro.csv", to_csv(mc));
}

// ---------------------------------------------------------------------------

Panel build_feature_panel(const RawTables& raw, const FeatureBuildOptions& options, FeatureBuildReport* report) {
    FeatureBuildReport rep;

    std::map<std::pair<std::string, int>, std::vector<const EquityObservation*>> series;
    for (const auto& e : raw.equity) series[{e.firm_id, e.date.year}].push_back(&e);
    for (auto& [key, obs] : series)
        std::stable_sort(obs.begin(), obs.end(), [](const auto* a, const auto* b) { return a->date < b->date; });

    const std::vector<std::string> market_fields = {"distance_to_default", "sigma",
                                                    "beta", "annual_excess_return",
                                                    "lag_annual_excess_return", "relative_size",
                                                    "mkt_equity_debt"};

    std::vector<MarketFeatureRow> market(raw.firm_market.size());
    std::vector<char> used(raw.firm_market.size(), 0);
    std::vector<char> converged(raw.firm_market.size(), 1);
    parallel_for(raw.firm_market.size(), [&](std::size_t i) {
        const auto& fm = raw.firm_market[i];
        auto& out = market[i];
        out.firm_id = fm.firm_id;
        out.year = fm.year;
        if (fm.market_equity > 0.0 && fm.total_market_cap > 0.0)
            out.values["relative_size"] = relative_size(fm.market_equity, fm.total_market_cap);
        if (fm.market_equity > 0.0 && fm.face_debt > 0.0) out.values["mkt_equity_debt"] = fm.market_equity / fm.face_debt;
        auto it = series.find({fm.firm_id, fm.year});
        if (it == series.end() || it->second.size() < kMinReturnObservations) return;
        EquitySeries s;
        s.firm_id = fm.firm_id;
        for (const auto* o : it->second) {
            s.returns.push_back(o->ret);
            s.index_returns.push_back(o->index_ret);
        }
        s.market_equity = fm.market_equity;
        s.face_debt = fm.face_debt;
        s.risk_free = fm.risk_free;
        try {
            const auto stats = market_model_stats(s);
            out.values["beta"] = stats.beta;
            out.values["sigma"] = stats.sigma;
            out.values["annual_excess_return"] = stats.annual_excess_return;
            if (options.naive_dd) {
                out.values["distance_to_default"] =
                    naive_distance_to_default(s, compounded(s.returns), options.merton.horizon);
            } else {
                const auto dd = merton_dd(s, options.merton);
                converged[i] = dd.converged;
                if (!is_missing(dd.distance_to_default)) out.values["distance_to_default"] = dd.distance_to_default;
            }
            used[i] = 1;
        } catch (const DataError&) {
        } catch (const NumericalError&) {
            converged[i] = 0;
        }
    });
    std::map<std::pair<std::string, int>, double> excess;
    for (std::size_t i = 0; i < market.size(); ++i) {
        if (used[i]) ++rep.series_used; else ++rep.series_skipped;
        if (!converged[i]) ++rep.dd_not_converged;
        if (auto it = market[i].values.find("annual_excess_return"); it != market[i].values.end())
            excess[{market[i].firm_id, market[i].year}] = it->second;
    }
    for (auto& row : market)
        if (auto it = excess.find({row.firm_id, row.year - 1}); it != excess.end())
            row.values["lag_annual_excess_return"] = it->second;

    AlignInputs in{raw.universe, raw.statements, std::move(market), raw.macro, market_fields};
    auto aligned = align_predictors(in);
    rep.dropped_missing_macro = aligned.dropped_missing_macro;

    Panel panel = aligned.panel;
    if (panel.find_feature("sales") && panel.find_feature("sigma") && panel.find_feature("liabilities_assets"))
        panel = add_industry_features(panel);
    if (options.impute) panel = impute_last_observation(panel);
    if (report) *report = rep;
    return panel;
}

// ---------------------------------------------------------------------------

namespace {

bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
    static constexpr int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && leap(y) ? 29 : days[m - 1];
}

Date day_of_year(int year, int day_index) {
    Date d{year, 1, 1};
    while (day_index >= days_in_month(year, d.month)) {
        day_index -= days_in_month(year, d.month);
        ++d.month;
    }
    d.day = day_index + 1;
    return d;
}

}  // namespace

RawTables synthesize_raw(const SyntheticSpec& spec, int periods_per_year) {
    const Panel full = synthesize_panel(spec);
    std::vector<FirmYearRecord> universe_records = full.records();
    std::map<std::pair<std::string, int>, double> risk;
    const double b0 = calibrated_intercept(spec.base_hazard, [&] {
        double s = 0.0;
        for (const auto& [n, w] : spec.signal_weights) s += w * w;
        return std::sqrt(s);
    }());
    const Eigen::VectorXd logits = true_logits(spec, full);
    for (std::size_t i = 0; i < full.size(); ++i) {
        const auto& r = full.records()[i];
        risk[{r.firm_id, r.year}] = spec.signal_weights.empty() ? 0.0 : logits[static_cast<Eigen::Index>(i)] - b0;
    }
    for (auto& r : universe_records) r.features.clear();

    RawTables raw;
    raw.universe = Panel({}, std::move(universe_records));
    raw.statements.fields = {"net_income_assets", "liabilities_assets", "sales"};

    std::mt19937_64 rng(mix_seed(spec.seed, 11));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    const int first = spec.years.first - 2;
    const int last = spec.years.second;
    std::map<int, std::vector<double>> index_returns;
    const double step = 1.0 / periods_per_year;
    for (int y = first; y <= last; ++y) {
        auto& v = index_returns[y];
        for (int k = 0; k < periods_per_year; ++k) v.push_back(0.08 * step + 0.16 * std::sqrt(step) * normal(rng));
        MacroRow m;
        m.year = y;
        m.term_spread = 1.5 + normal(rng);
        m.credit_spread = 1.0 + 0.3 * std::abs(normal(rng));
        m.recession = uniform(rng) < 0.15 ? 1.0 : 0.0;
        m.inflation = 3.0 + normal(rng);
        m.gdp_growth = 2.5 + 1.5 * normal(rng);
        m.unemployment = 6.0 + normal(rng);
        m.industrial_production = 2.0 + 3.0 * normal(rng);
        raw.macro.push_back(m);
    }

    std::map<std::string, std::pair<int, int>> firm_years;
    for (const auto& r : full.records()) {
        auto [it, inserted] = firm_years.try_emplace(r.firm_id, r.year, r.year);
        it->second.first = std::min(it->second.first, r.year);
        it->second.second = std::max(it->second.second, r.year);
    }
    const int fye_months[] = {3, 6, 9, 12};
    for (const auto& [firm, span] : firm_years) {
        const int fye = fye_months[static_cast<int>(uniform(rng) * 4) % 4];
        const double beta = 0.6 + 0.8 * uniform(rng);
        const double size = std::exp(6.0 + normal(rng));
        for (int y = span.first - 2; y < span.second; ++y) {
            auto rk = risk.find({firm, y + 1});
            const double z = rk != risk.end() ? rk->second : 0.0;
            const double leverage = std::clamp(0.45 + 0.12 * z + 0.08 * normal(rng), 0.05, 0.95);
            raw.statements.rows.push_back({firm,
                                           Date{y, fye, days_in_month(y, fye)},
                                           {0.04 - 0.03 * z + 0.03 * normal(rng), leverage,
                                            std::exp(5.0 + 0.2 * std::log(size) + normal(rng))}});
            const double idio = (0.25 + 0.1 * std::max(z, 0.0)) * std::sqrt(step);
            const auto& m = index_returns.at(y);
            for (int k = 0; k < periods_per_year; ++k) {
                const double ret = std::max(-0.9, beta * m[k] - 0.02 * z * step + idio * normal(rng));
                raw.equity.push_back({firm, day_of_year(y, (k * 365) / periods_per_year), ret, m[k]});
            }
            const double equity = size * std::exp(-0.3 * z + 0.2 * normal(rng));
            raw.firm_market.push_back({firm, y, equity, equity * leverage / (1.0 - leverage) * 1.5, 1e7, 0.03});
        }
    }
    return raw;
}

}  // namespace distress

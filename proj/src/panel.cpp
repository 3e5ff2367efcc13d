#include "distress/panel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include "json.hpp"

namespace distress {

namespace {

struct CatalogEntry {
    std::string_view name;
    FeatureGroup group;
};

constexpr CatalogEntry kCatalog[] = {
    {"distance_to_default", FeatureGroup::structural},
    {"sigma", FeatureGroup::market},
    {"beta", FeatureGroup::market},
    {"annual_excess_return", FeatureGroup::market},
    {"lag_annual_excess_return", FeatureGroup::market},
    {"relative_size", FeatureGroup::market},
    {"mkt_equity_debt", FeatureGroup::market},
    {"pe_ratio", FeatureGroup::market},
    {"industry_hh_sales", FeatureGroup::industry},
    {"industry_median_sigma", FeatureGroup::industry},
    {"industry_median_tl_at", FeatureGroup::industry},
    {"industry_defaults_last_1yr", FeatureGroup::industry},
    {"industry_defaults_last_2yr", FeatureGroup::industry},
    {"term_spread", FeatureGroup::macro},
    {"credit_spread", FeatureGroup::macro},
    {"recession", FeatureGroup::macro},
    {"inflation", FeatureGroup::macro},
    {"gdp_growth", FeatureGroup::macro},
    {"unemployment", FeatureGroup::macro},
    {"industrial_production", FeatureGroup::macro},
    {"lm_positive", FeatureGroup::text},
    {"lm_negative", FeatureGroup::text},
    {"lm_uncertainty", FeatureGroup::text},
    {"lm_litigious", FeatureGroup::text},
    {"gunning_fog", FeatureGroup::text},
    {"vader_polarity", FeatureGroup::text},
    {"finbert_sentiment", FeatureGroup::text},
};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

bool record_less(const FirmYearRecord& a, const FirmYearRecord& b) {
    if (a.year != b.year) return a.year < b.year;
    return a.firm_id < b.firm_id;
}

std::string_view status_text(EventStatus s) { return s == EventStatus::bankrupt ? "bankrupt" : "censored"; }

}  // namespace

std::string_view to_string(FeatureGroup group) {
    switch (group) {
        case FeatureGroup::accounting: return "accounting";
        case FeatureGroup::market: return "market";
        case FeatureGroup::industry: return "industry";
        case FeatureGroup::macro: return "macro";
        case FeatureGroup::text: return "text";
        case FeatureGroup::structural: return "structural";
    }
    return "accounting";
}

FeatureGroup parse_feature_group(std::string_view text) {
    for (auto g : {FeatureGroup::accounting, FeatureGroup::market, FeatureGroup::industry,
                   FeatureGroup::macro, FeatureGroup::text, FeatureGroup::structural})
        if (to_string(g) == text) return g;
    throw ManifestError("unknown feature group '" + std::string(text) + "'");
}

FeatureGroup default_group_for(std::string_view feature_name) {
    for (const auto& entry : kCatalog)
        if (entry.name == feature_name) return entry.group;
    return FeatureGroup::accounting;
}

// ---------------------------------------------------------------------------

Panel::Panel(std::vector<FeatureSpec> schema, std::vector<FirmYearRecord> records)
    : schema_(std::move(schema)), records_(std::move(records)) {
    std::set<std::string> names;
    for (const auto& f : schema_)
        if (!names.insert(f.name).second) throw DataError("duplicate feature name '" + f.name + "'");

    std::stable_sort(records_.begin(), records_.end(), record_less);

    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        if (r.features.size() != schema_.size())
            throw DataError("record " + r.firm_id + "/" + std::to_string(r.year) + " has " +
                            std::to_string(r.features.size()) + " features, schema has " +
                            std::to_string(schema_.size()));
        if (i > 0 && records_[i - 1].year == r.year && records_[i - 1].firm_id == r.firm_id)
            throw DataError("duplicate firm-year (" + r.firm_id + ", " + std::to_string(r.year) + ")");
        if (r.defaulted_next_year != 0 && r.defaulted_next_year != 1)
            throw DataError("label outside {0,1} for " + r.firm_id + "/" + std::to_string(r.year));
        if (r.industry < 1 || r.industry > 12)
            throw DataError("industry code outside 1..12 for " + r.firm_id + "/" + std::to_string(r.year));
        if (r.defaulted_next_year == 1) {
            if (r.event_status != EventStatus::bankrupt || r.event_time != r.year)
                throw DataError("default label without matching bankrupt event for " + r.firm_id + "/" +
                                std::to_string(r.year));
        }
    }

    if (!records_.empty()) year_range_ = {records_.front().year, records_.back().year};
}

bool survival_consistent(const Panel& panel) {
    std::set<std::pair<std::string, int>> labeled;
    for (const auto& r : panel.records())
        if (r.defaulted_next_year == 1) labeled.emplace(r.firm_id, r.year);
    for (const auto& r : panel.records())
        if (r.event_status == EventStatus::bankrupt && !labeled.contains({r.firm_id, r.event_time})) return false;
    return true;
}

std::optional<std::size_t> Panel::find_feature(std::string_view name) const {
    for (std::size_t j = 0; j < schema_.size(); ++j)
        if (schema_[j].name == name) return j;
    return std::nullopt;
}

std::size_t Panel::feature_index(std::string_view name) const {
    if (auto j = find_feature(name)) return *j;
    throw DataError("panel has no feature '" + std::string(name) + "'");
}

std::vector<std::size_t> Panel::features_in(FeatureGroup group) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < schema_.size(); ++j)
        if (schema_[j].group == group) out.push_back(j);
    return out;
}

Eigen::VectorXd Panel::column(std::size_t feature) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(records_.size()));
    for (std::size_t i = 0; i < records_.size(); ++i) out[static_cast<Eigen::Index>(i)] = records_[i].features[feature];
    return out;
}

Eigen::VectorXd Panel::labels() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(records_.size()));
    for (std::size_t i = 0; i < records_.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = records_[i].defaulted_next_year;
    return out;
}

// ---------------------------------------------------------------------------

DataManifest read_data_manifest(const std::filesystem::path& manifest_path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError(manifest_path.string() + ": " + e.what());
    }
    static const std::set<std::string> known = {"path", "firm_column", "year_column", "label_column",
                                                "event_time_column", "event_status_column",
                                                "industry_column", "missing_token", "features"};
    DataManifest m;
    try {
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!known.contains(it.key())) throw ManifestError("unknown data manifest key '" + it.key() + "'");
        m.path = j.at("path").get<std::string>();
        if (m.path.is_relative()) m.path = manifest_path.parent_path() / m.path;
        m.firm_column = j.value("firm_column", m.firm_column);
        m.year_column = j.value("year_column", m.year_column);
        m.label_column = j.value("label_column", m.label_column);
        m.event_time_column = j.value("event_time_column", m.event_time_column);
        m.event_status_column = j.value("event_status_column", m.event_status_column);
        m.industry_column = j.value("industry_column", m.industry_column);
        m.missing_token = j.value("missing_token", m.missing_token);
        for (const auto& f : j.at("features")) {
            ColumnMapping c;
            c.column = f.at("column").get<std::string>();
            c.feature = f.value("name", c.column);
            c.group = f.contains("group") ? parse_feature_group(f.at("group").get<std::string>())
                                          : default_group_for(c.feature);
            m.features.push_back(std::move(c));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError(manifest_path.string() + ": " + e.what());
    }
    return m;
}

std::string data_manifest_json(const DataManifest& m) {
    nlohmann::ordered_json j;
    j["path"] = m.path.filename().string();
    j["firm_column"] = m.firm_column;
    j["year_column"] = m.year_column;
    j["label_column"] = m.label_column;
    j["event_time_column"] = m.event_time_column;
    j["event_status_column"] = m.event_status_column;
    j["industry_column"] = m.industry_column;
    j["missing_token"] = m.missing_token;
    j["features"] = nlohmann::ordered_json::array();
    for (const auto& f : m.features)
        j["features"].push_back({{"column", f.column}, {"name", f.feature}, {"group", to_string(f.group)}});
    return j.dump(2) + "\n";
}

Panel load_panel(const DataManifest& manifest) {
    const CsvTable table = read_csv(manifest.path);
    const std::string src = manifest.path.string();

    std::set<std::string> feature_names;
    for (const auto& f : manifest.features)
        if (!feature_names.insert(f.feature).second)
            throw ManifestError("duplicate feature name '" + f.feature + "' in manifest");

    auto col = [&](const std::string& name) {
        if (!table.has_column(name)) throw DataError(src + ": header lacks mapped column '" + name + "'");
        return table.column(name);
    };
    const std::size_t c_firm = col(manifest.firm_column);
    const std::size_t c_year = col(manifest.year_column);
    const std::size_t c_label = col(manifest.label_column);
    const std::size_t c_time = col(manifest.event_time_column);
    const std::size_t c_status = col(manifest.event_status_column);
    const std::size_t c_industry = col(manifest.industry_column);
    std::vector<std::size_t> c_features;
    std::vector<FeatureSpec> schema;
    for (const auto& f : manifest.features) {
        c_features.push_back(col(f.column));
        schema.push_back({f.feature, f.group});
    }

    std::vector<FirmYearRecord> records;
    records.reserve(table.rows.size());
    std::set<std::pair<std::string, int>> seen;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::string ctx = src + " row " + std::to_string(i + 1);
        FirmYearRecord r;
        r.firm_id = row[c_firm];
        r.year = static_cast<int>(parse_int(row[c_year], ctx + " year"));
        const std::string& label = row[c_label];
        if (label == "0") {
            r.defaulted_next_year = 0;
        } else if (label == "1") {
            r.defaulted_next_year = 1;
        } else {
            throw DataError(ctx + ": label '" + label + "' outside {0,1}");
        }
        r.event_time = static_cast<int>(parse_int(row[c_time], ctx + " event_time"));
        const std::string& status = row[c_status];
        if (status == "bankrupt" || status == "1") {
            r.event_status = EventStatus::bankrupt;
        } else if (status == "censored" || status == "0") {
            r.event_status = EventStatus::censored;
        } else {
            throw DataError(ctx + ": event status '" + status + "' is neither bankrupt nor censored");
        }
        r.industry = static_cast<int>(parse_int(row[c_industry], ctx + " industry"));
        r.features.reserve(c_features.size());
        for (std::size_t k = 0; k < c_features.size(); ++k) {
            const std::string& cell = row[c_features[k]];
            if (cell == manifest.missing_token || cell.empty()) {
                r.features.push_back(kMissing);
            } else {
                r.features.push_back(parse_double(cell, ctx + " column " + manifest.features[k].column));
            }
        }
        if (!seen.emplace(r.firm_id, r.year).second)
            throw DataError(ctx + ": duplicate firm-year (" + r.firm_id + ", " + std::to_string(r.year) + ")");
        records.push_back(std::move(r));
    }
    return Panel(std::move(schema), std::move(records));
}

std::string panel_csv(const Panel& panel, std::string_view missing_token) {
    CsvTable t;
    t.header = {"firm_id", "year", "defaulted_next_year", "event_time", "event_status", "industry"};
    for (const auto& f : panel.schema()) t.header.push_back(f.name);
    t.rows.reserve(panel.size());
    for (const auto& r : panel.records()) {
        std::vector<std::string> row = {r.firm_id,
                                        std::to_string(r.year),
                                        std::to_string(r.defaulted_next_year),
                                        std::to_string(r.event_time),
                                        std::string(status_text(r.event_status)),
                                        std::to_string(r.industry)};
        for (double v : r.features) row.push_back(is_missing(v) ? std::string(missing_token) : format_double(v));
        t.rows.push_back(std::move(row));
    }
    return to_csv(t);
}

DataManifest manifest_for(const Panel& panel, const std::filesystem::path& csv_path) {
    DataManifest m;
    m.path = csv_path;
    for (const auto& f : panel.schema()) m.features.push_back({f.name, f.name, f.group});
    return m;
}

void write_panel(const Panel& panel, const std::filesystem::path& csv_path) {
    write_file_atomic(csv_path, panel_csv(panel));
}

// ---------------------------------------------------------------------------

Panel impute_last_observation(const Panel& panel) {
    const auto accounting = panel.features_in(FeatureGroup::accounting);
    std::vector<FirmYearRecord> records = panel.records();
    // Records are year-major; a per-firm carry map visits each firm in year order.
    std::unordered_map<std::string, std::vector<double>> last;
    for (auto& r : records) {
        auto [it, inserted] = last.try_emplace(r.firm_id, std::vector<double>(panel.schema().size(), kMissing));
        auto& carry = it->second;
        for (std::size_t j : accounting) {
            if (is_missing(r.features[j])) {
                r.features[j] = carry[j];
            } else {
                carry[j] = r.features[j];
            }
        }
    }
    return Panel(panel.schema(), std::move(records));
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return kUndefined;
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Panel winsorize(const Panel& panel, double lower, double upper) {
    std::vector<FirmYearRecord> records = panel.records();
    for (std::size_t j = 0; j < panel.schema().size(); ++j) {
        std::vector<double> values;
        for (const auto& r : records)
            if (!is_missing(r.features[j])) values.push_back(r.features[j]);
        if (values.size() < 2) continue;
        std::sort(values.begin(), values.end());
        const double lo = quantile_sorted(values, lower);
        const double hi = quantile_sorted(values, upper);
        for (auto& r : records)
            if (!is_missing(r.features[j])) r.features[j] = std::clamp(r.features[j], lo, hi);
    }
    return Panel(panel.schema(), std::move(records));
}

// ---------------------------------------------------------------------------

void validate(const SyntheticSpec& spec) {
    if (!(spec.base_hazard > 0.0 && spec.base_hazard <= 0.2))
        throw ManifestError("synthetic base_hazard must lie in (0, 0.2]");
    if (spec.n_firms < 10) throw ManifestError("synthetic n_firms must be at least 10");
    if (spec.years.first > spec.years.second) throw ManifestError("synthetic years: start after end");
    if (spec.noise_features < 0) throw ManifestError("synthetic noise_features must be non-negative");
    if (spec.signal_weights.empty() && spec.noise_features == 0)
        throw ManifestError("synthetic spec has no features (no signal weights and no noise features)");
    if (!(spec.persistence >= 0.0 && spec.persistence < 1.0))
        throw ManifestError("synthetic persistence must lie in [0, 1)");
    if (!(spec.missing_rate >= 0.0 && spec.missing_rate < 1.0))
        throw ManifestError("synthetic missing_rate must lie in [0, 1)");
    std::set<std::string> names;
    for (const auto& [name, w] : spec.signal_weights) {
        if (!std::isfinite(w)) throw ManifestError("synthetic weight for '" + name + "' is not finite");
        if (!names.insert(name).second) throw ManifestError("duplicate synthetic feature '" + name + "'");
    }
}

double calibrated_intercept(double base_hazard, double signal_scale) {
    if (signal_scale == 0.0) return std::log(base_hazard / (1.0 - base_hazard));
    // Trapezoid rule against the standard normal density on [-10, 10].
    constexpr int kNodes = 4001;
    constexpr double kLo = -10.0, kHi = 10.0;
    const double step = (kHi - kLo) / (kNodes - 1);
    auto mean_rate = [&](double b0) {
        double total = 0.0;
        for (int k = 0; k < kNodes; ++k) {
            const double z = kLo + step * k;
            const double w = (k == 0 || k == kNodes - 1) ? 0.5 : 1.0;
            total += w * std::exp(-0.5 * z * z) * sigmoid(b0 + signal_scale * z);
        }
        return total * step / std::sqrt(2.0 * M_PI);
    };
    double lo = -60.0, hi = 60.0;
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mean_rate(mid) < base_hazard ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

std::vector<FeatureSpec> synthetic_schema(const SyntheticSpec& spec) {
    std::vector<FeatureSpec> schema;
    auto group_of = [&](const std::string& name) {
        for (const auto& [n, g] : spec.group_overrides)
            if (n == name) return g;
        return default_group_for(name);
    };
    for (const auto& [name, w] : spec.signal_weights) schema.push_back({name, group_of(name)});
    for (int k = 1; k <= spec.noise_features; ++k) {
        std::string name = "noise_" + std::string(k < 10 ? "0" : "") + std::to_string(k);
        schema.push_back({name, group_of(name)});
    }
    return schema;
}

double signal_scale(const SyntheticSpec& spec) {
    double s = 0.0;
    for (const auto& [name, w] : spec.signal_weights) s += w * w;
    return std::sqrt(s);
}

std::string firm_name(int index) {
    std::string digits = std::to_string(index);
    return "F" + std::string(digits.size() < 6 ? 6 - digits.size() : 0, '0') + digits;
}

}  // namespace

double true_logit(const SyntheticSpec& spec, const Panel& panel, const FirmYearRecord& record) {
    double eta = calibrated_intercept(spec.base_hazard, signal_scale(spec));
    for (const auto& [name, w] : spec.signal_weights) eta += w * record.features[panel.feature_index(name)];
    return eta;
}

Eigen::VectorXd true_logits(const SyntheticSpec& spec, const Panel& panel) {
    const double b0 = calibrated_intercept(spec.base_hazard, signal_scale(spec));
    std::vector<std::pair<std::size_t, double>> terms;
    for (const auto& [name, w] : spec.signal_weights) terms.emplace_back(panel.feature_index(name), w);
    Eigen::VectorXd eta(static_cast<Eigen::Index>(panel.size()));
    for (std::size_t i = 0; i < panel.size(); ++i) {
        double e = b0;
        for (const auto& [j, w] : terms) e += w * panel.records()[i].features[j];
        eta[static_cast<Eigen::Index>(i)] = e;
    }
    return eta;
}

Panel synthesize_panel(const SyntheticSpec& spec) {
    validate(spec);
    const auto schema = synthetic_schema(spec);
    const std::size_t p = schema.size();
    const std::size_t n_signal = spec.signal_weights.size();
    const double b0 = calibrated_intercept(spec.base_hazard, signal_scale(spec));
    const double rho = spec.persistence;
    const double innovation = std::sqrt(1.0 - rho * rho);

    std::mt19937_64 rng(spec.seed);
    std::mt19937_64 missing_rng(mix_seed(spec.seed, 1));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::uniform_int_distribution<int> industry_draw(1, 12);

    struct Firm {
        std::string id;
        int industry;
        Eigen::VectorXd state;
        bool fresh = true;
        std::vector<std::size_t> record_ids;
    };

    int next_id = 1;
    auto new_firm = [&] {
        Firm f{firm_name(next_id++), industry_draw(rng), Eigen::VectorXd(static_cast<Eigen::Index>(p)), true, {}};
        for (std::size_t j = 0; j < p; ++j) f.state[static_cast<Eigen::Index>(j)] = normal(rng);
        return f;
    };

    std::vector<Firm> active;
    for (int i = 0; i < spec.n_firms; ++i) active.push_back(new_firm());

    std::vector<FirmYearRecord> records;
    std::vector<Firm> retired;
    for (int year = spec.years.first; year <= spec.years.second; ++year) {
        std::vector<Firm> survivors;
        int exits = 0;
        for (auto& firm : active) {
            if (!firm.fresh)
                for (std::size_t j = 0; j < p; ++j) {
                    auto& x = firm.state[static_cast<Eigen::Index>(j)];
                    x = rho * x + innovation * normal(rng);
                }
            firm.fresh = false;
            double eta = b0;
            for (std::size_t j = 0; j < n_signal; ++j)
                eta += spec.signal_weights[j].second * firm.state[static_cast<Eigen::Index>(j)];
            const int label = uniform(rng) < sigmoid(eta) ? 1 : 0;

            FirmYearRecord r;
            r.firm_id = firm.id;
            r.year = year;
            r.defaulted_next_year = label;
            r.industry = firm.industry;
            r.features.assign(firm.state.data(), firm.state.data() + p);
            if (spec.missing_rate > 0.0)
                for (std::size_t j = 0; j < p; ++j)
                    if (schema[j].group == FeatureGroup::accounting && uniform(missing_rng) < spec.missing_rate)
                        r.features[j] = kMissing;
            firm.record_ids.push_back(records.size());
            records.push_back(std::move(r));
            if (label == 1) {
                for (std::size_t id : firm.record_ids) {
                    records[id].event_time = year;
                    records[id].event_status = EventStatus::bankrupt;
                }
                retired.push_back(std::move(firm));
                ++exits;
            } else {
                survivors.push_back(std::move(firm));
            }
        }
        for (int k = 0; k < exits; ++k) survivors.push_back(new_firm());
        active = std::move(survivors);
    }
    for (const auto& firm : active)
        for (std::size_t id : firm.record_ids) {
            records[id].event_time = spec.years.second;
            records[id].event_status = EventStatus::censored;
        }
    return Panel(schema, std::move(records));
}

// ---------------------------------------------------------------------------

std::vector<FeatureSummary> summarize(const Panel& panel) {
    std::vector<FeatureSummary> out;
    for (std::size_t j = 0; j < panel.schema().size(); ++j) {
        FeatureSummary s;
        s.name = panel.schema()[j].name;
        std::vector<double> values;
        for (const auto& r : panel.records())
            if (!is_missing(r.features[j])) values.push_back(r.features[j]);
        s.count = values.size();
        if (values.size() >= 2) {
            s.present = true;
            const double n = static_cast<double>(values.size());
            s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
            double ss = 0.0;
            for (double v : values) ss += (v - s.mean) * (v - s.mean);
            s.sd = std::sqrt(ss / (n - 1.0));
            std::sort(values.begin(), values.end());
            s.p25 = quantile_sorted(values, 0.25);
            s.median = quantile_sorted(values, 0.5);
            s.p75 = quantile_sorted(values, 0.75);
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<FeatureCorrelation> correlation_with_default(const Panel& panel) {
    double label_mean = 0.0;
    for (const auto& r : panel.records()) label_mean += r.defaulted_next_year;
    if (panel.empty() || label_mean == 0.0 || label_mean == static_cast<double>(panel.size()))
        throw DataError("correlation_with_default: label has zero variance");

    std::vector<FeatureCorrelation> out;
    for (std::size_t j = 0; j < panel.schema().size(); ++j) {
        FeatureCorrelation c;
        c.name = panel.schema()[j].name;
        double mx = 0.0, my = 0.0;
        std::size_t n = 0;
        for (const auto& r : panel.records()) {
            if (is_missing(r.features[j])) continue;
            mx += r.features[j];
            my += r.defaulted_next_year;
            ++n;
        }
        c.pairs = n;
        if (n >= 2) {
            mx /= static_cast<double>(n);
            my /= static_cast<double>(n);
            double sxy = 0.0, sxx = 0.0, syy = 0.0;
            for (const auto& r : panel.records()) {
                if (is_missing(r.features[j])) continue;
                const double dx = r.features[j] - mx;
                const double dy = r.defaulted_next_year - my;
                sxy += dx * dy;
                sxx += dx * dx;
                syy += dy * dy;
            }
            if (sxx > 0.0 && syy > 0.0) c.correlation = sxy / std::sqrt(sxx * syy);
        }
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace distress

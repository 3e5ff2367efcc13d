#include "distress/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <set>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "distress/eval.hpp"
#include "distress/insight.hpp"
#include "distress/text.hpp"

namespace distress {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Manifest reading. Every object is consumed through a Section, which records
// the keys it handed out and rejects the rest.

class Section {
public:
    Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ManifestError(where_ + ": expected an object");
    }

    const json* find(const std::string& key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    bool has(const std::string& key) const { return j_.contains(key); }
    std::string path(const std::string& key) const { return where_ + "." + key; }

    double number(const std::string& key, double fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_number()) throw ManifestError(path(key) + ": expected a number");
        return v->get<double>();
    }

    long long integer(const std::string& key, long long fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_number_integer()) throw ManifestError(path(key) + ": expected an integer");
        return v->get<long long>();
    }

    std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_number_unsigned()) throw ManifestError(path(key) + ": expected a non-negative integer");
        return v->get<std::uint64_t>();
    }

    bool boolean(const std::string& key, bool fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_boolean()) throw ManifestError(path(key) + ": expected true or false");
        return v->get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_string()) throw ManifestError(path(key) + ": expected a string");
        return v->get<std::string>();
    }

    std::vector<std::string> strings(const std::string& key, const std::vector<std::string>& fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_array()) throw ManifestError(path(key) + ": expected an array of strings");
        std::vector<std::string> out;
        for (const auto& e : *v) {
            if (!e.is_string()) throw ManifestError(path(key) + ": expected an array of strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    }

    void done() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.contains(it.key())) throw ManifestError(where_ + ": unknown key '" + it.key() + "'");
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_relative() ? base / path : path;
}

int checked_int(long long v, long long lo, long long hi, const std::string& what) {
    if (v < lo || v > hi)
        throw ManifestError(what + ": " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "]");
    return static_cast<int>(v);
}

SyntheticSource parse_synthetic(const json& j, std::uint64_t seed) {
    Section s(j, "data.synthetic");
    SyntheticSource out;
    auto& spec = out.spec;
    spec.seed = s.seed("seed", seed);
    spec.n_firms = checked_int(s.integer("n_firms", spec.n_firms), 10, 10'000'000, s.path("n_firms"));
    const int first = checked_int(s.integer("first_year", spec.years.first), 1800, 2200, s.path("first_year"));
    const int last = checked_int(s.integer("last_year", spec.years.second), 1800, 2200, s.path("last_year"));
    spec.years = {first, last};
    spec.base_hazard = s.number("base_hazard", spec.base_hazard);
    if (const json* w = s.find("signal_weights")) {
        if (!w->is_array()) throw ManifestError(s.path("signal_weights") + ": expected an array");
        for (const auto& e : *w) {
            Section ws(e, s.path("signal_weights[]"));
            const std::string name = ws.string("feature", "");
            if (name.empty()) throw ManifestError(s.path("signal_weights[]") + ": feature name required");
            const double weight = ws.number("weight", 0.0);
            if (!ws.has("weight")) throw ManifestError(s.path("signal_weights[]") + ": weight required");
            ws.done();
            spec.signal_weights.emplace_back(name, weight);
        }
    }
    spec.noise_features = checked_int(s.integer("noise_features", 0), 0, 99, s.path("noise_features"));
    spec.persistence = s.number("persistence", spec.persistence);
    spec.missing_rate = s.number("missing_rate", spec.missing_rate);
    if (const json* g = s.find("groups")) {
        if (!g->is_object()) throw ManifestError(s.path("groups") + ": expected an object");
        for (auto it = g->begin(); it != g->end(); ++it) {
            if (!it->is_string()) throw ManifestError(s.path("groups") + "." + it.key() + ": expected a group name");
            spec.group_overrides.emplace_back(it.key(), parse_feature_group(it->get<std::string>()));
        }
    }
    out.periods_per_year =
        checked_int(s.integer("raw_periods_per_year", 0), 0, 366, s.path("raw_periods_per_year"));
    if (out.periods_per_year > 0 && out.periods_per_year < static_cast<int>(kMinReturnObservations))
        throw ManifestError(s.path("raw_periods_per_year") + ": must be 0 or at least " +
                            std::to_string(kMinReturnObservations));
    s.done();
    validate(spec);
    return out;
}

RawSource parse_raw(const json& j, const std::filesystem::path& base) {
    Section s(j, "data.raw");
    RawSource out;
    const std::string dir = s.string("dir", "");
    if (dir.empty()) throw ManifestError("data.raw.dir is required");
    out.dir = resolve(base, dir);
    out.missing_token = s.string("missing_token", out.missing_token);
    if (const json* t = s.find("text")) {
        Section ts(*t, "data.raw.text");
        TextSource text;
        const std::string docs = ts.string("documents", "");
        if (docs.empty()) throw ManifestError("data.raw.text.documents is required");
        text.documents = resolve(base, docs);
        const std::string labels = ts.string("sentence_labels", "");
        if (!labels.empty()) text.sentence_labels = resolve(base, labels);
        if (const json* lx = ts.find("lexicon")) {
            if (lx->is_string()) {
                if (lx->get<std::string>() != "builtin")
                    throw ManifestError("data.raw.text.lexicon: expected \"builtin\" or an object of files");
            } else {
                Section ls(*lx, "data.raw.text.lexicon");
                LexiconFiles files;
                const std::string cats = ls.string("categories", ""), val = ls.string("valence", ""),
                                  mods = ls.string("modifiers", "");
                if (cats.empty() || val.empty() || mods.empty())
                    throw ManifestError("data.raw.text.lexicon: categories, valence and modifiers are required");
                files.categories = resolve(base, cats);
                files.valence = resolve(base, val);
                files.modifiers = resolve(base, mods);
                ls.done();
                text.lexicon = files;
            }
        }
        ts.done();
        out.text = text;
    }
    s.done();
    return out;
}

std::vector<Stage> default_stages() {
    return {{"dd", {FeatureGroup::structural}},
            {"accounting", {FeatureGroup::structural, FeatureGroup::accounting}},
            {"market", {FeatureGroup::structural, FeatureGroup::accounting, FeatureGroup::market}},
            {"industry",
             {FeatureGroup::structural, FeatureGroup::accounting, FeatureGroup::market, FeatureGroup::industry}},
            {"macro",
             {FeatureGroup::structural, FeatureGroup::accounting, FeatureGroup::market, FeatureGroup::industry,
              FeatureGroup::macro}}};
}

std::map<std::string, std::vector<double>> grid_axes(const RunManifest& m, Family f) {
    auto axes = default_grid_axes(f);
    if (const auto it = m.grids.find(f); it != m.grids.end())
        for (const auto& [name, values] : it->second) axes[name] = values;
    return axes;
}

std::vector<ModelSpec> family_grid(const RunManifest& m, Family f) {
    return expand_grid(f, grid_axes(m, f), mix_seed(m.seed, static_cast<std::uint64_t>(f)));
}

}  // namespace

RunManifest parse_run_manifest(std::string_view text, const std::filesystem::path& source) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ManifestError(source.string() + ": " + e.what());
    }
    const std::filesystem::path base = source.parent_path();
    RunManifest m;
    m.source = source;

    Section top(j, "manifest");
    if (top.string("format", "") != "distress-run") throw ManifestError("manifest.format must be \"distress-run\"");
    if (top.integer("version", 0) != 1) throw ManifestError("manifest.version must be 1");
    if (const std::string out = top.string("output_dir", ""); !out.empty()) m.output_dir = resolve(base, out);
    m.seed = top.seed("seed", m.seed);

    if (const json* p = top.find("preprocess")) {
        Section s(*p, "preprocess");
        m.impute = s.boolean("impute", m.impute);
        m.winsorize = s.boolean("winsorize", m.winsorize);
        s.done();
    }

    const json* data = top.find("data");
    if (!data) throw ManifestError("manifest.data is required");
    {
        Section s(*data, "data");
        int sources = 0;
        if (const std::string pm = s.string("panel_manifest", ""); !pm.empty()) {
            m.panel_manifest = resolve(base, pm);
            read_data_manifest(*m.panel_manifest);
            ++sources;
        }
        if (const json* syn = s.find("synthetic")) {
            m.synthetic = parse_synthetic(*syn, m.seed);
            ++sources;
        }
        if (const json* raw = s.find("raw")) {
            m.raw = parse_raw(*raw, base);
            ++sources;
        }
        m.naive_dd = s.boolean("naive_dd", false);
        s.done();
        if (sources != 1)
            throw ManifestError("data: exactly one of panel_manifest, synthetic or raw must be given");
    }

    {
        const auto names = top.strings("algorithms", {});
        if (names.empty() && top.has("algorithms")) throw ManifestError("manifest.algorithms must not be empty");
        if (names.empty())
            m.algorithms = all_families();
        else
            for (const auto& n : names) {
                const Family f = parse_family(n);
                if (std::find(m.algorithms.begin(), m.algorithms.end(), f) != m.algorithms.end())
                    throw ManifestError("manifest.algorithms: duplicate '" + n + "'");
                m.algorithms.push_back(f);
            }
    }

    if (const json* st = top.find("stages")) {
        if (!st->is_array() || st->empty()) throw ManifestError("manifest.stages: expected a non-empty array");
        std::vector<FeatureGroup> cumulative;
        std::set<std::string> names;
        for (const auto& e : *st) {
            Section s(e, "stages[]");
            Stage stage;
            stage.name = s.string("name", "");
            if (stage.name.empty()) throw ManifestError("stages[]: name required");
            if (!names.insert(stage.name).second) throw ManifestError("stages: duplicate name '" + stage.name + "'");
            const auto groups = s.strings("add", {});
            if (groups.empty()) throw ManifestError("stages[" + stage.name + "]: 'add' must list at least one group");
            for (const auto& g : groups) {
                const FeatureGroup fg = parse_feature_group(g);
                if (std::find(cumulative.begin(), cumulative.end(), fg) != cumulative.end())
                    throw ManifestError("stages[" + stage.name + "]: group '" + g + "' already added");
                cumulative.push_back(fg);
            }
            stage.groups = cumulative;
            s.done();
            m.stages.push_back(std::move(stage));
        }
    } else {
        m.stages = default_stages();
    }

    if (const json* y = top.find("years")) {
        Section s(*y, "years");
        auto year = [&](const std::string& key) -> std::optional<int> {
            if (!s.has(key)) {
                s.find(key);
                return std::nullopt;
            }
            return checked_int(s.integer(key, 0), 1800, 2200, s.path(key));
        };
        m.first_data_year = year("first_data_year");
        m.first_test_year = year("first_test_year");
        m.last_test_year = year("last_test_year");
        s.done();
        if (m.first_data_year && m.first_test_year && *m.first_test_year < *m.first_data_year + 3)
            throw ManifestError("years: first_test_year must be at least first_data_year + 3");
        if (m.first_test_year && m.last_test_year && *m.last_test_year < *m.first_test_year)
            throw ManifestError("years: last_test_year before first_test_year");
    }

    m.windows = top.strings("windows", m.windows);
    if (m.windows.empty()) throw ManifestError("manifest.windows must not be empty");
    {
        std::set<std::string> seen;
        for (const auto& w : m.windows) {
            named_window(w, {});
            if (!seen.insert(w).second) throw ManifestError("manifest.windows: duplicate '" + w + "'");
        }
    }

    if (const json* g = top.find("grids")) {
        if (!g->is_object()) throw ManifestError("grids: expected an object keyed by algorithm");
        for (auto it = g->begin(); it != g->end(); ++it) {
            const Family f = parse_family(it.key());
            if (!it->is_object()) throw ManifestError("grids." + it.key() + ": expected an object of axes");
            auto& axes = m.grids[f];
            for (auto ax = it->begin(); ax != it->end(); ++ax) {
                const std::string where = "grids." + it.key() + "." + ax.key();
                if (!ax->is_array() || ax->empty()) throw ManifestError(where + ": expected a non-empty array");
                std::vector<double> values;
                for (const auto& v : *ax) {
                    if (!v.is_number()) throw ManifestError(where + ": expected numbers");
                    values.push_back(v.get<double>());
                }
                axes[ax.key()] = std::move(values);
            }
            family_grid(m, f);  // validates every point
        }
    }

    m.importance.seed = m.seed;
    if (const json* im = top.find("importance")) {
        Section s(*im, "importance");
        m.importance.repeats = checked_int(s.integer("repeats", m.importance.repeats), 1, 10'000, s.path("repeats"));
        m.importance.seed = s.seed("seed", m.importance.seed);
        m.importance.top_n = checked_int(s.integer("top_n", m.importance.top_n), 1, 100'000, s.path("top_n"));
        const std::string on = s.string("on", "test");
        if (on != "test" && on != "validation") throw ManifestError("importance.on must be \"test\" or \"validation\"");
        m.importance.on_validation = on == "validation";
        m.importance.stage = s.string("stage", "");
        s.done();
        if (!m.importance.stage.empty() &&
            std::none_of(m.stages.begin(), m.stages.end(), [&](const Stage& st) { return st.name == m.importance.stage; }))
            throw ManifestError("importance.stage: no stage named '" + m.importance.stage + "'");
    }

    if (const json* r = top.find("reduce")) {
        Section s(*r, "reduce");
        m.pca_threshold = s.number("pca_threshold", m.pca_threshold);
        s.done();
        if (!(m.pca_threshold > 0.0 && m.pca_threshold <= 1.0))
            throw ManifestError("reduce.pca_threshold must lie in (0, 1]");
    }

    if (const json* c = top.find("credit")) {
        Section s(*c, "credit");
        auto& cr = m.credit;
        if (const std::string f = s.string("base_spreads", ""); !f.empty()) cr.base_spreads = resolve(base, f);
        if (s.has("base_spread") && cr.base_spreads)
            throw ManifestError("credit: give base_spreads or base_spread, not both");
        cr.base_spread = s.number("base_spread", cr.base_spread);
        if (!(cr.base_spread >= 0.0) || !std::isfinite(cr.base_spread))
            throw ManifestError("credit.base_spread must be finite and >= 0");
        cr.market.lgd = s.number("lgd", cr.market.lgd);
        const double size = s.number("market_size", static_cast<double>(cr.market.market_size_cents) / 100.0);
        if (!(size >= 0.01 && size <= 1e15)) throw ManifestError("credit.market_size must lie in [0.01, 1e15]");
        cr.market.market_size_cents = std::llround(size * 100.0);
        const std::string avg = s.string("average", "per_year");
        if (avg == "per_year")
            cr.market.average = IncomeAverage::per_year;
        else if (avg == "per_loan")
            cr.market.average = IncomeAverage::per_loan;
        else
            throw ManifestError("credit.average must be \"per_year\" or \"per_loan\"");
        cr.panels = s.strings("panels", cr.panels);
        if (cr.panels.empty()) throw ManifestError("credit.panels must not be empty");
        for (const auto& p : cr.panels)
            if (p != "full" && p != "reduced") throw ManifestError("credit.panels: unknown panel '" + p + "'");
        s.done();
        validate(cr.market);
    }

    top.done();
    return m;
}

RunManifest read_run_manifest(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        throw ManifestError(e.what());
    }
    return parse_run_manifest(text, path);
}

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = {"synth",  "features",   "benchmark", "importance",
                                                   "reduce", "credit-sim", "report"};
    return names;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

Panel preprocess(Panel panel, const RunManifest& m, bool impute) {
    if (impute) panel = impute_last_observation(panel);
    if (m.winsorize) panel = winsorize(panel);
    return panel;
}

RawTables load_raw_tables(const RawSource& src) {
    RawTables raw;
    DataManifest events;
    events.path = src.dir / "events.csv";
    events.missing_token = src.missing_token;
    raw.universe = load_panel(events);
    raw.statements = load_statements(src.dir / "statements.csv", src.missing_token);
    raw.equity = load_equity(src.dir / "equity.csv");
    raw.firm_market = load_firm_market(src.dir / "firm_market.csv");
    raw.macro = load_macro(src.dir / "macro.csv");
    return raw;
}

Panel load_run_panel(const RunManifest& m) {
    FeatureBuildOptions opts;
    opts.naive_dd = m.naive_dd;
    opts.impute = m.impute;
    if (m.panel_manifest) return preprocess(load_panel(read_data_manifest(*m.panel_manifest)), m, m.impute);
    if (m.synthetic) {
        if (m.synthetic->periods_per_year > 0)
            return preprocess(build_feature_panel(synthesize_raw(m.synthetic->spec, m.synthetic->periods_per_year), opts),
                              m, false);
        return preprocess(synthesize_panel(m.synthetic->spec), m, m.impute);
    }
    Panel panel = build_feature_panel(load_raw_tables(*m.raw), opts);
    if (m.raw->text) {
        const auto& t = *m.raw->text;
        const auto docs = load_documents(t.documents);
        const SentenceLabelTable labels =
            t.sentence_labels.empty() ? SentenceLabelTable{} : load_sentence_labels(t.sentence_labels);
        const Lexicon lexicon = t.lexicon ? load_lexicon(*t.lexicon) : Lexicon::builtin();
        panel = add_text_features(panel, docs, lexicon, labels);
    }
    return preprocess(std::move(panel), m, false);
}

std::vector<SplitPlan> run_plans(const RunManifest& m, const Panel& panel) {
    if (panel.empty()) throw DataError("panel has no records");
    const auto [lo, hi] = panel.year_range();
    const int first_data = m.first_data_year.value_or(lo);
    const int first_test = m.first_test_year.value_or(first_data + 3);
    const int last_test = m.last_test_year.value_or(hi);
    if (first_data < lo || last_test > hi)
        throw DataError("years [" + std::to_string(first_data) + ", " + std::to_string(last_test) +
                        "] fall outside the panel's " + std::to_string(lo) + "-" + std::to_string(hi));
    return expanding_window_plan(first_data, first_test, last_test);
}

std::vector<YearSet> run_windows(const RunManifest& m, const std::vector<SplitPlan>& plans) {
    std::vector<int> covered;
    for (const auto& p : plans) covered.push_back(p.test_year);
    std::vector<YearSet> out;
    for (const auto& name : m.windows) {
        YearSet w = named_window(name, covered);
        if (w.years.empty())
            warn("window '" + name + "' covers no test year; skipped");
        else
            out.push_back(std::move(w));
    }
    if (out.empty()) throw DataError("no requested window covers a test year");
    return out;
}

const Stage& final_stage(const RunManifest& m) {
    if (!m.importance.stage.empty())
        for (const auto& s : m.stages)
            if (s.name == m.importance.stage) return s;
    return m.stages.back();
}

std::vector<std::string> stage_columns(const Panel& panel, const Stage& stage) {
    auto cols = predictor_columns(panel, stage.groups);
    if (cols.empty()) throw DataError("stage '" + stage.name + "' selects no predictor in this panel");
    return cols;
}

std::vector<std::string> reduced_columns(const Panel& panel) {
    std::vector<std::string> cols;
    for (const auto& name : reduced_predictor_set()) {
        if (panel.find_feature(name))
            cols.push_back(name);
        else
            warn("reduced predictor '" + name + "' is not in the panel; left out");
    }
    if (cols.empty()) throw DataError("the panel has none of the reduced predictors");
    return cols;
}

std::string with_leading_column(const std::string& csv, const std::string& name, const std::string& value,
                                bool header) {
    CsvTable t = parse_csv(csv);
    CsvTable out;
    if (header) {
        out.header = {name};
        out.header.insert(out.header.end(), t.header.begin(), t.header.end());
    }
    for (auto& row : t.rows) {
        std::vector<std::string> r = {value};
        r.insert(r.end(), row.begin(), row.end());
        out.rows.push_back(std::move(r));
    }
    std::string text = to_csv(out);
    if (!header) text.erase(0, text.find('\n') + 1);
    return text;
}

double window_auc(const std::vector<ForecastSet>& forecasts, const YearSet& window) {
    return subset_report(forecasts, {window}).front().auc;
}

Artifacts cmd_synth(const RunManifest& m) {
    if (!m.synthetic) throw ManifestError("synth needs data.synthetic");
    Artifacts a;
    const Panel panel = synthesize_panel(m.synthetic->spec);
    a["panel.csv"] = panel_csv(panel);
    a["panel.json"] = data_manifest_json(manifest_for(panel, "panel.csv"));
    if (m.synthetic->periods_per_year > 0) {
        const RawTables raw = synthesize_raw(m.synthetic->spec, m.synthetic->periods_per_year);
        const auto tmp = std::filesystem::temp_directory_path() /
                         ("distress-raw-" + std::to_string(fnv1a(m.source.string())) + "-" +
                          std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())));
        std::filesystem::create_directories(tmp);
        try {
            write_raw_tables(raw, tmp);
            for (const auto& entry : std::filesystem::directory_iterator(tmp))
                a["raw/" + entry.path().filename().string()] = read_file(entry.path());
        } catch (...) {
            std::filesystem::remove_all(tmp);
            throw;
        }
        std::filesystem::remove_all(tmp);
    }
    return a;
}

Artifacts cmd_features(const RunManifest& m) {
    const Panel panel = load_run_panel(m);
    Artifacts a;
    a["features.csv"] = panel_csv(panel);
    a["features.json"] = data_manifest_json(manifest_for(panel, "features.csv"));
    return a;
}

Artifacts cmd_benchmark(const RunManifest& m) {
    const Panel panel = load_run_panel(m);
    const auto plans = run_plans(m, panel);
    const auto windows = run_windows(m, plans);

    std::vector<BenchmarkCell> cells;
    std::vector<std::string> stage_names;
    std::string tuning, forecasts;
    bool first = true;
    for (const auto& stage : m.stages) {
        const auto cols = stage_columns(panel, stage);
        stage_names.push_back(stage.name);
        for (Family f : m.algorithms) {
            const auto sets = walk_forward(panel, family_grid(m, f), plans, cols);
            for (const auto& w : windows) cells.push_back({f, stage.name, w.name, window_auc(sets, w)});
            tuning += with_leading_column(tuning_csv(sets), "stage", stage.name, first);
            forecasts += with_leading_column(forecasts_csv(sets), "stage", stage.name, first);
            first = false;
        }
    }
    Artifacts a;
    for (const auto& w : windows)
        a["table2_" + w.name + ".csv"] = table2_csv(cells, m.algorithms, stage_names, w.name);
    a["tuning.csv"] = tuning;
    a["forecasts.csv"] = forecasts;
    return a;
}

Artifacts cmd_importance(const RunManifest& m) {
    const Panel panel = load_run_panel(m);
    const auto plans = run_plans(m, panel);
    const auto windows = run_windows(m, plans);
    const auto cols = stage_columns(panel, final_stage(m));

    std::vector<std::vector<ForecastSet>> per_family;
    for (Family f : m.algorithms) per_family.push_back(walk_forward(panel, family_grid(m, f), plans, cols));

    Artifacts a;
    for (const auto& w : windows) {
        const std::set<int> years(w.years.begin(), w.years.end());
        std::vector<ImportanceTable> tables;
        for (std::size_t k = 0; k < per_family.size(); ++k) {
            std::vector<EvalBlock> blocks;
            double pos = 0.0, rows = 0.0;
            for (const auto& fs : per_family[k])
                if (years.count(fs.test_year)) {
                    const Dataset* d = m.importance.on_validation ? &fs.validation : &fs.test;
                    blocks.push_back({&fs.model, d});
                    pos += d->y.sum();
                    rows += static_cast<double>(d->rows());
                }
            if (pos == 0.0 || pos == rows) {
                warn("window '" + w.name + "' has a single class for " + to_string(m.algorithms[k]) +
                     "; importance skipped");
                tables.clear();
                break;
            }
            tables.push_back(permutation_importance(blocks, to_string(m.algorithms[k]), m.importance.repeats,
                                                    mix_seed(m.importance.seed, static_cast<std::uint64_t>(k))));
        }
        if (tables.empty()) continue;
        a["importance_" + w.name + ".csv"] = importance_csv(tables);
        a["rank_heatmap_" + w.name + ".csv"] = rank_grid_csv(rank_heatmap(tables, m.importance.top_n));
    }
    if (a.empty()) throw DataError("no window had evaluation data with both classes");
    return a;
}

Artifacts cmd_reduce(const RunManifest& m) {
    const Panel panel = load_run_panel(m);
    const auto plans = run_plans(m, panel);
    const auto windows = run_windows(m, plans);
    const auto reduced = reduced_columns(panel);
    const auto full = stage_columns(panel, m.stages.back());

    std::vector<std::vector<double>> auc_reduced(windows.size()), auc_pca(windows.size());
    CsvTable comps;
    comps.header = {"test_year", "algorithm", "components"};
    for (Family f : m.algorithms) {
        const auto grid = family_grid(m, f);
        const auto r = walk_forward(panel, grid, plans, reduced);
        const auto p = walk_forward(panel, grid, plans, full, {.pca = true, .pca_threshold = m.pca_threshold});
        for (std::size_t w = 0; w < windows.size(); ++w) {
            auc_reduced[w].push_back(window_auc(r, windows[w]));
            auc_pca[w].push_back(window_auc(p, windows[w]));
        }
        for (const auto& fs : p)
            comps.rows.push_back({std::to_string(fs.test_year), to_string(f), std::to_string(fs.components)});
    }
    Artifacts a;
    for (std::size_t w = 0; w < windows.size(); ++w) {
        CsvTable t;
        t.header = {"specification"};
        for (Family f : m.algorithms) t.header.push_back(to_string(f));
        std::vector<std::string> r1 = {"reduced"}, r2 = {"pca"};
        for (std::size_t k = 0; k < m.algorithms.size(); ++k) {
            r1.push_back(format_double(auc_reduced[w][k]));
            r2.push_back(format_double(auc_pca[w][k]));
        }
        t.rows = {r1, r2};
        a["table4_" + windows[w].name + ".csv"] = to_csv(t);
    }
    a["pca_components.csv"] = to_csv(comps);
    return a;
}

Artifacts cmd_credit(const RunManifest& m) {
    const Panel panel = load_run_panel(m);
    const auto plans = run_plans(m, panel);
    MarketConfig config = m.credit.market;
    if (m.credit.base_spreads) {
        config.k_by_year = load_base_spreads(*m.credit.base_spreads);
    } else {
        for (const auto& p : plans) config.k_by_year[p.test_year] = m.credit.base_spread;
    }
    validate(config);

    Artifacts a;
    for (const auto& name : m.credit.panels) {
        const auto cols = name == "full" ? stage_columns(panel, m.stages.back()) : reduced_columns(panel);
        std::vector<std::vector<ForecastSet>> per_family;
        for (Family f : m.algorithms) per_family.push_back(walk_forward(panel, family_grid(m, f), plans, cols));
        const auto [loans, competitors] = competition_inputs(per_family);
        const MarketResult result = simulate_competition(loans, competitors, config);
        a["table5_" + name + ".csv"] = table5_csv(result);
        CsvTable ties;
        ties.header = {"tie"};
        for (const auto& t : result.ties) ties.rows.push_back({t});
        a["ties_" + name + ".csv"] = to_csv(ties);
    }
    return a;
}

Artifacts cmd_report(const RunManifest& m) {
    const Panel panel = load_run_panel(m);
    CsvTable s;
    s.header = {"feature", "count", "mean", "sd", "p25", "median", "p75"};
    for (const auto& f : summarize(panel))
        s.rows.push_back({f.name, std::to_string(f.count), format_double(f.mean), format_double(f.sd),
                          format_double(f.p25), format_double(f.median), format_double(f.p75)});
    CsvTable c;
    c.header = {"feature", "correlation", "pairs"};
    for (const auto& f : correlation_with_default(panel))
        c.rows.push_back({f.name, format_double(f.correlation), std::to_string(f.pairs)});
    return {{"summary.csv", to_csv(s)}, {"correlations.csv", to_csv(c)}};
}

}  // namespace

Artifacts run_command(std::string_view command, const RunManifest& manifest) {
    if (command == "synth") return cmd_synth(manifest);
    if (command == "features") return cmd_features(manifest);
    if (command == "benchmark") return cmd_benchmark(manifest);
    if (command == "importance") return cmd_importance(manifest);
    if (command == "reduce") return cmd_reduce(manifest);
    if (command == "credit-sim") return cmd_credit(manifest);
    if (command == "report") return cmd_report(manifest);
    throw ManifestError("unknown command '" + std::string(command) + "'");
}

std::filesystem::path resolve_output_dir(const RunManifest& manifest, const std::optional<std::string>& flag) {
    if (flag && !flag->empty()) return *flag;
    if (const char* env = std::getenv("DISTRESS_BENCH_OUT"); env && *env) return env;
    if (!manifest.output_dir.empty()) return manifest.output_dir;
    return "out";
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Corporate default forecasting benchmark", "distress-bench"};
    std::string command, manifest_path, out_dir;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    app.add_option("command", command, "synth | features | benchmark | importance | reduce | credit-sim | report")
        ->required()
        ->check(CLI::IsMember(command_names()));
    app.add_option("--manifest", manifest_path, "run manifest (JSON)")->required();
    app.add_option("--threads", threads, "worker cap; results do not depend on it")->check(CLI::Range(1u, 1024u));
    app.add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error:usage: " << e.what() << '\n';
        return 2;
    }

    const unsigned previous_threads = thread_count();
    set_thread_count(threads);
    int status = 0;
    try {
        const RunManifest manifest = read_run_manifest(manifest_path);
        const auto dir = resolve_output_dir(manifest, out_dir.empty() ? std::nullopt : std::optional(out_dir));
        const Artifacts artifacts = run_command(command, manifest);
        for (const auto& [name, contents] : artifacts) {
            const auto path = dir / name;
            std::filesystem::create_directories(path.parent_path());
            write_file_atomic(path, contents);
            out << "wrote " << path.string() << '\n';
        }
    } catch (const ManifestError& e) {
        err << "error:manifest: " << e.what() << '\n';
        status = 2;
    } catch (const DataError& e) {
        err << "error:data: " << e.what() << '\n';
        status = 3;
    } catch (const NumericalError& e) {
        err << "error:numerical: " << e.what() << '\n';
        status = 4;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error:data: " << e.what() << '\n';
        status = 3;
    }
    set_thread_count(previous_threads);
    return status;
}

}  // namespace distress

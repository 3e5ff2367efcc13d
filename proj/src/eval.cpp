#include "distress/eval.hpp"

#include <cmath>
#include <map>
#include <set>

#include "distress/pca.hpp"

namespace distress {

std::vector<SplitPlan> expanding_window_plan(int first_data_year, int first_test_year, int last_test_year) {
    if (first_test_year < first_data_year + 3)
        throw DataError("expanding window: first test year " + std::to_string(first_test_year) +
                        " leaves no training year before the two validation years (need >= " +
                        std::to_string(first_data_year + 3) + ")");
    if (last_test_year < first_test_year) throw DataError("expanding window: last test year precedes the first");
    std::vector<SplitPlan> plans;
    for (int t = first_test_year; t <= last_test_year; ++t) plans.push_back({first_data_year, t - 3, t - 2, t - 1, t});
    return plans;
}

bool follows_protocol(const SplitPlan& p) {
    return p.train_first <= p.train_last && p.train_last == p.test_year - 3 && p.validation_first == p.test_year - 2 &&
           p.validation_last == p.test_year - 1;
}

double trapezoid_area(const std::vector<RocPoint>& points) {
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i)
        area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / 2.0;
    return area;
}

const std::vector<std::string>& industry_dummy_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (int k = 1; k <= 12; ++k) n.push_back((k < 10 ? "ff12_0" : "ff12_") + std::to_string(k));
        return n;
    }();
    return names;
}

std::vector<std::string> predictor_columns(const Panel& panel, const std::vector<FeatureGroup>& groups) {
    const std::set<FeatureGroup> wanted(groups.begin(), groups.end());
    std::vector<std::string> cols;
    for (const auto& f : panel.schema())
        if (wanted.count(f.group)) cols.push_back(f.name);
    if (wanted.count(FeatureGroup::structural))
        cols.insert(cols.end(), industry_dummy_names().begin(), industry_dummy_names().end());
    return cols;
}

DesignMatrix design_matrix(const Panel& panel, const std::vector<std::string>& columns, int first_year, int last_year,
                           int censor_year) {
    // Column source: >= 0 panel feature index, < 0 industry indicator -(k).
    std::vector<int> source;
    for (const auto& name : columns) {
        if (const auto idx = panel.find_feature(name)) {
            source.push_back(static_cast<int>(*idx));
            continue;
        }
        const auto& dummies = industry_dummy_names();
        const auto it = std::find(dummies.begin(), dummies.end(), name);
        if (it == dummies.end()) throw DataError("design matrix: unknown predictor '" + name + "'");
        source.push_back(-static_cast<int>(it - dummies.begin()) - 1);
    }

    DesignMatrix dm;
    std::vector<std::size_t> rows;
    const auto& records = panel.records();
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.year < first_year || rec.year > last_year) continue;
        bool complete = true;
        for (int s : source)
            if (s >= 0 && is_missing(rec.features[static_cast<std::size_t>(s)])) complete = false;
        if (complete)
            rows.push_back(r);
        else
            ++dm.dropped_missing;
    }

    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = static_cast<Eigen::Index>(columns.size());
    Dataset& d = dm.data;
    d.X.resize(n, p);
    d.y.resize(n);
    d.time.resize(n);
    d.status.resize(n);
    d.feature_names = columns;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& rec = records[rows[static_cast<std::size_t>(i)]];
        for (Eigen::Index j = 0; j < p; ++j) {
            const int s = source[static_cast<std::size_t>(j)];
            d.X(i, j) = s >= 0 ? rec.features[static_cast<std::size_t>(s)] : (rec.industry == -s ? 1.0 : 0.0);
        }
        d.y[i] = rec.defaulted_next_year;
        const bool event = rec.event_status == EventStatus::bankrupt && rec.event_time <= censor_year;
        const int end = event ? rec.event_time : std::min(rec.event_time, censor_year);
        d.time[i] = std::max(1, end - rec.year + 1);
        d.status[i] = event ? 1.0 : 0.0;
    }
    dm.records = std::move(rows);
    return dm;
}

std::vector<ModelSpec> expand_grid(Family family, const std::map<std::string, std::vector<double>>& axes,
                                   std::uint64_t seed) {
    std::vector<ModelSpec> grid = {ModelSpec{family, {}, seed}};
    for (const auto& [name, values] : axes) {
        if (values.empty()) throw ManifestError("grid axis '" + name + "' of " + to_string(family) + " is empty");
        std::vector<ModelSpec> next;
        for (const auto& spec : grid)
            for (double v : values) {
                ModelSpec s = spec;
                s.params[name] = v;
                next.push_back(std::move(s));
            }
        grid = std::move(next);
    }
    for (const auto& s : grid) validate(s);
    return grid;
}

const std::map<std::string, std::vector<double>>& default_grid_axes(Family family) {
    static const std::map<Family, std::map<std::string, std::vector<double>>> axes = [] {
        std::vector<double> lambdas;
        for (int k = 0; k < 7; ++k) lambdas.push_back(std::pow(10.0, -4.0 + 4.0 * k / 6.0));
        const std::vector<double> nn_epochs = {30, 100}, nn_rates = {0.01, 0.001};
        return std::map<Family, std::map<std::string, std::vector<double>>>{
            {Family::lasso, {{"lambda", lambdas}}},
            {Family::ridge, {{"lambda", lambdas}}},
            {Family::random_forest, {{"trees", {100, 300}}, {"mtry", {0, 1.0 / 3.0}}, {"max_depth", {6, 12, 0}}}},
            {Family::xgb_like,
             {{"rounds", {100, 300}}, {"learning_rate", {0.05, 0.1}}, {"max_depth", {3, 6}}, {"l2_reg", {0, 1}}}},
            {Family::lgbm_like,
             {{"rounds", {100, 300}}, {"learning_rate", {0.05, 0.1}}, {"max_leaves", {15, 31}}, {"l2_reg", {0, 1}}}},
            {Family::survival_forest, {{"trees", {100, 300}}, {"mtry", {0, 1.0 / 3.0}}}},
            {Family::nn3, {{"epochs", nn_epochs}, {"learning_rate", nn_rates}}},
            {Family::nn5, {{"epochs", nn_epochs}, {"learning_rate", nn_rates}}},
        };
    }();
    return axes.at(family);
}

ForecastSet tune_and_forecast(const Panel& panel, const std::vector<ModelSpec>& grid, const SplitPlan& plan,
                              const std::vector<FeatureGroup>& groups, const ForecastOptions& options) {
    return tune_and_forecast(panel, grid, plan, predictor_columns(panel, groups), options);
}

ForecastSet tune_and_forecast(const Panel& panel, const std::vector<ModelSpec>& grid, const SplitPlan& plan,
                              const std::vector<std::string>& columns, const ForecastOptions& options) {
    if (grid.empty()) throw ManifestError("tuning grid is empty");
    if (!follows_protocol(plan)) throw DataError("split plan violates the expanding-window protocol");
    for (const auto& s : grid)
        if (s.family != grid.front().family) throw ManifestError("tuning grid mixes algorithm families");

    DesignMatrix fit_rows = design_matrix(panel, columns, plan.train_first, plan.train_last, plan.train_last);
    DesignMatrix valid = design_matrix(panel, columns, plan.validation_first, plan.validation_last, plan.validation_last);
    DesignMatrix test = design_matrix(panel, columns, plan.test_year, plan.test_year, plan.test_year);
    if (fit_rows.data.rows() == 0) throw DataError("no complete training rows before " + std::to_string(plan.train_last + 1));

    ForecastSet out;
    out.family = grid.front().family;
    out.test_year = plan.test_year;
    if (options.pca) {
        const PcaModel pca = pca_fit(fit_rows.data.X, columns, options.pca_threshold);
        const auto names = pca.component_names();
        for (DesignMatrix* dm : {&fit_rows, &valid, &test}) {
            dm->data.X = pca_transform(pca, dm->data.X, columns);
            dm->data.feature_names = names;
        }
        out.components = pca.k;
    }

    std::optional<TrainedModel> best;
    for (const auto& spec : grid) {
        TrainedModel model = train(spec, fit_rows.data);
        const double a = valid.data.rows() > 0 ? auc(predict(model, valid.data), valid.data.y) : kUndefined;
        out.grid.push_back({spec, a});
        if (!is_undefined(a) && (!best || a > out.validation_auc)) {
            out.validation_auc = a;
            out.winner = spec;
            best = std::move(model);
        }
    }
    if (!best)
        throw DataError("test year " + std::to_string(plan.test_year) + ", " + to_string(out.family) +
                        ": validation AUC undefined for every grid point");
    out.model = std::move(*best);
    out.scores = test.data.rows() > 0 ? predict(out.model, test.data) : Eigen::VectorXd();
    out.labels = test.data.y;
    for (std::size_t r : test.records) out.firm_ids.push_back(panel.records()[r].firm_id);
    out.test = std::move(test.data);
    out.validation = std::move(valid.data);
    return out;
}

std::vector<ForecastSet> walk_forward(const Panel& panel, const std::vector<ModelSpec>& grid,
                                      const std::vector<SplitPlan>& plans, const std::vector<std::string>& columns,
                                      const ForecastOptions& options) {
    std::vector<ForecastSet> out(plans.size());
    parallel_for(plans.size(), [&](std::size_t k) { out[k] = tune_and_forecast(panel, grid, plans[k], columns, options); });
    return out;
}

YearSet named_window(std::string_view name, const std::vector<int>& covered) {
    auto within = [&](int lo, int hi) {
        std::vector<int> y;
        for (int t : covered)
            if (t >= lo && t <= hi) y.push_back(t);
        return y;
    };
    if (name == "all") return {"all", covered};
    if (name == "dotcom") return {"dotcom", within(1999, 2001)};
    if (name == "gfc") return {"gfc", within(2007, 2009)};
    if (name == "non_crisis") {
        std::vector<int> y;
        for (int t : covered)
            if (!(t >= 1999 && t <= 2001) && !(t >= 2007 && t <= 2009)) y.push_back(t);
        return {"non_crisis", y};
    }
    throw ManifestError("unknown year window '" + std::string(name) + "' (expected all, dotcom, gfc or non_crisis)");
}

std::vector<SubsetResult> subset_report(const std::vector<ForecastSet>& forecasts, const std::vector<YearSet>& subsets) {
    std::vector<SubsetResult> out;
    for (const auto& subset : subsets) {
        const std::set<int> years(subset.years.begin(), subset.years.end());
        Eigen::Index n = 0;
        for (const auto& f : forecasts)
            if (years.count(f.test_year)) n += f.scores.size();
        bool any = false;
        for (const auto& f : forecasts) any = any || years.count(f.test_year);
        if (!any) throw DataError("year subset '" + subset.name + "' selects no forecast year");
        Eigen::VectorXd s(n), l(n);
        Eigen::Index k = 0;
        for (const auto& f : forecasts) {
            if (!years.count(f.test_year)) continue;
            s.segment(k, f.scores.size()) = f.scores;
            l.segment(k, f.labels.size()) = f.labels;
            k += f.scores.size();
        }
        SubsetResult r;
        r.name = subset.name;
        r.auc = auc(s, l);
        r.firm_years = static_cast<std::size_t>(n);
        r.defaults = static_cast<std::size_t>(l.sum());
        r.roc = roc_curve(s, l);
        out.push_back(std::move(r));
    }
    return out;
}

std::string table2_csv(const std::vector<BenchmarkCell>& cells, const std::vector<Family>& families,
                       const std::vector<std::string>& stages, const std::string& subset) {
    CsvTable t;
    t.header = {"algorithm"};
    t.header.insert(t.header.end(), stages.begin(), stages.end());
    for (Family f : families) {
        std::vector<std::string> row = {to_string(f)};
        for (const auto& stage : stages) {
            std::string v = "NA";
            for (const auto& c : cells)
                if (c.family == f && c.stage == stage && c.subset == subset) v = format_double(c.auc);
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    return to_csv(t);
}

std::string forecasts_csv(const std::vector<ForecastSet>& forecasts) {
    CsvTable t;
    t.header = {"test_year", "firm_id", "algorithm", "score", "label"};
    for (const auto& f : forecasts)
        for (Eigen::Index i = 0; i < f.scores.size(); ++i)
            t.rows.push_back({std::to_string(f.test_year), f.firm_ids[static_cast<std::size_t>(i)], to_string(f.family),
                              format_double(f.scores[i]), std::to_string(static_cast<int>(f.labels[i]))});
    return to_csv(t);
}

std::string tuning_csv(const std::vector<ForecastSet>& forecasts) {
    CsvTable t;
    t.header = {"test_year", "algorithm", "winning_spec", "validation_auc", "components"};
    for (const auto& f : forecasts)
        t.rows.push_back({std::to_string(f.test_year), to_string(f.family), describe(f.winner),
                          format_double(f.validation_auc), std::to_string(f.components)});
    return to_csv(t);
}

}  // namespace distress

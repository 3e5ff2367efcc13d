#include "doctest.h"

#include <algorithm>
#include <random>
#include <set>

#include "distress/eval.hpp"
#include "support.hpp"

using namespace distress;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

SyntheticSpec panel_spec() {
    SyntheticSpec s;
    s.seed = 5;
    s.n_firms = 250;
    s.years = {1995, 2002};
    s.base_hazard = 0.06;
    s.signal_weights = {{"distance_to_default", -1.2}, {"liabilities_assets", 0.9}};
    s.noise_features = 1;
    return s;
}

const Panel& shared_panel() {
    static const Panel p = synthesize_panel(panel_spec());
    return p;
}

std::vector<ModelSpec> lasso_grid() {
    return expand_grid(Family::lasso, {{"lambda", {1e-3, 1.0, 30.0}}}, 1);
}

/// Same panel with the labels of one year permuted (event fields kept consistent).
Panel shuffle_year_labels(const Panel& p, int year, std::uint64_t seed) {
    auto records = p.records();
    std::vector<std::size_t> idx;
    std::vector<int> labels;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (records[i].year == year) {
            idx.push_back(i);
            labels.push_back(records[i].defaulted_next_year);
        }
    std::mt19937_64 rng(seed);
    std::shuffle(labels.begin(), labels.end(), rng);
    for (std::size_t k = 0; k < idx.size(); ++k) {
        auto& r = records[idx[k]];
        r.defaulted_next_year = labels[k];
        if (labels[k] == 1) {
            r.event_status = EventStatus::bankrupt;
            r.event_time = year;
        } else if (r.event_status == EventStatus::bankrupt && r.event_time == year) {
            r.event_status = EventStatus::censored;
        }
    }
    return Panel(p.schema(), std::move(records));
}

}  // namespace

// ---------------------------------------------------------------------------
// Plans

TEST_CASE("expanding window plan examples") {
    const auto plans = expanding_window_plan(1969, 1990, 1992);
    REQUIRE(plans.size() == 3);
    for (int k = 0; k < 3; ++k) {
        CHECK(plans[k].train_first == 1969);
        CHECK(plans[k].train_last == 1987 + k);
        CHECK(plans[k].validation_first == 1988 + k);
        CHECK(plans[k].validation_last == 1989 + k);
        CHECK(plans[k].test_year == 1990 + k);
        CHECK(follows_protocol(plans[k]));
    }
    CHECK_THROWS_AS(expanding_window_plan(2000, 2001, 2001), DataError);
    CHECK_THROWS_AS(expanding_window_plan(2000, 2005, 2004), DataError);
    CHECK(expanding_window_plan(2000, 2003, 2003).size() == 1);
}

TEST_CASE("plans partition years without overlap") {
    for (int first = 1960; first < 1970; ++first)
        for (int t0 = first + 3; t0 < first + 8; ++t0) {
            const auto plans = expanding_window_plan(first, t0, t0 + 6);
            for (std::size_t k = 0; k < plans.size(); ++k) {
                const auto& p = plans[k];
                CHECK(follows_protocol(p));
                for (int y = first - 1; y <= p.test_year + 1; ++y) {
                    const int hits = p.in_train(y) + p.in_validation(y) + (y == p.test_year);
                    CHECK(hits <= 1);
                }
                if (k > 0) CHECK(p.train_last == plans[k - 1].train_last + 1);
            }
        }
    SplitPlan bad{1990, 2000, 2001, 2002, 2004};
    CHECK_FALSE(follows_protocol(bad));
}

// ---------------------------------------------------------------------------
// AUC and ROC

TEST_CASE("auc hand case") {
    const auto s = vec({0.9, 0.8, 0.7, 0.6, 0.5, 0.4});
    const auto y = vec({1, 0, 1, 0, 0, 0});
    CHECK(auc(s, y) == 0.875);
    CHECK(auc(s, y) == testing::brute_force_auc(s, y));
}

TEST_CASE("auc edge cases") {
    CHECK(auc(vec({0.1, 0.2, 0.8, 0.9}), vec({0, 0, 1, 1})) == 1.0);
    CHECK(auc(vec({0.9, 0.8, 0.1, 0.2}), vec({0, 0, 1, 1})) == 0.0);
    CHECK(auc(vec({0.3, 0.3, 0.3, 0.3}), vec({0, 1, 0, 1})) == 0.5);
    CHECK(is_undefined(auc(vec({0.1, 0.2}), vec({1, 1}))));
    CHECK(is_undefined(auc(vec({0.1, 0.2}), vec({0, 0}))));
    CHECK_THROWS_AS(auc(vec({0.1, 0.2}), vec({0})), DataError);
}

TEST_CASE("auc equals brute-force concordance on random instances") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> size(2, 200);
    std::uniform_int_distribution<int> level(0, 9);
    for (int rep = 0; rep < 1000; ++rep) {
        const int n = size(rng);
        Eigen::VectorXd s(n), y(n);
        for (int i = 0; i < n; ++i) {
            s[i] = level(rng) / 10.0;
            y[i] = rng() % 3 == 0;
        }
        y[0] = 1;
        y[n - 1] = 0;
        const double a = auc(s, y);
        CHECK(std::abs(a - testing::brute_force_auc(s, y)) <= 1e-12);
        CHECK(std::abs(a - trapezoid_area(roc_curve(s, y))) <= 1e-12);
    }
}

TEST_CASE("auc complement and monotone invariance") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 50;
        Eigen::VectorXd s(n), y(n);
        for (int i = 0; i < n; ++i) {
            s[i] = normal(rng);
            y[i] = i % 4 == 0;
        }
        const Eigen::VectorXd neg = -s;
        CHECK(auc(s, y) + auc(neg, y) == doctest::Approx(1.0).epsilon(1e-15));
        const Eigen::VectorXd warped = s.array().exp() * 3.0 + 1.0;
        CHECK(auc(warped, y) == auc(s, y));
    }
}

TEST_CASE("roc curve matches threshold-by-threshold confusion counts") {
    const auto s = vec({0.9, 0.8, 0.7, 0.6, 0.5, 0.4});
    const auto y = vec({1, 0, 1, 0, 0, 0});
    const auto roc = roc_curve(s, y);
    REQUIRE(roc.size() == 7);
    CHECK(roc.front().fpr == 0.0);
    CHECK(roc.front().tpr == 0.0);
    for (std::size_t k = 1; k < roc.size(); ++k) {
        const double cut = s[static_cast<Eigen::Index>(k - 1)];
        double tp = 0, fp = 0;
        for (Eigen::Index i = 0; i < 6; ++i)
            if (s[i] >= cut) (y[i] ? tp : fp) += 1;
        CHECK(roc[k].tpr == tp / 2.0);
        CHECK(roc[k].fpr == fp / 4.0);
    }
    CHECK(roc.back().fpr == 1.0);
    CHECK(roc.back().tpr == 1.0);

    const auto perfect = roc_curve(vec({0.1, 0.2, 0.8, 0.9}), vec({0, 0, 1, 1}));
    CHECK(std::any_of(perfect.begin(), perfect.end(), [](const RocPoint& p) { return p.fpr == 0.0 && p.tpr == 1.0; }));
    const auto flat = roc_curve(vec({0.5, 0.5, 0.5}), vec({0, 1, 0}));
    REQUIRE(flat.size() == 2);
    CHECK(flat[1].fpr == 1.0);
    CHECK(roc_curve(vec({0.5, 0.4}), vec({1, 1})).empty());
}

TEST_CASE("roc points are monotone") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> level(0, 20);
    for (int rep = 0; rep < 100; ++rep) {
        Eigen::VectorXd s(40), y(40);
        for (int i = 0; i < 40; ++i) {
            s[i] = level(rng);
            y[i] = i % 3 == 0;
        }
        const auto roc = roc_curve(s, y);
        for (std::size_t k = 1; k < roc.size(); ++k) {
            CHECK(roc[k].fpr >= roc[k - 1].fpr);
            CHECK(roc[k].tpr >= roc[k - 1].tpr);
        }
    }
}

// ---------------------------------------------------------------------------
// Design matrices

TEST_CASE("predictor columns and industry indicators") {
    const Panel& p = shared_panel();
    const auto structural = predictor_columns(p, {FeatureGroup::structural});
    REQUIRE(structural.size() == 13);
    CHECK(structural[0] == "distance_to_default");
    CHECK(structural[1] == "ff12_01");
    CHECK(structural[12] == "ff12_12");
    const auto accounting = predictor_columns(p, {FeatureGroup::accounting});
    CHECK(std::find(accounting.begin(), accounting.end(), "ff12_01") == accounting.end());
    CHECK(std::find(accounting.begin(), accounting.end(), "liabilities_assets") != accounting.end());
}

TEST_CASE("design matrix censors survival at the cutoff") {
    FirmYearRecord a{"A", 2000, 0, 2003, EventStatus::bankrupt, 4, {1.0}};
    FirmYearRecord a2{"A", 2003, 1, 2003, EventStatus::bankrupt, 4, {2.0}};
    FirmYearRecord b{"B", 2000, 0, 2010, EventStatus::censored, 2, {kMissing}};
    FirmYearRecord c{"C", 2001, 0, 2010, EventStatus::censored, 2, {3.0}};
    const Panel p({{"x", FeatureGroup::structural}}, {a, a2, b, c});
    const auto dm = design_matrix(p, {"x", "ff12_04"}, 2000, 2001, 2001);
    CHECK(dm.dropped_missing == 1);
    REQUIRE(dm.data.rows() == 2);
    CHECK(dm.data.X(0, 1) == 1.0);
    CHECK(dm.data.X(1, 1) == 0.0);
    CHECK(dm.data.status[0] == 0.0);
    CHECK(dm.data.time[0] == 2.0);
    CHECK(dm.data.time[1] == 1.0);
    const auto later = design_matrix(p, {"x"}, 2000, 2003, 2003);
    CHECK(later.data.status[0] == 1.0);
    CHECK(later.data.time[0] == 4.0);
    CHECK_THROWS_AS(design_matrix(p, {"nope"}, 2000, 2001, 2001), DataError);
}

// ---------------------------------------------------------------------------
// Tuning

TEST_CASE("expand_grid is the cartesian product in axis order") {
    const auto g = expand_grid(Family::xgb_like, {{"rounds", {10, 20}}, {"max_depth", {2, 3, 4}}}, 9);
    REQUIRE(g.size() == 6);
    CHECK(g[0].params.at("max_depth") == 2);
    CHECK(g[0].params.at("rounds") == 10);
    CHECK(g[1].params.at("rounds") == 20);
    CHECK(g[5].params.at("max_depth") == 4);
    for (const auto& s : g) CHECK(s.seed == 9);
    CHECK_THROWS_AS(expand_grid(Family::lasso, {{"lambda", {}}}, 1), ManifestError);
    CHECK_THROWS_AS(expand_grid(Family::lasso, {{"rounds", {5}}}, 1), ManifestError);
    for (Family f : all_families()) CHECK_FALSE(expand_grid(f, default_grid_axes(f), 0).empty());
}

TEST_CASE("grid of one wins by default") {
    const auto plan = expanding_window_plan(1995, 1999, 1999).front();
    const auto grid = expand_grid(Family::ridge, {{"lambda", {0.5}}}, 1);
    const auto fs = tune_and_forecast(shared_panel(), grid, plan, {FeatureGroup::structural, FeatureGroup::accounting});
    CHECK(fs.winner.params == grid[0].params);
    CHECK(fs.grid.size() == 1);
    CHECK(fs.scores.allFinite());
    CHECK(fs.scores.size() == static_cast<Eigen::Index>(fs.firm_ids.size()));
    std::set<std::string> firms(fs.firm_ids.begin(), fs.firm_ids.end());
    CHECK(firms.size() == fs.firm_ids.size());
}

TEST_CASE("winner has the best validation AUC, first on ties") {
    const auto plan = expanding_window_plan(1995, 2000, 2000).front();
    auto grid = lasso_grid();
    grid.push_back(grid[0]);
    const auto fs = tune_and_forecast(shared_panel(), grid, plan, {FeatureGroup::structural, FeatureGroup::accounting});
    double best = -1.0;
    for (const auto& g : fs.grid) best = std::max(best, g.validation_auc);
    CHECK(fs.validation_auc == best);
    const auto first = std::find_if(fs.grid.begin(), fs.grid.end(),
                                    [&](const GridResult& g) { return g.validation_auc == best; });
    CHECK(first->spec.params == fs.winner.params);
}

TEST_CASE("test-year labels never influence tuning") {
    const auto plans = expanding_window_plan(1995, 1999, 2002);
    const auto cols = predictor_columns(shared_panel(), {FeatureGroup::structural, FeatureGroup::accounting});
    for (const auto& plan : plans) {
        const auto base = tune_and_forecast(shared_panel(), lasso_grid(), plan, cols);
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            const Panel moved = shuffle_year_labels(shared_panel(), plan.test_year, seed);
            const auto again = tune_and_forecast(moved, lasso_grid(), plan, cols);
            CHECK(again.winner.params == base.winner.params);
            CHECK(again.validation_auc == base.validation_auc);
            CHECK(again.scores == base.scores);
        }
    }
}

TEST_CASE("single-class validation years are an error") {
    auto records = shared_panel().records();
    for (auto& r : records)
        if (r.year == 1997 || r.year == 1998) {
            r.defaulted_next_year = 0;
            r.event_status = EventStatus::censored;
        }
    const Panel p(shared_panel().schema(), std::move(records));
    const auto plan = expanding_window_plan(1995, 1999, 1999).front();
    CHECK_THROWS_AS(tune_and_forecast(p, lasso_grid(), plan, {FeatureGroup::structural}), DataError);
    CHECK_THROWS_AS(tune_and_forecast(p, {}, plan, {FeatureGroup::structural}), ManifestError);
    auto mixed = lasso_grid();
    mixed.push_back(ModelSpec{Family::ridge, {}, 0});
    CHECK_THROWS_AS(tune_and_forecast(shared_panel(), mixed, plan, {FeatureGroup::structural}), ManifestError);
}

TEST_CASE("walk forward is independent of the worker count") {
    const auto plans = expanding_window_plan(1995, 1998, 2002);
    const auto cols = predictor_columns(shared_panel(), {FeatureGroup::structural, FeatureGroup::accounting});
    const auto grid = expand_grid(Family::random_forest, {{"trees", {5}}, {"max_depth", {3, 5}}}, 4);
    const auto before = thread_count();
    set_thread_count(1);
    const auto one = walk_forward(shared_panel(), grid, plans, cols);
    set_thread_count(4);
    const auto four = walk_forward(shared_panel(), grid, plans, cols);
    set_thread_count(before);
    CHECK(forecasts_csv(one) == forecasts_csv(four));
    CHECK(tuning_csv(one) == tuning_csv(four));
    REQUIRE(one.size() == plans.size());
    for (std::size_t k = 0; k < one.size(); ++k) CHECK(one[k].test_year == plans[k].test_year);
}

TEST_CASE("pca forecasts keep the test rows") {
    const auto plan = expanding_window_plan(1995, 2000, 2000).front();
    ForecastOptions opt;
    opt.pca = true;
    const auto cols = predictor_columns(shared_panel(), {FeatureGroup::structural, FeatureGroup::accounting});
    const auto plain = tune_and_forecast(shared_panel(), lasso_grid(), plan, cols);
    const auto pca = tune_and_forecast(shared_panel(), lasso_grid(), plan, cols, opt);
    CHECK(pca.components >= 1);
    CHECK(pca.components <= static_cast<int>(cols.size()));
    CHECK(pca.firm_ids == plain.firm_ids);
    CHECK(pca.test.cols() == pca.components);
}

// ---------------------------------------------------------------------------
// Reports

TEST_CASE("named windows") {
    const std::vector<int> covered = {1998, 1999, 2000, 2001, 2002, 2007, 2010};
    CHECK(named_window("all", covered).years == covered);
    CHECK(named_window("dotcom", covered).years == std::vector<int>{1999, 2000, 2001});
    CHECK(named_window("gfc", covered).years == std::vector<int>{2007});
    CHECK(named_window("non_crisis", covered).years == std::vector<int>{1998, 2002, 2010});
    CHECK_THROWS_AS(named_window("covid", covered), ManifestError);
}

TEST_CASE("subset report pools and partitions") {
    const auto plans = expanding_window_plan(1995, 1998, 2002);
    const auto cols = predictor_columns(shared_panel(), {FeatureGroup::structural, FeatureGroup::accounting});
    const auto fs = walk_forward(shared_panel(), lasso_grid(), plans, cols);
    std::vector<int> covered;
    for (const auto& f : fs) covered.push_back(f.test_year);
    const auto rep = subset_report(fs, {named_window("all", covered), named_window("dotcom", covered),
                                        named_window("non_crisis", covered)});
    REQUIRE(rep.size() == 3);
    CHECK(rep[0].firm_years == rep[1].firm_years + rep[2].firm_years);
    CHECK(rep[0].defaults == rep[1].defaults + rep[2].defaults);

    Eigen::Index n = 0;
    for (const auto& f : fs) n += f.scores.size();
    Eigen::VectorXd s(n), y(n);
    Eigen::Index k = 0;
    for (const auto& f : fs) {
        s.segment(k, f.scores.size()) = f.scores;
        y.segment(k, f.scores.size()) = f.labels;
        k += f.scores.size();
    }
    CHECK(rep[0].auc == auc(s, y));
    CHECK(rep[0].auc >= 0.0);
    CHECK(rep[0].auc <= 1.0);
    CHECK(rep[0].auc > 0.6);
    CHECK_THROWS_AS(subset_report(fs, {named_window("gfc", covered)}), DataError);
}

TEST_CASE("table 2 layout") {
    const std::vector<BenchmarkCell> cells = {{Family::lasso, "dd", "all", 0.7},
                                              {Family::lasso, "accounting", "all", 0.75},
                                              {Family::ridge, "dd", "all", 0.5},
                                              {Family::ridge, "dd", "gfc", 0.9}};
    CHECK(table2_csv(cells, {Family::lasso, Family::ridge}, {"dd", "accounting"}, "all") ==
          "algorithm,dd,accounting\nlasso,0.7,0.75\nridge,0.5,NA\n");
}

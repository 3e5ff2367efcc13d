#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "distress/core.hpp"
#include "distress/eval.hpp"
#include "distress/models/model.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace distress;

namespace {

struct Synthetic {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
};

Synthetic logistic_data(Eigen::Index n, Eigen::Index p, std::uint64_t seed, double scale = 1.0,
                        double intercept = -1.0) {
    std::mt19937_64 rng(seed);
    Synthetic d;
    d.X = testing::random_matrix(n, p, rng);
    Eigen::VectorXd beta(p);
    for (Eigen::Index k = 0; k < p; ++k) beta[k] = scale * (k % 2 == 0 ? 1.0 : -0.5) / (1.0 + 0.5 * k);
    d.y = testing::logistic_labels(d.X, beta, intercept, rng);
    return d;
}

Dataset make_dataset(const Synthetic& s) {
    Dataset d;
    d.X = s.X;
    d.y = s.y;
    d.time = Eigen::VectorXd::Ones(s.X.rows());
    d.status = s.y;
    for (Eigen::Index j = 0; j < s.X.cols(); ++j) d.feature_names.push_back("x" + std::to_string(j));
    return d;
}

std::vector<int> all_rows(Eigen::Index n) {
    std::vector<int> r(static_cast<std::size_t>(n));
    std::iota(r.begin(), r.end(), 0);
    return r;
}

ModelSpec small_spec(Family f) {
    ModelSpec s;
    s.family = f;
    s.seed = 99;
    switch (f) {
        case Family::random_forest: s.params = {{"trees", 15}}; break;
        case Family::survival_forest: s.params = {{"trees", 8}, {"min_leaf", 3}}; break;
        case Family::xgb_like: s.params = {{"rounds", 15}, {"max_depth", 3}}; break;
        case Family::lgbm_like: s.params = {{"rounds", 15}, {"max_leaves", 7}}; break;
        case Family::nn3:
        case Family::nn5: s.params = {{"epochs", 3}}; break;
        default: break;
    }
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Shared numerics

TEST_CASE("sigmoid and softplus are stable") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(800.0) == 1.0);
    CHECK(sigmoid(-800.0) == 0.0);
    CHECK(sigmoid(-3.0) == doctest::Approx(1.0 - sigmoid(3.0)).epsilon(1e-15));
    CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
    CHECK(softplus(800.0) == 800.0);
    CHECK(softplus(-800.0) == 0.0);
    const Eigen::Vector3d eta(0.5, -1.0, 2.0);
    const Eigen::Vector3d y(1.0, 0.0, 0.0);
    double manual = 0.0;
    for (int i = 0; i < 3; ++i) manual += std::log1p(std::exp(eta[i])) - y[i] * eta[i];
    CHECK(logistic_loss(eta, y) == doctest::Approx(manual).epsilon(1e-14));
}

TEST_CASE("standardizer uses training statistics") {
    Eigen::MatrixXd X(4, 2);
    X << 1, 5, 2, 5, 3, 5, kMissing, 5;
    const auto s = Standardizer::fit(X);
    CHECK(s.mean[0] == 2.0);
    CHECK(s.sd[0] == 1.0);
    CHECK(s.sd[1] == 1.0);
    const Eigen::MatrixXd Z = s.apply(X);
    CHECK(Z(0, 0) == -1.0);
    CHECK(std::isnan(Z(3, 0)));
    CHECK(Z(0, 1) == 0.0);
}

TEST_CASE("schema fingerprint depends on names and order") {
    CHECK(schema_fingerprint({"a", "b"}) == schema_fingerprint({"a", "b"}));
    CHECK(schema_fingerprint({"a", "b"}) != schema_fingerprint({"b", "a"}));
    CHECK(schema_fingerprint({"ab"}) != schema_fingerprint({"a", "b"}));
}

// ---------------------------------------------------------------------------
// Penalized hazard

TEST_CASE("hazard objective matches its definition") {
    const auto d = logistic_data(50, 3, 1);
    const Eigen::Vector3d b(0.3, -0.2, 0.0);
    double nll = 0.0;
    for (Eigen::Index i = 0; i < 50; ++i) {
        const double eta = 0.1 + d.X.row(i).dot(b);
        nll += std::log1p(std::exp(eta)) - d.y[i] * eta;
    }
    CHECK(hazard_objective(d.X, d.y, 0.1, b, Penalty::l1, 2.0) == doctest::Approx(nll + 2.0 * 0.5).epsilon(1e-13));
    CHECK(hazard_objective(d.X, d.y, 0.1, b, Penalty::l2, 2.0) == doctest::Approx(nll + 2.0 * 0.13).epsilon(1e-13));
}

TEST_CASE("unpenalized hazard equals Newton MLE") {
    for (std::uint64_t seed : {2u, 3u, 4u}) {
        const auto d = logistic_data(200, 3, seed);
        const auto mle = testing::newton_mle(d.X, d.y);
        for (Penalty pen : {Penalty::l1, Penalty::l2}) {
            const auto fit = fit_penalized_hazard(d.X, d.y, pen, 0.0);
            CHECK(std::abs(fit.intercept - mle.intercept) < 1e-6);
            CHECK((fit.coef - mle.coef).cwiseAbs().maxCoeff() < 1e-6);
        }
    }
}

TEST_CASE("l1 fit satisfies the optimality conditions") {
    for (std::uint64_t seed : {5u, 6u}) {
        const auto d = logistic_data(200, 6, seed);
        const double kill = l1_kill_lambda(d.X, d.y);
        for (double frac : {0.05, 0.2, 0.5, 0.9}) {
            const double lambda = frac * kill;
            const auto fit = fit_penalized_hazard(d.X, d.y, Penalty::l1, lambda);
            CHECK(testing::l1_kkt_violation(d.X, d.y, fit.intercept, fit.coef, lambda) < 1e-6);
        }
    }
}

TEST_CASE("kill lambda zeroes every slope") {
    const auto d = logistic_data(200, 5, 7);
    const double kill = l1_kill_lambda(d.X, d.y);
    const Eigen::VectorXd centered = d.y.array() - d.y.mean();
    CHECK(kill == doctest::Approx((d.X.transpose() * centered).cwiseAbs().maxCoeff()).epsilon(1e-14));
    const auto fit = fit_penalized_hazard(d.X, d.y, Penalty::l1, kill);
    CHECK(fit.coef.isZero(0.0));
    const double ybar = d.y.mean();
    CHECK(fit.intercept == doctest::Approx(std::log(ybar / (1.0 - ybar))).epsilon(1e-12));
    const auto below = fit_penalized_hazard(d.X, d.y, Penalty::l1, 0.9 * kill);
    CHECK_FALSE(below.coef.isZero(0.0));

    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto e = logistic_data(200, 3, seed);
        CHECK(fit_penalized_hazard(e.X, e.y, Penalty::l1, l1_kill_lambda(e.X, e.y)).coef.isZero(0.0));
    }
}

TEST_CASE("l1 path is sparser at larger lambda") {
    const auto d = logistic_data(300, 8, 8);
    const double kill = l1_kill_lambda(d.X, d.y);
    long prev = 9;
    for (double frac : {0.01, 0.3, 0.6, 1.0}) {
        const auto fit = fit_penalized_hazard(d.X, d.y, Penalty::l1, frac * kill);
        const long nz = (fit.coef.array() != 0.0).count();
        CHECK(nz <= prev);
        prev = nz;
    }
    CHECK(prev == 0);
}

TEST_CASE("l2 shrinks the coefficient norm") {
    const auto d = logistic_data(200, 4, 9);
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : {0.0, 1.0, 10.0, 100.0, 1e4}) {
        const auto fit = fit_penalized_hazard(d.X, d.y, Penalty::l2, lambda);
        const Eigen::VectorXd grad_check = [&] {
            Eigen::VectorXd r(d.X.rows());
            for (Eigen::Index i = 0; i < d.X.rows(); ++i)
                r[i] = sigmoid(fit.intercept + d.X.row(i).dot(fit.coef)) - d.y[i];
            return Eigen::VectorXd(d.X.transpose() * r + 2.0 * lambda * fit.coef);
        }();
        CHECK(grad_check.cwiseAbs().maxCoeff() < 1e-6);
        CHECK(fit.coef.norm() < prev);
        prev = fit.coef.norm();
    }
}

TEST_CASE("hazard rejects single-class labels") {
    const auto d = logistic_data(50, 2, 10);
    CHECK_THROWS_AS(fit_penalized_hazard(d.X, Eigen::VectorXd::Zero(50), Penalty::l1, 0.1), NumericalError);
}

// ---------------------------------------------------------------------------
// CART and random forests

TEST_CASE("gini impurity") {
    CHECK(gini(0, 5) == 0.0);
    CHECK(gini(5, 5) == 0.0);
    CHECK(gini(1, 2) == 0.5);
    CHECK(gini(1, 4) == doctest::Approx(0.375).epsilon(1e-15));
}

TEST_CASE("pure node stays a leaf") {
    const auto d = logistic_data(30, 3, 11);
    std::mt19937_64 rng(1);
    const auto rows = all_rows(30);
    const Tree t = train_cart(d.X, Eigen::VectorXd::Zero(30), rows, {}, rng);
    REQUIRE(t.nodes.size() == 1);
    CHECK(t.nodes[0].is_leaf());
    CHECK(t.nodes[0].value == 0.0);
}

TEST_CASE("stump matches the exhaustive split oracle") {
    std::mt19937_64 gen(12);
    std::uniform_int_distribution<int> level(0, 4);
    int splits = 0;
    for (int rep = 0; rep < 300; ++rep) {
        const Eigen::Index n = 4 + static_cast<Eigen::Index>(gen() % 29);
        const Eigen::Index p = 1 + static_cast<Eigen::Index>(gen() % 4);
        Eigen::MatrixXd X(n, p);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < p; ++j) X(i, j) = level(gen);  // plenty of ties
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) y[i] = (X(i, 0) + level(gen) > 4) ? 1.0 : 0.0;

        const auto oracle = testing::exhaustive_stump(X, y);
        std::mt19937_64 rng(1);
        CartOptions opt;
        opt.max_depth = 1;
        const Tree t = train_cart(X, y, all_rows(n), opt, rng);
        REQUIRE(!t.nodes.empty());
        if (!oracle.split) {
            CHECK(t.nodes.size() == 1);
            CHECK(t.nodes[0].value == doctest::Approx(oracle.root).epsilon(1e-15));
            continue;
        }
        ++splits;
        REQUIRE(t.nodes.size() == 3);
        const auto& root = t.nodes[0];
        CHECK(root.feature == oracle.feature);
        CHECK(root.threshold == oracle.threshold);
        CHECK(t.nodes[static_cast<std::size_t>(root.left)].value == doctest::Approx(oracle.left).epsilon(1e-15));
        CHECK(t.nodes[static_cast<std::size_t>(root.right)].value == doctest::Approx(oracle.right).epsilon(1e-15));
    }
    CHECK(splits > 200);
}

TEST_CASE("single unbootstrapped tree with all features is plain CART") {
    for (std::uint64_t seed : {13u, 14u, 15u}) {
        const auto d = logistic_data(150, 5, seed);
        ForestOptions fo;
        fo.trees = 1;
        fo.bootstrap = false;
        fo.cart.mtry = 5;
        fo.cart.max_depth = 5;
        fo.seed = seed;
        const Forest f = train_random_forest(d.X, d.y, fo);
        std::mt19937_64 rng(seed);
        const Tree t = train_cart(d.X, d.y, all_rows(150), fo.cart, rng);
        const Eigen::VectorXd a = f.predict(d.X);
        const Eigen::VectorXd b = t.predict(d.X);
        CHECK(a == b);
        const auto fresh = logistic_data(80, 5, seed + 100);
        CHECK(f.predict(fresh.X) == t.predict(fresh.X));
    }
}

TEST_CASE("forest scores are fractions and memorize distinct rows") {
    const auto d = logistic_data(120, 4, 16);
    ForestOptions fo;
    fo.trees = 20;
    fo.seed = 1;
    const Eigen::VectorXd s = train_random_forest(d.X, d.y, fo).predict(d.X);
    CHECK(s.minCoeff() >= 0.0);
    CHECK(s.maxCoeff() <= 1.0);

    fo.bootstrap = false;
    fo.cart.mtry = 4;
    CHECK(train_random_forest(d.X, d.y, fo).predict(d.X) == d.y);
}

TEST_CASE("identical rows give the base rate") {
    const Eigen::MatrixXd X = Eigen::MatrixXd::Constant(40, 3, 1.5);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(40);
    y.head(10).setOnes();
    ForestOptions fo;
    fo.trees = 1;
    fo.bootstrap = false;
    const Forest f = train_random_forest(X, y, fo);
    CHECK(f.trees[0].nodes.size() == 1);
    CHECK(f.predict(X)[0] == 0.25);
}

TEST_CASE("missing values route left") {
    Eigen::MatrixXd X(6, 1);
    X << 1, 2, 3, 4, 5, 6;
    Eigen::VectorXd y(6);
    y << 0, 0, 0, 1, 1, 1;
    std::mt19937_64 rng(1);
    const Tree t = train_cart(X, y, all_rows(6), {}, rng);
    Eigen::MatrixXd Q(1, 1);
    Q << kMissing;
    CHECK(t.predict(Q)[0] == 0.0);
}

TEST_CASE("draw_features and mtry resolution") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        const auto f = draw_features(10, 4, rng);
        REQUIRE(f.size() == 4);
        CHECK(std::is_sorted(f.begin(), f.end()));
        CHECK(std::adjacent_find(f.begin(), f.end()) == f.end());
        CHECK(f.front() >= 0);
        CHECK(f.back() < 10);
    }
    CHECK(resolve_mtry(0, 10) == 3);
    CHECK(resolve_mtry(0.5, 10) == 5);
    CHECK(resolve_mtry(0.01, 10) == 1);
    CHECK(resolve_mtry(4, 10) == 4);
    CHECK(resolve_mtry(40, 10) == 10);
}

// ---------------------------------------------------------------------------
// Random survival forest

TEST_CASE("log-rank statistic matches the risk-set definition") {
    std::mt19937_64 gen(17);
    std::uniform_int_distribution<int> t(1, 6);
    for (int rep = 0; rep < 200; ++rep) {
        const int n = 8;
        std::vector<double> time(n);
        std::vector<int> status(n);
        std::vector<bool> left(n);
        std::vector<char> left_c(n);
        Eigen::VectorXd tv(n), sv(n);
        for (int i = 0; i < n; ++i) {
            time[i] = t(gen);
            status[i] = static_cast<int>(gen() % 3 != 0);
            left[i] = gen() % 2 == 0;
            left_c[i] = left[i];
            tv[i] = time[i];
            sv[i] = status[i];
        }
        const auto rows = all_rows(n);
        CHECK(log_rank_statistic(tv, sv, rows, left_c) ==
              doctest::Approx(testing::log_rank_oracle(time, status, left)).epsilon(1e-12));
    }
}

TEST_CASE("survival tree first split maximizes log-rank") {
    std::mt19937_64 gen(18);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 8, p = 2;
        Eigen::MatrixXd X(n, p);
        Eigen::VectorXd tv(n), sv(n);
        std::vector<double> time(n);
        std::vector<int> status(n);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = u(gen);
            X(i, 1) = u(gen);
            time[i] = 1.0 + std::floor(5.0 * u(gen) + 3.0 * X(i, 0));
            status[i] = u(gen) < 0.7;
            tv[i] = time[i];
            sv[i] = status[i];
        }
        double best = 0.0;
        int bf = -1;
        double bt = 0.0;
        for (int j = 0; j < p; ++j) {
            std::vector<double> vals(X.col(j).data(), X.col(j).data() + n);
            std::sort(vals.begin(), vals.end());
            for (int k = 0; k + 1 < n; ++k) {
                std::vector<bool> left(n);
                for (int i = 0; i < n; ++i) left[i] = X(i, j) <= vals[k];
                const double s = testing::log_rank_oracle(time, status, left);
                if (s > best + 1e-9) {
                    best = s;
                    bf = j;
                    bt = vals[k];
                }
            }
        }
        SurvivalForestOptions opt;
        opt.max_depth = 1;
        opt.min_leaf = 1;
        std::mt19937_64 rng(1);
        const auto st = train_survival_tree(X, tv, sv, all_rows(n), opt, rng);
        if (bf < 0) {
            CHECK(st.tree.nodes.size() == 1);
            continue;
        }
        REQUIRE(st.tree.nodes.size() == 3);
        std::vector<bool> chosen(n);
        for (int i = 0; i < n; ++i) chosen[i] = X(i, st.tree.nodes[0].feature) <= st.tree.nodes[0].threshold;
        CHECK(testing::log_rank_oracle(time, status, chosen) == doctest::Approx(best).epsilon(1e-9));
        if (st.tree.nodes[0].feature == bf) CHECK(st.tree.nodes[0].threshold == bt);
        ++checked;
    }
    CHECK(checked > 50);
}

TEST_CASE("nelson-aalen estimator") {
    Eigen::VectorXd time(5), status(5);
    time << 1, 2, 2, 3, 4;
    status << 1, 1, 0, 1, 0;
    const auto rows = all_rows(5);
    const auto h = nelson_aalen(time, status, rows);
    REQUIRE(h.times == std::vector<double>{1, 2, 3});
    CHECK(h.at(0.5) == 0.0);
    CHECK(h.at(1.0) == doctest::Approx(0.2));
    CHECK(h.at(2.5) == doctest::Approx(0.2 + 0.25));
    CHECK(h.at(10.0) == doctest::Approx(0.2 + 0.25 + 0.5));
}

TEST_CASE("all-censored data has zero hazard") {
    const auto d = logistic_data(60, 3, 19);
    SurvivalForestOptions opt;
    opt.trees = 5;
    const Eigen::VectorXd time = Eigen::VectorXd::LinSpaced(60, 1.0, 5.0);
    const auto f = train_survival_forest(d.X, time, Eigen::VectorXd::Zero(60), opt);
    CHECK(f.predict(d.X).isZero(0.0));
}

TEST_CASE("survival forest depends only on the order of event times") {
    const auto d = logistic_data(80, 3, 20);
    std::mt19937_64 gen(3);
    Eigen::VectorXd time(80), warped(80);
    for (Eigen::Index i = 0; i < 80; ++i) {
        time[i] = 1.0 + static_cast<double>(gen() % 6);
        warped[i] = std::exp(time[i]) + 10.0;
    }
    SurvivalForestOptions opt;
    opt.trees = 6;
    opt.min_leaf = 3;
    opt.seed = 5;
    opt.horizon = 3.0;
    const auto a = train_survival_forest(d.X, time, d.y, opt);
    opt.horizon = std::exp(3.0) + 10.0;
    const auto b = train_survival_forest(d.X, warped, d.y, opt);
    CHECK(a.predict(d.X) == b.predict(d.X));
}

// ---------------------------------------------------------------------------
// Gradient boosting

TEST_CASE("boosting training loss never increases") {
    for (GrowthPolicy policy : {GrowthPolicy::level_wise, GrowthPolicy::leaf_wise}) {
        for (std::uint64_t seed : {21u, 22u, 23u}) {
            const auto d = logistic_data(300, 5, seed, 2.0);
            BoostOptions o;
            o.policy = policy;
            o.rounds = 120;
            o.learning_rate = 0.3;
            o.max_depth = 4;
            o.max_leaves = 15;
            o.seed = seed;
            BoostTrace trace;
            const auto model = train_gbt(d.X, d.y, o, &trace);
            REQUIRE(trace.loss.size() == 121);
            for (std::size_t k = 1; k < trace.loss.size(); ++k) CHECK(trace.loss[k] <= trace.loss[k - 1]);
            CHECK(trace.loss.back() < trace.loss.front());
            CHECK(logistic_loss(model.margin(d.X), d.y) == doctest::Approx(trace.loss.back()).epsilon(1e-12));
        }
    }
}

TEST_CASE("boosting recovers a separating stump") {
    Eigen::MatrixXd X(40, 1);
    Eigen::VectorXd y(40);
    for (int i = 0; i < 40; ++i) {
        X(i, 0) = i - 20.0;
        y[i] = i >= 20 ? 1.0 : 0.0;
    }
    for (GrowthPolicy policy : {GrowthPolicy::level_wise, GrowthPolicy::leaf_wise}) {
        BoostOptions o;
        o.policy = policy;
        o.rounds = 1;
        o.max_depth = 1;
        o.max_leaves = 2;
        const auto m = train_gbt(X, y, o);
        CHECK(auc(m.predict(X), y) == 1.0);
    }
}

TEST_CASE("huge l2 regularization leaves the base rate") {
    const auto d = logistic_data(200, 3, 24);
    for (GrowthPolicy policy : {GrowthPolicy::level_wise, GrowthPolicy::leaf_wise}) {
        BoostOptions o;
        o.policy = policy;
        o.rounds = 20;
        o.l2_reg = 1e15;
        const auto m = train_gbt(d.X, d.y, o);
        CHECK(m.base_margin == doctest::Approx(std::log(d.y.mean() / (1.0 - d.y.mean()))));
        CHECK((m.predict(d.X).array() - d.y.mean()).abs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("leaf-wise growth respects max_leaves") {
    const auto d = logistic_data(300, 4, 25, 2.0);
    BoostOptions o;
    o.policy = GrowthPolicy::leaf_wise;
    o.rounds = 5;
    o.max_leaves = 6;
    const auto m = train_gbt(d.X, d.y, o);
    for (const auto& t : m.trees) {
        const auto leaves = std::count_if(t.nodes.begin(), t.nodes.end(), [](const TreeNode& nd) { return nd.is_leaf(); });
        CHECK(leaves <= 6);
    }
    o.policy = GrowthPolicy::level_wise;
    o.max_depth = 2;
    for (const auto& t : train_gbt(d.X, d.y, o).trees) CHECK(t.depth() <= 2);
}

TEST_CASE("boosting subsample is seeded") {
    const auto d = logistic_data(200, 3, 26);
    BoostOptions o;
    o.rounds = 10;
    o.subsample = 0.5;
    o.seed = 4;
    const auto a = train_gbt(d.X, d.y, o).predict(d.X);
    const auto b = train_gbt(d.X, d.y, o).predict(d.X);
    CHECK(a == b);
    o.seed = 5;
    CHECK(train_gbt(d.X, d.y, o).predict(d.X) != a);
}

// ---------------------------------------------------------------------------
// Neural networks

TEST_CASE("relu") {
    CHECK(relu(-2.0) == 0.0);
    CHECK(relu(0.0) == 0.0);
    CHECK(relu(3.5) == 3.5);
}

TEST_CASE("network shapes and parameter vector") {
    const Network net = init_network(6, nn5_layers(), 1);
    REQUIRE(net.weights.size() == 6);
    CHECK(net.weights[0].rows() == 64);
    CHECK(net.weights[0].cols() == 6);
    CHECK(net.weights[5].rows() == 1);
    CHECK(net.weights[5].cols() == 4);
    const Eigen::Index expected = 6 * 64 + 64 + 64 * 32 + 32 + 32 * 16 + 16 + 16 * 8 + 8 + 8 * 4 + 4 + 4 + 1;
    CHECK(net.parameter_count() == expected);
    Network copy = init_network(6, nn5_layers(), 2);
    copy.assign(net.flatten());
    CHECK(copy.flatten() == net.flatten());
}

TEST_CASE("backpropagation matches finite differences") {
    const auto d = logistic_data(24, 5, 27);
    for (const auto* layers : {&nn3_layers(), &nn5_layers()}) {
        const Network net = init_network(5, *layers, 3);
        CHECK(testing::mlp_gradient_error(net, d.X, d.y) < 1e-4);
    }
}

TEST_CASE("zero output layer predicts one half") {
    const auto d = logistic_data(20, 4, 28);
    const Network net = init_network(4, nn3_layers(), 1, true);
    CHECK((net.predict(d.X).array() == 0.5).all());
}

TEST_CASE("training lowers the loss and is seeded") {
    const auto d = logistic_data(400, 4, 29, 2.0);
    MlpOptions o;
    o.epochs = 20;
    o.learning_rate = 0.05;
    o.batch_size = 32;
    o.seed = 3;
    const Network before = init_network(4, o.hidden, o.seed);
    const Network after = train_mlp(d.X, d.y, o);
    CHECK(loss_and_gradient(after, d.X, d.y, nullptr) < loss_and_gradient(before, d.X, d.y, nullptr));
    CHECK(train_mlp(d.X, d.y, o).flatten() == after.flatten());
}

TEST_CASE("divergent training raises a numerical error") {
    auto d = logistic_data(100, 3, 30);
    d.X *= 1e200;
    MlpOptions o;
    o.epochs = 3;
    o.learning_rate = 1.0;
    CHECK_THROWS_AS(train_mlp(d.X, d.y, o), NumericalError);
}

// ---------------------------------------------------------------------------
// Unified interface

TEST_CASE("family names and hyperparameter validation") {
    CHECK(all_families().size() == 8);
    for (Family f : all_families()) CHECK(parse_family(to_string(f)) == f);
    CHECK_THROWS_AS(parse_family("xgboost"), ManifestError);
    CHECK(requires_complete_inputs(Family::lasso));
    CHECK(requires_complete_inputs(Family::nn5));
    CHECK_FALSE(requires_complete_inputs(Family::random_forest));

    ModelSpec s;
    s.family = Family::lasso;
    s.params = {{"lambda", -1.0}};
    CHECK_THROWS_AS(validate(s), ManifestError);
    s.params = {{"trees", 10}};
    CHECK_THROWS_AS(validate(s), ManifestError);
    s.family = Family::random_forest;
    s.params = {{"trees", 2.5}};
    CHECK_THROWS_AS(validate(s), ManifestError);
    s.family = Family::xgb_like;
    s.params = {{"learning_rate", 0.0}};
    CHECK_THROWS_AS(validate(s), ManifestError);
    s.params = {{"max_depth", 0}};
    CHECK_THROWS_AS(validate(s), ManifestError);
    s.params = {{"subsample", 0.5}};
    CHECK_NOTHROW(validate(s));
    CHECK(describe(s).rfind("xgb_like{", 0) == 0);
    CHECK(describe(s).find("subsample=0.5") != std::string::npos);
}

TEST_CASE("every family trains, predicts and round-trips") {
    const auto data = make_dataset(logistic_data(150, 4, 31, 1.5));
    const auto fresh = make_dataset(logistic_data(60, 4, 32, 1.5));
    for (Family f : all_families()) {
        CAPTURE(to_string(f));
        const auto model = train(small_spec(f), data);
        const Eigen::VectorXd s = predict(model, fresh);
        REQUIRE(s.size() == 60);
        CHECK(s.allFinite());
        if (f != Family::survival_forest) {
            CHECK(s.minCoeff() >= 0.0);
            CHECK(s.maxCoeff() <= 1.0);
        }

        const std::string text = serialize(model);
        const TrainedModel back = deserialize(text);
        CHECK(predict(back, fresh) == s);
        CHECK(serialize(back) == text);

        std::vector<int> perm = all_rows(60);
        std::mt19937_64 rng(1);
        std::shuffle(perm.begin(), perm.end(), rng);
        Dataset shuffled = fresh;
        for (int i = 0; i < 60; ++i) shuffled.X.row(i) = fresh.X.row(perm[static_cast<std::size_t>(i)]);
        const Eigen::VectorXd ps = predict(model, shuffled);
        for (int i = 0; i < 60; ++i) CHECK(ps[i] == s[perm[static_cast<std::size_t>(i)]]);
    }
}

TEST_CASE("predict rejects a foreign schema and bad values") {
    const auto data = make_dataset(logistic_data(100, 3, 33));
    const auto lasso = train(small_spec(Family::lasso), data);
    auto renamed = data;
    renamed.feature_names[1] = "other";
    CHECK_THROWS_AS(predict(lasso, renamed), DataError);

    auto holes = data;
    holes.X(4, 1) = kMissing;
    CHECK_THROWS_AS(predict(lasso, holes), DataError);
    CHECK_THROWS_AS(train(small_spec(Family::lasso), holes), DataError);
    const auto rf = train(small_spec(Family::random_forest), data);
    CHECK(predict(rf, holes).allFinite());
    CHECK(train(small_spec(Family::xgb_like), holes).predict(holes.X, schema_fingerprint(holes.feature_names)).allFinite());

    auto inf = data;
    inf.X(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(predict(rf, inf), DataError);
    CHECK_THROWS_AS(deserialize("{\"format\":\"distress-model\",\"version\":2}"), Error);
    CHECK_THROWS_AS(deserialize("not json"), Error);
}

TEST_CASE("fully penalized lasso predicts the training default rate") {
    const auto data = make_dataset(logistic_data(200, 3, 34));
    ModelSpec s;
    s.family = Family::lasso;
    s.params = {{"lambda", 1e6}};
    const Eigen::VectorXd p = predict(train(s, data), data);
    CHECK((p.array() - data.y.mean()).abs().maxCoeff() < 1e-12);
}

TEST_CASE("fits do not depend on the worker count") {
    const auto data = make_dataset(logistic_data(200, 4, 35, 1.5));
    const auto before = thread_count();
    for (Family f : {Family::random_forest, Family::survival_forest, Family::xgb_like, Family::lgbm_like}) {
        set_thread_count(1);
        const std::string one = serialize(train(small_spec(f), data));
        set_thread_count(3);
        const std::string three = serialize(train(small_spec(f), data));
        CHECK(one == three);
    }
    set_thread_count(before);
}

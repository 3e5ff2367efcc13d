#include "distress/models/model.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "json.hpp"

namespace distress {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "distress-model";
constexpr int kVersion = 1;

const std::map<Family, std::string>& family_names() {
    static const std::map<Family, std::string> names = {
        {Family::lasso, "lasso"},         {Family::ridge, "ridge"},
        {Family::random_forest, "random_forest"}, {Family::xgb_like, "xgb_like"},
        {Family::lgbm_like, "lgbm_like"}, {Family::survival_forest, "survival_forest"},
        {Family::nn3, "nn3"},             {Family::nn5, "nn5"},
    };
    return names;
}

double param(const ModelSpec& spec, const std::string& name) {
    const auto it = spec.params.find(name);
    return it != spec.params.end() ? it->second : default_hyperparameters(spec.family).at(name);
}

int int_param(const ModelSpec& spec, const std::string& name) { return static_cast<int>(param(spec, name)); }

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Range rules: each name maps to (minimum, maximum, integral, min exclusive).
struct Range {
    double lo, hi;
    bool integral;
    bool lo_open;
};

const std::map<std::string, Range>& ranges() {
    const double inf = std::numeric_limits<double>::infinity();
    static const std::map<std::string, Range> r = {
        {"lambda", {0, inf, false, false}},      {"trees", {1, inf, true, false}},
        {"mtry", {0, inf, false, false}},        {"max_depth", {0, inf, true, false}},
        {"min_leaf", {1, inf, true, false}},     {"bootstrap", {0, 1, true, false}},
        {"rounds", {1, inf, true, false}},       {"learning_rate", {0, 1, false, true}},
        {"l2_reg", {0, inf, false, false}},      {"min_child_weight", {0, inf, false, false}},
        {"subsample", {0, 1, false, true}},      {"max_leaves", {2, inf, true, false}},
        {"max_bins", {2, 65535, true, false}},   {"horizon", {0, inf, false, true}},
        {"epochs", {1, inf, true, false}},       {"batch_size", {1, inf, true, false}},
    };
    return r;
}

json tree_json(const Tree& t) {
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
         value = json::array();
    for (const auto& n : t.nodes) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        value.push_back(n.value);
    }
    return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}};
}

Tree tree_from(const json& j) {
    Tree t;
    const auto& f = j.at("feature");
    t.nodes.resize(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) {
        auto& n = t.nodes[k];
        n.feature = f[k].get<int>();
        n.threshold = j.at("threshold")[k].get<double>();
        n.left = j.at("left")[k].get<int>();
        n.right = j.at("right")[k].get<int>();
        n.value = j.at("value")[k].get<double>();
    }
    return t;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_json(m.row(r).transpose()));
    return rows;
}

Eigen::MatrixXd matrix_from(const json& j) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), j.empty() ? 0 : static_cast<Eigen::Index>(j[0].size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) m.row(r) = vector_from(j[static_cast<std::size_t>(r)]).transpose();
    return m;
}

struct ParametersToJson {
    json operator()(const LinearHazard& h) const { return {{"intercept", h.intercept}, {"coef", vector_json(h.coef)}}; }
    json operator()(const Forest& f) const {
        json trees = json::array();
        for (const auto& t : f.trees) trees.push_back(tree_json(t));
        return {{"trees", trees}};
    }
    json operator()(const BoostedEnsemble& b) const {
        json trees = json::array();
        for (const auto& t : b.trees) trees.push_back(tree_json(t));
        return {{"base_margin", b.base_margin}, {"trees", trees}};
    }
    json operator()(const SurvivalForest& s) const {
        json trees = json::array();
        for (const auto& st : s.trees) {
            json hazards = json::array();
            for (const auto& h : st.hazards) hazards.push_back({{"times", h.times}, {"values", h.values}});
            trees.push_back({{"tree", tree_json(st.tree)}, {"hazards", hazards}});
        }
        return {{"horizon", s.horizon}, {"trees", trees}};
    }
    json operator()(const Network& n) const {
        json layers = json::array();
        for (std::size_t l = 0; l < n.weights.size(); ++l)
            layers.push_back({{"weights", matrix_json(n.weights[l])}, {"biases", vector_json(n.biases[l])}});
        return {{"layers", layers}};
    }
};

FittedParameters parameters_from(Family family, const json& j) {
    switch (family) {
        case Family::lasso:
        case Family::ridge:
            return LinearHazard{j.at("intercept").get<double>(), vector_from(j.at("coef"))};
        case Family::random_forest: {
            Forest f;
            for (const auto& t : j.at("trees")) f.trees.push_back(tree_from(t));
            return f;
        }
        case Family::xgb_like:
        case Family::lgbm_like: {
            BoostedEnsemble b;
            b.base_margin = j.at("base_margin").get<double>();
            for (const auto& t : j.at("trees")) b.trees.push_back(tree_from(t));
            return b;
        }
        case Family::survival_forest: {
            SurvivalForest s;
            s.horizon = j.at("horizon").get<double>();
            for (const auto& t : j.at("trees")) {
                SurvivalTree st;
                st.tree = tree_from(t.at("tree"));
                for (const auto& h : t.at("hazards"))
                    st.hazards.push_back({h.at("times").get<std::vector<double>>(), h.at("values").get<std::vector<double>>()});
                s.trees.push_back(std::move(st));
            }
            return s;
        }
        case Family::nn3:
        case Family::nn5: {
            Network n;
            for (const auto& layer : j.at("layers")) {
                n.weights.push_back(matrix_from(layer.at("weights")));
                n.biases.push_back(vector_from(layer.at("biases")));
            }
            return n;
        }
    }
    throw DataError("model: unknown family");
}

}  // namespace

const std::vector<Family>& all_families() {
    static const std::vector<Family> f = {Family::lasso,     Family::ridge,           Family::random_forest,
                                          Family::xgb_like,  Family::lgbm_like,       Family::survival_forest,
                                          Family::nn3,       Family::nn5};
    return f;
}

std::string to_string(Family f) { return family_names().at(f); }

Family parse_family(std::string_view name) {
    for (const auto& [f, n] : family_names())
        if (n == name) return f;
    throw ManifestError("unknown algorithm family '" + std::string(name) + "'");
}

bool requires_complete_inputs(Family f) {
    return f == Family::lasso || f == Family::ridge || f == Family::nn3 || f == Family::nn5;
}

const Hyperparameters& default_hyperparameters(Family f) {
    static const std::map<Family, Hyperparameters> defaults = {
        {Family::lasso, {{"lambda", 0.01}}},
        {Family::ridge, {{"lambda", 0.01}}},
        {Family::random_forest, {{"trees", 100}, {"mtry", 0}, {"max_depth", 0}, {"min_leaf", 1}, {"bootstrap", 1}}},
        {Family::xgb_like,
         {{"rounds", 100}, {"learning_rate", 0.1}, {"max_depth", 6}, {"l2_reg", 1}, {"min_child_weight", 1e-3},
          {"subsample", 1}}},
        {Family::lgbm_like,
         {{"rounds", 100}, {"learning_rate", 0.1}, {"max_leaves", 31}, {"max_depth", 0}, {"l2_reg", 1},
          {"min_child_weight", 1e-3}, {"max_bins", 255}, {"subsample", 1}}},
        {Family::survival_forest,
         {{"trees", 100}, {"mtry", 0}, {"max_depth", 0}, {"min_leaf", 5}, {"bootstrap", 1}, {"horizon", 1}}},
        {Family::nn3, {{"epochs", 30}, {"learning_rate", 0.01}, {"batch_size", 64}}},
        {Family::nn5, {{"epochs", 30}, {"learning_rate", 0.01}, {"batch_size", 64}}},
    };
    return defaults.at(f);
}

void validate(const ModelSpec& spec) {
    const auto& known = default_hyperparameters(spec.family);
    for (const auto& [name, value] : spec.params) {
        if (!known.count(name))
            throw ManifestError("hyperparameter '" + name + "' is not valid for " + to_string(spec.family));
        const Range& r = ranges().at(name);
        const bool ok = std::isfinite(value) ? (r.lo_open ? value > r.lo : value >= r.lo) && value <= r.hi
                                             : false;
        if (!ok || (r.integral && value != std::floor(value)))
            throw ManifestError("hyperparameter '" + name + "' of " + to_string(spec.family) + " out of range: " +
                                format_double(value));
    }
    if (spec.family == Family::xgb_like && param(spec, "max_depth") < 1)
        throw ManifestError("hyperparameter 'max_depth' of xgb_like must be >= 1");
}

std::string describe(const ModelSpec& spec) {
    std::string out = to_string(spec.family) + "{";
    bool first = true;
    for (const auto& [name, value] : default_hyperparameters(spec.family)) {
        const auto it = spec.params.find(name);
        out += (first ? "" : ",") + name + "=" + format_double(it != spec.params.end() ? it->second : value);
        first = false;
    }
    return out + "}";
}

int resolve_mtry(double mtry, int p) {
    int m;
    if (mtry == 0.0)
        m = static_cast<int>(std::floor(std::sqrt(static_cast<double>(p))));
    else if (mtry < 1.0)
        m = static_cast<int>(std::floor(mtry * p));
    else
        m = static_cast<int>(mtry);
    return std::clamp(m, 1, std::max(1, p));
}

TrainedModel train(const ModelSpec& spec, const Dataset& data) {
    validate(spec);
    validate(data, !requires_complete_inputs(spec.family));
    if (data.rows() == 0) throw DataError("train: empty training set");
    TrainedModel model;
    model.spec = spec;
    model.feature_names = data.feature_names;
    model.fingerprint = schema_fingerprint(data.feature_names);
    model.standardizer = Standardizer::fit(data.X);
    const Eigen::MatrixXd Z = model.standardizer.apply(data.X);
    const int p = static_cast<int>(Z.cols());

    switch (spec.family) {
        case Family::lasso:
        case Family::ridge: {
            const auto fit = fit_penalized_hazard(Z, data.y, spec.family == Family::lasso ? Penalty::l1 : Penalty::l2,
                                                  param(spec, "lambda"));
            model.parameters = LinearHazard{fit.intercept, fit.coef};
            break;
        }
        case Family::random_forest: {
            ForestOptions o;
            o.trees = int_param(spec, "trees");
            o.cart = {int_param(spec, "max_depth"), int_param(spec, "min_leaf"), resolve_mtry(param(spec, "mtry"), p)};
            o.bootstrap = param(spec, "bootstrap") != 0.0;
            o.seed = spec.seed;
            model.parameters = train_random_forest(Z, data.y, o);
            break;
        }
        case Family::xgb_like:
        case Family::lgbm_like: {
            BoostOptions o;
            o.policy = spec.family == Family::xgb_like ? GrowthPolicy::level_wise : GrowthPolicy::leaf_wise;
            o.rounds = int_param(spec, "rounds");
            o.learning_rate = param(spec, "learning_rate");
            o.max_depth = int_param(spec, "max_depth");
            o.l2_reg = param(spec, "l2_reg");
            o.min_child_weight = param(spec, "min_child_weight");
            o.subsample = param(spec, "subsample");
            if (spec.family == Family::lgbm_like) {
                o.max_leaves = int_param(spec, "max_leaves");
                o.max_bins = int_param(spec, "max_bins");
            }
            o.seed = spec.seed;
            model.parameters = train_gbt(Z, data.y, o);
            break;
        }
        case Family::survival_forest: {
            if (data.time.size() != data.rows()) throw DataError("survival_forest: dataset has no survival pairs");
            SurvivalForestOptions o;
            o.trees = int_param(spec, "trees");
            o.mtry = resolve_mtry(param(spec, "mtry"), p);
            o.min_leaf = int_param(spec, "min_leaf");
            o.max_depth = int_param(spec, "max_depth");
            o.bootstrap = param(spec, "bootstrap") != 0.0;
            o.horizon = param(spec, "horizon");
            o.seed = spec.seed;
            model.parameters = train_survival_forest(Z, data.time, data.status, o);
            break;
        }
        case Family::nn3:
        case Family::nn5: {
            MlpOptions o;
            o.hidden = spec.family == Family::nn3 ? nn3_layers() : nn5_layers();
            o.epochs = int_param(spec, "epochs");
            o.learning_rate = param(spec, "learning_rate");
            o.batch_size = int_param(spec, "batch_size");
            o.seed = spec.seed;
            model.parameters = train_mlp(Z, data.y, o);
            break;
        }
    }
    return model;
}

Eigen::VectorXd TrainedModel::predict(const Eigen::MatrixXd& X, std::uint64_t schema) const {
    if (schema != fingerprint) throw DataError("predict: input schema does not match the trained model");
    if (X.cols() != static_cast<Eigen::Index>(feature_names.size())) throw DataError("predict: column count mismatch");
    const bool allow_missing = !requires_complete_inputs(spec.family);
    for (Eigen::Index j = 0; j < X.cols(); ++j)
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            const double v = X(i, j);
            if (std::isnan(v) ? !allow_missing : !std::isfinite(v))
                throw DataError("predict: non-finite value in '" + feature_names[static_cast<std::size_t>(j)] + "' at row " +
                                std::to_string(i));
        }
    const Eigen::MatrixXd Z = standardizer.apply(X);
    Eigen::VectorXd scores = std::visit(
        [&](const auto& m) -> Eigen::VectorXd {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LinearHazard>)
                return ((Z * m.coef).array() + m.intercept).unaryExpr([](double z) { return sigmoid(z); });
            else
                return m.predict(Z);
        },
        parameters);
    if (!scores.allFinite()) throw NumericalError("predict: non-finite score from " + to_string(spec.family));
    return scores;
}

Eigen::VectorXd predict(const TrainedModel& model, const Dataset& data) {
    return model.predict(data.X, schema_fingerprint(data.feature_names));
}

std::string serialize(const TrainedModel& model) {
    json j;
    j["format"] = kFormat;
    j["version"] = kVersion;
    j["family"] = to_string(model.spec.family);
    j["hyperparameters"] = model.spec.params;
    j["seed"] = model.spec.seed;
    j["features"] = model.feature_names;
    j["fingerprint"] = hex(model.fingerprint);
    j["standardizer"] = {{"mean", vector_json(model.standardizer.mean)}, {"sd", vector_json(model.standardizer.sd)}};
    j["parameters"] = std::visit(ParametersToJson{}, model.parameters);
    return j.dump() + "\n";
}

TrainedModel deserialize(std::string_view text) {
    try {
        const json j = json::parse(text);
        if (j.at("format") != kFormat) throw DataError("model file: not a distress-model container");
        if (j.at("version").get<int>() != kVersion)
            throw DataError("model file: unsupported version " + j.at("version").dump());
        TrainedModel m;
        m.spec.family = parse_family(j.at("family").get<std::string>());
        m.spec.params = j.at("hyperparameters").get<Hyperparameters>();
        m.spec.seed = j.at("seed").get<std::uint64_t>();
        m.feature_names = j.at("features").get<std::vector<std::string>>();
        m.fingerprint = schema_fingerprint(m.feature_names);
        if (hex(m.fingerprint) != j.at("fingerprint").get<std::string>())
            throw DataError("model file: fingerprint does not match the feature list");
        m.standardizer.mean = vector_from(j.at("standardizer").at("mean"));
        m.standardizer.sd = vector_from(j.at("standardizer").at("sd"));
        m.parameters = parameters_from(m.spec.family, j.at("parameters"));
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("model file: ") + e.what());
    }
}

}  // namespace distress

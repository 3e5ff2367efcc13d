#include "distress/models/survival_forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "columns.hpp"
#include "distress/core.hpp"

namespace distress {

namespace {

// Distinct event times of a node and, per row, the number of those times that
// are <= the row's own time (the row is at risk at event times [0, that)).
struct EventGrid {
    std::vector<double> times;
    std::vector<int> deaths;    // d_j over the node
    std::vector<int> at_risk;   // Y_j over the node

    EventGrid(const Eigen::VectorXd& time, const Eigen::VectorXd& status, std::span<const int> rows) {
        for (int r : rows)
            if (status[r] != 0.0) times.push_back(time[r]);
        std::sort(times.begin(), times.end());
        times.erase(std::unique(times.begin(), times.end()), times.end());
        deaths.assign(times.size(), 0);
        at_risk.assign(times.size(), 0);
        for (int r : rows) {
            const int k = reach(time[r]);
            for (int j = 0; j < k; ++j) ++at_risk[static_cast<std::size_t>(j)];
            if (status[r] != 0.0) ++deaths[static_cast<std::size_t>(k - 1)];
        }
    }

    int reach(double t) const {
        return static_cast<int>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
    }
};

// Log-rank statistic from left-daughter counts against node totals.
double log_rank(const EventGrid& g, const std::vector<int>& deaths_left, const std::vector<int>& risk_left) {
    double observed_minus_expected = 0.0, variance = 0.0;
    for (std::size_t j = 0; j < g.times.size(); ++j) {
        const double y = g.at_risk[j], d = g.deaths[j], yl = risk_left[j];
        if (y < 1.0) continue;
        observed_minus_expected += deaths_left[j] - yl * d / y;
        if (y > 1.0) variance += (yl / y) * (1.0 - yl / y) * ((y - d) / (y - 1.0)) * d;
    }
    if (!(variance > 0.0)) return 0.0;
    return std::abs(observed_minus_expected) / std::sqrt(variance);
}

struct Work {
    int node;
    std::vector<int> rows;
    int depth;
};

SurvivalTree grow_survival(const detail::ColumnCodes& codes, const Eigen::VectorXd& time,
                           const Eigen::VectorXd& status, std::vector<int> rows, const SurvivalForestOptions& opt,
                           std::mt19937_64& rng) {
    const int p = static_cast<int>(codes.cols());
    const int min_leaf = std::max(1, opt.min_leaf);
    SurvivalTree out;
    out.tree.nodes.emplace_back();
    std::vector<Work> stack;
    stack.push_back({0, std::move(rows), 0});
    std::vector<int> sorted, scratch, counts, deaths_left, risk_left, all_features(static_cast<std::size_t>(p));
    std::iota(all_features.begin(), all_features.end(), 0);

    auto make_leaf = [&](const Work& w) {
        out.tree.nodes[static_cast<std::size_t>(w.node)].value = static_cast<double>(out.hazards.size());
        out.hazards.push_back(nelson_aalen(time, status, w.rows));
    };

    while (!stack.empty()) {
        Work w = std::move(stack.back());
        stack.pop_back();
        const auto n = static_cast<std::int64_t>(w.rows.size());
        const EventGrid grid(time, status, w.rows);
        if (grid.times.empty() || n < 2 * min_leaf || (opt.max_depth > 0 && w.depth >= opt.max_depth)) {
            make_leaf(w);
            continue;
        }
        const std::vector<int> features =
            opt.mtry > 0 && opt.mtry < p ? draw_features(p, opt.mtry, rng) : all_features;
        double best = 0.0;
        int best_feature = -1;
        std::int32_t best_code = 0;
        for (int f : features) {
            sorted = w.rows;
            detail::sort_by_code(codes, f, sorted, scratch, counts);
            deaths_left.assign(grid.times.size(), 0);
            risk_left.assign(grid.times.size(), 0);
            std::int64_t nl = 0;
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                const int r = sorted[i];
                ++nl;
                const int k = grid.reach(time[r]);
                for (int j = 0; j < k; ++j) ++risk_left[static_cast<std::size_t>(j)];
                if (status[r] != 0.0) ++deaths_left[static_cast<std::size_t>(k - 1)];
                const std::int32_t c = codes.code(r, f);
                if (c < 0 || codes.code(sorted[i + 1], f) == c) continue;
                if (nl < min_leaf || n - nl < min_leaf) continue;
                const double s = log_rank(grid, deaths_left, risk_left);
                if (s > best) {
                    best = s;
                    best_feature = f;
                    best_code = c;
                }
            }
        }
        if (best_feature < 0) {
            make_leaf(w);
            continue;
        }
        std::vector<int> left, right;
        for (int r : w.rows) (codes.code(r, best_feature) <= best_code ? left : right).push_back(r);
        auto& nodes = out.tree.nodes;
        const int l = static_cast<int>(nodes.size());
        nodes.emplace_back();
        nodes.emplace_back();
        auto& node = nodes[static_cast<std::size_t>(w.node)];
        node.feature = best_feature;
        node.threshold = codes.values[static_cast<std::size_t>(best_feature)][static_cast<std::size_t>(best_code)];
        node.left = l;
        node.right = l + 1;
        stack.push_back({l + 1, std::move(right), w.depth + 1});
        stack.push_back({l, std::move(left), w.depth + 1});
    }
    return out;
}

void check_pairs(const Eigen::MatrixXd& X, const Eigen::VectorXd& time, const Eigen::VectorXd& status) {
    if (time.size() != X.rows() || status.size() != X.rows())
        throw DataError("survival forest: survival pairs missing or misaligned");
    for (Eigen::Index i = 0; i < time.size(); ++i) {
        if (!std::isfinite(time[i])) throw DataError("survival forest: non-finite event time");
        if (status[i] != 0.0 && status[i] != 1.0) throw DataError("survival forest: status must be 0 or 1");
    }
}

}  // namespace

double CumulativeHazard::at(double t) const {
    const auto k = std::upper_bound(times.begin(), times.end(), t) - times.begin();
    return k == 0 ? 0.0 : values[static_cast<std::size_t>(k - 1)];
}

CumulativeHazard nelson_aalen(const Eigen::VectorXd& time, const Eigen::VectorXd& status, std::span<const int> rows) {
    const EventGrid g(time, status, rows);
    CumulativeHazard h;
    h.times = g.times;
    h.values.resize(g.times.size());
    double acc = 0.0;
    for (std::size_t j = 0; j < g.times.size(); ++j) {
        acc += static_cast<double>(g.deaths[j]) / static_cast<double>(g.at_risk[j]);
        h.values[j] = acc;
    }
    return h;
}

double log_rank_statistic(const Eigen::VectorXd& time, const Eigen::VectorXd& status, std::span<const int> rows,
                          std::span<const char> in_left) {
    if (in_left.size() != rows.size()) throw DataError("log-rank: membership size differs from rows");
    const EventGrid g(time, status, rows);
    std::vector<int> deaths_left(g.times.size(), 0), risk_left(g.times.size(), 0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!in_left[i]) continue;
        const int k = g.reach(time[rows[i]]);
        for (int j = 0; j < k; ++j) ++risk_left[static_cast<std::size_t>(j)];
        if (status[rows[i]] != 0.0) ++deaths_left[static_cast<std::size_t>(k - 1)];
    }
    return log_rank(g, deaths_left, risk_left);
}

Eigen::VectorXd SurvivalForest::cumulative_hazard(const Eigen::MatrixXd& X, double t) const {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(X.rows());
    for (const auto& st : trees)
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            const auto leaf = static_cast<std::size_t>(st.tree.predict_row(X, i));
            sum[i] += st.hazards[leaf].at(t);
        }
    return sum / static_cast<double>(trees.size());
}

SurvivalTree train_survival_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& time, const Eigen::VectorXd& status,
                                 std::span<const int> rows, const SurvivalForestOptions& options,
                                 std::mt19937_64& rng) {
    check_pairs(X, time, status);
    if (rows.empty()) throw DataError("survival tree: empty training set");
    const auto codes = detail::ColumnCodes::build(X);
    return grow_survival(codes, time, status, std::vector<int>(rows.begin(), rows.end()), options, rng);
}

SurvivalForest train_survival_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& time,
                                     const Eigen::VectorXd& status, const SurvivalForestOptions& options) {
    check_pairs(X, time, status);
    if (options.trees < 1) throw DataError("survival forest: at least one tree required");
    const Eigen::Index n = X.rows();
    if (n == 0) throw DataError("survival forest: empty training set");
    const auto codes = detail::ColumnCodes::build(X);
    SurvivalForest forest;
    forest.horizon = options.horizon;
    forest.trees.resize(static_cast<std::size_t>(options.trees));
    parallel_for(forest.trees.size(), [&](std::size_t b) {
        std::mt19937_64 rng(mix_seed(options.seed, b));
        std::vector<int> rows(static_cast<std::size_t>(n));
        if (options.bootstrap) {
            std::uniform_int_distribution<int> pick(0, static_cast<int>(n - 1));
            for (auto& r : rows) r = pick(rng);
        } else {
            std::iota(rows.begin(), rows.end(), 0);
        }
        forest.trees[b] = grow_survival(codes, time, status, std::move(rows), options, rng);
    });
    return forest;
}

}  // namespace distress

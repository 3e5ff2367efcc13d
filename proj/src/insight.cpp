#include "distress/insight.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace distress {

namespace {

double pooled_auc(std::span<const EvalBlock> blocks, const std::vector<Eigen::VectorXd>& scores) {
    Eigen::Index n = 0;
    for (const auto& s : scores) n += s.size();
    Eigen::VectorXd all(n), labels(n);
    Eigen::Index k = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        all.segment(k, scores[b].size()) = scores[b];
        labels.segment(k, scores[b].size()) = blocks[b].data->y;
        k += scores[b].size();
    }
    return auc(all, labels);
}

}  // namespace

ImportanceTable permutation_importance(std::span<const EvalBlock> blocks, const std::string& model_name, int repeats,
                                       std::uint64_t seed, const Permuter& permuter) {
    if (blocks.empty()) throw DataError("permutation importance: no evaluation data");
    if (repeats < 1) throw DataError("permutation importance: repeats must be >= 1");
    const auto& names = blocks.front().data->feature_names;
    std::vector<Eigen::VectorXd> base_scores;
    for (const auto& b : blocks) {
        if (b.data->feature_names != names) throw DataError("permutation importance: blocks differ in feature space");
        base_scores.push_back(predict(*b.model, *b.data));
    }

    ImportanceTable table;
    table.model = model_name;
    table.repeats = repeats;
    table.seed = seed;
    table.baseline_auc = pooled_auc(blocks, base_scores);
    if (is_undefined(table.baseline_auc))
        throw DataError("permutation importance: evaluation data must contain both classes");
    table.features.resize(names.size());

    parallel_for(names.size(), [&](std::size_t f) {
        const std::uint64_t feature_seed = mix_seed(seed, f);
        FeatureImportance& out = table.features[f];
        out.feature = names[f];
        double total = 0.0;
        for (int r = 0; r < repeats; ++r) {
            std::vector<Eigen::VectorXd> scores;
            for (std::size_t b = 0; b < blocks.size(); ++b) {
                std::mt19937_64 rng(mix_seed(mix_seed(feature_seed, static_cast<std::uint64_t>(r)), b));
                const Dataset& d = *blocks[b].data;
                std::vector<Eigen::Index> order(static_cast<std::size_t>(d.rows()));
                std::iota(order.begin(), order.end(), Eigen::Index{0});
                if (permuter)
                    permuter(order, rng);
                else
                    std::shuffle(order.begin(), order.end(), rng);
                Eigen::MatrixXd X = d.X;
                const auto col = static_cast<Eigen::Index>(f);
                for (Eigen::Index i = 0; i < d.rows(); ++i) X(i, col) = d.X(order[static_cast<std::size_t>(i)], col);
                scores.push_back(blocks[b].model->predict(X, schema_fingerprint(d.feature_names)));
            }
            const double shuffled = pooled_auc(blocks, scores);
            if (is_undefined(shuffled)) {
                ++out.repeats_discarded;
                continue;
            }
            total += table.baseline_auc - shuffled;
            ++out.repeats_used;
        }
        out.mean_delta_auc = out.repeats_used > 0 ? total / out.repeats_used : kUndefined;
    });
    return table;
}

ImportanceTable permutation_importance(const TrainedModel& model, const Dataset& data, int repeats, std::uint64_t seed,
                                       const Permuter& permuter) {
    const EvalBlock block{&model, &data};
    return permutation_importance(std::span<const EvalBlock>(&block, 1), to_string(model.spec.family), repeats, seed,
                                  permuter);
}

RankGrid rank_heatmap(const std::vector<ImportanceTable>& tables, int top_n) {
    if (tables.empty()) throw DataError("rank heatmap: no importance tables");
    std::vector<std::string> features;
    for (const auto& f : tables.front().features) features.push_back(f.feature);
    const std::size_t p = features.size();
    Eigen::MatrixXi ranks(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(tables.size()));
    for (std::size_t m = 0; m < tables.size(); ++m) {
        const auto& t = tables[m];
        if (t.features.size() != p) throw DataError("rank heatmap: tables differ in feature space");
        std::map<std::string, double> value;
        for (const auto& f : t.features) value[f.feature] = f.mean_delta_auc;
        for (const auto& name : features)
            if (!value.count(name)) throw DataError("rank heatmap: feature '" + name + "' missing from " + t.model);
        auto key = [&](const std::string& name) {
            const double v = value.at(name);
            return is_undefined(v) ? -std::numeric_limits<double>::infinity() : v;
        };
        std::vector<double> distinct;
        for (const auto& name : features) distinct.push_back(key(name));
        std::sort(distinct.begin(), distinct.end(), std::greater<>());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        for (std::size_t i = 0; i < p; ++i) {
            const double v = key(features[i]);
            const auto pos = std::find(distinct.begin(), distinct.end(), v) - distinct.begin();
            ranks(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) = static_cast<int>(pos) + 1;
        }
    }

    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const Eigen::VectorXi sums = ranks.rowwise().sum();
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const int sa = sums[static_cast<Eigen::Index>(a)], sb = sums[static_cast<Eigen::Index>(b)];
        return sa != sb ? sa < sb : features[a] < features[b];
    });
    const std::size_t keep = std::min(p, static_cast<std::size_t>(std::max(0, top_n)));

    RankGrid grid;
    for (const auto& t : tables) grid.models.push_back(t.model);
    grid.ranks.resize(static_cast<Eigen::Index>(keep), static_cast<Eigen::Index>(tables.size()));
    for (std::size_t r = 0; r < keep; ++r) {
        grid.features.push_back(features[order[r]]);
        grid.ranks.row(static_cast<Eigen::Index>(r)) = ranks.row(static_cast<Eigen::Index>(order[r]));
        grid.rank_sum.push_back(sums[static_cast<Eigen::Index>(order[r])]);
    }
    return grid;
}

const std::vector<std::string>& reduced_predictor_set() {
    static const std::vector<std::string> names = {
        "distance_to_default", "net_income_assets", "liabilities_assets", "sigma",
        "annual_excess_return", "beta", "relative_size", "finbert_sentiment",
    };
    return names;
}

std::string importance_csv(const std::vector<ImportanceTable>& tables) {
    CsvTable t;
    t.header = {"feature"};
    for (const auto& tab : tables) t.header.push_back(tab.model);
    if (tables.empty()) return to_csv(t);
    for (std::size_t f = 0; f < tables.front().features.size(); ++f) {
        std::vector<std::string> row = {tables.front().features[f].feature};
        for (const auto& tab : tables) row.push_back(format_double(tab.features[f].mean_delta_auc));
        t.rows.push_back(std::move(row));
    }
    return to_csv(t);
}

std::string rank_grid_csv(const RankGrid& grid) {
    CsvTable t;
    t.header = {"feature"};
    t.header.insert(t.header.end(), grid.models.begin(), grid.models.end());
    t.header.push_back("rank_sum");
    for (std::size_t r = 0; r < grid.features.size(); ++r) {
        std::vector<std::string> row = {grid.features[r]};
        for (Eigen::Index m = 0; m < grid.ranks.cols(); ++m)
            row.push_back(std::to_string(grid.ranks(static_cast<Eigen::Index>(r), m)));
        row.push_back(std::to_string(grid.rank_sum[r]));
        t.rows.push_back(std::move(row));
    }
    return to_csv(t);
}

}  // namespace distress

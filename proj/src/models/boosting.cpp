#include "distress/models/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>

#include "distress/core.hpp"
#include "distress/models/dataset.hpp"

namespace distress {

namespace {

struct Stats {
    double g = 0.0;
    double h = 0.0;
    std::int64_t n = 0;

    void add(double gi, double hi) {
        g += gi;
        h += hi;
        ++n;
    }
    Stats operator-(const Stats& o) const { return {g - o.g, h - o.h, n - o.n}; }
};

struct Split {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
    int bin = -1;
};

double score(const Stats& s, double lambda) {
    const double d = s.h + lambda;
    return d > 0.0 ? s.g * s.g / d : 0.0;
}

double newton_weight(const Stats& s, double lambda) {
    const double d = s.h + lambda;
    return d > 0.0 ? -s.g / d : 0.0;
}

bool admissible(const Stats& left, const Stats& right, double min_child_weight) {
    return left.n > 0 && right.n > 0 && left.h >= min_child_weight && right.h >= min_child_weight;
}

double split_gain(const Stats& left, const Stats& right, const Stats& parent, double lambda) {
    return 0.5 * (score(left, lambda) + score(right, lambda) - score(parent, lambda));
}

struct Gradients {
    Eigen::VectorXd g, h;
    std::vector<unsigned char> selected;
};

// ---------------------------------------------------------------------------
// Level-wise: exact greedy over values presorted once per feature.

struct Presorted {
    std::vector<std::vector<int>> order;    // non-missing rows by ascending value
    std::vector<std::vector<int>> missing;  // rows with a missing value

    explicit Presorted(const Eigen::MatrixXd& X) : order(static_cast<std::size_t>(X.cols())), missing(order.size()) {
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            auto& o = order[static_cast<std::size_t>(j)];
            for (Eigen::Index i = 0; i < X.rows(); ++i)
                (std::isnan(X(i, j)) ? missing[static_cast<std::size_t>(j)] : o).push_back(static_cast<int>(i));
            std::stable_sort(o.begin(), o.end(), [&](int a, int b) { return X(a, j) < X(b, j); });
        }
    }
};

Tree grow_level_wise(const Eigen::MatrixXd& X, const Presorted& pre, const Gradients& gr, const BoostOptions& opt) {
    const Eigen::Index n = X.rows(), p = X.cols();
    Tree tree;
    tree.nodes.emplace_back();
    std::vector<int> pos(static_cast<std::size_t>(n), -1);
    std::vector<Stats> totals(1);
    for (Eigen::Index i = 0; i < n; ++i)
        if (gr.selected[static_cast<std::size_t>(i)]) {
            pos[static_cast<std::size_t>(i)] = 0;
            totals[0].add(gr.g[i], gr.h[i]);
        }
    std::vector<int> level = {0};
    for (int depth = 0; depth < opt.max_depth && !level.empty(); ++depth) {
        const std::size_t width = tree.nodes.size();
        std::vector<Split> best(width);
        std::vector<Stats> left(width);
        std::vector<double> prev(width);
        std::vector<unsigned char> seen(width), active(width, 0);
        for (int k : level) active[static_cast<std::size_t>(k)] = 1;

        for (Eigen::Index f = 0; f < p; ++f) {
            std::fill(left.begin(), left.end(), Stats{});
            std::fill(seen.begin(), seen.end(), 0);
            for (int r : pre.missing[static_cast<std::size_t>(f)]) {
                const int k = pos[static_cast<std::size_t>(r)];
                if (k >= 0 && active[static_cast<std::size_t>(k)]) left[static_cast<std::size_t>(k)].add(gr.g[r], gr.h[r]);
            }
            for (int r : pre.order[static_cast<std::size_t>(f)]) {
                const int k = pos[static_cast<std::size_t>(r)];
                if (k < 0 || !active[static_cast<std::size_t>(k)]) continue;
                const auto ku = static_cast<std::size_t>(k);
                const double x = X(r, f);
                if (seen[ku] && x != prev[ku]) {
                    const Stats right = totals[ku] - left[ku];
                    if (admissible(left[ku], right, opt.min_child_weight)) {
                        const double gain = split_gain(left[ku], right, totals[ku], opt.l2_reg);
                        if (gain > best[ku].gain) best[ku] = {gain, static_cast<int>(f), prev[ku], -1};
                    }
                }
                left[ku].add(gr.g[r], gr.h[r]);
                prev[ku] = x;
                seen[ku] = 1;
            }
        }

        std::vector<int> next;
        std::vector<int> remap(width, -1);
        for (int k : level) {
            const auto& s = best[static_cast<std::size_t>(k)];
            if (s.feature < 0) continue;
            const int l = static_cast<int>(tree.nodes.size());
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            auto& node = tree.nodes[static_cast<std::size_t>(k)];
            node.feature = s.feature;
            node.threshold = s.threshold;
            node.left = l;
            node.right = l + 1;
            remap[static_cast<std::size_t>(k)] = l;
            next.push_back(l);
            next.push_back(l + 1);
        }
        totals.resize(tree.nodes.size());
        for (Eigen::Index i = 0; i < n; ++i) {
            int& k = pos[static_cast<std::size_t>(i)];
            if (k < 0 || remap[static_cast<std::size_t>(k)] < 0) continue;
            const auto& node = tree.nodes[static_cast<std::size_t>(k)];
            const double x = X(i, node.feature);
            k = std::isnan(x) || x <= node.threshold ? node.left : node.right;
            totals[static_cast<std::size_t>(k)].add(gr.g[i], gr.h[i]);
        }
        level.swap(next);
    }
    for (std::size_t k = 0; k < tree.nodes.size(); ++k)
        if (tree.nodes[k].is_leaf()) tree.nodes[k].value = newton_weight(totals[k], opt.l2_reg);
    return tree;
}

// ---------------------------------------------------------------------------
// Leaf-wise: histogram splits over per-feature bin edges drawn from observed
// values; a row falls in the first bin whose edge is >= its value.

struct Binned {
    std::vector<std::vector<double>> edges;
    Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic> bin;  // edges.size() marks missing

    Binned(const Eigen::MatrixXd& X, int max_bins) : edges(static_cast<std::size_t>(X.cols())) {
        bin.resize(X.rows(), X.cols());
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            std::vector<double> v;
            for (Eigen::Index i = 0; i < X.rows(); ++i)
                if (!std::isnan(X(i, j))) v.push_back(X(i, j));
            std::sort(v.begin(), v.end());
            auto& e = edges[static_cast<std::size_t>(j)];
            std::vector<double> distinct = v;
            distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
            if (static_cast<int>(distinct.size()) <= max_bins) {
                e = distinct;
            } else {
                for (int b = 1; b < max_bins; ++b)
                    e.push_back(v[static_cast<std::size_t>(static_cast<double>(b) * static_cast<double>(v.size()) / max_bins)]);
                e.push_back(v.back());
                e.erase(std::unique(e.begin(), e.end()), e.end());
            }
            const auto missing = static_cast<std::int32_t>(e.size());
            for (Eigen::Index i = 0; i < X.rows(); ++i) {
                const double x = X(i, j);
                bin(i, j) = std::isnan(x) ? missing
                                          : static_cast<std::int32_t>(std::lower_bound(e.begin(), e.end(), x) - e.begin());
            }
        }
    }
};

struct Leaf {
    int node;
    std::vector<int> rows;
    int depth;
    Stats total;
    Split split;
};

Split best_histogram_split(const Binned& b, const Gradients& gr, const Leaf& leaf, const BoostOptions& opt) {
    Split best;
    std::vector<Stats> hist;
    for (std::size_t f = 0; f < b.edges.size(); ++f) {
        const std::size_t nb = b.edges[f].size();
        hist.assign(nb + 1, Stats{});
        for (int r : leaf.rows) hist[static_cast<std::size_t>(b.bin(r, static_cast<Eigen::Index>(f)))].add(gr.g[r], gr.h[r]);
        Stats left = hist[nb];
        for (std::size_t k = 0; k + 1 < nb; ++k) {
            left.g += hist[k].g;
            left.h += hist[k].h;
            left.n += hist[k].n;
            if (hist[k].n == 0) continue;
            const Stats right = leaf.total - left;
            if (!admissible(left, right, opt.min_child_weight)) continue;
            const double gain = split_gain(left, right, leaf.total, opt.l2_reg);
            if (gain > best.gain) best = {gain, static_cast<int>(f), b.edges[f][k], static_cast<int>(k)};
        }
    }
    return best;
}

Tree grow_leaf_wise(const Binned& b, const Gradients& gr, const BoostOptions& opt) {
    Tree tree;
    tree.nodes.emplace_back();
    std::vector<Leaf> leaves(1);
    leaves[0].node = 0;
    leaves[0].depth = 0;
    for (std::size_t i = 0; i < gr.selected.size(); ++i)
        if (gr.selected[i]) {
            leaves[0].rows.push_back(static_cast<int>(i));
            leaves[0].total.add(gr.g[static_cast<Eigen::Index>(i)], gr.h[static_cast<Eigen::Index>(i)]);
        }
    auto evaluate = [&](Leaf& leaf) {
        leaf.split = opt.max_depth > 0 && leaf.depth >= opt.max_depth ? Split{} : best_histogram_split(b, gr, leaf, opt);
    };
    evaluate(leaves[0]);
    const int max_leaves = std::max(2, opt.max_leaves);
    while (static_cast<int>(leaves.size()) < max_leaves) {
        std::size_t pick = leaves.size();
        for (std::size_t k = 0; k < leaves.size(); ++k)
            if (leaves[k].split.feature >= 0 && (pick == leaves.size() || leaves[k].split.gain > leaves[pick].split.gain))
                pick = k;
        if (pick == leaves.size()) break;
        Leaf parent = std::move(leaves[pick]);
        const int l = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        auto& node = tree.nodes[static_cast<std::size_t>(parent.node)];
        node.feature = parent.split.feature;
        node.threshold = parent.split.threshold;
        node.left = l;
        node.right = l + 1;
        Leaf left{l, {}, parent.depth + 1, {}, {}}, right{l + 1, {}, parent.depth + 1, {}, {}};
        for (int r : parent.rows) {
            Leaf& side = b.bin(r, parent.split.feature) <= parent.split.bin ? left : right;
            side.rows.push_back(r);
            side.total.add(gr.g[r], gr.h[r]);
        }
        evaluate(left);
        evaluate(right);
        leaves[pick] = std::move(left);
        leaves.push_back(std::move(right));
    }
    for (const auto& leaf : leaves) tree.nodes[static_cast<std::size_t>(leaf.node)].value = newton_weight(leaf.total, opt.l2_reg);
    return tree;
}

double row_loss(double margin, double y) { return softplus(margin) - y * margin; }

}  // namespace

Eigen::VectorXd BoostedEnsemble::margin(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd m = Eigen::VectorXd::Constant(X.rows(), base_margin);
    for (const auto& t : trees) m += t.predict(X);
    return m;
}

Eigen::VectorXd BoostedEnsemble::predict(const Eigen::MatrixXd& X) const {
    return margin(X).unaryExpr([](double z) { return sigmoid(z); });
}

BoostedEnsemble train_gbt(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const BoostOptions& opt,
                          BoostTrace* trace) {
    if (opt.rounds < 1) throw DataError("boosting: rounds must be >= 1");
    if (!(opt.learning_rate > 0.0 && opt.learning_rate <= 1.0)) throw DataError("boosting: learning_rate must be in (0,1]");
    if (!(opt.l2_reg >= 0.0)) throw DataError("boosting: l2_reg must be >= 0");
    if (!(opt.subsample > 0.0 && opt.subsample <= 1.0)) throw DataError("boosting: subsample must be in (0,1]");
    if (opt.policy == GrowthPolicy::level_wise && opt.max_depth < 1) throw DataError("boosting: max_depth must be >= 1");
    const Eigen::Index n = X.rows();
    if (n == 0 || y.size() != n) throw DataError("boosting: empty or misaligned training set");
    const double rate = y.mean();
    if (rate <= 0.0 || rate >= 1.0) throw DataError("boosting: training labels contain a single class");

    BoostedEnsemble model;
    model.base_margin = std::log(rate / (1.0 - rate));
    Eigen::VectorXd margin = Eigen::VectorXd::Constant(n, model.base_margin);
    auto total_loss = [&] {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) s += row_loss(margin[i], y[i]);
        return s;
    };
    if (trace) trace->loss = {total_loss()};

    std::optional<Presorted> presorted;
    std::optional<Binned> binned;
    if (opt.policy == GrowthPolicy::level_wise)
        presorted.emplace(X);
    else
        binned.emplace(X, std::max(2, opt.max_bins));

    Gradients gr{Eigen::VectorXd(n), Eigen::VectorXd(n), std::vector<unsigned char>(static_cast<std::size_t>(n), 1)};
    const auto sample_size = static_cast<std::size_t>(std::max(1.0, std::round(opt.subsample * static_cast<double>(n))));
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int round = 0; round < opt.rounds; ++round) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double p = sigmoid(margin[i]);
            gr.g[i] = p - y[i];
            gr.h[i] = p * (1.0 - p);
        }
        if (sample_size < static_cast<std::size_t>(n)) {
            std::mt19937_64 rng(mix_seed(opt.seed, static_cast<std::uint64_t>(round)));
            std::iota(perm.begin(), perm.end(), 0);
            std::fill(gr.selected.begin(), gr.selected.end(), 0);
            for (std::size_t k = 0; k < sample_size; ++k) {
                std::uniform_int_distribution<std::size_t> pick(k, perm.size() - 1);
                std::swap(perm[k], perm[pick(rng)]);
                gr.selected[static_cast<std::size_t>(perm[k])] = 1;
            }
        }
        double hess = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (gr.selected[static_cast<std::size_t>(i)]) hess += gr.h[i];
        if (!(hess > 0.0)) {
            warn("boosting: all hessians are zero; stopping after " + std::to_string(round) + " rounds");
            break;
        }

        Tree tree = opt.policy == GrowthPolicy::level_wise ? grow_level_wise(X, *presorted, gr, opt)
                                                           : grow_leaf_wise(*binned, gr, opt);

        // Scale leaves by the learning rate; halve any step that would raise its leaf's loss.
        std::vector<std::vector<int>> members(tree.nodes.size());
        for (Eigen::Index i = 0; i < n; ++i) members[static_cast<std::size_t>(tree.leaf_index(X, i))].push_back(static_cast<int>(i));
        for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
            auto& node = tree.nodes[k];
            if (!node.is_leaf()) continue;
            double step = opt.learning_rate * node.value;
            double before = 0.0;
            for (int r : members[k]) before += row_loss(margin[r], y[r]);
            for (int halving = 0; halving < 60 && step != 0.0; ++halving, step *= 0.5) {
                double after = 0.0;
                for (int r : members[k]) after += row_loss(margin[r] + step, y[r]);
                if (after <= before) break;
            }
            node.value = std::isfinite(step) ? step : 0.0;
            {
                double after = 0.0;
                for (int r : members[k]) after += row_loss(margin[r] + node.value, y[r]);
                if (after > before) node.value = 0.0;
            }
            for (int r : members[k]) margin[r] += node.value;
        }
        model.trees.push_back(std::move(tree));
        if (trace) trace->loss.push_back(total_loss());
    }
    return model;
}

}  // namespace distress

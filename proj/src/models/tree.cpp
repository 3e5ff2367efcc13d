#include "distress/models/tree.hpp"

#include <algorithm>
#include <numeric>
#include <utility>

#include "columns.hpp"
#include "distress/core.hpp"

namespace distress {

namespace {

using i128 = __int128;

// Weighted child impurity n_L*g_L + n_R*g_R (up to a factor 2) as the exact
// fraction (a*n_R + b*n_L) / (n_L*n_R), with a = p_L(n_L-p_L), b = p_R(n_R-p_R).
struct Fraction {
    i128 num = 0;
    i128 den = 1;
};

bool less(const Fraction& x, const Fraction& y) { return x.num * y.den < y.num * x.den; }

Fraction child_impurity(std::int64_t nl, std::int64_t pl, std::int64_t nr, std::int64_t pr) {
    const i128 a = static_cast<i128>(pl) * (nl - pl);
    const i128 b = static_cast<i128>(pr) * (nr - pr);
    return {a * nr + b * nl, static_cast<i128>(nl) * nr};
}

struct Work {
    int node;
    std::vector<int> rows;
    int depth;
};

Tree grow_cart(const detail::ColumnCodes& codes, const std::vector<unsigned char>& y, std::vector<int> rows,
               const CartOptions& opt, std::mt19937_64& rng) {
    const int p = static_cast<int>(codes.cols());
    const int min_leaf = std::max(1, opt.min_leaf);
    Tree tree;
    tree.nodes.emplace_back();
    std::vector<Work> stack;
    stack.push_back({0, std::move(rows), 0});
    std::vector<int> sorted, scratch, counts, all_features(static_cast<std::size_t>(p));
    std::iota(all_features.begin(), all_features.end(), 0);

    while (!stack.empty()) {
        Work w = std::move(stack.back());
        stack.pop_back();
        const auto n = static_cast<std::int64_t>(w.rows.size());
        std::int64_t pos = 0;
        for (int r : w.rows) pos += y[static_cast<std::size_t>(r)];
        tree.nodes[static_cast<std::size_t>(w.node)].value = n > 0 ? static_cast<double>(pos) / static_cast<double>(n) : 0.0;
        if (pos == 0 || pos == n || n < 2 * min_leaf || (opt.max_depth > 0 && w.depth >= opt.max_depth)) continue;

        const std::vector<int> features =
            opt.mtry > 0 && opt.mtry < p ? draw_features(p, opt.mtry, rng) : all_features;
        Fraction best{static_cast<i128>(pos) * (n - pos), n};  // parent impurity: a split must beat it
        int best_feature = -1;
        std::int32_t best_code = 0;
        for (int f : features) {
            sorted = w.rows;
            detail::sort_by_code(codes, f, sorted, scratch, counts);
            std::int64_t nl = 0, pl = 0;
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                const int r = sorted[i];
                ++nl;
                pl += y[static_cast<std::size_t>(r)];
                const std::int32_t c = codes.code(r, f);
                if (c < 0 || codes.code(sorted[i + 1], f) == c) continue;
                if (nl < min_leaf || n - nl < min_leaf) continue;
                const Fraction s = child_impurity(nl, pl, n - nl, pos - pl);
                if (less(s, best)) {
                    best = s;
                    best_feature = f;
                    best_code = c;
                }
            }
        }
        if (best_feature < 0) continue;

        std::vector<int> left, right;
        for (int r : w.rows) {
            const std::int32_t c = codes.code(r, best_feature);
            (c <= best_code ? left : right).push_back(r);
        }
        const int l = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        auto& node = tree.nodes[static_cast<std::size_t>(w.node)];
        node.feature = best_feature;
        node.threshold = codes.values[static_cast<std::size_t>(best_feature)][static_cast<std::size_t>(best_code)];
        node.left = l;
        node.right = l + 1;
        stack.push_back({l + 1, std::move(right), w.depth + 1});
        stack.push_back({l, std::move(left), w.depth + 1});
    }
    return tree;
}

std::vector<unsigned char> binary_labels(const Eigen::VectorXd& y) {
    std::vector<unsigned char> out(static_cast<std::size_t>(y.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] != 0.0 && y[i] != 1.0) throw DataError("tree: labels must be 0 or 1");
        out[static_cast<std::size_t>(i)] = y[i] == 1.0 ? 1 : 0;
    }
    return out;
}

int subtree_depth(const Tree& t, int node) {
    const auto& n = t.nodes[static_cast<std::size_t>(node)];
    if (n.is_leaf()) return 0;
    return 1 + std::max(subtree_depth(t, n.left), subtree_depth(t, n.right));
}

}  // namespace

int Tree::leaf_index(const Eigen::MatrixXd& X, Eigen::Index row) const {
    int k = 0;
    while (!nodes[static_cast<std::size_t>(k)].is_leaf()) {
        const auto& n = nodes[static_cast<std::size_t>(k)];
        const double x = X(row, n.feature);
        k = std::isnan(x) || x <= n.threshold ? n.left : n.right;
    }
    return k;
}

Eigen::VectorXd Tree::predict(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = predict_row(X, i);
    return out;
}

int Tree::depth() const { return nodes.empty() ? 0 : subtree_depth(*this, 0); }

double gini(double positives, double total) {
    if (total <= 0.0) return 0.0;
    const double q = positives / total;
    return 1.0 - q * q - (1.0 - q) * (1.0 - q);
}

std::vector<int> draw_features(int p, int mtry, std::mt19937_64& rng) {
    std::vector<int> idx(static_cast<std::size_t>(p));
    std::iota(idx.begin(), idx.end(), 0);
    const int m = std::clamp(mtry, 1, p);
    for (int k = 0; k < m; ++k) {
        std::uniform_int_distribution<int> pick(k, p - 1);
        std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
    }
    idx.resize(static_cast<std::size_t>(m));
    std::sort(idx.begin(), idx.end());
    return idx;
}

Tree train_cart(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::span<const int> rows,
                const CartOptions& options, std::mt19937_64& rng) {
    if (options.min_leaf < 1) throw DataError("cart: min_leaf must be >= 1");
    if (rows.empty()) throw DataError("cart: empty training set");
    const auto codes = detail::ColumnCodes::build(X);
    return grow_cart(codes, binary_labels(y), std::vector<int>(rows.begin(), rows.end()), options, rng);
}

Eigen::VectorXd Forest::predict(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(X.rows());
    for (const auto& t : trees) sum += t.predict(X);
    return sum / static_cast<double>(trees.size());
}

Forest train_random_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ForestOptions& options) {
    if (options.trees < 1) throw DataError("random forest: at least one tree required");
    if (options.cart.min_leaf < 1) throw DataError("random forest: min_leaf must be >= 1");
    const Eigen::Index n = X.rows();
    if (n == 0) throw DataError("random forest: empty training set");
    const auto codes = detail::ColumnCodes::build(X);
    const auto labels = binary_labels(y);

    Forest forest;
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
        forest.trees[b] = grow_cart(codes, labels, std::move(rows), options.cart, rng);
    });
    return forest;
}

}  // namespace distress

#include "distress/models/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "distress/core.hpp"
#include "distress/models/dataset.hpp"

namespace distress {

namespace {

// Forward pass keeping every pre-activation; activations[0] is the input.
struct Trace {
    std::vector<Eigen::MatrixXd> pre;
    std::vector<Eigen::MatrixXd> act;
};

Trace forward(const Network& net, const Eigen::MatrixXd& X) {
    Trace t;
    t.act.push_back(X);
    const std::size_t layers = net.weights.size();
    for (std::size_t l = 0; l < layers; ++l) {
        Eigen::MatrixXd z = t.act.back() * net.weights[l].transpose();
        z.rowwise() += net.biases[l].transpose();
        t.pre.push_back(z);
        if (l + 1 < layers) t.act.push_back(z.unaryExpr([](double v) { return relu(v); }));
    }
    return t;
}

}  // namespace

Eigen::VectorXd Network::logits(const Eigen::MatrixXd& X) const {
    if (weights.empty()) throw DataError("network: no layers");
    if (X.cols() != weights.front().cols()) throw DataError("network: input width mismatch");
    return forward(*this, X).pre.back().col(0);
}

Eigen::VectorXd Network::predict(const Eigen::MatrixXd& X) const {
    return logits(X).unaryExpr([](double z) { return sigmoid(z); });
}

Eigen::Index Network::parameter_count() const {
    Eigen::Index n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
}

Eigen::VectorXd Network::flatten() const {
    Eigen::VectorXd flat(parameter_count());
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (Eigen::Index c = 0; c < weights[l].cols(); ++c)
            for (Eigen::Index r = 0; r < weights[l].rows(); ++r) flat[k++] = weights[l](r, c);
        for (Eigen::Index r = 0; r < biases[l].size(); ++r) flat[k++] = biases[l][r];
    }
    return flat;
}

void Network::assign(const Eigen::VectorXd& flat) {
    if (flat.size() != parameter_count()) throw DataError("network: parameter vector has the wrong length");
    Eigen::Index k = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (Eigen::Index c = 0; c < weights[l].cols(); ++c)
            for (Eigen::Index r = 0; r < weights[l].rows(); ++r) weights[l](r, c) = flat[k++];
        for (Eigen::Index r = 0; r < biases[l].size(); ++r) biases[l][r] = flat[k++];
    }
}

Network init_network(int inputs, const std::vector<int>& hidden, std::uint64_t seed, bool zero_output_layer) {
    if (inputs < 1) throw DataError("network: at least one input required");
    std::mt19937_64 rng(mix_seed(seed, 0x6e6e));
    std::normal_distribution<double> normal(0.0, 1.0);
    Network net;
    int width = inputs;
    std::vector<int> sizes = hidden;
    sizes.push_back(1);
    for (std::size_t l = 0; l < sizes.size(); ++l) {
        const int out = sizes[l];
        if (out < 1) throw DataError("network: layer widths must be >= 1");
        const bool output = l + 1 == sizes.size();
        const double scale = std::sqrt((output ? 1.0 : 2.0) / width);
        Eigen::MatrixXd W(out, width);
        for (Eigen::Index c = 0; c < W.cols(); ++c)
            for (Eigen::Index r = 0; r < W.rows(); ++r) W(r, c) = scale * normal(rng);
        if (output && zero_output_layer) W.setZero();
        net.weights.push_back(std::move(W));
        net.biases.push_back(Eigen::VectorXd::Zero(out));
        width = out;
    }
    return net;
}

double loss_and_gradient(const Network& net, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Network* grad) {
    const Trace t = forward(net, X);
    const Eigen::VectorXd z = t.pre.back().col(0);
    const auto m = static_cast<double>(X.rows());
    const double loss = logistic_loss(z, y) / m;
    if (!grad) return loss;

    const std::size_t layers = net.weights.size();
    grad->weights.resize(layers);
    grad->biases.resize(layers);
    Eigen::MatrixXd delta = (z.unaryExpr([](double v) { return sigmoid(v); }) - y) / m;
    for (std::size_t l = layers; l-- > 0;) {
        grad->weights[l] = delta.transpose() * t.act[l];
        grad->biases[l] = delta.colwise().sum().transpose();
        if (l == 0) break;
        delta = (delta * net.weights[l]).cwiseProduct(t.pre[l - 1].unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
    }
    return loss;
}

Network train_mlp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const MlpOptions& opt) {
    if (X.rows() == 0 || y.size() != X.rows()) throw DataError("mlp: empty or misaligned training set");
    if (opt.epochs < 1 || opt.batch_size < 1) throw DataError("mlp: epochs and batch_size must be >= 1");
    if (!(opt.learning_rate > 0.0)) throw DataError("mlp: learning_rate must be > 0");
    Network net = init_network(static_cast<int>(X.cols()), opt.hidden, opt.seed, opt.zero_output_layer);
    Network grad;
    std::mt19937_64 rng(mix_seed(opt.seed, 0x5348));
    std::vector<int> order(static_cast<std::size_t>(X.rows()));
    std::iota(order.begin(), order.end(), 0);
    Eigen::MatrixXd xb;
    Eigen::VectorXd yb;
    for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(opt.batch_size)) {
            const std::size_t len = std::min(order.size() - start, static_cast<std::size_t>(opt.batch_size));
            xb.resize(static_cast<Eigen::Index>(len), X.cols());
            yb.resize(static_cast<Eigen::Index>(len));
            for (std::size_t k = 0; k < len; ++k) {
                xb.row(static_cast<Eigen::Index>(k)) = X.row(order[start + k]);
                yb[static_cast<Eigen::Index>(k)] = y[order[start + k]];
            }
            const double loss = loss_and_gradient(net, xb, yb, &grad);
            if (!std::isfinite(loss))
                throw NumericalError("mlp: training diverged (non-finite loss) at epoch " + std::to_string(epoch));
            for (std::size_t l = 0; l < net.weights.size(); ++l) {
                net.weights[l] -= opt.learning_rate * grad.weights[l];
                net.biases[l] -= opt.learning_rate * grad.biases[l];
            }
        }
        for (const auto& W : net.weights)
            if (!W.allFinite())
                throw NumericalError("mlp: training diverged (non-finite weights) at epoch " + std::to_string(epoch));
    }
    return net;
}

}  // namespace distress

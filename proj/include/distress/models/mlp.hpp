#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace distress {

template <typename Scalar>
Scalar relu(Scalar x) {
    return x < Scalar(0) ? Scalar(0) : x;
}

inline const std::vector<int>& nn3_layers() {
    static const std::vector<int> layers = {32, 16, 8};
    return layers;
}

inline const std::vector<int>& nn5_layers() {
    static const std::vector<int> layers = {64, 32, 16, 8, 4};
    return layers;
}

/// Feed-forward network: ReLU hidden layers, one sigmoid output unit.
/// weights[l] maps layer l to layer l+1 and has shape (out, in).
struct Network {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    Eigen::VectorXd logits(const Eigen::MatrixXd& X) const;
    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;

    Eigen::Index parameter_count() const;
    Eigen::VectorXd flatten() const;
    void assign(const Eigen::VectorXd& flat);
};

/// He-normal hidden weights, scaled-normal output weights, zero biases.
Network init_network(int inputs, const std::vector<int>& hidden, std::uint64_t seed, bool zero_output_layer = false);

/// Mean binary cross-entropy over the rows of X; fills `grad` (same shapes as
/// `net`) by backpropagation when non-null.
double loss_and_gradient(const Network& net, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Network* grad);

struct MlpOptions {
    std::vector<int> hidden = nn3_layers();
    int epochs = 30;
    double learning_rate = 0.01;
    int batch_size = 64;
    std::uint64_t seed = 0;
    bool zero_output_layer = false;
};

/// Mini-batch gradient descent with a fixed learning rate and a seeded
/// per-epoch shuffle. Throws NumericalError naming the epoch on divergence.
Network train_mlp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const MlpOptions& options);

}  // namespace distress

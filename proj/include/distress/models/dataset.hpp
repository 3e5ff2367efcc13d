#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "distress/core.hpp"

namespace distress {

/// Design matrix with labels and survival pairs. Rows are firm-years, columns
/// follow feature_names. Tree families accept kMissing entries; every other
/// family requires finite values.
struct Dataset {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;       // 0/1
    Eigen::VectorXd time;    // survival duration
    Eigen::VectorXd status;  // 1 = event, 0 = censored
    std::vector<std::string> feature_names;

    Eigen::Index rows() const { return X.rows(); }
    Eigen::Index cols() const { return X.cols(); }
};

/// Checks shape consistency; with `allow_missing` false also that X is finite.
void validate(const Dataset& data, bool allow_missing);

std::uint64_t schema_fingerprint(const std::vector<std::string>& feature_names);

/// Per-column mean/sd from training rows; applied unchanged to any later rows.
/// Missing entries are skipped when fitting and pass through as missing.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;  // 1 for constant columns

    static Standardizer fit(const Eigen::MatrixXd& X);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

template <typename Scalar>
Scalar sigmoid(Scalar x) {
    using std::exp;
    return x >= Scalar(0) ? Scalar(1) / (Scalar(1) + exp(-x)) : exp(x) / (Scalar(1) + exp(x));
}

/// log(1 + exp(x)) without overflow.
template <typename Scalar>
Scalar softplus(Scalar x) {
    using std::exp;
    using std::log1p;
    return x > Scalar(0) ? x + log1p(exp(-x)) : log1p(exp(x));
}

/// Summed logistic negative log-likelihood at margins `eta`.
template <typename DerivedEta, typename DerivedY>
double logistic_loss(const Eigen::MatrixBase<DerivedEta>& eta, const Eigen::MatrixBase<DerivedY>& y) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) total += softplus(double(eta[i])) - double(y[i]) * double(eta[i]);
    return total;
}

}  // namespace distress

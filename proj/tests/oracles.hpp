#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance runner. None of these call into the library's fitting code.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "distress/models/mlp.hpp"

namespace testing {

struct LogitFit {
    double intercept = 0.0;
    Eigen::VectorXd coef;
};

/// Unpenalized logistic MLE by plain Newton-Raphson on [1 X].
inline LogitFit newton_mle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    const Eigen::Index n = X.rows(), p = X.cols();
    Eigen::MatrixXd A(n, p + 1);
    A.col(0).setOnes();
    A.rightCols(p) = X;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(p + 1);
    for (int it = 0; it < 100; ++it) {
        const Eigen::VectorXd eta = A * b;
        Eigen::VectorXd mu(n), w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            mu[i] = 1.0 / (1.0 + std::exp(-eta[i]));
            w[i] = mu[i] * (1.0 - mu[i]);
        }
        const Eigen::VectorXd g = A.transpose() * (y - mu);
        const Eigen::MatrixXd H = A.transpose() * w.asDiagonal() * A;
        const Eigen::VectorXd step = H.llt().solve(g);
        b += step;
        if (step.norm() < 1e-14 * (1.0 + b.norm())) break;
    }
    return {b[0], b.tail(p)};
}

/// Largest violation of the l1 optimality conditions for
/// sum logloss + lambda * ||coef||_1 with a free intercept.
inline double l1_kkt_violation(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double intercept,
                               const Eigen::VectorXd& coef, double lambda) {
    Eigen::VectorXd resid(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        resid[i] = 1.0 / (1.0 + std::exp(-(intercept + X.row(i).dot(coef)))) - y[i];
    double worst = std::abs(resid.sum());
    const Eigen::VectorXd g = X.transpose() * resid;
    for (Eigen::Index k = 0; k < coef.size(); ++k) {
        if (coef[k] != 0.0)
            worst = std::max(worst, std::abs(g[k] + lambda * (coef[k] > 0.0 ? 1.0 : -1.0)));
        else
            worst = std::max(worst, std::max(0.0, std::abs(g[k]) - lambda));
    }
    return worst;
}

struct Stump {
    bool split = false;
    int feature = -1;
    double threshold = 0.0;
    double left = 0.0;   // positive fraction, rows with x <= threshold
    double right = 0.0;
    double root = 0.0;
};

/// Exhaustive best Gini split over every observed value of every feature.
/// Impurities are compared exactly as rationals; ties go to the lowest
/// feature, then the lowest threshold. A split must strictly lower impurity.
inline Stump exhaustive_stump(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    using i128 = __int128;
    const long long n = X.rows();
    long long pos = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) pos += y[i] != 0.0;
    Stump best;
    best.root = static_cast<double>(pos) / static_cast<double>(n);
    // Weighted impurity n * G = 2 * pos * neg / n; compare pos*neg/n fractions.
    i128 best_num = static_cast<i128>(pos) * (n - pos);
    i128 best_den = n;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        std::vector<double> values(X.col(j).data(), X.col(j).data() + n);
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (double t : values) {
            long long nl = 0, pl = 0;
            for (Eigen::Index i = 0; i < n; ++i)
                if (X(i, j) <= t) {
                    ++nl;
                    pl += y[i] != 0.0;
                }
            const long long nr = n - nl, pr = pos - pl;
            if (nl == 0 || nr == 0) continue;
            const i128 num = static_cast<i128>(pl) * (nl - pl) * nr + static_cast<i128>(pr) * (nr - pr) * nl;
            const i128 den = static_cast<i128>(nl) * nr;
            if (num * best_den < best_num * den) {
                best_num = num;
                best_den = den;
                best.split = true;
                best.feature = static_cast<int>(j);
                best.threshold = t;
                best.left = static_cast<double>(pl) / static_cast<double>(nl);
                best.right = static_cast<double>(pr) / static_cast<double>(nr);
            }
        }
    }
    return best;
}

/// Two-sample log-rank |O - E| / sqrt(V) for group membership `left`,
/// straight from the textbook risk-set definition.
inline double log_rank_oracle(const std::vector<double>& time, const std::vector<int>& status,
                              const std::vector<bool>& left) {
    std::vector<double> events;
    for (std::size_t i = 0; i < time.size(); ++i)
        if (status[i]) events.push_back(time[i]);
    std::sort(events.begin(), events.end());
    events.erase(std::unique(events.begin(), events.end()), events.end());
    double o_minus_e = 0.0, var = 0.0;
    for (double t : events) {
        double Y = 0, D = 0, Y1 = 0, D1 = 0;
        for (std::size_t i = 0; i < time.size(); ++i) {
            if (time[i] >= t) {
                ++Y;
                if (left[i]) ++Y1;
            }
            if (time[i] == t && status[i]) {
                ++D;
                if (left[i]) ++D1;
            }
        }
        o_minus_e += D1 - Y1 * D / Y;
        if (Y > 1) var += Y1 * (Y - Y1) * D * (Y - D) / (Y * Y * (Y - 1));
    }
    return var > 0 ? std::abs(o_minus_e) / std::sqrt(var) : 0.0;
}

struct MlpForward {
    long double loss = 0.0L;
    std::vector<bool> active;  // ReLU pattern over every hidden unit and row
};

/// Mean binary cross-entropy of the network, evaluated from its weights in
/// long double.
inline MlpForward mlp_forward(const distress::Network& net, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    using Ld = long double;
    MlpForward out;
    const std::size_t layers = net.weights.size();
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        std::vector<Ld> a(static_cast<std::size_t>(X.cols()));
        for (Eigen::Index j = 0; j < X.cols(); ++j) a[static_cast<std::size_t>(j)] = X(i, j);
        for (std::size_t l = 0; l < layers; ++l) {
            const auto& W = net.weights[l];
            std::vector<Ld> next(static_cast<std::size_t>(W.rows()));
            for (Eigen::Index r = 0; r < W.rows(); ++r) {
                Ld z = net.biases[l][r];
                for (Eigen::Index c = 0; c < W.cols(); ++c) z += static_cast<Ld>(W(r, c)) * a[static_cast<std::size_t>(c)];
                if (l + 1 < layers) {
                    out.active.push_back(z > 0.0L);
                    z = z > 0.0L ? z : 0.0L;
                }
                next[static_cast<std::size_t>(r)] = z;
            }
            a = std::move(next);
        }
        const Ld z = a[0];
        out.loss += (z > 0.0L ? z : 0.0L) + std::log1p(std::exp(-std::fabs(z))) - static_cast<Ld>(y[i]) * z;
    }
    out.loss /= static_cast<Ld>(X.rows());
    return out;
}

/// Max relative error between the backpropagated gradient and finite
/// differences of the long-double loss over every parameter. Relative error is
/// |a - b| / max(|a|, |b|, floor). Central differences are used unless a step
/// flips a ReLU, in which case the one-sided difference on the unflipped side
/// is used; parameters whose both sides flip are skipped and counted.
inline double mlp_gradient_error(const distress::Network& net, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 double h = 1e-6, double floor = 1e-7, int* skipped = nullptr) {
    distress::Network grad;
    distress::loss_and_gradient(net, X, y, &grad);
    const Eigen::VectorXd analytic = grad.flatten();
    const Eigen::VectorXd theta = net.flatten();
    const MlpForward at = mlp_forward(net, X, y);
    distress::Network probe = net;
    double worst = 0.0;
    if (skipped) *skipped = 0;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
        Eigen::VectorXd t = theta;
        t[k] = theta[k] + h;
        probe.assign(t);
        const MlpForward up = mlp_forward(probe, X, y);
        t[k] = theta[k] - h;
        probe.assign(t);
        const MlpForward down = mlp_forward(probe, X, y);
        const long double step_up = static_cast<long double>(theta[k] + h) - theta[k];
        const long double step_down = static_cast<long double>(theta[k]) - (theta[k] - h);
        long double numeric;
        if (up.active == at.active && down.active == at.active)
            numeric = (up.loss - down.loss) / (step_up + step_down);
        else if (up.active == at.active)
            numeric = (up.loss - at.loss) / step_up;
        else if (down.active == at.active)
            numeric = (at.loss - down.loss) / step_down;
        else {
            if (skipped) ++*skipped;
            continue;
        }
        const double n = static_cast<double>(numeric);
        const double scale = std::max({std::abs(analytic[k]), std::abs(n), floor});
        worst = std::max(worst, std::abs(analytic[k] - n) / scale);
    }
    return worst;
}

}  // namespace testing

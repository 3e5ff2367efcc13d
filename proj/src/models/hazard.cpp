#include "distress/models/hazard.hpp"

#include <cmath>
#include <string>

#include "distress/core.hpp"
#include "distress/models/dataset.hpp"

namespace distress {

namespace {

double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

double base_log_odds(const Eigen::VectorXd& y) {
    const double rate = y.mean();
    if (rate <= 0.0 || rate >= 1.0) throw NumericalError("penalized hazard: training labels contain a single class");
    return std::log(rate / (1.0 - rate));
}

NumericalError no_convergence(double objective) {
    return NumericalError("penalized hazard did not converge; last objective " + format_double(objective));
}

HazardFit fit_l1(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, const HazardOptions& opt) {
    const Eigen::Index n = X.rows(), p = X.cols();
    HazardFit fit;
    fit.intercept = base_log_odds(y);
    fit.coef = Eigen::VectorXd::Zero(p);
    fit.objective = hazard_objective(X, y, fit.intercept, fit.coef, Penalty::l1, lambda);
    // At or above the kill value the intercept-only model is the exact optimum.
    if (p == 0 || lambda >= l1_kill_lambda(X, y)) return fit;

    Eigen::VectorXd w(n), r(n), xw2(p);
    for (fit.iterations = 1; fit.iterations <= opt.max_iterations; ++fit.iterations) {
        const Eigen::VectorXd eta = (X * fit.coef).array() + fit.intercept;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double pi = sigmoid(eta[i]);
            w[i] = std::max(pi * (1.0 - pi), 1e-10);
            r[i] = (y[i] - pi) / w[i];
        }
        for (Eigen::Index k = 0; k < p; ++k) xw2[k] = (X.col(k).array().square() * w.array()).sum();
        const double wsum = w.sum();

        // Coordinate descent on the weighted least-squares model of this iterate.
        double b0 = fit.intercept;
        Eigen::VectorXd beta = fit.coef;
        for (int sweep = 0; sweep < opt.max_inner_sweeps; ++sweep) {
            double max_change = 0.0;
            const double d0 = w.dot(r) / wsum;
            b0 += d0;
            r.array() -= d0;
            max_change = std::abs(d0) * std::sqrt(wsum);
            for (Eigen::Index k = 0; k < p; ++k) {
                if (xw2[k] <= 0.0) continue;
                const double g = (X.col(k).array() * w.array() * r.array()).sum() + beta[k] * xw2[k];
                const double next = soft_threshold(g, lambda) / xw2[k];
                const double delta = next - beta[k];
                if (delta != 0.0) {
                    r -= delta * X.col(k);
                    beta[k] = next;
                    max_change = std::max(max_change, std::abs(delta) * std::sqrt(xw2[k]));
                }
            }
            if (max_change < 1e-13) break;
        }

        // Backtracking along the proximal Newton direction.
        const double d_b0 = b0 - fit.intercept;
        const Eigen::VectorXd d_beta = beta - fit.coef;
        double step = 1.0;
        double candidate = fit.objective;
        bool accepted = false;
        for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
            candidate = hazard_objective(X, y, fit.intercept + step * d_b0, fit.coef + step * d_beta, Penalty::l1, lambda);
            if (candidate <= fit.objective) {
                accepted = true;
                break;
            }
        }
        if (!accepted) return fit;  // no descent direction left: stationary to working precision
        const double max_move = std::max(std::abs(step * d_b0), (step * d_beta).cwiseAbs().maxCoeff());
        const double decrease = fit.objective - candidate;
        fit.intercept += step * d_b0;
        fit.coef += step * d_beta;
        fit.objective = candidate;
        if (decrease <= opt.tolerance * (1.0 + std::abs(candidate)) && max_move < 1e-9) return fit;
    }
    throw no_convergence(fit.objective);
}

HazardFit fit_l2(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda, const HazardOptions& opt) {
    const Eigen::Index n = X.rows(), p = X.cols();
    Eigen::MatrixXd A(n, p + 1);
    A.col(0).setOnes();
    A.rightCols(p) = X;
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(p + 1);
    theta[0] = base_log_odds(y);
    Eigen::VectorXd penalty_diag = Eigen::VectorXd::Constant(p + 1, 2.0 * lambda);
    penalty_diag[0] = 0.0;

    auto objective = [&](const Eigen::VectorXd& t) {
        return hazard_objective(X, y, t[0], t.tail(p), Penalty::l2, lambda);
    };
    HazardFit fit;
    fit.objective = objective(theta);
    for (fit.iterations = 1; fit.iterations <= opt.max_iterations; ++fit.iterations) {
        const Eigen::VectorXd eta = A * theta;
        Eigen::VectorXd prob(n), w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            prob[i] = sigmoid(eta[i]);
            w[i] = prob[i] * (1.0 - prob[i]);
        }
        const Eigen::VectorXd grad = A.transpose() * (prob - y) + penalty_diag.cwiseProduct(theta);
        Eigen::MatrixXd H = A.transpose() * (A.array().colwise() * w.array()).matrix();
        H.diagonal() += penalty_diag;
        const Eigen::VectorXd direction = H.ldlt().solve(grad);
        const double decrement = grad.dot(direction);
        if (!std::isfinite(decrement)) throw no_convergence(fit.objective);

        double step = 1.0;
        double candidate = fit.objective;
        bool accepted = false;
        for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
            candidate = objective(theta - step * direction);
            if (candidate <= fit.objective - 1e-4 * step * decrement || candidate <= fit.objective) {
                accepted = true;
                break;
            }
        }
        if (accepted) {
            theta -= step * direction;
            fit.objective = candidate;
        }
        if (!accepted || 0.5 * decrement <= opt.tolerance * (1.0 + std::abs(fit.objective))) {
            fit.intercept = theta[0];
            fit.coef = theta.tail(p);
            return fit;
        }
    }
    throw no_convergence(fit.objective);
}

}  // namespace

double hazard_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double intercept,
                        const Eigen::VectorXd& coef, Penalty penalty, double lambda) {
    const Eigen::VectorXd eta = (X * coef).array() + intercept;
    const double pen = penalty == Penalty::l1 ? coef.lpNorm<1>() : coef.squaredNorm();
    return logistic_loss(eta, y) + lambda * pen;
}

HazardFit fit_penalized_hazard(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Penalty penalty, double lambda,
                               const HazardOptions& options) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DataError("penalized hazard: lambda must be >= 0");
    if (X.rows() != y.size()) throw DataError("penalized hazard: row count mismatch");
    return penalty == Penalty::l1 ? fit_l1(X, y, lambda, options) : fit_l2(X, y, lambda, options);
}

double l1_kill_lambda(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    const Eigen::VectorXd centered = y.array() - y.mean();
    return (X.transpose() * centered).cwiseAbs().maxCoeff();
}

}  // namespace distress

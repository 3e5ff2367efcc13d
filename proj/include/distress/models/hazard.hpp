#pragma once

#include <Eigen/Dense>

namespace distress {

enum class Penalty { l1, l2 };

struct HazardOptions {
    double tolerance = 1e-12;  // relative objective change between outer iterations
    int max_iterations = 500;  // outer (Newton / proximal Newton) iterations
    int max_inner_sweeps = 10000;
};

struct HazardFit {
    double intercept = 0.0;
    Eigen::VectorXd coef;
    double objective = 0.0;
    int iterations = 0;
};

/// sum_i [log(1 + e^eta_i) - y_i eta_i] + lambda * P(coef); intercept unpenalized,
/// P = ||coef||_1 (l1) or ||coef||_2^2 (l2).
double hazard_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double intercept,
                        const Eigen::VectorXd& coef, Penalty penalty, double lambda);

/// l1: proximal Newton with cyclic coordinate descent and soft-thresholding on
/// each quadratic model. l2: damped Newton. Throws NumericalError (with the
/// last objective) when the iteration budget runs out.
HazardFit fit_penalized_hazard(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Penalty penalty, double lambda,
                               const HazardOptions& options = {});

/// Smallest l1 lambda that keeps every slope at zero: max_k |x_k' (y - ybar)|.
double l1_kill_lambda(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

}  // namespace distress

#pragma once

#include <Eigen/Core>
#include <vector>

#include "harness/kernel.hpp"

namespace harness {

struct SolverConfig {
    int max_iterations = 50;
    double tolerance = 1e-8;   // infinity norm of the objective gradient
    double damping = 0.5;      // backtracking shrink factor, in (0,1)
    double lambda = 1.0;       // weight of the squared-RKHS-norm penalty

    void validate() const;
};

// Mode of the penalized logistic objective on a fixed Gram matrix, plus the
// dual weights K^-1 f needed for out-of-sample prediction.
struct FittedLocalModel {
    Eigen::VectorXd f_hat;
    Eigen::VectorXd dual;
    double lambda = 1.0;
    bool converged = false;
    int iterations = 0;
    double grad_norm = 0.0;
    std::vector<double> psi_trace;  // objective after each accepted step
};

// Maximizes Psi(f) = sum_i log sigma(y_i f_i) - lambda f' K^-1 f by damped
// Newton steps. Each step solves the system through the symmetric form
// B = 2*lambda*I + W^(1/2) K W^(1/2), so K itself is never inverted; the
// dual vector is maintained exactly alongside f.
FittedLocalModel fit_klr(const GramMatrix& K, const Eigen::VectorXd& y,
                         const SolverConfig& config);

// k_star is m x n, rows are test points against the n training points;
// returns latent scores k_star * dual.
Eigen::VectorXd predict_out_of_sample(const FittedLocalModel& model,
                                      const Eigen::MatrixXd& k_star);

// Stable log(sigma(z)).
double log_sigmoid(double z);
double sigmoid(double z);

}  // namespace harness

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "harness/dataset.hpp"

namespace harness {

enum class LinearPenalty { l2, l1 };

struct LinearBaselineConfig {
    LinearPenalty penalty = LinearPenalty::l2;
    double strength = 1.0;  // penalty weight; intercept is never penalized
    // When non-empty, the strength is picked from this grid by held-out
    // AUROC on a seeded validation fraction, then refit on all rows.
    std::vector<double> strength_grid;
    double validation_fraction = 0.25;
    int max_iterations = 500;
    double tolerance = 1e-7;
};

struct LinearBaselineModel {
    Eigen::VectorXd weights;  // [intercept, coefficients...]
    bool converged = false;
    int iterations = 0;
    double strength = 0.0;  // the penalty weight actually used
};

// Design for the linear comparator: [X, Z, X (x) Z] so group-specific linear
// effects are representable, mirroring a group-interacted lasso design.
Eigen::MatrixXd baseline_design(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z);

// y in {-1,+1}. l2 runs damped Newton/IRLS; l1 runs FISTA with
// soft-thresholding at a power-iteration Lipschitz step.
LinearBaselineModel fit_linear_baseline(const Eigen::MatrixXd& features,
                                        const Eigen::VectorXd& y,
                                        const LinearBaselineConfig& config,
                                        std::uint64_t seed = 0);

Eigen::VectorXd linear_baseline_score(const LinearBaselineModel& model,
                                      const Eigen::MatrixXd& features);

}  // namespace harness

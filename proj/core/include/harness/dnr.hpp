#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "harness/hyperopt.hpp"
#include "harness/klr.hpp"

namespace harness {

struct DnrConfig {
    int subsets = 0;  // 0 -> ceil(n / 1000)
    std::uint64_t seed = 0;
    SolverConfig solver;
};

// Uniform random partition of [0, n) into `subsets` disjoint sets whose
// sizes differ by at most one.
std::vector<std::vector<Index>> partition_subsets(Index n, int subsets, std::uint64_t seed);

// Divide and recombine: fit one local model per subset with the final kernel
// parameters, score the test points from each, and average. The reduction
// runs in subset index order with pairwise summation, so the result does not
// depend on scheduling.
Eigen::VectorXd dnr_predict(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                            const Eigen::VectorXd& y, const Eigen::MatrixXd& Xtest,
                            const Eigen::MatrixXd& Ztest, const KernelParams& params,
                            const GroupKernelParams& gparams, const KernelConfig& kernel_config,
                            const DnrConfig& config);

}  // namespace harness

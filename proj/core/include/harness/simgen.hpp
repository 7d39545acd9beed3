#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "harness/dataset.hpp"

namespace harness {

// One of the four benchmark data-generating configurations. Settings 1-3
// carry 15 interaction pairs of decreasing density over the leading
// covariates plus nonlinear one-way blocks; setting 4 is linear-main-only.
struct SimSetting {
    int id = 1;
    std::vector<std::pair<int, int>> interactions;  // 1-based covariate pairs
    bool nonlinear_blocks = true;
    bool equalize_variance = true;

    static SimSetting get(int id);
};

std::vector<std::pair<int, int>> interaction_set(int id);

struct SimConfig {
    Index n = 25000;
    Index p = 100;
    int groups = 5;
    int years = 10;
    std::uint64_t seed = 0;
    // Second parameters of the coefficient normals, interpreted as variances.
    double base_variance = 0.1;
    double group_variance = 5.0;
    double year_variance = 0.1;

    void validate() const;
};

// Coefficient hierarchy: base draws, per-group dispersions, and
// per-(group, year) dispersions. Row g*years + t addresses cell (g, t).
struct SimCoefficients {
    Eigen::VectorXd alpha, beta, gamma, zeta;          // 6 / 7 / 7 / |S|
    Eigen::MatrixXd alpha_g, beta_g, gamma_g, zeta_g;  // groups x block
    Eigen::MatrixXd alpha_gt, beta_gt, gamma_gt, zeta_gt;  // (groups*years) x block
};

SimCoefficients draw_coefficients(const SimConfig& config, const SimSetting& setting);

struct SimulatedData {
    Dataset dataset;
    Eigen::VectorXd latent;        // f per sample (blocks already rescaled)
    Eigen::MatrixXd block_latent;  // n x 3: linear / nonlinear / interaction parts
    Eigen::Vector3d block_scales;  // applied variance-equalization factors
    SimCoefficients coefficients;
};

// Covariates are i.i.d. Uniform(-1,1); the latent surface sums the three
// effect blocks with (group, year)-specific coefficients; outcomes are
// Bernoulli(sigmoid(latent)) coded {-1,+1}. Deterministic given the seed.
SimulatedData generate_dataset(const SimConfig& config, const SimSetting& setting);

// Latent surface value for one covariate vector in cell (g, t); used by
// probes that explore f as a function of x.
double latent_value(const SimCoefficients& coefficients, const SimSetting& setting,
                    const Eigen::Vector3d& block_scales, int group, int year_index,
                    int years, const Eigen::VectorXd& x);

}  // namespace harness

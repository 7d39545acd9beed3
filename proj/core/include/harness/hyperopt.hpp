#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "harness/dataset.hpp"
#include "harness/kernel.hpp"
#include "harness/klr.hpp"

namespace harness {

// Kernel structure shared by training, prediction and evaluation.
struct KernelConfig {
    std::vector<UnivariateKernelKind> kinds;
    int order = 2;        // Q, covariate interaction order
    int group_order = 1;  // Q_g, group interaction order
    double jitter = 1e-8;
};

// Raw optimizer variables. kappa/tau map through u -> max(0, u), which can
// park coordinates exactly at zero; eta passes through unchanged (the
// kernel squares it).
struct UnconstrainedParams {
    Eigen::VectorXd u_kappa;    // p
    Eigen::MatrixXd u_tau;      // p x Q
    Eigen::VectorXd u_eta;      // Q + 1
    Eigen::VectorXd u_kappa_g;  // p_g
    Eigen::MatrixXd u_tau_g;    // p_g x Q_g
    Eigen::VectorXd u_eta_g;    // Q_g + 1

    KernelParams params() const;
    GroupKernelParams group_params() const;

    Index size() const;
    Eigen::VectorXd flatten() const;
    static UnconstrainedParams from_flat(const Eigen::VectorXd& v, Index p, int order,
                                         Index pg, int group_order);

    // All effects weakly active: u_kappa = u_tau = 0.5, u_eta = 1 for orders
    // 0 and 1 and 0.5 beyond, group analogues identical.
    static UnconstrainedParams init_default(Index p, int order, Index pg, int group_order);
};

enum class GradientMethod { finite_difference, unrolled_newton };

struct OptimizerConfig {
    int iterations = 100;
    int batch_size = 128;
    int holdout_size = 0;  // 0 -> 20% of n
    double learning_rate = 0.01;
    GradientMethod gradient = GradientMethod::unrolled_newton;
    int unrolled_steps = 10;
    double fd_step = 1e-4;
    std::uint64_t seed = 0;
    int snapshot_interval = 0;  // 0 -> no parameter snapshots
    bool freeze_group = false;  // keep kappa_g at 0 (no group heterogeneity)
    bool tie_order = false;     // keep tau at 1 across orders (no order-specificity)
    double divergence_threshold = 1e10;

    void validate() const;
};

// One cross-validation draw: fit on `batch`, score `holdout`.
struct Draw {
    std::vector<Index> batch;
    std::vector<Index> holdout;
    int id = -1;
};

// Negative held-out log-likelihood of latent scores.
double holdout_nll(const Eigen::VectorXd& scores, const Eigen::VectorXd& y);

double cv_loss_single_draw(const KernelParams& params, const GroupKernelParams& gparams,
                           const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                           const Eigen::VectorXd& y, const Draw& draw,
                           const KernelConfig& kernel_config, const SolverConfig& solver);

// Gradient of the draw loss with respect to the unconstrained variables.
// finite_difference re-fits at +-fd_step per coordinate (the slow oracle);
// unrolled_newton differentiates exactly through `unrolled_steps` plain
// Newton steps via a hand-rolled reverse pass. When `loss_out` is non-null
// it receives the loss at the given parameters.
UnconstrainedParams hypergradient(const UnconstrainedParams& u, const Eigen::MatrixXd& X,
                                  const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                  const Draw& draw, const KernelConfig& kernel_config,
                                  const SolverConfig& solver, GradientMethod method,
                                  int unrolled_steps = 10, double fd_step = 1e-4,
                                  double* loss_out = nullptr);

struct TrainTrace {
    std::vector<double> losses;   // one entry per completed iteration
    std::vector<double> wall_ms;  // cumulative wall time, diagnostics only
    std::vector<std::pair<int, UnconstrainedParams>> snapshots;
    UnconstrainedParams final_u;
    bool diverged = false;
    int iterations_done = 0;

    KernelParams final_params() const { return final_u.params(); }
    GroupKernelParams final_group_params() const { return final_u.group_params(); }
};

// Mini-batch SGD on the single-draw cross-validation loss: per iteration
// draw a holdout of size m and a batch of size b from the remainder, take
// one gradient step. Deterministic given (data, configs, seed).
TrainTrace train_sgd(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                     const Eigen::VectorXd& y, const KernelConfig& kernel_config,
                     const SolverConfig& solver, const OptimizerConfig& optimizer);

}  // namespace harness

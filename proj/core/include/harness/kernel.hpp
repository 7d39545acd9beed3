#pragma once

#include <Eigen/Core>
#include <vector>

#include "harness/dataset.hpp"

namespace harness {

// Univariate base kernels. Both are zero-mean under the uniform measure on
// [-1,1], which keeps the functional decomposition identifiable:
//   centered_linear:  k(x,x') = x x'
//   orthogonal_poly2: k(x,x') = x x' + (x^2 - 1/3)(x'^2 - 1/3)
enum class UnivariateKernelKind { centered_linear, orthogonal_poly2 };

// Inputs are accepted slightly beyond [-1,1]; test data scaled with a
// training-data spec can land just outside the training range.
inline constexpr double kKernelDomainSlack = 0.05;

double univariate_kernel_eval(UnivariateKernelKind kind, double x, double xt);

// Binary columns (per scaling spec) get the linear kernel, the rest the
// second-order polynomial kernel.
std::vector<UnivariateKernelKind> default_kernel_kinds(const ScalingSpec& spec);

// Covariate-side parameters: kappa is overall importance per covariate,
// tau(j, q-1) the order-q importance of covariate j (orders 1..Q), eta the
// per-order strength (orders 0..Q). All of kappa/tau must be >= 0; eta is
// unconstrained and enters squared.
struct KernelParams {
    Eigen::VectorXd kappa;  // p
    Eigen::MatrixXd tau;    // p x Q
    Eigen::VectorXd eta;    // Q + 1

    int order() const { return static_cast<int>(eta.size()) - 1; }
    void validate(Index p) const;

    static KernelParams ones(Index p, int order);
};

// Group-side analogue, dimensioned by the design columns p_g and the group
// interaction order Q_g.
struct GroupKernelParams {
    Eigen::VectorXd kappa;  // p_g
    Eigen::MatrixXd tau;    // p_g x Q_g
    Eigen::VectorXd eta;    // Q_g + 1

    int order() const { return static_cast<int>(eta.size()) - 1; }
    void validate(Index pg) const;

    static GroupKernelParams ones(Index pg, int order);
};

struct GramMatrix {
    Eigen::MatrixXd K;
    bool symmetric = false;
    double jitter = 0.0;
};

// Covariate part of the kernel: sum over orders q of eta_q^2 * e_q(w) with
// w_i = (kappa_i tau_{i,q})^2 k_i(x_i, xt_i) and e_q the q-th elementary
// symmetric polynomial, evaluated through the power-sum recursion.
double base_kernel_pair(const Eigen::VectorXd& x, const Eigen::VectorXd& xt,
                        const KernelParams& params,
                        const std::vector<UnivariateKernelKind>& kinds);
// Per-order contributions eta_q^2 e_q, q = 0..Q; their sum is the pair value.
Eigen::VectorXd base_kernel_components(const Eigen::VectorXd& x, const Eigen::VectorXd& xt,
                                       const KernelParams& params,
                                       const std::vector<UnivariateKernelKind>& kinds);

// Group-heterogeneity multiplier: same construction on indicator products
// z_j zt_j in {0,1}.
double group_multiplier(const Eigen::VectorXd& z, const Eigen::VectorXd& zt,
                        const GroupKernelParams& params);
Eigen::VectorXd group_multiplier_components(const Eigen::VectorXd& z, const Eigen::VectorXd& zt,
                                            const GroupKernelParams& params);

// Full kernel entry (i,j) = group_multiplier(z_i, zt_j) * base_pair(x_i, xt_j).
// The self-Gram overload symmetrizes and adds `jitter` to the diagonal.
GramMatrix kernel_matrix(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                         const KernelParams& params, const GroupKernelParams& gparams,
                         const std::vector<UnivariateKernelKind>& kinds, double jitter);
GramMatrix kernel_matrix(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                         const Eigen::MatrixXd& Xt, const Eigen::MatrixXd& Zt,
                         const KernelParams& params, const GroupKernelParams& gparams,
                         const std::vector<UnivariateKernelKind>& kinds);

// Assembly internals kept around for hyperparameter gradients: the two
// factors, the per-order elementary symmetric matrices they sum, and the
// per-order first power sums (sum_l w_l^(q) per pair) the gradient
// contraction reuses.
struct KernelInternals {
    Eigen::MatrixXd base;                     // part with covariate orders summed
    Eigen::MatrixXd group;                    // group multiplier factor
    std::vector<Eigen::MatrixXd> base_e;      // e_q matrices, index q-1, q = 1..Q
    std::vector<Eigen::MatrixXd> group_e;     // e_q matrices, index q-1, q = 1..Q_g
    std::vector<Eigen::MatrixXd> base_s1;     // first power sums per order
    std::vector<Eigen::MatrixXd> group_s1;
};

GramMatrix kernel_matrix_with_internals(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                                        const Eigen::MatrixXd& Xt, const Eigen::MatrixXd& Zt,
                                        const KernelParams& params,
                                        const GroupKernelParams& gparams,
                                        const std::vector<UnivariateKernelKind>& kinds,
                                        double jitter, bool self,
                                        KernelInternals* internals);

// Per-sample feature matrices making each univariate kernel an inner
// product: k_l(x, x') = prim_l prim'_l + sec_l sec'_l.
struct PairFeatureMatrices {
    Eigen::MatrixXd prim;
    Eigen::MatrixXd sec;
};
PairFeatureMatrices kernel_feature_matrices(const Eigen::MatrixXd& X,
                                            const std::vector<UnivariateKernelKind>& kinds);

// Reference path: explicit sum over all covariate subsets |V| <= Q and group
// subsets |V_g| <= Q_g. Exponential in p; guarded to p, p_g <= 12.
double brute_force_kernel_oracle(const Eigen::VectorXd& x, const Eigen::VectorXd& xt,
                                 const Eigen::VectorXd& z, const Eigen::VectorXd& zt,
                                 const KernelParams& params, const GroupKernelParams& gparams,
                                 const std::vector<UnivariateKernelKind>& kinds);

}  // namespace harness

#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "harness/dataset.hpp"
#include "harness/kernel.hpp"

namespace harness {

// Probability that a random positive outranks a random negative, ties
// counted 1/2 (rank-sum form). Throws on single-class labels.
double auroc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels);

// Average precision with step interpolation; ties broken by descending
// score then ascending index. Throws when no positives are present.
double prauc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels);

struct MetricReport {
    std::string scope;
    Index n = 0;
    double auroc = 0.0;
    double prauc = 0.0;
    double positive_rate = 0.0;
};

struct SkippedStratum {
    std::string scope;
    Index n = 0;
    std::string reason;
};

struct StratifiedReport {
    std::vector<MetricReport> reports;  // overall first, then level by level
    std::vector<SkippedStratum> skipped;
};

// Overall metrics plus one entry per group at every level that meets the
// size threshold; undersized or single-class strata are listed as skipped.
StratifiedReport stratified_report(const Eigen::VectorXd& scores,
                                   const Eigen::VectorXd& labels,
                                   const Eigen::MatrixXi& group_labels,
                                   const std::vector<std::vector<std::string>>& group_names,
                                   Index min_group_size = 100);

// p x p symmetric matrix: diagonal eta_1^2 (kappa_j tau_j1)^2, off-diagonal
// eta_2^2 (kappa_j tau_j2)^2 (kappa_k tau_k2)^2. Zero off-diagonals when the
// kernel order is below 2.
Eigen::MatrixXd importance_matrix(const KernelParams& params);

struct HeterogeneityRow {
    std::string label;
    double kappa_g = 0.0;
    Eigen::VectorXd per_order;  // eta_{g,q}^2 (kappa tau_q)^2, q = 1..Q_g
};

struct HeterogeneityReport {
    std::vector<HeterogeneityRow> rows;    // one per design column
    Eigen::VectorXd global_shares;         // eta_{g,q}^2, q = 0..Q_g
};

HeterogeneityReport heterogeneity_report(const GroupKernelParams& params,
                                         const GroupDesign& design,
                                         const std::vector<std::vector<std::string>>& names);

// Sample order for kernel heatmaps: level-1 group, then deeper levels, then
// original index.
std::vector<Index> heatmap_order(const Eigen::MatrixXi& group_labels);

}  // namespace harness

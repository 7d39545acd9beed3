#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "harness/dataset.hpp"
#include "harness/kernel.hpp"
#include "harness/metrics.hpp"

namespace harness {

// Dataset CSV layout: header `y,year,g1..gQ,<covariate names...>`; y in
// {-1,1} or {0,1} (the latter is remapped), year and group labels integer.
// Group labels are recoded to dense 0-based categories in reading order of
// their sorted distinct values; the original values become display names.
Dataset load_dataset_csv(const std::string& path);
void save_dataset_csv(const Dataset& data, const std::string& path);

// Scores CSV: sample id (row in the scored file), latent score, sigmoid
// probability.
void save_scores_csv(const Eigen::VectorXd& scores, const std::string& path);
Eigen::VectorXd load_scores_csv(const std::string& path);

// Labeled matrix export (importance matrices and the like).
void save_matrix_csv(const Eigen::MatrixXd& matrix, const std::vector<std::string>& row_labels,
                     const std::vector<std::string>& col_labels, const std::string& corner,
                     const std::string& path);

// Self-Gram heatmap in hierarchical group order; each row carries the sample
// id and its group path so plotting tools can draw block boundaries.
void save_gram_heatmap_csv(const Eigen::MatrixXd& K, const std::vector<Index>& order,
                           const Eigen::MatrixXi& group_labels, const std::string& path);

// Stratified metric table, one row per scope plus skipped strata.
void save_metrics_csv(const StratifiedReport& report, const std::string& path);

}  // namespace harness

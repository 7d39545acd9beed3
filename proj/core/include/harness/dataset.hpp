#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace harness {

using Index = Eigen::Index;

// Nested group structure: `counts[k]` is the size of the level-k label
// space. `parent[k]` (k >= 1) maps each level-k category to its level-(k-1)
// parent; an empty vector at level k means the labels there are local (any
// child label is valid under any parent, as with "subgroup 1/2 within each
// group" codings) and no nesting check applies.
struct GroupHierarchy {
    int levels = 1;
    std::vector<int> counts;
    std::vector<std::vector<int>> parent;

    void validate() const;
    // Total design columns: sum over levels k of prod_{l<=k} counts[l].
    Index design_columns() const;
    std::vector<Index> block_offsets() const;
    std::vector<Index> block_widths() const;

    // Builds counts from observed labels; derives the parent map when every
    // level-k category appears under a single parent, else leaves it local.
    static GroupHierarchy infer(const Eigen::MatrixXi& labels);
};

// Indicator expansion of nested group membership. Level-1 block is one-hot
// on the level-1 category; the level-k block is one-hot on the joint
// (level-1,...,level-k) category, so unrealized combinations stay as
// all-zero columns and column indices are stable across data subsets.
struct GroupDesign {
    Eigen::MatrixXd Z;
    std::vector<Index> offsets;
    std::vector<Index> widths;

    Index pg() const { return Z.cols(); }
};

GroupDesign build_group_design(const Eigen::MatrixXi& labels, const GroupHierarchy& hierarchy);

// Per-column affine map onto [-1,1]; constant columns map to 0.
struct ScalingSpec {
    Eigen::VectorXd min;
    Eigen::VectorXd max;
    std::vector<bool> constant;
    std::vector<bool> binary;  // exactly two distinct values observed

    Index cols() const { return min.size(); }
};

std::pair<Eigen::MatrixXd, ScalingSpec> scale_covariates(const Eigen::MatrixXd& raw);
// clamp=true clips the scaled values into [-1,1]; used when applying a
// training-data spec to test data that may fall outside the training range.
Eigen::MatrixXd apply_scaling(const Eigen::MatrixXd& raw, const ScalingSpec& spec,
                              bool clamp = false);
Eigen::MatrixXd invert_scaling(const Eigen::MatrixXd& scaled, const ScalingSpec& spec);

struct Dataset {
    Eigen::MatrixXd X;             // n x p covariates
    Eigen::MatrixXi group_labels;  // n x Q_g, 0-based category per level
    Eigen::VectorXi year;          // n
    Eigen::VectorXd y;             // n, values in {-1,+1}

    std::vector<std::string> covariate_names;               // size p or empty
    std::vector<std::vector<std::string>> group_names;      // per level, or empty

    Index n() const { return X.rows(); }
    Index p() const { return X.cols(); }
    int levels() const { return static_cast<int>(group_labels.cols()); }

    void validate() const;
    Dataset subset(const std::vector<Index>& rows) const;
};

struct SplitSpec {
    double train_fraction = 0.7;
    int prospective_years = 1;
    std::uint64_t seed = 0;
};

struct SplitIndices {
    std::vector<Index> train;
    std::vector<Index> retro;        // held-out rows from the historical years
    std::vector<Index> prospective;  // all rows from the trailing years
};

// The trailing `prospective_years` go entirely to `prospective`; the rest is
// shuffled by the seed and cut at `train_fraction`. The three parts
// partition [0, n).
SplitIndices temporal_split(const Eigen::VectorXi& year, const SplitSpec& spec);

inline std::tuple<Dataset, Dataset, Dataset> temporal_split(const Dataset& data,
                                                            const SplitSpec& spec) {
    SplitIndices idx = temporal_split(data.year, spec);
    return {data.subset(idx.train), data.subset(idx.retro), data.subset(idx.prospective)};
}

}  // namespace harness

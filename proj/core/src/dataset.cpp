#include "harness/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "harness/errors.hpp"
#include "harness/random.hpp"

namespace harness {

void GroupHierarchy::validate() const {
    if (levels < 1) throw ConfigError("group hierarchy needs at least one level");
    if (static_cast<int>(counts.size()) != levels)
        throw ConfigError("group hierarchy counts must have one entry per level");
    for (int c : counts)
        if (c < 1) throw ConfigError("group category counts must be positive");
    if (!parent.empty() && static_cast<int>(parent.size()) != levels)
        throw ConfigError("parent map must be empty or have one entry per level");
    for (int k = 1; k < levels && k < static_cast<int>(parent.size()); ++k) {
        if (parent[k].empty()) continue;
        if (static_cast<int>(parent[k].size()) != counts[k])
            throw ConfigError("parent map at level " + std::to_string(k + 1) +
                              " must cover every category");
        for (int p : parent[k])
            if (p < 0 || p >= counts[k - 1])
                throw ConfigError("parent category out of range at level " +
                                  std::to_string(k + 1));
    }
}

Index GroupHierarchy::design_columns() const {
    Index total = 0, width = 1;
    for (int k = 0; k < levels; ++k) {
        width *= counts[k];
        total += width;
    }
    return total;
}

std::vector<Index> GroupHierarchy::block_widths() const {
    std::vector<Index> widths;
    Index width = 1;
    for (int k = 0; k < levels; ++k) {
        width *= counts[k];
        widths.push_back(width);
    }
    return widths;
}

std::vector<Index> GroupHierarchy::block_offsets() const {
    std::vector<Index> offsets;
    Index at = 0;
    for (Index w : block_widths()) {
        offsets.push_back(at);
        at += w;
    }
    return offsets;
}

GroupHierarchy GroupHierarchy::infer(const Eigen::MatrixXi& labels) {
    if (labels.rows() == 0 || labels.cols() == 0)
        throw DataError("cannot infer a hierarchy from empty labels");
    GroupHierarchy h;
    h.levels = static_cast<int>(labels.cols());
    h.counts.resize(h.levels);
    h.parent.assign(h.levels, {});
    for (int k = 0; k < h.levels; ++k) {
        int max_label = labels.col(k).maxCoeff();
        if (labels.col(k).minCoeff() < 0)
            throw DataError("group labels must be non-negative");
        h.counts[k] = max_label + 1;
    }
    // Derive nesting where it is unambiguous in the data.
    for (int k = 1; k < h.levels; ++k) {
        std::vector<int> parent_of(h.counts[k], -1);
        bool consistent = true;
        for (Index i = 0; i < labels.rows() && consistent; ++i) {
            int child = labels(i, k);
            int par = labels(i, k - 1);
            if (parent_of[child] == -1)
                parent_of[child] = par;
            else if (parent_of[child] != par)
                consistent = false;
        }
        bool covered = std::all_of(parent_of.begin(), parent_of.end(),
                                   [](int p) { return p >= 0; });
        if (consistent && covered) h.parent[k] = std::move(parent_of);
    }
    return h;
}

GroupDesign build_group_design(const Eigen::MatrixXi& labels, const GroupHierarchy& hierarchy) {
    hierarchy.validate();
    if (labels.cols() != hierarchy.levels)
        throw ShapeError("labels have " + std::to_string(labels.cols()) +
                         " levels but hierarchy has " + std::to_string(hierarchy.levels));
    const Index n = labels.rows();
    GroupDesign design;
    design.offsets = hierarchy.block_offsets();
    design.widths = hierarchy.block_widths();
    design.Z = Eigen::MatrixXd::Zero(n, hierarchy.design_columns());

    for (Index i = 0; i < n; ++i) {
        Index joint = 0;
        for (int k = 0; k < hierarchy.levels; ++k) {
            int label = labels(i, k);
            if (label < 0 || label >= hierarchy.counts[k])
                throw DataError("invalid label " + std::to_string(label) + " at level " +
                                std::to_string(k + 1) + ", sample " + std::to_string(i));
            if (k >= 1 && static_cast<int>(hierarchy.parent.size()) > k &&
                !hierarchy.parent[k].empty() &&
                hierarchy.parent[k][label] != labels(i, k - 1))
                throw DataError("nesting error: level-" + std::to_string(k + 1) +
                                " label " + std::to_string(label) +
                                " is not nested in its parent, sample " + std::to_string(i));
            joint = joint * hierarchy.counts[k] + label;
            design.Z(i, design.offsets[k] + joint) = 1.0;
        }
    }
    return design;
}

std::pair<Eigen::MatrixXd, ScalingSpec> scale_covariates(const Eigen::MatrixXd& raw) {
    if (raw.rows() < 1) throw DataError("scaling requires at least one row");
    if (!raw.allFinite()) throw DataError("covariates contain non-finite entries");

    const Index p = raw.cols();
    ScalingSpec spec;
    spec.min = raw.colwise().minCoeff();
    spec.max = raw.colwise().maxCoeff();
    spec.constant.resize(p);
    spec.binary.resize(p);
    for (Index j = 0; j < p; ++j) {
        spec.constant[j] = spec.min[j] == spec.max[j];
        std::set<double> seen;
        for (Index i = 0; i < raw.rows() && seen.size() <= 2; ++i) seen.insert(raw(i, j));
        spec.binary[j] = seen.size() == 2;
    }
    return {apply_scaling(raw, spec), spec};
}

Eigen::MatrixXd apply_scaling(const Eigen::MatrixXd& raw, const ScalingSpec& spec, bool clamp) {
    if (raw.cols() != spec.cols())
        throw ShapeError("scaling spec covers " + std::to_string(spec.cols()) +
                         " columns, data has " + std::to_string(raw.cols()));
    if (!raw.allFinite()) throw DataError("covariates contain non-finite entries");
    Eigen::MatrixXd out(raw.rows(), raw.cols());
    for (Index j = 0; j < raw.cols(); ++j) {
        if (spec.constant[j]) {
            out.col(j).setZero();
            continue;
        }
        double span = spec.max[j] - spec.min[j];
        out.col(j) = ((raw.col(j).array() - spec.min[j]) * (2.0 / span) - 1.0).matrix();
        if (clamp) out.col(j) = out.col(j).array().min(1.0).max(-1.0).matrix();
    }
    return out;
}

Eigen::MatrixXd invert_scaling(const Eigen::MatrixXd& scaled, const ScalingSpec& spec) {
    if (scaled.cols() != spec.cols())
        throw ShapeError("scaling spec does not match column count");
    Eigen::MatrixXd out(scaled.rows(), scaled.cols());
    for (Index j = 0; j < scaled.cols(); ++j) {
        if (spec.constant[j]) {
            out.col(j).setConstant(spec.min[j]);
            continue;
        }
        double span = spec.max[j] - spec.min[j];
        out.col(j) = ((scaled.col(j).array() + 1.0) * (span / 2.0) + spec.min[j]).matrix();
    }
    return out;
}

void Dataset::validate() const {
    const Index rows = X.rows();
    if (group_labels.rows() != rows || year.size() != rows || y.size() != rows)
        throw ShapeError("dataset fields disagree on the number of samples");
    if (!X.allFinite()) throw DataError("covariates contain non-finite entries");
    for (Index i = 0; i < rows; ++i)
        if (y[i] != 1.0 && y[i] != -1.0)
            throw DataError("outcomes must be -1 or +1 (row " + std::to_string(i) + ")");
    if (!covariate_names.empty() && static_cast<Index>(covariate_names.size()) != X.cols())
        throw ShapeError("covariate_names does not match the covariate count");
}

Dataset Dataset::subset(const std::vector<Index>& rows) const {
    Dataset out;
    out.X.resize(rows.size(), X.cols());
    out.group_labels.resize(rows.size(), group_labels.cols());
    out.year.resize(rows.size());
    out.y.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        Index i = rows[r];
        if (i < 0 || i >= n()) throw ShapeError("subset row index out of range");
        out.X.row(r) = X.row(i);
        out.group_labels.row(r) = group_labels.row(i);
        out.year[r] = year[i];
        out.y[r] = y[i];
    }
    out.covariate_names = covariate_names;
    out.group_names = group_names;
    return out;
}

SplitIndices temporal_split(const Eigen::VectorXi& year, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction <= 1.0))
        throw ConfigError("train_fraction must lie in (0, 1]");
    if (spec.prospective_years < 0)
        throw ConfigError("prospective_years must be non-negative");

    std::set<int> years(year.data(), year.data() + year.size());
    if (static_cast<int>(years.size()) < spec.prospective_years + 1)
        throw DataError("split error: need more distinct years than prospective_years");

    bool has_prospective = spec.prospective_years > 0;
    int cutoff = 0;  // first prospective year
    if (has_prospective) cutoff = *std::prev(years.end(), spec.prospective_years);

    SplitIndices out;
    std::vector<Index> historical;
    for (Index i = 0; i < year.size(); ++i) {
        if (has_prospective && year[i] >= cutoff)
            out.prospective.push_back(i);
        else
            historical.push_back(i);
    }

    RandomStream rng(spec.seed, /*stream=*/17);
    std::vector<std::size_t> order = shuffled_indices(historical.size(), rng);
    auto n_train = static_cast<std::size_t>(
        std::llround(spec.train_fraction * static_cast<double>(historical.size())));
    n_train = std::min(n_train, historical.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
        Index i = historical[order[r]];
        (r < n_train ? out.train : out.retro).push_back(i);
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.retro.begin(), out.retro.end());
    return out;
}

}  // namespace harness

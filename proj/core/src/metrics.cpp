#include "harness/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "harness/errors.hpp"

namespace harness {

namespace {

void check_labels(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
    if (scores.size() != labels.size())
        throw ShapeError("scores and labels differ in length");
    if (!scores.allFinite()) throw DataError("scores contain non-finite values");
    for (Index i = 0; i < labels.size(); ++i)
        if (labels[i] != 1.0 && labels[i] != -1.0)
            throw DataError("labels must be -1 or +1");
}

}  // namespace

double auroc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
    check_labels(scores, labels);
    const Index m = scores.size();
    Index positives = 0;
    for (Index i = 0; i < m; ++i) positives += labels[i] > 0;
    Index negatives = m - positives;
    if (positives == 0 || negatives == 0)
        throw DataError("undefined metric: AUROC needs both classes");

    std::vector<Index> order(m);
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(),
              [&](Index a, Index b) { return scores[a] < scores[b]; });

    // Average ranks over tied blocks, then the rank-sum statistic.
    double rank_sum_pos = 0.0;
    Index at = 0;
    while (at < m) {
        Index end = at;
        while (end < m && scores[order[end]] == scores[order[at]]) ++end;
        double avg_rank = 0.5 * static_cast<double>(at + 1 + end);  // ranks are 1-based
        for (Index k = at; k < end; ++k)
            if (labels[order[k]] > 0) rank_sum_pos += avg_rank;
        at = end;
    }
    double u = rank_sum_pos - 0.5 * static_cast<double>(positives) * (positives + 1);
    return u / (static_cast<double>(positives) * static_cast<double>(negatives));
}

double prauc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
    check_labels(scores, labels);
    const Index m = scores.size();
    Index positives = 0;
    for (Index i = 0; i < m; ++i) positives += labels[i] > 0;
    if (positives == 0) throw DataError("undefined metric: PRAUC needs a positive");

    std::vector<Index> order(m);
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });

    double ap = 0.0;
    Index true_pos = 0;
    for (Index k = 0; k < m; ++k) {
        if (labels[order[k]] <= 0) continue;
        ++true_pos;
        double precision = static_cast<double>(true_pos) / static_cast<double>(k + 1);
        ap += precision / static_cast<double>(positives);
    }
    return ap;
}

namespace {

std::string stratum_scope(int level, int category,
                          const std::vector<std::vector<std::string>>& names) {
    std::string name = std::to_string(category);
    if (static_cast<int>(names.size()) > level &&
        static_cast<int>(names[level].size()) > category && !names[level][category].empty())
        name = names[level][category];
    return "level" + std::to_string(level + 1) + ":" + name;
}

}  // namespace

StratifiedReport stratified_report(const Eigen::VectorXd& scores,
                                   const Eigen::VectorXd& labels,
                                   const Eigen::MatrixXi& group_labels,
                                   const std::vector<std::vector<std::string>>& group_names,
                                   Index min_group_size) {
    check_labels(scores, labels);
    if (group_labels.rows() != scores.size())
        throw ShapeError("group labels do not match score count");

    StratifiedReport out;
    auto add = [&](const std::string& scope, const std::vector<Index>& rows) {
        Index positives = 0;
        for (Index i : rows) positives += labels[i] > 0;
        if (positives == 0 || positives == static_cast<Index>(rows.size())) {
            out.skipped.push_back({scope, static_cast<Index>(rows.size()),
                                   "single-class outcomes"});
            return;
        }
        Eigen::VectorXd s(rows.size()), l(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            s[r] = scores[rows[r]];
            l[r] = labels[rows[r]];
        }
        out.reports.push_back({scope, static_cast<Index>(rows.size()), auroc(s, l), prauc(s, l),
                               static_cast<double>(positives) / rows.size()});
    };

    std::vector<Index> all(scores.size());
    std::iota(all.begin(), all.end(), Index{0});
    add("overall", all);

    for (int level = 0; level < group_labels.cols(); ++level) {
        int categories = group_labels.col(level).maxCoeff() + 1;
        for (int c = 0; c < categories; ++c) {
            std::vector<Index> rows;
            for (Index i = 0; i < scores.size(); ++i)
                if (group_labels(i, level) == c) rows.push_back(i);
            if (rows.empty()) continue;
            std::string scope = stratum_scope(level, c, group_names);
            if (static_cast<Index>(rows.size()) < min_group_size) {
                out.skipped.push_back({scope, static_cast<Index>(rows.size()),
                                       "below minimum size"});
                continue;
            }
            add(scope, rows);
        }
    }
    return out;
}

Eigen::MatrixXd importance_matrix(const KernelParams& params) {
    params.validate(params.kappa.size());
    const Index p = params.kappa.size();
    Eigen::MatrixXd imp = Eigen::MatrixXd::Zero(p, p);
    double eta1_sq = params.eta[1] * params.eta[1];
    for (Index j = 0; j < p; ++j) {
        double w1 = params.kappa[j] * params.tau(j, 0);
        imp(j, j) = eta1_sq * w1 * w1;
    }
    if (params.order() >= 2) {
        double eta2_sq = params.eta[2] * params.eta[2];
        for (Index j = 0; j < p; ++j) {
            double wj = params.kappa[j] * params.tau(j, 1);
            for (Index k = j + 1; k < p; ++k) {
                double wk = params.kappa[k] * params.tau(k, 1);
                imp(j, k) = imp(k, j) = eta2_sq * wj * wj * wk * wk;
            }
        }
    }
    return imp;
}

HeterogeneityReport heterogeneity_report(const GroupKernelParams& params,
                                         const GroupDesign& design,
                                         const std::vector<std::vector<std::string>>& names) {
    params.validate(design.pg());
    const int order = params.order();
    HeterogeneityReport out;
    out.global_shares = params.eta.array().square();

    // Column labels follow the block layout: level-k columns enumerate the
    // joint (level-1..k) combination indices.
    for (std::size_t level = 0; level < design.offsets.size(); ++level) {
        for (Index c = 0; c < design.widths[level]; ++c) {
            Index column = design.offsets[level] + c;
            HeterogeneityRow row;
            row.label = "level" + std::to_string(level + 1) + ":combo" + std::to_string(c);
            if (level == 0 && static_cast<int>(names.size()) > 0 &&
                static_cast<Index>(names[0].size()) > c)
                row.label = "level1:" + names[0][c];
            row.kappa_g = params.kappa[column];
            row.per_order.resize(order);
            for (int q = 1; q <= order; ++q) {
                double w = params.kappa[column] * params.tau(column, q - 1);
                row.per_order[q - 1] = params.eta[q] * params.eta[q] * w * w;
            }
            out.rows.push_back(std::move(row));
        }
    }
    return out;
}

std::vector<Index> heatmap_order(const Eigen::MatrixXi& group_labels) {
    std::vector<Index> order(group_labels.rows());
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        for (Index level = 0; level < group_labels.cols(); ++level) {
            if (group_labels(a, level) != group_labels(b, level))
                return group_labels(a, level) < group_labels(b, level);
        }
        return a < b;
    });
    return order;
}

}  // namespace harness

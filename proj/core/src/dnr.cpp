#include "harness/dnr.hpp"

#include <cmath>
#include <string>

#include "harness/errors.hpp"
#include "harness/random.hpp"

namespace harness {

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& M, const std::vector<Index>& rows) {
    Eigen::MatrixXd out(rows.size(), M.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(r) = M.row(rows[r]);
    return out;
}

// Sums vectors[lo, hi) pairwise in index order.
Eigen::VectorXd pairwise_sum(const std::vector<Eigen::VectorXd>& vectors, std::size_t lo,
                             std::size_t hi) {
    if (hi - lo == 1) return vectors[lo];
    std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(vectors, lo, mid) + pairwise_sum(vectors, mid, hi);
}

}  // namespace

std::vector<std::vector<Index>> partition_subsets(Index n, int subsets, std::uint64_t seed) {
    if (subsets < 1 || static_cast<Index>(subsets) > n)
        throw ConfigError("subset count must lie in [1, n]");
    RandomStream rng(seed, /*stream=*/31);
    std::vector<std::size_t> order = shuffled_indices(static_cast<std::size_t>(n), rng);
    std::vector<std::vector<Index>> parts(subsets);
    Index base = n / subsets, extra = n % subsets;
    std::size_t at = 0;
    for (int d = 0; d < subsets; ++d) {
        Index size = base + (d < extra ? 1 : 0);
        for (Index i = 0; i < size; ++i) parts[d].push_back(static_cast<Index>(order[at++]));
    }
    return parts;
}

Eigen::VectorXd dnr_predict(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                            const Eigen::VectorXd& y, const Eigen::MatrixXd& Xtest,
                            const Eigen::MatrixXd& Ztest, const KernelParams& params,
                            const GroupKernelParams& gparams, const KernelConfig& kernel_config,
                            const DnrConfig& config) {
    const Index n = X.rows();
    if (Z.rows() != n || y.size() != n)
        throw ShapeError("training inputs disagree on sample count");
    if (Xtest.rows() != Ztest.rows())
        throw ShapeError("test inputs disagree on sample count");

    int subsets = config.subsets > 0
                      ? config.subsets
                      : static_cast<int>((n + 999) / 1000);
    auto parts = partition_subsets(n, subsets, config.seed);

    std::vector<Eigen::VectorXd> local(parts.size());
    for (std::size_t d = 0; d < parts.size(); ++d) {
        if (parts[d].size() < 2)
            throw ConfigError("subset " + std::to_string(d) +
                              " has fewer than 2 samples; lower the subset count");
        Eigen::MatrixXd Xd = take_rows(X, parts[d]), Zd = take_rows(Z, parts[d]);
        Eigen::VectorXd yd(parts[d].size());
        for (std::size_t r = 0; r < parts[d].size(); ++r) yd[r] = y[parts[d][r]];
        try {
            GramMatrix K = kernel_matrix(Xd, Zd, params, gparams, kernel_config.kinds,
                                         kernel_config.jitter);
            FittedLocalModel model = fit_klr(K, yd, config.solver);
            GramMatrix kstar =
                kernel_matrix(Xtest, Ztest, Xd, Zd, params, gparams, kernel_config.kinds);
            local[d] = predict_out_of_sample(model, kstar.K);
        } catch (const Error& err) {
            throw NumericError("subset " + std::to_string(d) + " failed: " + err.what());
        }
    }
    return pairwise_sum(local, 0, local.size()) / static_cast<double>(local.size());
}

}  // namespace harness

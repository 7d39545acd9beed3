#include "harness/simgen.hpp"

#include <cmath>
#include <string>

#include "harness/errors.hpp"
#include "harness/klr.hpp"
#include "harness/random.hpp"

namespace harness {

std::vector<std::pair<int, int>> interaction_set(int id) {
    switch (id) {
        case 1:
            // All 15 pairs among the first 6 covariates.
            return {{1, 2}, {1, 3}, {1, 4}, {1, 5}, {1, 6}, {2, 3}, {2, 4}, {2, 5},
                    {2, 6}, {3, 4}, {3, 5}, {3, 6}, {4, 5}, {4, 6}, {5, 6}};
        case 2:
            return {{1, 2}, {1, 3}, {1, 4}, {1, 5}, {1, 6}, {1, 7}, {1, 8}, {1, 9},
                    {1, 10}, {2, 3}, {2, 4}, {2, 5}, {2, 6}, {2, 7}, {2, 8}};
        case 3: {
            std::vector<std::pair<int, int>> s;
            for (int j = 2; j <= 16; ++j) s.emplace_back(1, j);
            return s;
        }
        case 4:
            return {};
        default:
            throw ConfigError("unknown simulation setting " + std::to_string(id));
    }
}

SimSetting SimSetting::get(int id) {
    SimSetting s;
    s.id = id;
    s.interactions = interaction_set(id);
    s.nonlinear_blocks = id != 4;
    s.equalize_variance = id != 4;
    return s;
}

void SimConfig::validate() const {
    if (groups < 1 || years < 1) throw ConfigError("groups and years must be positive");
    if (p < 20) throw ConfigError("simulation needs at least 20 covariates");
    if (n < 1) throw ConfigError("n must be positive");
    Index cell = static_cast<Index>(groups) * years;
    if (n % cell != 0)
        throw ConfigError("n must be divisible by groups*years for balanced cells");
    if (base_variance < 0 || group_variance < 0 || year_variance < 0)
        throw ConfigError("variances must be non-negative");
}

namespace {

// Base draw means for the four blocks: linear 1, sinusoidal 5, quadratic 1,
// interaction 1.
Eigen::VectorXd draw_block(RandomStream& rng, int size, double mean, double variance) {
    Eigen::VectorXd v(size);
    double sd = std::sqrt(variance);
    for (int i = 0; i < size; ++i) v[i] = rng.normal(mean, sd);
    return v;
}

Eigen::MatrixXd disperse(RandomStream& rng, const Eigen::MatrixXd& center, int copies,
                         double variance) {
    // Each row of `center` spawns `copies` rows centered at it.
    Eigen::MatrixXd out(center.rows() * copies, center.cols());
    double sd = std::sqrt(variance);
    for (Index r = 0; r < center.rows(); ++r)
        for (int c = 0; c < copies; ++c)
            for (Index j = 0; j < center.cols(); ++j)
                out(r * copies + c, j) = rng.normal(center(r, j), sd);
    return out;
}

}  // namespace

SimCoefficients draw_coefficients(const SimConfig& config, const SimSetting& setting) {
    config.validate();
    RandomStream rng(config.seed, /*stream=*/41);
    SimCoefficients co;
    co.alpha = draw_block(rng, 6, 1.0, config.base_variance);
    co.beta = draw_block(rng, 7, 5.0, config.base_variance);
    co.gamma = draw_block(rng, 7, 1.0, config.base_variance);
    co.zeta = draw_block(rng, static_cast<int>(setting.interactions.size()), 1.0,
                         config.base_variance);

    co.alpha_g = disperse(rng, co.alpha.transpose(), config.groups, config.group_variance);
    co.beta_g = disperse(rng, co.beta.transpose(), config.groups, config.group_variance);
    co.gamma_g = disperse(rng, co.gamma.transpose(), config.groups, config.group_variance);
    co.zeta_g = disperse(rng, co.zeta.transpose(), config.groups, config.group_variance);

    co.alpha_gt = disperse(rng, co.alpha_g, config.years, config.year_variance);
    co.beta_gt = disperse(rng, co.beta_g, config.years, config.year_variance);
    co.gamma_gt = disperse(rng, co.gamma_g, config.years, config.year_variance);
    co.zeta_gt = disperse(rng, co.zeta_g, config.years, config.year_variance);
    return co;
}

namespace {

Eigen::Vector3d block_values(const SimCoefficients& co, const SimSetting& setting, int cell,
                             const Eigen::VectorXd& x) {
    double linear = 0.0;
    for (int j = 0; j < 6; ++j) linear += co.alpha_gt(cell, j) * x[j];
    double nonlinear = 0.0;
    if (setting.nonlinear_blocks) {
        for (int k = 0; k < 7; ++k) nonlinear += std::sin(co.beta_gt(cell, k) * x[6 + k]);
        for (int l = 0; l < 7; ++l) nonlinear += co.gamma_gt(cell, l) * x[13 + l] * x[13 + l];
    }
    double interaction = 0.0;
    for (std::size_t r = 0; r < setting.interactions.size(); ++r)
        interaction += co.zeta_gt(cell, static_cast<int>(r)) *
                       x[setting.interactions[r].first - 1] *
                       x[setting.interactions[r].second - 1];
    return {linear, nonlinear, interaction};
}

}  // namespace

SimulatedData generate_dataset(const SimConfig& config, const SimSetting& setting) {
    config.validate();
    const Index n = config.n;
    const Index cell_size = n / (static_cast<Index>(config.groups) * config.years);

    SimulatedData out;
    out.coefficients = draw_coefficients(config, setting);

    RandomStream xrng(config.seed, /*stream=*/42);
    out.dataset.X.resize(n, config.p);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < config.p; ++j) out.dataset.X(i, j) = xrng.uniform(-1.0, 1.0);

    // Deterministic balanced layout: group-major, then year, then cell index.
    out.dataset.group_labels.resize(n, 1);
    out.dataset.year.resize(n);
    out.block_latent.resize(n, 3);
    for (Index i = 0; i < n; ++i) {
        int g = static_cast<int>(i / (n / config.groups));
        Index within = i % (n / config.groups);
        int t = static_cast<int>(within / cell_size);
        out.dataset.group_labels(i, 0) = g;
        out.dataset.year[i] = t + 1;
        int cell = g * config.years + t;
        out.block_latent.row(i) =
            block_values(out.coefficients, setting, cell, out.dataset.X.row(i)).transpose();
    }

    out.block_scales = Eigen::Vector3d::Ones();
    if (setting.equalize_variance) {
        // Rescale blocks so their empirical variances match their mean.
        Eigen::Vector3d variances;
        for (int b = 0; b < 3; ++b) {
            Eigen::ArrayXd col = out.block_latent.col(b).array();
            variances[b] = (col - col.mean()).square().sum() / static_cast<double>(n);
        }
        double target = variances.mean();
        for (int b = 0; b < 3; ++b)
            out.block_scales[b] = variances[b] > 0.0 ? std::sqrt(target / variances[b]) : 1.0;
        out.block_latent = out.block_latent * out.block_scales.asDiagonal();
    }
    out.latent = out.block_latent.rowwise().sum();

    RandomStream yrng(config.seed, /*stream=*/43);
    out.dataset.y.resize(n);
    for (Index i = 0; i < n; ++i)
        out.dataset.y[i] = yrng.next_unit() < sigmoid(out.latent[i]) ? 1.0 : -1.0;

    out.dataset.covariate_names.reserve(config.p);
    for (Index j = 0; j < config.p; ++j)
        out.dataset.covariate_names.push_back("x" + std::to_string(j + 1));
    out.dataset.group_names = {{}};
    for (int g = 0; g < config.groups; ++g)
        out.dataset.group_names[0].push_back(std::to_string(g + 1));
    return out;
}

double latent_value(const SimCoefficients& coefficients, const SimSetting& setting,
                    const Eigen::Vector3d& block_scales, int group, int year_index, int years,
                    const Eigen::VectorXd& x) {
    int cell = group * years + year_index;
    return block_values(coefficients, setting, cell, x).dot(block_scales);
}

}  // namespace harness

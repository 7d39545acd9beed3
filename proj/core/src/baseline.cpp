#include "harness/baseline.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

#include "harness/errors.hpp"
#include "harness/klr.hpp"
#include "harness/metrics.hpp"
#include "harness/random.hpp"

namespace harness {

Eigen::MatrixXd baseline_design(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z) {
    if (X.rows() != Z.rows()) throw ShapeError("X and Z disagree on sample count");
    const Index n = X.rows(), p = X.cols(), pg = Z.cols();
    Eigen::MatrixXd D(n, p + pg + p * pg);
    D.leftCols(p) = X;
    D.middleCols(p, pg) = Z;
    for (Index g = 0; g < pg; ++g)
        D.middleCols(p + pg + g * p, p) = X.array().colwise() * Z.col(g).array();
    return D;
}

namespace {

double negative_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& margin) {
    double nll = 0.0;
    for (Index i = 0; i < y.size(); ++i) nll -= log_sigmoid(y[i] * margin[i]);
    return nll;
}

LinearBaselineModel fit_l2(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                           double strength, int max_iterations, double tolerance) {
    const Index n = A.rows(), d = A.cols();
    Eigen::VectorXd penalty = Eigen::VectorXd::Constant(d, strength);
    penalty[0] = 0.0;

    auto objective = [&](const Eigen::VectorXd& w, const Eigen::VectorXd& margin) {
        return -negative_loglik(y, margin) - 0.5 * w.dot(penalty.asDiagonal() * w);
    };

    LinearBaselineModel model;
    model.strength = strength;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd margin = Eigen::VectorXd::Zero(n);
    double obj = objective(w, margin);

    for (int iter = 0; iter < max_iterations; ++iter) {
        Eigen::VectorXd prob(n), curvature(n), pointwise(n);
        for (Index i = 0; i < n; ++i) {
            prob[i] = sigmoid(margin[i]);
            pointwise[i] = (y[i] + 1.0) / 2.0 - prob[i];
            curvature[i] = prob[i] * (1.0 - prob[i]);
        }
        Eigen::VectorXd grad = A.transpose() * pointwise - penalty.asDiagonal() * w;
        model.iterations = iter;
        if (grad.lpNorm<Eigen::Infinity>() <= tolerance) {
            model.converged = true;
            break;
        }
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(d, d);
        H.selfadjointView<Eigen::Lower>().rankUpdate(
            (A.array().colwise() * curvature.array().sqrt()).matrix().transpose());
        H.diagonal() += penalty;
        H.diagonal().array() += 1e-12;  // guards flat curvature at saturated fits
        Eigen::VectorXd delta = H.selfadjointView<Eigen::Lower>().llt().solve(grad);

        double step = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 50; ++bt) {
            Eigen::VectorXd w_try = w + step * delta;
            Eigen::VectorXd margin_try = A * w_try;
            double obj_try = objective(w_try, margin_try);
            if (obj_try >= obj) {
                w = std::move(w_try);
                margin = std::move(margin_try);
                obj = obj_try;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        model.iterations = iter + 1;
    }
    model.weights = w;
    return model;
}

// Largest squared singular value of A by power iteration; the logistic
// loss gradient is (sigma_max^2 / 4)-Lipschitz.
double spectral_bound(const Eigen::MatrixXd& A) {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(A.cols()).normalized();
    double value = 1.0;
    for (int it = 0; it < 30; ++it) {
        Eigen::VectorXd next = A.transpose() * (A * v);
        value = next.norm();
        if (value == 0.0) return 1.0;
        v = next / value;
    }
    return value;
}

LinearBaselineModel fit_l1(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                           double strength, int max_iterations, double tolerance) {
    const Index n = A.rows(), d = A.cols();
    const double step = 4.0 / spectral_bound(A);

    auto soft = [&](Eigen::VectorXd w, double amount) {
        for (Index j = 1; j < d; ++j)  // intercept unpenalized
            w[j] = w[j] > amount ? w[j] - amount : (w[j] < -amount ? w[j] + amount : 0.0);
        return w;
    };

    LinearBaselineModel model;
    model.strength = strength;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d), accel = w, w_prev = w;
    double momentum = 1.0;
    for (int iter = 0; iter < max_iterations; ++iter) {
        Eigen::VectorXd margin = A * accel;
        Eigen::VectorXd pointwise(n);
        for (Index i = 0; i < n; ++i) pointwise[i] = sigmoid(margin[i]) - (y[i] + 1.0) / 2.0;
        Eigen::VectorXd grad = A.transpose() * pointwise;
        w_prev = w;
        w = soft(accel - step * grad, step * strength);
        double momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        accel = w + ((momentum - 1.0) / momentum_next) * (w - w_prev);
        momentum = momentum_next;
        model.iterations = iter + 1;
        if ((w - w_prev).lpNorm<Eigen::Infinity>() <=
            tolerance * (1.0 + w.lpNorm<Eigen::Infinity>())) {
            model.converged = true;
            break;
        }
    }
    model.weights = w;
    return model;
}

LinearBaselineModel fit_at(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                           const LinearBaselineConfig& config, double strength) {
    return config.penalty == LinearPenalty::l2
               ? fit_l2(A, y, strength, config.max_iterations, config.tolerance)
               : fit_l1(A, y, strength, config.max_iterations, config.tolerance);
}

}  // namespace

LinearBaselineModel fit_linear_baseline(const Eigen::MatrixXd& features,
                                        const Eigen::VectorXd& y,
                                        const LinearBaselineConfig& config,
                                        std::uint64_t seed) {
    const Index n = features.rows(), d = features.cols() + 1;
    if (y.size() != n) throw ShapeError("outcome length does not match feature rows");
    if (!(config.strength >= 0.0)) throw ConfigError("penalty strength must be non-negative");

    Eigen::MatrixXd A(n, d);
    A.col(0).setOnes();
    A.rightCols(d - 1) = features;

    double strength = config.strength;
    if (config.strength_grid.size() > 1) {
        // Pick the grid value by held-out log-likelihood, then refit on all rows.
        RandomStream rng(seed, /*stream=*/53);
        std::vector<std::size_t> order = shuffled_indices(static_cast<std::size_t>(n), rng);
        Index held = std::max<Index>(1, static_cast<Index>(config.validation_fraction * n));
        Index fit_rows = n - held;
        if (fit_rows < 1) throw ConfigError("validation fraction leaves no training rows");
        Eigen::MatrixXd Af(fit_rows, d), Av(held, d);
        Eigen::VectorXd yf(fit_rows), yv(held);
        for (Index r = 0; r < held; ++r) {
            Av.row(r) = A.row(order[r]);
            yv[r] = y[order[r]];
        }
        for (Index r = 0; r < fit_rows; ++r) {
            Af.row(r) = A.row(order[held + r]);
            yf[r] = y[order[held + r]];
        }
        // Rank candidates by held-out AUROC (the benchmark's metric); fall
        // back to log-likelihood when the validation rows are single-class.
        bool both_classes = (yv.array() > 0).any() && (yv.array() < 0).any();
        double best = -std::numeric_limits<double>::infinity();
        for (double candidate : config.strength_grid) {
            LinearBaselineModel trial = fit_at(Af, yf, config, candidate);
            Eigen::VectorXd scores = Av * trial.weights;
            double quality = both_classes ? auroc(scores, yv) : -negative_loglik(yv, scores);
            if (quality > best) {
                best = quality;
                strength = candidate;
            }
        }
    } else if (config.strength_grid.size() == 1) {
        strength = config.strength_grid.front();
    }

    LinearBaselineModel model = fit_at(A, y, config, strength);
    return model;
}

Eigen::VectorXd linear_baseline_score(const LinearBaselineModel& model,
                                      const Eigen::MatrixXd& features) {
    if (features.cols() + 1 != model.weights.size())
        throw ShapeError("feature count does not match the fitted weights");
    return (features * model.weights.tail(model.weights.size() - 1)).array() +
           model.weights[0];
}

}  // namespace harness

#include "harness/klr.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>

#include "harness/errors.hpp"

namespace harness {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

double log_sigmoid(double z) {
    if (z >= 0.0) return -std::log1p(std::exp(-z));
    return z - std::log1p(std::exp(z));
}

void SolverConfig::validate() const {
    if (max_iterations < 0) throw ConfigError("max_iterations must be non-negative");
    if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
    if (!(damping > 0.0 && damping < 1.0)) throw ConfigError("damping must lie in (0,1)");
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
}

namespace {

double objective(const Eigen::VectorXd& y, const Eigen::VectorXd& f,
                 const Eigen::VectorXd& dual, double lambda) {
    double loglik = 0.0;
    for (Index i = 0; i < y.size(); ++i) loglik += log_sigmoid(y[i] * f[i]);
    return loglik - lambda * f.dot(dual);
}

}  // namespace

FittedLocalModel fit_klr(const GramMatrix& gram, const Eigen::VectorXd& y,
                         const SolverConfig& config) {
    config.validate();
    const Eigen::MatrixXd& K = gram.K;
    const Index n = K.rows();
    if (K.cols() != n) throw ShapeError("training Gram matrix must be square");
    if (y.size() != n) throw ShapeError("outcome length does not match Gram size");
    if (!K.allFinite()) throw NumericError("Gram matrix has non-finite entries");

    const double lambda = config.lambda;
    FittedLocalModel model;
    model.lambda = lambda;
    model.f_hat = Eigen::VectorXd::Zero(n);
    model.dual = Eigen::VectorXd::Zero(n);

    Eigen::VectorXd f = model.f_hat, dual = model.dual;
    double psi = objective(y, f, dual, lambda);
    model.psi_trace.push_back(psi);

    // Full Newton target from f: f1 = (W + 2*lambda*K^-1)^-1 (W f + grad_ll),
    // dual1 = K^-1 f1, both via B = 2*lambda*I + R K R with R = sqrt(W),
    // so K itself is never inverted.
    auto newton_target = [&](const Eigen::VectorXd& at, Eigen::VectorXd& f1,
                             Eigen::VectorXd& dual1) {
        Eigen::VectorXd prob(n), grad_ll(n), w(n);
        for (Index i = 0; i < n; ++i) {
            prob[i] = sigmoid(at[i]);
            grad_ll[i] = (y[i] + 1.0) / 2.0 - prob[i];
            w[i] = prob[i] * (1.0 - prob[i]);
        }
        Eigen::VectorXd r = w.array().sqrt();
        Eigen::MatrixXd B = 2.0 * lambda * Eigen::MatrixXd::Identity(n, n);
        B.noalias() += r.asDiagonal() * K * r.asDiagonal();
        Eigen::LLT<Eigen::MatrixXd> llt(B);
        if (llt.info() != Eigen::Success)
            throw NumericError("conditioning error: Newton system not positive definite "
                               "at the given jitter");
        Eigen::VectorXd b = w.asDiagonal() * at + grad_ll;
        Eigen::VectorXd d = llt.solve(r.asDiagonal() * (K * b));
        dual1 = (b - r.asDiagonal() * d) / (2.0 * lambda);
        f1 = K * dual1;
    };
    auto grad_norm_at = [&](const Eigen::VectorXd& at, const Eigen::VectorXd& dual_at) {
        double worst = 0.0;
        for (Index i = 0; i < n; ++i)
            worst = std::max(worst, std::abs((y[i] + 1.0) / 2.0 - sigmoid(at[i]) -
                                             2.0 * lambda * dual_at[i]));
        return worst;
    };

    bool stalled = false;
    for (int iter = 0; iter < config.max_iterations; ++iter) {
        model.grad_norm = grad_norm_at(f, dual);
        model.iterations = iter;
        if (model.grad_norm <= config.tolerance) {
            model.converged = true;
            break;
        }
        Eigen::VectorXd f1, dual1;
        newton_target(f, f1, dual1);

        // Backtrack along the segment to the Newton target until the
        // objective stops decreasing. dual stays consistent because the
        // map f -> dual is linear along the segment.
        double step = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            Eigen::VectorXd f_try = f + step * (f1 - f);
            Eigen::VectorXd dual_try = dual + step * (dual1 - dual);
            double psi_try = objective(y, f_try, dual_try, lambda);
            if (psi_try >= psi) {
                f = std::move(f_try);
                dual = std::move(dual_try);
                psi = psi_try;
                accepted = true;
                break;
            }
            step *= config.damping;
        }
        if (!accepted) {
            stalled = true;  // Psi is flat at floating-point precision
            break;
        }
        model.psi_trace.push_back(psi);
        model.f_hat = f;
        model.dual = dual;
        model.iterations = iter + 1;
    }
    model.f_hat = f;
    model.dual = dual;

    if (!model.converged && (stalled || model.iterations >= config.max_iterations)) {
        // Quadratic-convergence polish: near the mode the objective can no
        // longer discriminate iterates, but pure Newton steps still shrink
        // the gradient to machine precision and pin the returned mode to a
        // stable fixed point. Keeps the best iterate by gradient norm.
        double best = grad_norm_at(f, dual);
        for (int polish = 0; polish < 6 && best > config.tolerance; ++polish) {
            Eigen::VectorXd f1, dual1;
            newton_target(f, f1, dual1);
            f = std::move(f1);
            dual = std::move(dual1);
            double norm = grad_norm_at(f, dual);
            if (norm < best) {
                best = norm;
                model.f_hat = f;
                model.dual = dual;
            }
        }
    }
    model.grad_norm = grad_norm_at(model.f_hat, model.dual);
    model.converged = model.grad_norm <= config.tolerance;
    return model;
}

Eigen::VectorXd predict_out_of_sample(const FittedLocalModel& model,
                                      const Eigen::MatrixXd& k_star) {
    if (k_star.cols() != model.dual.size())
        throw ShapeError("cross-Gram has " + std::to_string(k_star.cols()) +
                         " columns, model has " + std::to_string(model.dual.size()) +
                         " training points");
    return k_star * model.dual;
}

}  // namespace harness

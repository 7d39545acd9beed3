#include "harness/hyperopt.hpp"

#include <Eigen/Cholesky>
#include <chrono>
#include <cmath>
#include <string>

#include "harness/errors.hpp"
#include "harness/random.hpp"

namespace harness {

namespace {

Eigen::VectorXd rectify(const Eigen::VectorXd& u) { return u.cwiseMax(0.0); }

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& M, const std::vector<Index>& rows) {
    Eigen::MatrixXd out(rows.size(), M.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] < 0 || rows[r] >= M.rows()) throw ShapeError("draw index out of range");
        out.row(r) = M.row(rows[r]);
    }
    return out;
}

Eigen::VectorXd take(const Eigen::VectorXd& v, const std::vector<Index>& rows) {
    Eigen::VectorXd out(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) out[r] = v[rows[r]];
    return out;
}

void check_draw(const Draw& draw, Index n) {
    if (draw.holdout.empty()) throw ConfigError("draw has an empty holdout set");
    if (draw.batch.empty()) throw ConfigError("draw has an empty batch");
    std::vector<char> seen(n, 0);
    for (Index i : draw.batch) {
        if (i < 0 || i >= n) throw ShapeError("batch index out of range");
        seen[i] = 1;
    }
    for (Index i : draw.holdout) {
        if (i < 0 || i >= n) throw ShapeError("holdout index out of range");
        if (seen[i]) throw ConfigError("draw batch and holdout overlap at index " +
                                       std::to_string(i));
    }
}

}  // namespace

KernelParams UnconstrainedParams::params() const {
    return {rectify(u_kappa), u_tau.cwiseMax(0.0), u_eta};
}

GroupKernelParams UnconstrainedParams::group_params() const {
    return {rectify(u_kappa_g), u_tau_g.cwiseMax(0.0), u_eta_g};
}

Index UnconstrainedParams::size() const {
    return u_kappa.size() + u_tau.size() + u_eta.size() + u_kappa_g.size() + u_tau_g.size() +
           u_eta_g.size();
}

Eigen::VectorXd UnconstrainedParams::flatten() const {
    Eigen::VectorXd v(size());
    Index at = 0;
    auto put = [&](const auto& block) {
        v.segment(at, block.size()) = block.reshaped();
        at += block.size();
    };
    put(u_kappa);
    put(u_tau);
    put(u_eta);
    put(u_kappa_g);
    put(u_tau_g);
    put(u_eta_g);
    return v;
}

UnconstrainedParams UnconstrainedParams::from_flat(const Eigen::VectorXd& v, Index p, int order,
                                                   Index pg, int group_order) {
    UnconstrainedParams u;
    Index at = 0;
    auto grab = [&](Index rows, Index cols) {
        Eigen::MatrixXd block = v.segment(at, rows * cols).reshaped(rows, cols);
        at += rows * cols;
        return block;
    };
    u.u_kappa = grab(p, 1);
    u.u_tau = grab(p, order);
    u.u_eta = grab(order + 1, 1);
    u.u_kappa_g = grab(pg, 1);
    u.u_tau_g = grab(pg, group_order);
    u.u_eta_g = grab(group_order + 1, 1);
    if (at != v.size()) throw ShapeError("flattened parameter vector has wrong length");
    return u;
}

UnconstrainedParams UnconstrainedParams::init_default(Index p, int order, Index pg,
                                                      int group_order) {
    UnconstrainedParams u;
    u.u_kappa = Eigen::VectorXd::Constant(p, 0.5);
    u.u_tau = Eigen::MatrixXd::Constant(p, order, 0.5);
    u.u_eta = Eigen::VectorXd::Constant(order + 1, 0.5);
    u.u_eta[0] = 1.0;
    if (order >= 1) u.u_eta[1] = 1.0;
    u.u_kappa_g = Eigen::VectorXd::Constant(pg, 0.5);
    u.u_tau_g = Eigen::MatrixXd::Constant(pg, group_order, 0.5);
    u.u_eta_g = Eigen::VectorXd::Constant(group_order + 1, 0.5);
    u.u_eta_g[0] = 1.0;
    if (group_order >= 1) u.u_eta_g[1] = 1.0;
    return u;
}

void OptimizerConfig::validate() const {
    if (iterations < 0) throw ConfigError("iterations must be non-negative");
    if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
    if (holdout_size < 0) throw ConfigError("holdout_size must be non-negative");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (unrolled_steps < 1) throw ConfigError("unrolled_steps must be positive");
    if (!(fd_step > 0.0)) throw ConfigError("fd_step must be positive");
}

double holdout_nll(const Eigen::VectorXd& scores, const Eigen::VectorXd& y) {
    if (scores.size() != y.size()) throw ShapeError("scores and outcomes differ in length");
    double loss = 0.0;
    for (Index i = 0; i < scores.size(); ++i) loss -= log_sigmoid(y[i] * scores[i]);
    return loss;
}

double cv_loss_single_draw(const KernelParams& params, const GroupKernelParams& gparams,
                           const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                           const Eigen::VectorXd& y, const Draw& draw,
                           const KernelConfig& kernel_config, const SolverConfig& solver) {
    check_draw(draw, X.rows());
    Eigen::MatrixXd Xb = take_rows(X, draw.batch), Zb = take_rows(Z, draw.batch);
    Eigen::MatrixXd Xh = take_rows(X, draw.holdout), Zh = take_rows(Z, draw.holdout);
    Eigen::VectorXd yb = take(y, draw.batch), yh = take(y, draw.holdout);

    GramMatrix K = kernel_matrix(Xb, Zb, params, gparams, kernel_config.kinds,
                                 kernel_config.jitter);
    FittedLocalModel model;
    try {
        model = fit_klr(K, yb, solver);
    } catch (const NumericError& err) {
        throw NumericError("draw " + std::to_string(draw.id) + ": " + err.what());
    }
    GramMatrix kstar = kernel_matrix(Xh, Zh, Xb, Zb, params, gparams, kernel_config.kinds);
    return holdout_nll(predict_out_of_sample(model, kstar.K), yh);
}

// ---------------------------------------------------------------------------
// Unrolled-Newton gradient engine.
//
// The loss is viewed as a function of the two kernel matrices (training Gram
// K and holdout cross-Gram k*): S plain Newton steps produce the dual
// weights, predictions are k* times the dual, and the holdout NLL closes the
// graph. A reverse pass yields dL/dK and dL/dk*, which are then contracted
// with the analytic parameter derivatives of each kernel entry.

namespace {

struct NewtonRecord {
    Eigen::VectorXd f, prob, w, u, bvec, r, c, d, alpha;
    Eigen::LLT<Eigen::MatrixXd> llt;
};

struct KernelAdjoints {
    double loss = 0.0;
    Eigen::MatrixXd Kbar;      // dL/dK, training Gram
    Eigen::MatrixXd kstarbar;  // dL/dk*, holdout cross-Gram
};

// Forward: S Newton steps for max_f log p(y|f) - lambda f'K^-1 f from f = 0,
// then holdout NLL of k* alpha. Reverse: exact adjoints of both matrices.
KernelAdjoints unrolled_newton_adjoints(const Eigen::MatrixXd& K, const Eigen::MatrixXd& kstar,
                                        const Eigen::VectorXd& yb, const Eigen::VectorXd& yh,
                                        double lambda, int steps) {
    const Index n = K.rows();
    const double two_lambda = 2.0 * lambda;
    std::vector<NewtonRecord> tape(steps);

    Eigen::VectorXd ybar01 = (yb.array() + 1.0) / 2.0;
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    for (int s = 0; s < steps; ++s) {
        NewtonRecord& rec = tape[s];
        rec.f = f;
        rec.prob = f.unaryExpr([](double v) { return sigmoid(v); });
        rec.w = rec.prob.array() * (1.0 - rec.prob.array());
        rec.u = ybar01 - rec.prob;
        rec.bvec = rec.w.asDiagonal() * rec.f + rec.u;
        rec.r = rec.w.array().sqrt();
        Eigen::MatrixXd B = two_lambda * Eigen::MatrixXd::Identity(n, n);
        B.noalias() += rec.r.asDiagonal() * K * rec.r.asDiagonal();
        rec.llt.compute(B);
        if (rec.llt.info() != Eigen::Success)
            throw NumericError("unrolled Newton system not positive definite");
        rec.c = K * rec.bvec;
        rec.d = rec.llt.solve(rec.r.asDiagonal() * rec.c);
        rec.alpha = (rec.bvec - rec.r.asDiagonal() * rec.d) / two_lambda;
        f = K * rec.alpha;
        alpha = rec.alpha;
    }

    Eigen::VectorXd scores = kstar * alpha;
    KernelAdjoints out;
    for (Index i = 0; i < yh.size(); ++i) out.loss -= log_sigmoid(yh[i] * scores[i]);

    // d(loss)/d(scores), then adjoints into the last alpha and k*.
    Eigen::VectorXd sbar(yh.size());
    for (Index i = 0; i < yh.size(); ++i) sbar[i] = -yh[i] * sigmoid(-yh[i] * scores[i]);
    out.kstarbar = sbar * alpha.transpose();
    Eigen::VectorXd alpha_bar = kstar.transpose() * sbar;
    Eigen::VectorXd f_bar = Eigen::VectorXd::Zero(n);
    out.Kbar = Eigen::MatrixXd::Zero(n, n);

    for (int s = steps - 1; s >= 0; --s) {
        const NewtonRecord& rec = tape[s];
        // f_next = K alpha  (alpha_bar already holds the adjoint of rec.alpha)
        if (s < steps - 1) {
            out.Kbar.noalias() += f_bar * rec.alpha.transpose();
            alpha_bar = K * f_bar;
        }
        // alpha = (bvec - r.*d) / (2 lambda)
        Eigen::VectorXd bvec_bar = alpha_bar / two_lambda;
        Eigen::VectorXd d_bar = -(rec.r.array() * alpha_bar.array()).matrix() / two_lambda;
        Eigen::VectorXd r_bar = -(rec.d.array() * alpha_bar.array()).matrix() / two_lambda;
        // d = B^-1 (r.*c) with B = 2 lambda I + R K R
        Eigen::VectorXd t = rec.llt.solve(d_bar);
        Eigen::VectorXd c_bar = (rec.r.array() * t.array()).matrix();
        r_bar.array() += rec.c.array() * t.array();
        Eigen::VectorXd rd = (rec.r.array() * rec.d.array()).matrix();
        Eigen::VectorXd rt = (rec.r.array() * t.array()).matrix();
        out.Kbar.noalias() -= rt * rd.transpose();
        r_bar.array() -= t.array() * (K * rd).array() + rec.d.array() * (K * rt).array();
        // c = K bvec
        out.Kbar.noalias() += c_bar * rec.bvec.transpose();
        bvec_bar.noalias() += K * c_bar;
        // bvec = w.*f + u
        Eigen::VectorXd w_bar = (rec.f.array() * bvec_bar.array()).matrix();
        f_bar = (rec.w.array() * bvec_bar.array()).matrix();
        Eigen::VectorXd u_bar = bvec_bar;
        // r = sqrt(w)
        for (Index i = 0; i < n; ++i)
            w_bar[i] += rec.r[i] > 1e-150 ? r_bar[i] / (2.0 * rec.r[i]) : 0.0;
        // u = ybar01 - prob ; w = prob.*(1-prob)
        Eigen::VectorXd prob_bar = -u_bar;
        prob_bar.array() += (1.0 - 2.0 * rec.prob.array()) * w_bar.array();
        // prob = sigmoid(f)
        f_bar.array() += rec.w.array() * prob_bar.array();
    }
    return out;
}

// Analytic derivatives of a kernel factor sum_q eta_q^2 e_q(w^(q)) with
// w_l = (kappa_l tau_{l,q})^2 k_l, contracted against the per-pair weights
// Mbar(i,j) * other(i,j). Uses d e_q / d w_l = e_{q-1}(w without l) obtained
// by down-dating the full elementary symmetric values.
struct FactorGradients {
    Eigen::VectorXd kappa;
    Eigen::MatrixXd tau;
    Eigen::VectorXd eta;
};

// Newton-Girard: e_s from power sums ps[1..q].
void elementary_from_power_sums(const double* ps, int q, double* e) {
    e[0] = 1.0;
    for (int s = 1; s <= q; ++s) {
        double acc = 0.0;
        double sign = 1.0;
        for (int t = 1; t <= s; ++t) {
            acc += sign * ps[t] * e[s - t];
            sign = -sign;
        }
        e[s] = acc / s;
    }
}

// Vectorized contraction for the production order Q = 2: every per-pair sum
// reduces to quadratic forms in the feature matrices, so the work is a few
// GEMMs instead of a scalar sweep over all pairs.
void contract_factor_order2(const Eigen::ArrayXXd& weight, const Eigen::MatrixXd& s1_order2,
                            const Eigen::MatrixXd& lhs_prim, const Eigen::MatrixXd& lhs_sec,
                            const Eigen::MatrixXd& rhs_prim, const Eigen::MatrixXd& rhs_sec,
                            bool has_sec, const Eigen::VectorXd& kappa,
                            const Eigen::MatrixXd& tau, const Eigen::VectorXd& eta,
                            FactorGradients& grad) {
    const Index p = kappa.size();
    Eigen::MatrixXd M0 = weight.matrix();
    Eigen::MatrixXd M1 = (weight * s1_order2.array()).matrix();

    // T0_l = sum_ij M0_ij k_l(ij), T1_l likewise with M1,
    // T2_l = sum_ij M0_ij k_l(ij)^2.
    auto quad = [&](const Eigen::MatrixXd& M, const Eigen::MatrixXd& L,
                    const Eigen::MatrixXd& R) -> Eigen::VectorXd {
        return ((M * R).cwiseProduct(L)).colwise().sum().transpose();
    };
    Eigen::VectorXd T0 = quad(M0, lhs_prim, rhs_prim);
    Eigen::VectorXd T1 = quad(M1, lhs_prim, rhs_prim);
    Eigen::VectorXd T2 = quad(M0, lhs_prim.cwiseProduct(lhs_prim),
                              rhs_prim.cwiseProduct(rhs_prim));
    if (has_sec) {
        T0 += quad(M0, lhs_sec, rhs_sec);
        T1 += quad(M1, lhs_sec, rhs_sec);
        T2 += 2.0 * quad(M0, lhs_prim.cwiseProduct(lhs_sec), rhs_prim.cwiseProduct(rhs_sec));
        T2 += quad(M0, lhs_sec.cwiseProduct(lhs_sec), rhs_sec.cwiseProduct(rhs_sec));
    }

    Eigen::ArrayXd kap = kappa.array();
    Eigen::ArrayXd tau1 = tau.col(0).array(), tau2 = tau.col(1).array();
    double eta1_sq = eta[1] * eta[1], eta2_sq = eta[2] * eta[2];
    Eigen::ArrayXd c2 = (kap * tau2).square();
    // d e_2 / d w_l = s1 - w_l, so the order-2 factor contracts to T1 - c2*T2.
    Eigen::ArrayXd second = eta2_sq * (T1.array() - c2 * T2.array());
    grad.kappa.array() += 2.0 * kap * (tau1.square() * eta1_sq * T0.array() +
                                       tau2.square() * second);
    grad.tau.col(0).array() += 2.0 * tau1 * kap.square() * eta1_sq * T0.array();
    grad.tau.col(1).array() += 2.0 * tau2 * kap.square() * second;
    (void)p;
}

void contract_factor(const Eigen::MatrixXd& Mbar, const Eigen::MatrixXd& other,
                     const KernelInternals& parts, bool base_side,
                     const Eigen::MatrixXd& lhs_prim, const Eigen::MatrixXd& lhs_sec,
                     const Eigen::MatrixXd& rhs_prim, const Eigen::MatrixXd& rhs_sec,
                     bool has_sec, const Eigen::VectorXd& kappa, const Eigen::MatrixXd& tau,
                     const Eigen::VectorXd& eta, FactorGradients& grad) {
    const int order = static_cast<int>(eta.size()) - 1;
    const Index p = kappa.size();
    const Index rows = Mbar.rows(), cols = Mbar.cols();
    const std::vector<Eigen::MatrixXd>& e_mats = base_side ? parts.base_e : parts.group_e;
    const std::vector<Eigen::MatrixXd>& s1_mats = base_side ? parts.base_s1 : parts.group_s1;

    Eigen::ArrayXXd weight = Mbar.array() * other.array();
    grad.eta[0] += 2.0 * eta[0] * weight.sum();
    for (int q = 1; q <= order; ++q)
        grad.eta[q] += 2.0 * eta[q] * (weight * e_mats[q - 1].array()).sum();

    if (order == 2) {
        contract_factor_order2(weight, s1_mats[1], lhs_prim, lhs_sec, rhs_prim, rhs_sec,
                               has_sec, kappa, tau, eta, grad);
        return;
    }

    std::vector<double> k(p), w(p), ps(order + 1), e(order + 1), eh(order + 1);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            double wt = weight(i, j);
            if (wt == 0.0) continue;
            for (Index l = 0; l < p; ++l) {
                k[l] = lhs_prim(i, l) * rhs_prim(j, l);
                if (has_sec) k[l] += lhs_sec(i, l) * rhs_sec(j, l);
            }
            for (int q = 1; q <= order; ++q) {
                double eta_sq = eta[q] * eta[q];
                if (eta_sq == 0.0) continue;
                for (int s = 1; s <= q; ++s) ps[s] = 0.0;
                for (Index l = 0; l < p; ++l) {
                    double c = kappa[l] * tau(l, q - 1);
                    w[l] = c * c * k[l];
                    double pw = w[l];
                    for (int s = 1; s <= q; ++s) {
                        ps[s] += pw;
                        pw *= w[l];
                    }
                }
                elementary_from_power_sums(ps.data(), q, e.data());
                for (Index l = 0; l < p; ++l) {
                    if (k[l] == 0.0 || kappa[l] == 0.0) continue;
                    eh[0] = 1.0;
                    for (int m = 1; m < q; ++m) eh[m] = e[m] - w[l] * eh[m - 1];
                    double dC_dw = eta_sq * eh[q - 1];
                    double tl = tau(l, q - 1);
                    grad.kappa[l] += wt * dC_dw * 2.0 * kappa[l] * tl * tl * k[l];
                    grad.tau(l, q - 1) += wt * dC_dw * 2.0 * tl * kappa[l] * kappa[l] * k[l];
                }
            }
        }
    }
}

UnconstrainedParams hypergradient_unrolled(const UnconstrainedParams& u,
                                           const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                                           const Eigen::VectorXd& y, const Draw& draw,
                                           const KernelConfig& kernel_config,
                                           const SolverConfig& solver, int steps,
                                           double* loss_out) {
    check_draw(draw, X.rows());
    KernelParams params = u.params();
    GroupKernelParams gparams = u.group_params();
    Eigen::MatrixXd Xb = take_rows(X, draw.batch), Zb = take_rows(Z, draw.batch);
    Eigen::MatrixXd Xh = take_rows(X, draw.holdout), Zh = take_rows(Z, draw.holdout);
    Eigen::VectorXd yb = take(y, draw.batch), yh = take(y, draw.holdout);

    KernelInternals train_parts, cross_parts;
    GramMatrix K = kernel_matrix_with_internals(Xb, Zb, Xb, Zb, params, gparams,
                                                kernel_config.kinds, kernel_config.jitter,
                                                /*self=*/true, &train_parts);
    GramMatrix kstar = kernel_matrix_with_internals(Xh, Zh, Xb, Zb, params, gparams,
                                                    kernel_config.kinds, 0.0,
                                                    /*self=*/false, &cross_parts);

    KernelAdjoints adj = unrolled_newton_adjoints(K.K, kstar.K, yb, yh, solver.lambda, steps);
    if (loss_out) *loss_out = adj.loss;

    PairFeatureMatrices fb = kernel_feature_matrices(Xb, kernel_config.kinds);
    PairFeatureMatrices fh = kernel_feature_matrices(Xh, kernel_config.kinds);
    Eigen::MatrixXd zero_b = Eigen::MatrixXd::Zero(Zb.rows(), Zb.cols());
    Eigen::MatrixXd zero_h = Eigen::MatrixXd::Zero(Zh.rows(), Zh.cols());

    FactorGradients base{Eigen::VectorXd::Zero(params.kappa.size()),
                         Eigen::MatrixXd::Zero(params.tau.rows(), params.tau.cols()),
                         Eigen::VectorXd::Zero(params.eta.size())};
    FactorGradients group{Eigen::VectorXd::Zero(gparams.kappa.size()),
                          Eigen::MatrixXd::Zero(gparams.tau.rows(), gparams.tau.cols()),
                          Eigen::VectorXd::Zero(gparams.eta.size())};

    contract_factor(adj.Kbar, train_parts.group, train_parts, /*base_side=*/true, fb.prim,
                    fb.sec, fb.prim, fb.sec, true, params.kappa, params.tau, params.eta,
                    base);
    contract_factor(adj.kstarbar, cross_parts.group, cross_parts, /*base_side=*/true, fh.prim,
                    fh.sec, fb.prim, fb.sec, true, params.kappa, params.tau, params.eta,
                    base);
    contract_factor(adj.Kbar, train_parts.base, train_parts, /*base_side=*/false, Zb, zero_b,
                    Zb, zero_b, false, gparams.kappa, gparams.tau, gparams.eta, group);
    contract_factor(adj.kstarbar, cross_parts.base, cross_parts, /*base_side=*/false, Zh,
                    zero_h, Zb, zero_b, false, gparams.kappa, gparams.tau, gparams.eta,
                    group);

    // Chain through the positivity map: flat (zero) wherever u <= 0.
    UnconstrainedParams g;
    g.u_kappa = (u.u_kappa.array() > 0.0).select(base.kappa.array(), 0.0).matrix();
    g.u_tau = (u.u_tau.array() > 0.0).select(base.tau.array(), 0.0).matrix();
    g.u_eta = base.eta;
    g.u_kappa_g = (u.u_kappa_g.array() > 0.0).select(group.kappa.array(), 0.0).matrix();
    g.u_tau_g = (u.u_tau_g.array() > 0.0).select(group.tau.array(), 0.0).matrix();
    g.u_eta_g = group.eta;
    return g;
}

UnconstrainedParams hypergradient_fd(const UnconstrainedParams& u, const Eigen::MatrixXd& X,
                                     const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                     const Draw& draw, const KernelConfig& kernel_config,
                                     const SolverConfig& solver, double h, double* loss_out) {
    const Index p = u.u_kappa.size(), pg = u.u_kappa_g.size();
    const int order = static_cast<int>(u.u_eta.size()) - 1;
    const int group_order = static_cast<int>(u.u_eta_g.size()) - 1;

    auto loss_at = [&](const Eigen::VectorXd& flat) {
        UnconstrainedParams cand =
            UnconstrainedParams::from_flat(flat, p, order, pg, group_order);
        return cv_loss_single_draw(cand.params(), cand.group_params(), X, Z, y, draw,
                                   kernel_config, solver);
    };

    Eigen::VectorXd flat = u.flatten();
    Eigen::VectorXd grad(flat.size());
    for (Index i = 0; i < flat.size(); ++i) {
        Eigen::VectorXd probe = flat;
        probe[i] = flat[i] + h;
        double up = loss_at(probe);
        probe[i] = flat[i] - h;
        double down = loss_at(probe);
        if (!std::isfinite(up) || !std::isfinite(down))
            throw NumericError("gradient error: non-finite loss at coordinate " +
                               std::to_string(i));
        grad[i] = (up - down) / (2.0 * h);
    }
    if (loss_out) *loss_out = loss_at(flat);
    return UnconstrainedParams::from_flat(grad, p, order, pg, group_order);
}

}  // namespace

UnconstrainedParams hypergradient(const UnconstrainedParams& u, const Eigen::MatrixXd& X,
                                  const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                  const Draw& draw, const KernelConfig& kernel_config,
                                  const SolverConfig& solver, GradientMethod method,
                                  int unrolled_steps, double fd_step, double* loss_out) {
    if (method == GradientMethod::finite_difference)
        return hypergradient_fd(u, X, Z, y, draw, kernel_config, solver, fd_step, loss_out);
    return hypergradient_unrolled(u, X, Z, y, draw, kernel_config, solver, unrolled_steps,
                                  loss_out);
}

TrainTrace train_sgd(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                     const Eigen::VectorXd& y, const KernelConfig& kernel_config,
                     const SolverConfig& solver, const OptimizerConfig& optimizer) {
    optimizer.validate();
    solver.validate();
    const Index n = X.rows();
    if (Z.rows() != n || y.size() != n)
        throw ShapeError("covariates, group design and outcomes disagree on sample count");

    Index m = optimizer.holdout_size > 0 ? optimizer.holdout_size : std::max<Index>(1, n / 5);
    m = std::min<Index>(m, n - optimizer.batch_size);  // keep b <= n - m
    if (m < 1 || optimizer.batch_size + m > n)
        throw ConfigError("dataset too small for the requested batch and holdout sizes");

    UnconstrainedParams u = UnconstrainedParams::init_default(
        X.cols(), kernel_config.order, Z.cols(), kernel_config.group_order);
    if (optimizer.tie_order) {
        u.u_tau.setOnes();
        u.u_tau_g.setOnes();
    }
    if (optimizer.freeze_group) u.u_kappa_g.setZero();

    TrainTrace trace;
    RandomStream root(optimizer.seed, /*stream=*/23);
    auto start = std::chrono::steady_clock::now();
    for (int t = 0; t < optimizer.iterations; ++t) {
        RandomStream iteration_stream = root.substream(static_cast<std::uint64_t>(t));
        std::vector<std::size_t> idx = shuffled_indices(n, iteration_stream);
        Draw draw;
        draw.id = t;
        draw.holdout.assign(idx.begin(), idx.begin() + m);
        draw.batch.assign(idx.begin() + m, idx.begin() + m + optimizer.batch_size);

        double loss = 0.0;
        UnconstrainedParams grad =
            hypergradient(u, X, Z, y, draw, kernel_config, solver, optimizer.gradient,
                          optimizer.unrolled_steps, optimizer.fd_step, &loss);
        trace.losses.push_back(loss);
        trace.wall_ms.push_back(
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                .count());
        if (!std::isfinite(loss) || loss > optimizer.divergence_threshold) {
            trace.diverged = true;
            break;
        }

        if (optimizer.freeze_group) grad.u_kappa_g.setZero();
        if (optimizer.tie_order) {
            grad.u_tau.setZero();
            grad.u_tau_g.setZero();
        }
        const double lr = optimizer.learning_rate;
        u.u_kappa -= lr * grad.u_kappa;
        u.u_tau -= lr * grad.u_tau;
        u.u_eta -= lr * grad.u_eta;
        u.u_kappa_g -= lr * grad.u_kappa_g;
        u.u_tau_g -= lr * grad.u_tau_g;
        u.u_eta_g -= lr * grad.u_eta_g;
        trace.iterations_done = t + 1;

        if (!u.flatten().allFinite()) {
            trace.diverged = true;
            break;
        }
        if (optimizer.snapshot_interval > 0 && (t + 1) % optimizer.snapshot_interval == 0)
            trace.snapshots.emplace_back(t + 1, u);
    }
    trace.final_u = u;
    return trace;
}

}  // namespace harness

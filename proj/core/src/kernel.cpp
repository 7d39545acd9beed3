#include "harness/kernel.hpp"

#include <cmath>
#include <string>

#include "harness/errors.hpp"

namespace harness {

namespace {

void check_domain(double v) {
    if (!(std::abs(v) <= 1.0 + kKernelDomainSlack))
        throw DataError("kernel input " + std::to_string(v) + " outside [-1,1]");
}

void check_nonneg(const Eigen::VectorXd& v, const char* what) {
    if (!v.allFinite()) throw ConfigError(std::string(what) + " has non-finite entries");
    if ((v.array() < 0.0).any()) throw ConfigError(std::string(what) + " must be non-negative");
}

// Newton-Girard: e_s from power sums p_1..p_q (ps[0] unused, ps[s] = p_s).
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

// Per-order components eta_q^2 e_q(w^(q)) for a single pair, given the
// univariate kernel values k_l. Shared by the covariate and group parts.
Eigen::VectorXd pair_components(const Eigen::VectorXd& k, const Eigen::VectorXd& kappa,
                                const Eigen::MatrixXd& tau, const Eigen::VectorXd& eta) {
    const int order = static_cast<int>(eta.size()) - 1;
    Eigen::VectorXd out(order + 1);
    out[0] = eta[0] * eta[0];
    std::vector<double> ps(order + 1), e(order + 1);
    for (int q = 1; q <= order; ++q) {
        Eigen::ArrayXd w = (kappa.array() * tau.col(q - 1).array()).square() * k.array();
        for (int s = 1; s <= q; ++s) ps[s] = w.pow(s).sum();
        elementary_from_power_sums(ps.data(), q, e.data());
        out[q] = eta[q] * eta[q] * e[q];
    }
    return out;
}

Eigen::VectorXd univariate_values(const Eigen::VectorXd& x, const Eigen::VectorXd& xt,
                                  const std::vector<UnivariateKernelKind>& kinds) {
    if (x.size() != xt.size() || static_cast<std::size_t>(x.size()) != kinds.size())
        throw ShapeError("covariate vectors and kernel kinds disagree on dimension");
    Eigen::VectorXd k(x.size());
    for (Index l = 0; l < x.size(); ++l)
        k[l] = univariate_kernel_eval(kinds[l], x[l], xt[l]);
    return k;
}

// Feature representation making every univariate kernel an inner product:
// k_l(x, x') = prim_l prim'_l + sec_l sec'_l. Gram assembly then reduces to
// matrix products of elementwise feature powers.
struct Features {
    Eigen::MatrixXd prim;
    Eigen::MatrixXd sec;
    bool has_sec = false;
};

Features covariate_features(const Eigen::MatrixXd& X,
                            const std::vector<UnivariateKernelKind>& kinds) {
    if (static_cast<std::size_t>(X.cols()) != kinds.size())
        throw ShapeError("kernel kinds do not match covariate count");
    double extent = X.size() ? X.cwiseAbs().maxCoeff() : 0.0;
    if (!X.allFinite() || extent > 1.0 + kKernelDomainSlack)
        throw DataError("covariates outside the scaled kernel domain [-1,1]");
    Features f;
    f.prim = X;
    f.sec = Eigen::MatrixXd::Zero(X.rows(), X.cols());
    for (Index l = 0; l < X.cols(); ++l) {
        if (kinds[l] == UnivariateKernelKind::orthogonal_poly2) {
            f.sec.col(l) = X.col(l).array().square() - 1.0 / 3.0;
            f.has_sec = true;
        }
    }
    return f;
}

Features indicator_features(const Eigen::MatrixXd& Z) {
    Features f;
    f.prim = Z;
    f.has_sec = false;
    return f;
}

long binomial(int n, int k) {
    long r = 1;
    for (int t = 1; t <= k; ++t) r = r * (n - t + 1) / t;
    return r;
}

// Power-sum matrix PS_s(i,j) = sum_l c_l^s k_l(i,j)^s via the binomial
// expansion of (prim prim' + sec sec')^s.
Eigen::MatrixXd power_sum_matrix(const Features& lhs, const Features& rhs,
                                 const Eigen::VectorXd& weights, int s) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(lhs.prim.rows(), rhs.prim.rows());
    Eigen::VectorXd ws = weights.array().pow(s);
    for (int t = s; t >= 0; --t) {
        if (t < s && !(lhs.has_sec || rhs.has_sec)) break;
        double coef = static_cast<double>(binomial(s, t));
        Eigen::MatrixXd lf(lhs.prim.rows(), lhs.prim.cols());
        Eigen::MatrixXd rf(rhs.prim.rows(), rhs.prim.cols());
        lf = lhs.prim.array().pow(t) * lhs.sec.array().pow(s - t);
        rf = rhs.prim.array().pow(t) * rhs.sec.array().pow(s - t);
        out.noalias() += (lf * (coef * ws).asDiagonal()) * rf.transpose();
    }
    return out;
}

// Specialization for indicator features: k^s = k since z z' is 0/1.
Eigen::MatrixXd power_sum_matrix_indicator(const Features& lhs, const Features& rhs,
                                           const Eigen::VectorXd& weights, int s) {
    Eigen::VectorXd ws = weights.array().pow(s);
    return (lhs.prim * ws.asDiagonal()) * rhs.prim.transpose();
}

// Sum over orders q of eta_q^2 e_q, with e_q built from power-sum matrices
// running the Newton-Girard recursion elementwise. Fills `per_order` (e_q,
// q = 1..order) and `first_power` (ps_1 per order) when non-null.
Eigen::MatrixXd orders_matrix(const Features& lhs, const Features& rhs,
                              const Eigen::VectorXd& kappa, const Eigen::MatrixXd& tau,
                              const Eigen::VectorXd& eta, bool indicator,
                              std::vector<Eigen::MatrixXd>* per_order,
                              std::vector<Eigen::MatrixXd>* first_power) {
    const int order = static_cast<int>(eta.size()) - 1;
    const Index rows = lhs.prim.rows(), cols = rhs.prim.rows();
    Eigen::MatrixXd total = Eigen::MatrixXd::Constant(rows, cols, eta[0] * eta[0]);
    if (per_order) per_order->assign(order, Eigen::MatrixXd());
    if (first_power) first_power->assign(order, Eigen::MatrixXd());
    for (int q = 1; q <= order; ++q) {
        Eigen::VectorXd w = (kappa.array() * tau.col(q - 1).array()).square();
        std::vector<Eigen::MatrixXd> ps(q + 1), e(q + 1);
        for (int s = 1; s <= q; ++s)
            ps[s] = indicator ? power_sum_matrix_indicator(lhs, rhs, w, s)
                              : power_sum_matrix(lhs, rhs, w, s);
        e[0] = Eigen::MatrixXd::Ones(rows, cols);
        for (int s = 1; s <= q; ++s) {
            Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(rows, cols);
            double sign = 1.0;
            for (int t = 1; t <= s; ++t) {
                acc.array() += sign * ps[t].array() * e[s - t].array();
                sign = -sign;
            }
            e[s] = acc / s;
        }
        total.array() += eta[q] * eta[q] * e[q].array();
        if (first_power) (*first_power)[q - 1] = std::move(ps[1]);
        if (per_order) (*per_order)[q - 1] = std::move(e[q]);
    }
    return total;
}

}  // namespace

double univariate_kernel_eval(UnivariateKernelKind kind, double x, double xt) {
    check_domain(x);
    check_domain(xt);
    if (kind == UnivariateKernelKind::centered_linear) return x * xt;
    return x * xt + (x * x - 1.0 / 3.0) * (xt * xt - 1.0 / 3.0);
}

std::vector<UnivariateKernelKind> default_kernel_kinds(const ScalingSpec& spec) {
    std::vector<UnivariateKernelKind> kinds(spec.cols());
    for (Index j = 0; j < spec.cols(); ++j)
        kinds[j] = spec.binary[j] ? UnivariateKernelKind::centered_linear
                                  : UnivariateKernelKind::orthogonal_poly2;
    return kinds;
}

void KernelParams::validate(Index p) const {
    if (kappa.size() != p || tau.rows() != p)
        throw ShapeError("kernel params dimensioned for " + std::to_string(kappa.size()) +
                         " covariates, data has " + std::to_string(p));
    if (tau.cols() != order() || order() < 1)
        throw ShapeError("tau must have one column per interaction order 1..Q");
    check_nonneg(kappa, "kappa");
    check_nonneg(tau.reshaped(), "tau");
    if (!eta.allFinite()) throw ConfigError("eta has non-finite entries");
}

KernelParams KernelParams::ones(Index p, int order) {
    return {Eigen::VectorXd::Ones(p), Eigen::MatrixXd::Ones(p, order),
            Eigen::VectorXd::Ones(order + 1)};
}

void GroupKernelParams::validate(Index pg) const {
    if (kappa.size() != pg || tau.rows() != pg)
        throw ShapeError("group kernel params do not match design columns");
    if (tau.cols() != order() || order() < 1)
        throw ShapeError("group tau must have one column per order 1..Q_g");
    check_nonneg(kappa, "kappa_g");
    check_nonneg(tau.reshaped(), "tau_g");
    if (!eta.allFinite()) throw ConfigError("eta_g has non-finite entries");
}

GroupKernelParams GroupKernelParams::ones(Index pg, int order) {
    return {Eigen::VectorXd::Ones(pg), Eigen::MatrixXd::Ones(pg, order),
            Eigen::VectorXd::Ones(order + 1)};
}

double base_kernel_pair(const Eigen::VectorXd& x, const Eigen::VectorXd& xt,
                        const KernelParams& params,
                        const std::vector<UnivariateKernelKind>& kinds) {
    return base_kernel_components(x, xt, params, kinds).sum();
}

Eigen::VectorXd base_kernel_components(const Eigen::VectorXd& x, const Eigen::VectorXd& xt,
                                       const KernelParams& params,
                                       const std::vector<UnivariateKernelKind>& kinds) {
    params.validate(x.size());
    Eigen::VectorXd k = univariate_values(x, xt, kinds);
    return pair_components(k, params.kappa, params.tau, params.eta);
}

double group_multiplier(const Eigen::VectorXd& z, const Eigen::VectorXd& zt,
                        const GroupKernelParams& params) {
    return group_multiplier_components(z, zt, params).sum();
}

Eigen::VectorXd group_multiplier_components(const Eigen::VectorXd& z, const Eigen::VectorXd& zt,
                                            const GroupKernelParams& params) {
    params.validate(z.size());
    if (z.size() != zt.size()) throw ShapeError("group indicator vectors differ in length");
    Eigen::VectorXd k = (z.array() * zt.array()).matrix();
    return pair_components(k, params.kappa, params.tau, params.eta);
}

GramMatrix kernel_matrix_with_internals(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                                        const Eigen::MatrixXd& Xt, const Eigen::MatrixXd& Zt,
                                        const KernelParams& params,
                                        const GroupKernelParams& gparams,
                                        const std::vector<UnivariateKernelKind>& kinds,
                                        double jitter, bool self, KernelInternals* internals) {
    params.validate(X.cols());
    gparams.validate(Z.cols());
    if (X.rows() != Z.rows() || Xt.rows() != Zt.rows())
        throw ShapeError("covariate and group design row counts disagree");
    if (X.cols() != Xt.cols() || Z.cols() != Zt.cols())
        throw ShapeError("left and right inputs disagree on dimension");
    if (jitter < 0.0) throw ConfigError("jitter must be non-negative");

    Features fx = covariate_features(X, kinds);
    Features fxt = self ? fx : covariate_features(Xt, kinds);
    Features fz = indicator_features(Z);
    Features fzt = self ? fz : indicator_features(Zt);

    std::vector<Eigen::MatrixXd> base_e, group_e, base_s1, group_s1;
    Eigen::MatrixXd base = orders_matrix(fx, fxt, params.kappa, params.tau, params.eta,
                                         /*indicator=*/false, internals ? &base_e : nullptr,
                                         internals ? &base_s1 : nullptr);
    Eigen::MatrixXd group = orders_matrix(fz, fzt, gparams.kappa, gparams.tau, gparams.eta,
                                          /*indicator=*/true, internals ? &group_e : nullptr,
                                          internals ? &group_s1 : nullptr);

    GramMatrix gram;
    gram.K = group.array() * base.array();
    gram.symmetric = self;
    gram.jitter = self ? jitter : 0.0;
    if (self) {
        gram.K = 0.5 * (gram.K + gram.K.transpose()).eval();
        gram.K.diagonal().array() += jitter;
    }
    if (internals) {
        internals->base = std::move(base);
        internals->group = std::move(group);
        internals->base_e = std::move(base_e);
        internals->group_e = std::move(group_e);
        internals->base_s1 = std::move(base_s1);
        internals->group_s1 = std::move(group_s1);
    }
    return gram;
}

GramMatrix kernel_matrix(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                         const KernelParams& params, const GroupKernelParams& gparams,
                         const std::vector<UnivariateKernelKind>& kinds, double jitter) {
    return kernel_matrix_with_internals(X, Z, X, Z, params, gparams, kinds, jitter,
                                        /*self=*/true, nullptr);
}

GramMatrix kernel_matrix(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                         const Eigen::MatrixXd& Xt, const Eigen::MatrixXd& Zt,
                         const KernelParams& params, const GroupKernelParams& gparams,
                         const std::vector<UnivariateKernelKind>& kinds) {
    return kernel_matrix_with_internals(X, Z, Xt, Zt, params, gparams, kinds, 0.0,
                                        /*self=*/false, nullptr);
}

PairFeatureMatrices kernel_feature_matrices(const Eigen::MatrixXd& X,
                                            const std::vector<UnivariateKernelKind>& kinds) {
    Features f = covariate_features(X, kinds);
    return {std::move(f.prim), std::move(f.sec)};
}

namespace {

// Sum over subsets of size <= order of weight-products times kernel-value
// products; the combinatorial definition the fast path must reproduce.
double subset_sum(const Eigen::VectorXd& k, const Eigen::VectorXd& kappa,
                  const Eigen::MatrixXd& tau, const Eigen::VectorXd& eta) {
    const int p = static_cast<int>(k.size());
    const int order = static_cast<int>(eta.size()) - 1;
    double total = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << p); ++mask) {
        int size = __builtin_popcount(mask);
        if (size > order) continue;
        double term = eta[size] * eta[size];
        for (int j = 0; j < p; ++j) {
            if (!(mask & (1u << j))) continue;
            double w = kappa[j] * tau(j, size - 1);
            term *= w * w * k[j];
        }
        total += term;
    }
    return total;
}

}  // namespace

double brute_force_kernel_oracle(const Eigen::VectorXd& x, const Eigen::VectorXd& xt,
                                 const Eigen::VectorXd& z, const Eigen::VectorXd& zt,
                                 const KernelParams& params, const GroupKernelParams& gparams,
                                 const std::vector<UnivariateKernelKind>& kinds) {
    if (x.size() > 12 || z.size() > 12)
        throw ConfigError("oracle-size error: subset enumeration limited to 12 dimensions");
    params.validate(x.size());
    gparams.validate(z.size());
    Eigen::VectorXd kx = univariate_values(x, xt, kinds);
    Eigen::VectorXd kz = (z.array() * zt.array()).matrix();
    return subset_sum(kx, params.kappa, params.tau, params.eta) *
           subset_sum(kz, gparams.kappa, gparams.tau, gparams.eta);
}

}  // namespace harness

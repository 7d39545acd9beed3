#include <benchmark/benchmark.h>

#include "harness/dnr.hpp"
#include "harness/hyperopt.hpp"
#include "harness/kernel.hpp"
#include "harness/klr.hpp"
#include "harness/random.hpp"

namespace {

using namespace harness;

struct BenchData {
    Eigen::MatrixXd X, Z;
    Eigen::VectorXd y;
    KernelParams params;
    GroupKernelParams gparams;
    KernelConfig kernel;
};

BenchData make_data(Index n, Index p, Index groups) {
    RandomStream rng(7, 1);
    BenchData d;
    d.X.resize(n, p);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < p; ++j) d.X(i, j) = rng.uniform(-1.0, 1.0);
    d.Z = Eigen::MatrixXd::Zero(n, groups);
    d.y.resize(n);
    for (Index i = 0; i < n; ++i) {
        d.Z(i, rng.below(groups)) = 1.0;
        d.y[i] = rng.next_unit() < 0.5 ? -1.0 : 1.0;
    }
    d.params = KernelParams::ones(p, 2);
    d.params.kappa.setConstant(0.3);
    d.gparams = GroupKernelParams::ones(groups, 1);
    d.kernel.kinds.assign(p, UnivariateKernelKind::orthogonal_poly2);
    d.kernel.order = 2;
    d.kernel.group_order = 1;
    return d;
}

void BM_GramAssembly(benchmark::State& state) {
    BenchData d = make_data(state.range(0), 100, 5);
    for (auto _ : state) {
        GramMatrix K = kernel_matrix(d.X, d.Z, d.params, d.gparams, d.kernel.kinds, 1e-8);
        benchmark::DoNotOptimize(K.K.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GramAssembly)->Arg(128)->Arg(256)->Arg(512)->Complexity();

void BM_KlrFit(benchmark::State& state) {
    BenchData d = make_data(state.range(0), 100, 5);
    GramMatrix K = kernel_matrix(d.X, d.Z, d.params, d.gparams, d.kernel.kinds, 1e-8);
    SolverConfig solver;
    for (auto _ : state) {
        FittedLocalModel model = fit_klr(K, d.y, solver);
        benchmark::DoNotOptimize(model.f_hat.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KlrFit)->Arg(128)->Arg(256)->Arg(512)->Complexity();

void BM_Hypergradient(benchmark::State& state) {
    const Index n = state.range(0);
    BenchData d = make_data(2 * n, 100, 5);
    UnconstrainedParams u = UnconstrainedParams::init_default(100, 2, 5, 1);
    Draw draw;
    for (Index i = 0; i < n; ++i) draw.batch.push_back(i);
    for (Index i = n; i < 2 * n; ++i) draw.holdout.push_back(i);
    SolverConfig solver;
    for (auto _ : state) {
        UnconstrainedParams g = hypergradient(u, d.X, d.Z, d.y, draw, d.kernel, solver,
                                              GradientMethod::unrolled_newton, 8);
        benchmark::DoNotOptimize(g.u_kappa.data());
    }
}
BENCHMARK(BM_Hypergradient)->Arg(64)->Arg(128)->Arg(256);

void BM_DnrPredict(benchmark::State& state) {
    BenchData d = make_data(state.range(0), 100, 5);
    BenchData t = make_data(256, 100, 5);
    DnrConfig config;
    config.subsets = 4;
    for (auto _ : state) {
        Eigen::VectorXd scores = dnr_predict(d.X, d.Z, d.y, t.X, t.Z, d.params, d.gparams,
                                             d.kernel, config);
        benchmark::DoNotOptimize(scores.data());
    }
}
BENCHMARK(BM_DnrPredict)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();

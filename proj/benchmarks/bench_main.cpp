#include <benchmark/benchmark.h>

#include "endo/completeness.hpp"
#include "endo/linalg.hpp"
#include "endo/mc.hpp"
#include "endo/pde.hpp"
#include "endo/utility.hpp"

using namespace endo;

namespace {

void BM_ExpressionEval(benchmark::State& state) {
    auto e = expr::parse("sqrt(1 + ite(t > 0.5, exp(-1/(t - 0.5)), 0)*(0.5*(1 + exp((t - 1)/2)*sin(x2))))",
                         {"t", "x1", "x2"});
    double env[3] = {0.7, 0.3, -1.1};
    for (auto _ : state) {
        env[0] = env[0] < 0.99 ? env[0] + 1e-6 : 0.01;
        benchmark::DoNotOptimize(e.eval(std::span<const double>(env, 3)));
    }
}
BENCHMARK(BM_ExpressionEval);

void BM_BandedFactorSolve(benchmark::State& state) {
    int n = static_cast<int>(state.range(0));
    int half = static_cast<int>(state.range(1));
    std::vector<double> rhs(static_cast<std::size_t>(n), 1.0);
    for (auto _ : state) {
        linalg::BandMatrix B(n, half);
        for (int i = 0; i < n; ++i) {
            B.at(i, i) = 4.0;
            if (i > 0) B.at(i, i - 1) = -1.0;
            if (i + 1 < n) B.at(i, i + 1) = -1.0;
            if (i >= half) B.at(i, i - half) = -0.5;
            if (i + half < n) B.at(i, i + half) = -0.5;
        }
        B.factor();
        auto x = rhs;
        B.solve(x);
        benchmark::DoNotOptimize(x.data());
    }
}
BENCHMARK(BM_BandedFactorSolve)->Args({401, 1})->Args({6161, 62});

void BM_HeatSolve1d(benchmark::State& state) {
    auto m = DiffusionModel::from_sources(1, {0.0}, {"0"}, {"1"});
    auto term = expr::parse("exp(x1)", m.coeff_vars());
    int nx = static_cast<int>(state.range(0));
    int nt = static_cast<int>(state.range(1));
    for (auto _ : state) {
        auto grid = std::make_shared<Grid>(TruncatedDomain{{-6.0}, {6.0}}, std::vector<int>{nx}, nt);
        auto u = pde::solve_backward(m, nullptr, {}, term, grid, "u");
        benchmark::DoNotOptimize(u.at(0, 0));
    }
}
BENCHMARK(BM_HeatSolve1d)->Args({201, 100})->Args({401, 200})->Unit(benchmark::kMillisecond);

void BM_SimulatePaths(benchmark::State& state) {
    auto m = DiffusionModel::from_sources(1, {0.0}, {"0"}, {"1"});
    long npaths = state.range(0);
    for (auto _ : state) {
        auto paths = mc::simulate(m, 64, npaths, 7);
        benchmark::DoNotOptimize(paths.x(0, 64)[0]);
    }
    state.SetItemsProcessed(state.iterations() * npaths * 64);
}
BENCHMARK(BM_SimulatePaths)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_SmallSvd(benchmark::State& state) {
    linalg::Matrix w(2, 2);
    w(0, 0) = 1.0;
    w(0, 1) = 0.4;
    w(1, 0) = 0.0;
    w(1, 1) = 1e-5;
    for (auto _ : state) {
        w(0, 1) += 1e-9;
        benchmark::DoNotOptimize(linalg::singular_values(w));
    }
}
BENCHMARK(BM_SmallSvd);

void BM_Interpolate(benchmark::State& state) {
    auto grid = std::make_shared<Grid>(TruncatedDomain{{-6.0, -6.0}, {6.0, 6.0}},
                                       std::vector<int>{101, 101}, 32);
    FieldSeries u(grid, "u");
    for (int k = 0; k <= 32; ++k)
        for (long node = 0; node < grid->total_nodes(); ++node)
            u.at(k, node) = static_cast<double>(node % 17);
    double x[2] = {0.37, -1.2};
    double t = 0.0;
    for (auto _ : state) {
        t = t < 0.99 ? t + 1e-5 : 0.0;
        benchmark::DoNotOptimize(u.interpolate(t, std::span<const double>(x, 2)));
    }
}
BENCHMARK(BM_Interpolate);

void BM_SupConvolution(benchmark::State& state) {
    auto u1 = utility::crra("0", 2.0);
    auto u2 = utility::crra("0", 3.0);
    for (auto _ : state) {
        auto agg = utility::sup_convolution(u1, u2);
        benchmark::DoNotOptimize(agg.value(0, 100));
    }
    state.SetLabel("512-node grid, 33 time slices");
}
BENCHMARK(BM_SupConvolution)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

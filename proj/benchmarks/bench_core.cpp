#include <benchmark/benchmark.h>

#include "specnet/experiment.hpp"
#include "specnet/netstats.hpp"
#include "specnet/rewire.hpp"
#include "specnet/rng.hpp"
#include "specnet/spectral.hpp"

using namespace specnet;

namespace {

DirectedGraph powerlaw_graph(int n, std::uint64_t seed) {
    GenerateSpec spec;
    spec.n = n;
    spec.degrees = DegreeModelSpec::parse("powerlaw");
    spec.degrees.alpha = 2.5;
    spec.degrees.d_min = 2;
    spec.degrees.d_max_cap = n / 8;
    spec.compute_spectral = false;
    return generate_baseline(spec, seed).graph;
}

}  // namespace

static void BM_power_iteration(benchmark::State& state) {
    DirectedGraph g = powerlaw_graph(static_cast<int>(state.range(0)), 1);
    DegreeVectors dv = DegreeVectors::of(g);
    for (auto _ : state) {
        PowerResult r = leading_right_eigenvector(g, dv.d_out_unit);
        benchmark::DoNotOptimize(r.lambda1);
    }
}
BENCHMARK(BM_power_iteration)->Arg(100)->Arg(400);

static void BM_full_spectrum(benchmark::State& state) {
    DirectedGraph g = powerlaw_graph(static_cast<int>(state.range(0)), 2);
    Eigen::MatrixXd a = g.to_dense();
    for (auto _ : state) {
        Spectrum spec = full_spectrum(a);
        benchmark::DoNotOptimize(spec.eigenvalues[0]);
    }
}
BENCHMARK(BM_full_spectrum)->Arg(50)->Arg(200);

static void BM_distortion_factor(benchmark::State& state) {
    DirectedGraph g = powerlaw_graph(static_cast<int>(state.range(0)), 3);
    Spectrum spec = full_spectrum(g.to_dense());
    for (auto _ : state) {
        benchmark::DoNotOptimize(distortion_factor(spec.eigenvectors));
    }
}
BENCHMARK(BM_distortion_factor)->Arg(50)->Arg(200);

static void BM_swap_apply_revert(benchmark::State& state) {
    DirectedGraph g = powerlaw_graph(200, 4);
    RngStream rng(9);
    auto m = static_cast<std::uint64_t>(g.edge_count());
    for (auto _ : state) {
        auto [a, b] = g.edge_at(static_cast<std::size_t>(rng.next_below(m)));
        auto [c, d] = g.edge_at(static_cast<std::size_t>(rng.next_below(m)));
        SwapMove mv{a, b, c, d};
        if (g.swap_feasible(mv)) {
            g.apply_swap(mv);
            g.apply_swap(mv.inverse());
        }
        benchmark::DoNotOptimize(g.edge_count());
    }
}
BENCHMARK(BM_swap_apply_revert);

static void BM_triangle_count(benchmark::State& state) {
    DirectedGraph g = powerlaw_graph(static_cast<int>(state.range(0)), 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(k_cycle_count(g, 3));
    }
}
BENCHMARK(BM_triangle_count)->Arg(100)->Arg(400);

static void BM_sparse_norm(benchmark::State& state) {
    DirectedGraph g = powerlaw_graph(200, 6);
    PerturbationLedger ledger(200);
    RngStream rng(10);
    auto m = static_cast<std::uint64_t>(g.edge_count());
    while (ledger.accepted < state.range(0)) {
        auto [a, b] = g.edge_at(static_cast<std::size_t>(rng.next_below(m)));
        auto [c, d] = g.edge_at(static_cast<std::size_t>(rng.next_below(m)));
        SwapMove mv{a, b, c, d};
        if (!g.swap_feasible(mv)) continue;
        g.apply_swap(mv);
        ledger.record(mv);
    }
    for (auto _ : state) {
        NormResult r = spectral_norm(ledger.omega);
        benchmark::DoNotOptimize(r.value);
    }
}
BENCHMARK(BM_sparse_norm)->Arg(10)->Arg(100);

static void BM_assortativity_trajectory(benchmark::State& state) {
    DirectedGraph g = powerlaw_graph(200, 7);
    for (auto _ : state) {
        RewiringPolicy policy;
        policy.stat = StatKind::assortativity;
        policy.r_budget = 3;
        policy.max_accepted = 25;
        policy.max_proposals = 20000;
        policy.recorder_stride = 25;
        policy.dense_spectral_at_records = false;
        TrajectoryResult res = run_trajectory(g, policy, 11);
        benchmark::DoNotOptimize(res.ledger.accepted);
    }
}
BENCHMARK(BM_assortativity_trajectory)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

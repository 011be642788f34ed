#include <benchmark/benchmark.h>

#include "sg/optim.hpp"
#include "sg/residuals.hpp"

namespace {

sg::MlpNetwork desk_net(std::uint64_t seed) {
    sg::MlpNetwork net = sg::MlpNetwork::make(2, 32, 6, 1, sg::ActKind::Tanh);
    sg::SeededRng rng(seed);
    sg::initialize(net, {}, rng);
    return net;
}

void bench_matvec(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    sg::SeededRng rng(7);
    sg::DenseMatrix a(n, n);
    sg::DenseVector x(n);
    for (double& v : a.data) v = rng.normal();
    for (double& v : x.data) v = rng.normal();
    for (auto _ : state) {
        sg::DenseVector y = sg::matvec(a, x);
        benchmark::DoNotOptimize(y.data.data());
    }
}
BENCHMARK(bench_matvec)->Arg(64)->Arg(256)->Arg(1024);

void bench_forward_order2(benchmark::State& state) {
    sg::MlpNetwork net = desk_net(11);
    const std::size_t batch = static_cast<std::size_t>(state.range(0));
    sg::SeededRng rng(13);
    sg::DenseMatrix pts(batch, 2);
    for (double& v : pts.data) v = rng.uniform01() * 2.0 - 1.0;
    for (auto _ : state) {
        sg::DerivativeTrace trace = sg::forward(net, pts, 2);
        benchmark::DoNotOptimize(trace.h.back().data.data());
    }
}
BENCHMARK(bench_forward_order2)->Arg(64)->Arg(256)->Arg(1024);

void bench_residual_gradient(benchmark::State& state) {
    sg::MlpNetwork net = desk_net(17);
    sg::ProblemSpec spec = sg::ProblemSpec::burgers();
    sg::SeededRng rng(19);
    sg::CollocationBatch batch = sg::sample_batch(
        spec, {static_cast<std::size_t>(state.range(0)), 64, 64}, rng);
    for (auto _ : state) {
        sg::ResidualAssembly asmb = sg::assemble_residual(net, spec, batch);
        double sigma = 0.0;
        sg::GradientBlocks grads = sg::residual_gradient(net, asmb, &sigma);
        benchmark::DoNotOptimize(grads.blocks.data());
    }
}
BENCHMARK(bench_residual_gradient)->Arg(64)->Arg(256);

void bench_stablegrad_rescale(benchmark::State& state) {
    sg::MlpNetwork net = desk_net(23);
    sg::ProblemSpec spec = sg::ProblemSpec::burgers();
    sg::SeededRng rng(29);
    sg::CollocationBatch batch = sg::sample_batch(spec, {256, 64, 64}, rng);
    sg::ResidualAssembly asmb = sg::assemble_residual(net, spec, batch);
    double sigma = 0.0;
    sg::GradientBlocks grads = sg::residual_gradient(net, asmb, &sigma);
    sg::StableGradConfig cfg;
    for (auto _ : state) {
        sg::GradientBlocks g = grads;
        sg::RescaleReport rep = sg::stablegrad_rescale(g, sigma, cfg);
        benchmark::DoNotOptimize(rep.alpha.data());
    }
}
BENCHMARK(bench_stablegrad_rescale);

}  // namespace

BENCHMARK_MAIN();

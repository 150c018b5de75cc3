// Microbenchmarks for the pieces that dominate a training run: the
// forward/backward step at trainer scale, the sampling machinery that wraps
// every step, the variance tracker (pure instrumentation overhead), and the
// ranking metrics used after search.

#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "pada/dataset.hpp"
#include "pada/nn.hpp"
#include "pada/ranking.hpp"
#include "pada/rng.hpp"
#include "pada/sampling.hpp"
#include "pada/search_space.hpp"
#include "pada/supernet.hpp"
#include "pada/variance_stats.hpp"

namespace {

using namespace pada;

struct StepFixture {
    CellSpec spec = CellSpec::make(4, {OpKind::Skip, OpKind::Linear}, 16, 16, 4);
    Supernet net;
    Batch batch;
    Path path;

    StepFixture() {
        RngStream rng(1, "bench-init");
        net = build_supernet(spec, rng);
        const SyntheticSplit data = generate_synthetic_split(32, 8, 4, 16, 1.0, 1.0, 9);
        std::vector<std::size_t> idx(64);
        std::iota(idx.begin(), idx.end(), 0);
        batch = make_batch(data.train, idx);
        path.op_index.assign(spec.n_edges(), 1);  // all-linear: the densest path
    }
};

void bm_forward(benchmark::State& state) {
    const StepFixture f;
    for (auto _ : state) {
        const auto out = forward(f.net.params, f.spec, f.path, f.batch);
        benchmark::DoNotOptimize(out.logits.data.data());
    }
}
BENCHMARK(bm_forward)->Unit(benchmark::kMicrosecond);

void bm_forward_backward(benchmark::State& state) {
    const StepFixture f;
    for (auto _ : state) {
        const auto fwd = forward(f.net.params, f.spec, f.path, f.batch);
        const auto bwd = backward(f.net.params, f.spec, f.path, f.batch, fwd.cache);
        benchmark::DoNotOptimize(bwd.loss);
    }
}
BENCHMARK(bm_forward_backward)->Unit(benchmark::kMicrosecond);

void bm_sgd_step(benchmark::State& state) {
    StepFixture f;
    const auto fwd = forward(f.net.params, f.spec, f.path, f.batch);
    const auto bwd = backward(f.net.params, f.spec, f.path, f.batch, fwd.cache);
    OptimizerState opt;
    opt.weight_decay = 1e-4;
    for (auto _ : state) {
        sgd_step(f.net.params, bwd.grads, opt, 0.01);
        benchmark::DoNotOptimize(f.net.params);
    }
}
BENCHMARK(bm_sgd_step)->Unit(benchmark::kMicrosecond);

void bm_sample_path(benchmark::State& state) {
    const CellSpec spec = CellSpec::make(4, {OpKind::Skip, OpKind::Linear}, 16, 16, 4);
    PathDistribution dist = PathDistribution::uniform(spec);
    RngStream skew(3, "bench-skew");
    for (auto& edge : dist.accum)
        for (auto& a : edge) a = skew.uniform();
    update_path_distribution(dist, 30, 60);
    RngStream rng(5, "bench-path");
    for (auto _ : state) {
        const SampledPath s = sample_path(dist, rng);
        benchmark::DoNotOptimize(s.probability);
    }
}
BENCHMARK(bm_sample_path);

void bm_update_path_distribution(benchmark::State& state) {
    const CellSpec spec = CellSpec::make(4, {OpKind::Skip, OpKind::Linear}, 16, 16, 4);
    PathDistribution dist = PathDistribution::uniform(spec);
    RngStream skew(3, "bench-skew");
    for (auto& edge : dist.accum)
        for (auto& a : edge) a = skew.uniform();
    std::size_t epoch = 1;
    for (auto _ : state) {
        update_path_distribution(dist, epoch % 60 + 1, 60);
        benchmark::DoNotOptimize(dist.delta);
        ++epoch;
    }
}
BENCHMARK(bm_update_path_distribution);

void bm_accumulate_path_norms(benchmark::State& state) {
    StepFixture f;
    const auto fwd = forward(f.net.params, f.spec, f.path, f.batch);
    const auto bwd = backward(f.net.params, f.spec, f.path, f.batch, fwd.cache);
    PathDistribution dist = PathDistribution::uniform(f.spec);
    for (auto _ : state) {
        accumulate_path_norms(dist, f.spec, f.path, bwd.grads);
        benchmark::DoNotOptimize(dist.accum);
    }
}
BENCHMARK(bm_accumulate_path_norms)->Unit(benchmark::kMicrosecond);

void bm_per_sample_importance(benchmark::State& state) {
    StepFixture f;
    const auto fwd = forward(f.net.params, f.spec, f.path, f.batch);
    const auto bwd = backward(f.net.params, f.spec, f.path, f.batch, fwd.cache);
    for (auto _ : state) {
        const std::vector<double> imp = per_sample_importance(bwd.last_layer_grad);
        benchmark::DoNotOptimize(imp.data());
    }
}
BENCHMARK(bm_per_sample_importance);

void bm_gv_record(benchmark::State& state) {
    StepFixture f;
    const auto fwd = forward(f.net.params, f.spec, f.path, f.batch);
    const auto bwd = backward(f.net.params, f.spec, f.path, f.batch, fwd.cache);
    GradVarTracker tracker(GvScope::CandidateOps);
    for (auto _ : state) {
        tracker.record(bwd.grads);
        benchmark::DoNotOptimize(tracker.has_eligible());
    }
}
BENCHMARK(bm_gv_record)->Unit(benchmark::kMicrosecond);

void bm_kendall_tau(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    RngStream rng(7, "bench-kt");
    std::vector<double> a(n), b(n);
    for (auto& v : a) v = rng.uniform();
    for (auto& v : b) v = rng.uniform();
    for (auto _ : state) benchmark::DoNotOptimize(kendall_tau(a, b));
}
BENCHMARK(bm_kendall_tau)->Arg(64)->Arg(1000)->Unit(benchmark::kMicrosecond);

void bm_evaluate_all_paths(benchmark::State& state) {
    const StepFixture f;
    const std::vector<Path> paths = enumerate_paths(f.spec);
    const SyntheticSplit data = generate_synthetic_split(32, 32, 4, 16, 1.0, 1.0, 9);
    for (auto _ : state) {
        const std::vector<double> scores = evaluate_all(f.net, paths, data.eval);
        benchmark::DoNotOptimize(scores.data());
    }
}
BENCHMARK(bm_evaluate_all_paths)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

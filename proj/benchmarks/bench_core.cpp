#include <benchmark/benchmark.h>

#include "nnreg/hint.hpp"
#include "nnreg/matrix.hpp"
#include "nnreg/network.hpp"
#include "nnreg/rng.hpp"

namespace {

nnreg::Matrix2D random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    nnreg::Rng rng(seed);
    nnreg::Matrix2D m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
    return m;
}

void bm_matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const nnreg::Matrix2D a = random_matrix(n, n, 1);
    const nnreg::Matrix2D b = random_matrix(n, n, 2);
    for (auto _ : state) {
        nnreg::Matrix2D c = nnreg::matmul(a, b);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * n * n * n);
}
BENCHMARK(bm_matmul)->Arg(64)->Arg(128)->Arg(256);

void bm_forward_backward(benchmark::State& state) {
    const auto batch = static_cast<std::size_t>(state.range(0));
    const nnreg::Network net = nnreg::init_weights(
        {{400, 128, nnreg::Activation::Sigmoid},
         {128, 64, nnreg::Activation::Sigmoid},
         {64, 10, nnreg::Activation::Softmax}},
        7);
    const nnreg::Matrix2D x = random_matrix(batch, 400, 3);
    nnreg::Matrix2D y(batch, 10);
    y.fill(0.0);
    for (std::size_t r = 0; r < batch; ++r) y(r, r % 10) = 1.0;
    for (auto _ : state) {
        nnreg::ForwardTrace trace = nnreg::forward(net, x);
        nnreg::BackpropResult res = nnreg::backprop_from_loss(net, trace, nnreg::Loss::CrossEntropy, y);
        benchmark::DoNotOptimize(res.grads.d_weights.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * batch);
}
BENCHMARK(bm_forward_backward)->Arg(10)->Arg(100);

void bm_hint_penalty(benchmark::State& state) {
    const auto batch = static_cast<std::size_t>(state.range(0));
    const nnreg::Matrix2D reps = random_matrix(batch, 64, 4);
    std::vector<int> labels(batch);
    for (std::size_t i = 0; i < batch; ++i) labels[i] = static_cast<int>(i % 10);
    nnreg::HintConfig cfg;
    cfg.measure = nnreg::Dissimilarity::SED;
    cfg.class_count = 10;
    for (auto _ : state) {
        nnreg::HintPenaltyGradient g = nnreg::hint_penalty_with_gradient(reps, labels, cfg);
        benchmark::DoNotOptimize(g.value);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * batch);
}
BENCHMARK(bm_hint_penalty)->Arg(100)->Arg(500);

} // namespace

BENCHMARK_MAIN();

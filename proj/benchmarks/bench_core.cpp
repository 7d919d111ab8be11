// Microbenchmarks for the hot paths: conv blocks, attention maps, ssim.
#include <benchmark/benchmark.h>

#include <random>

#include "stegattn/metrics.hpp"
#include "stegattn/model.hpp"

using namespace stegattn;

namespace {

Tensor<float> random_tensor(int n, int c, int h, int w, std::uint64_t seed) {
    Tensor<float> t(n, c, h, w);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> d(0.0f, 1.0f);
    for (float& v : t.data) v = d(rng);
    return t;
}

StegoModelParams<float> bench_params(AttentionMode mode) {
    return init_params(7, mode, 1.0f, 8, true);
}

}  // namespace

static void BM_ConvBlockForward(benchmark::State& state) {
    const int s = static_cast<int>(state.range(0));
    auto params = bench_params(AttentionMode::Baseline);
    auto mv = ModelVars<float>::from(params);
    auto x = make_constant(random_tensor(1, 3, s, s, 1));
    for (auto _ : state) {
        auto y = conv_block_forward(x, mv.prep[0]);
        benchmark::DoNotOptimize(y->value.data.data());
    }
    state.SetItemsProcessed(state.iterations() * s * s);
}
BENCHMARK(BM_ConvBlockForward)->Arg(32)->Arg(64);

static void BM_ModelLossBackward(benchmark::State& state) {
    const int s = static_cast<int>(state.range(0));
    auto params = bench_params(AttentionMode::Parallel);
    auto mv = ModelVars<float>::from(params);
    auto cover = make_constant(random_tensor(1, 3, s, s, 2));
    auto secret = make_constant(random_tensor(1, 3, s, s, 3));
    for (auto _ : state) {
        auto fwd = model_loss(cover, secret, mv);
        backward(fwd.loss);
        benchmark::DoNotOptimize(fwd.loss->value.data[0]);
    }
    state.SetItemsProcessed(state.iterations() * s * s);
}
BENCHMARK(BM_ModelLossBackward)->Arg(16)->Arg(32);

static void BM_ChannelAttention(benchmark::State& state) {
    auto params = bench_params(AttentionMode::Channel);
    auto mv = ModelVars<float>::from(params);
    auto f = make_constant(random_tensor(1, kBlockChannels, 64, 64, 4));
    for (auto _ : state) {
        auto out = apply_attention(f, AttentionMode::Channel, mv.hiding_attn[0].ca,
                                   mv.hiding_attn[0].sa);
        benchmark::DoNotOptimize(out->value.data.data());
    }
}
BENCHMARK(BM_ChannelAttention);

static void BM_SpatialAttention(benchmark::State& state) {
    auto params = bench_params(AttentionMode::Spatial);
    auto mv = ModelVars<float>::from(params);
    auto f = make_constant(random_tensor(1, kBlockChannels, 64, 64, 5));
    for (auto _ : state) {
        auto out = apply_attention(f, AttentionMode::Spatial, mv.hiding_attn[0].ca,
                                   mv.hiding_attn[0].sa);
        benchmark::DoNotOptimize(out->value.data.data());
    }
}
BENCHMARK(BM_SpatialAttention);

static void BM_Ssim(benchmark::State& state) {
    const int s = static_cast<int>(state.range(0));
    auto a = random_tensor(1, 3, s, s, 6);
    auto b = random_tensor(1, 3, s, s, 7);
    for (auto _ : state) {
        double v = ssim(a, b);
        benchmark::DoNotOptimize(v);
    }
    state.SetItemsProcessed(state.iterations() * s * s);
}
BENCHMARK(BM_Ssim)->Arg(64)->Arg(256);

static void BM_Psnr(benchmark::State& state) {
    const int s = static_cast<int>(state.range(0));
    auto a = random_tensor(1, 3, s, s, 8);
    auto b = random_tensor(1, 3, s, s, 9);
    for (auto _ : state) {
        double v = psnr(a, b);
        benchmark::DoNotOptimize(v);
    }
}
BENCHMARK(BM_Psnr)->Arg(256);

BENCHMARK_MAIN();

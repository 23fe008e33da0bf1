#include <benchmark/benchmark.h>

#include <random>

#include "fundus/imaging.hpp"
#include "fundus/metrics.hpp"
#include "fundus/network.hpp"

namespace {

fundus::Image noise_image(std::uint32_t w, std::uint32_t h, std::uint32_t seed) {
    std::mt19937 gen(seed);
    std::uniform_int_distribution<int> byte(0, 255);
    fundus::Image img(w, h);
    for (auto& b : img.data()) b = static_cast<std::uint8_t>(byte(gen));
    return img;
}

void BM_GaussianBlur(benchmark::State& state) {
    const auto side = static_cast<std::uint32_t>(state.range(0));
    const auto ch = fundus::extract_channel(noise_image(side, side, 1), 0);
    for (auto _ : state) benchmark::DoNotOptimize(fundus::gaussian_blur(ch, 10.0));
    state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_GaussianBlur)->Arg(64)->Arg(448)->Unit(benchmark::kMillisecond);

void BM_Preprocess(benchmark::State& state) {
    const auto img = noise_image(1016, 800, 2);
    const fundus::PreprocessConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(fundus::preprocess(img, cfg));
}
BENCHMARK(BM_Preprocess)->Unit(benchmark::kMillisecond);

fundus::Tensor batch(std::size_t n, std::size_t side) {
    std::mt19937 gen(3);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    fundus::Tensor t({n, 3, side, side});
    for (auto& v : t.data()) v = u(gen);
    return t;
}

void BM_Forward(benchmark::State& state) {
    const auto params = fundus::init_params(fundus::ArchDescriptor::multilevel(), 1);
    const auto x = batch(static_cast<std::size_t>(state.range(0)), 64);
    for (auto _ : state) benchmark::DoNotOptimize(fundus::forward(params, x));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
    const auto params = fundus::init_params(fundus::ArchDescriptor::multilevel(), 1);
    const auto x = batch(16, 64);
    std::vector<int> labels(16);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 2);
    for (auto _ : state) {
        const auto fwd = fundus::forward(params, x);
        const auto loss = fundus::cross_entropy(fwd.logits, labels);
        benchmark::DoNotOptimize(fundus::backward(params, fwd.cache, loss.dlogits));
    }
    state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_ForwardBackward)->Unit(benchmark::kMillisecond);

void BM_Auroc(benchmark::State& state) {
    std::mt19937 gen(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<fundus::ScoredSample> s(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = {u(gen), static_cast<int>(i % 2), ""};
    for (auto _ : state) benchmark::DoNotOptimize(fundus::auroc(s));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Auroc)->Arg(1000)->Arg(100000);

}  // namespace
BENCHMARK_MAIN();

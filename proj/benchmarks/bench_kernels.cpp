#include <benchmark/benchmark.h>

#include <vector>

#include "clit/kernels.hpp"
#include "clit/rng.hpp"
#include "clit/threading.hpp"

namespace {

std::vector<float> random_vec(size_t n, uint64_t seed) {
    clit::Rng rng(seed);
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return v;
}

// Conv-shaped GEMM: [H*W, k*k*C] x [k*k*C, C]
void BM_gemm_nn(benchmark::State& state) {
    const int64_t m = state.range(0), k = state.range(1), n = state.range(2);
    auto a = random_vec(static_cast<size_t>(m * k), 1);
    auto b = random_vec(static_cast<size_t>(k * n), 2);
    std::vector<float> c(static_cast<size_t>(m * n));
    for (auto _ : state) {
        clit::kernels::gemm_nn(a.data(), b.data(), c.data(), m, k, n, false);
        benchmark::DoNotOptimize(c.data());
    }
    state.counters["GFLOP/s"] = benchmark::Counter(
        2.0 * static_cast<double>(m * k * n) * static_cast<double>(state.iterations()) * 1e-9,
        benchmark::Counter::kIsRate);
}
BENCHMARK(BM_gemm_nn)->Args({2304, 576, 64})->Args({2304, 66, 256})->Args({2304, 256, 256});

void BM_gemm_tn_acc(benchmark::State& state) {
    const int64_t m = state.range(0), k = state.range(1), n = state.range(2);
    auto a = random_vec(static_cast<size_t>(k * m), 1);
    auto b = random_vec(static_cast<size_t>(k * n), 2);
    std::vector<float> c(static_cast<size_t>(m * n));
    for (auto _ : state) {
        clit::kernels::gemm_tn_acc(a.data(), b.data(), c.data(), m, k, n);
        benchmark::DoNotOptimize(c.data());
    }
    state.counters["GFLOP/s"] = benchmark::Counter(
        2.0 * static_cast<double>(m * k * n) * static_cast<double>(state.iterations()) * 1e-9,
        benchmark::Counter::kIsRate);
}
BENCHMARK(BM_gemm_tn_acc)->Args({576, 2304, 64})->Args({256, 2304, 256});

void BM_gemm_nt(benchmark::State& state) {
    const int64_t m = state.range(0), k = state.range(1), n = state.range(2);
    auto a = random_vec(static_cast<size_t>(m * k), 1);
    auto b = random_vec(static_cast<size_t>(n * k), 2);
    std::vector<float> c(static_cast<size_t>(m * n));
    for (auto _ : state) {
        clit::kernels::gemm_nt(a.data(), b.data(), c.data(), m, k, n);
        benchmark::DoNotOptimize(c.data());
    }
    state.counters["GFLOP/s"] = benchmark::Counter(
        2.0 * static_cast<double>(m * k * n) * static_cast<double>(state.iterations()) * 1e-9,
        benchmark::Counter::kIsRate);
}
BENCHMARK(BM_gemm_nt)->Args({2304, 64, 576})->Args({2304, 256, 256});

void BM_im2col(benchmark::State& state) {
    const int64_t h = 48, w = 48, c = 64, k = 3;
    auto in = random_vec(static_cast<size_t>(h * w * c), 3);
    std::vector<float> cols(static_cast<size_t>(h * w * k * k * c));
    for (auto _ : state) {
        clit::kernels::im2col(in.data(), h, w, c, k, clit::Padding::kZero, cols.data());
        benchmark::DoNotOptimize(cols.data());
    }
}
BENCHMARK(BM_im2col);

void BM_attend(benchmark::State& state) {
    const int64_t n = 2304, g = 49, c = 64, heads = 8;
    auto q = random_vec(static_cast<size_t>(n * c), 1);
    auto k = random_vec(static_cast<size_t>(n * g * c), 2);
    auto v = random_vec(static_cast<size_t>(n * g * c), 3);
    auto bias = random_vec(static_cast<size_t>(n * g * heads), 4);
    std::vector<float> out(static_cast<size_t>(n * c));
    std::vector<float> wts(static_cast<size_t>(n * heads * g));
    for (auto _ : state) {
        clit::kernels::attend_forward(q.data(), k.data(), v.data(), bias.data(), n, g, c, heads,
                                      out.data(), wts.data());
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_attend);

void BM_gemm_nn_2threads(benchmark::State& state) {
    clit::set_num_threads(2);
    const int64_t m = 2304, k = 576, n = 64;
    auto a = random_vec(static_cast<size_t>(m * k), 1);
    auto b = random_vec(static_cast<size_t>(k * n), 2);
    std::vector<float> c(static_cast<size_t>(m * n));
    for (auto _ : state) {
        clit::kernels::gemm_nn(a.data(), b.data(), c.data(), m, k, n, false);
        benchmark::DoNotOptimize(c.data());
    }
    state.counters["GFLOP/s"] = benchmark::Counter(
        2.0 * static_cast<double>(m * k * n) * static_cast<double>(state.iterations()) * 1e-9,
        benchmark::Counter::kIsRate);
    clit::set_num_threads(1);
}
BENCHMARK(BM_gemm_nn_2threads);

}  // namespace

BENCHMARK_MAIN();

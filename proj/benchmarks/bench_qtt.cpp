#include <benchmark/benchmark.h>

#include <filesystem>

#include "qtt/qtt.hpp"

using namespace qtt;

namespace {

TrainShape ranked(TrainShape s, std::size_t r) {
    std::vector<std::size_t> ranks(s.ncores() + 1, r);
    ranks.front() = ranks.back() = 1;
    return s.with_ranks(ranks);
}

void BM_DftTrain(benchmark::State& st) {
    const auto dim = make_dimension(1LL << st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(dft_train(dim, true, TruncationRule{16, 0.0}));
}
BENCHMARK(BM_DftTrain)->DenseRange(10, 16, 3)->Unit(benchmark::kMillisecond);

void BM_MatVecExact(benchmark::State& st) {
    const long long n = 1LL << st.range(0);
    const auto d = make_dimension(n);
    const auto m = random_train(ranked(make_trainshape({d, d}), 4), 1);
    const auto x = random_train(ranked(make_trainshape(n), 8), 2);
    for (auto _ : st) benchmark::DoNotOptimize(einsum(Exact{}, "ij,j->i", {m, x}));
}
BENCHMARK(BM_MatVecExact)->DenseRange(10, 30, 10)->Unit(benchmark::kMicrosecond);

void BM_MatVecZipUp(benchmark::State& st) {
    const long long n = 1LL << 20;
    const auto d = make_dimension(n);
    const auto m = random_train(ranked(make_trainshape({d, d}), 4), 1);
    const auto x = random_train(ranked(make_trainshape(n), 8), 2);
    const Decomposition pol{{std::size_t(st.range(0)), 0.0}};
    for (auto _ : st) benchmark::DoNotOptimize(einsum(pol, "ij,j->i", {m, x}));
}
BENCHMARK(BM_MatVecZipUp)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_MatVecVariational(benchmark::State& st) {
    const long long n = 1LL << 20;
    const auto d = make_dimension(n);
    const auto m = random_train(ranked(make_trainshape({d, d}), 4), 1);
    const auto x = random_train(ranked(make_trainshape(n), 8), 2);
    const Variational pol{{std::size_t(st.range(0)), 0.0}, 2, 2};
    for (auto _ : st) benchmark::DoNotOptimize(einsum(pol, "ij,j->i", {m, x}));
}
BENCHMARK(BM_MatVecVariational)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_CrossBuild(benchmark::State& st) {
    const auto shape = make_trainshape(1LL << 20);
    const auto t = random_train(ranked(shape, std::size_t(st.range(0))), 3);
    const RealFunction f = [&](const IndexBatch& idx) { return evaluate(t, idx).real(); };
    const Cross pol{std::size_t(st.range(0)), 1e-12, 10, 0};
    for (auto _ : st) benchmark::DoNotOptimize(cross_build(shape, f, pol));
}
BENCHMARK(BM_CrossBuild)->Arg(2)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_Eigsolve(benchmark::State& st) {
    const long long n = 1LL << st.range(0);
    const auto dim = make_dimension(n);
    const auto xs = make_trainshape(n);
    const auto lap = dirichlet_laplacian(dim, 1.0 / double(n + 1));
    const LinearMap map("ij,j->i", {lap}, 1, xs);
    const auto guess = random_train(ranked(xs, 2), 4);
    SweepPlan plan;
    plan.nsweeps = 4;
    for (auto _ : st) benchmark::DoNotOptimize(eigsolve(map, guess, plan));
}
BENCHMARK(BM_Eigsolve)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_LinsolveAmen(benchmark::State& st) {
    const long long n = 1LL << st.range(0);
    const auto dim = make_dimension(n);
    const auto xs = make_trainshape(n);
    const auto lap = dirichlet_laplacian(dim, 1.0 / double(n + 1));
    const auto id = shift_train(dim, 0);
    const auto a = add(Exact{}, {lap, id});
    const LinearMap map("ij,j->i", {a}, 1, xs);
    const auto b = random_train(ranked(xs, 2), 5);
    SweepPlan plan;
    plan.nsweeps = 4;
    for (auto _ : st) benchmark::DoNotOptimize(linsolve(map, b, b, plan));
}
BENCHMARK(BM_LinsolveAmen)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_MinMax(benchmark::State& st) {
    const auto t = random_train(ranked(make_trainshape(1LL << 20), 4), 6);
    for (auto _ : st) benchmark::DoNotOptimize(min_max(t, std::size_t(st.range(0))));
}
BENCHMARK(BM_MinMax)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_SaveLoad(benchmark::State& st) {
    const auto t = random_train(ranked(make_trainshape(1LL << 30), std::size_t(st.range(0))), 7);
    const auto path = std::filesystem::temp_directory_path() / "qtt_bench.qtts";
    for (auto _ : st) {
        save(t, path);
        benchmark::DoNotOptimize(load(path));
    }
    std::filesystem::remove(path);
}
BENCHMARK(BM_SaveLoad)->Arg(8)->Arg(32)->Unit(benchmark::kMicrosecond);

} // namespace

BENCHMARK_MAIN();

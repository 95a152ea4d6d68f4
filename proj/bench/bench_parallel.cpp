// Serial reference vs OpenMP kernels. Arg(0) is serial, Arg(1) parallel.

#include "bondtca/classify.hpp"
#include "bondtca/cross_validation.hpp"
#include "bondtca/impact.hpp"
#include "bondtca/synth.hpp"

#include <benchmark/benchmark.h>

using namespace bondtca;

namespace {

Execution mode(const benchmark::State& s) { return s.range(0) ? Execution::parallel : Execution::serial; }

const TimSeries& series() {
    static const TimSeries ts = [] {
        SynthConfig c;
        c.n_events = 1'000'000;
        c.seed = 3;
        return generate_tim_series(c, Execution::parallel);
    }();
    return ts;
}

void BM_Correlation(benchmark::State& state) {
    const auto u = signed_volume(series().series, 0.0);
    for (auto _ : state) benchmark::DoNotOptimize(estimate_correlation(u, 64, mode(state)));
}
BENCHMARK(BM_Correlation)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Response(benchmark::State& state) {
    const auto u = signed_volume(series().series, 0.0);
    const auto r = returns_bp(series().series);
    for (auto _ : state) benchmark::DoNotOptimize(estimate_response(u, r, 64, mode(state)));
}
BENCHMARK(BM_Response)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_TypedMoments(benchmark::State& state) {
    const auto& s = series().series;
    const auto u = signed_volume(s, 0.0);
    const auto r = returns_bp(s);
    for (auto _ : state) benchmark::DoNotOptimize(estimate_typed_moments(u, s.type, r, 32, 32, mode(state)));
}
BENCHMARK(BM_TypedMoments)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_GenerateSeries(benchmark::State& state) {
    SynthConfig c;
    c.n_events = 200'000;
    for (auto _ : state) benchmark::DoNotOptimize(generate_tim_series(c, mode(state)));
}
BENCHMARK(BM_GenerateSeries)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_KFoldCV(benchmark::State& state) {
    CounterRng rng(11);
    const std::size_t n = 4000, w = 26;
    Dataset d;
    d.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(w));
    d.y.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        double y = 0.0;
        for (std::size_t j = 0; j < w; ++j) {
            const double x = rng.normal();
            d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x;
            if (j < 4) y += x;
        }
        d.y(static_cast<Eigen::Index>(i)) = y + rng.normal();
    }
    for (std::size_t j = 0; j < w; ++j) d.names.push_back("x" + std::to_string(j));
    std::vector<GridPoint> grid;
    for (double l : log_grid(1e-3, 1.0, 20)) grid.push_back({l, 1.0});
    for (auto _ : state) benchmark::DoNotOptimize(k_fold_cv(d, Model::lasso, grid, 10, 5, mode(state)));
}
BENCHMARK(BM_KFoldCV)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Classify(benchmark::State& state) {
    static const std::vector<CleanTrade> trades = [] {
        TraceFixtureConfig c;
        c.n_bonds = 100;
        c.trades_per_bond = 5000;
        c.cancel_rate = c.correction_rate = c.violation_rate = 0.0;
        c.dangling = 0;
        const auto fx = generate_trace_fixture(c);
        return to_clean_trades(fx.reports);
    }();
    for (auto _ : state) benchmark::DoNotOptimize(classify_trades(trades, mode(state)));
}
BENCHMARK(BM_Classify)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

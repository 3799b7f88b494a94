#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dualtune/analysis.hpp"
#include "dualtune/scoring.hpp"

using namespace dualtune;

static void BM_ComputeMetrics(benchmark::State& state) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> cell(1.0, 100.0);
    std::vector<ModeScores> rows(static_cast<std::size_t>(state.range(0)));
    for (auto& row : rows) {
        row = {cell(rng), cell(rng), cell(rng), cell(rng)};
    }
    for (auto _ : state) {
        for (const auto& row : rows) {
            auto metrics = compute_metrics(row);
            benchmark::DoNotOptimize(metrics.gain_cot);
        }
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ComputeMetrics)->Arg(100)->Arg(10000);

static void BM_ClassifyRegion(benchmark::State& state) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> cell(1.0, 100.0);
    std::vector<DualTuningMetrics> rows(10000);
    for (auto& row : rows) {
        row = compute_metrics({cell(rng), cell(rng), cell(rng), cell(rng)});
    }
    for (auto _ : state) {
        for (const auto& row : rows) {
            benchmark::DoNotOptimize(classify_region(row, 0.0));
        }
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows.size()));
}
BENCHMARK(BM_ClassifyRegion);

static void BM_ScoreNumericMra(benchmark::State& state) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(0.5, 500.0);
    std::vector<std::pair<double, double>> pairs(4096);
    for (auto& [pred, gold] : pairs) {
        pred = dist(rng);
        gold = dist(rng);
    }
    for (auto _ : state) {
        for (const auto& [pred, gold] : pairs) {
            benchmark::DoNotOptimize(score_numeric_mra(pred, gold));
        }
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pairs.size()));
}
BENCHMARK(BM_ScoreNumericMra);

BENCHMARK_MAIN();

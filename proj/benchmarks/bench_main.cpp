#include <benchmark/benchmark.h>

#include <vector>

#include "sgfb/dictionary.hpp"
#include "sgfb/eval.hpp"
#include "sgfb/filterbank.hpp"
#include "sgfb/linalg.hpp"
#include "sgfb/rng.hpp"
#include "sgfb/solver.hpp"
#include "sgfb/synthetic.hpp"

namespace {

using namespace sgfb;

Matrix random_spd(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Matrix a(n, n);
    for (double& v : a.data()) v = rng.normal();
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = i == j ? 0.5 : 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += a(i, k) * a(j, k);
            s(i, j) = acc;
        }
    }
    return s;
}

void BM_SymEig(benchmark::State& state) {
    const Matrix s = random_spd(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sym_eig(s));
    }
}
BENCHMARK(BM_SymEig)->Arg(8)->Arg(32)->Arg(118);

void BM_ZeroPhase(benchmark::State& state) {
    const IirFilter f = design_bandpass({8.0, 12.0, 5}, 100.0);
    Rng rng(2);
    Vector x(static_cast<std::size_t>(state.range(0)));
    for (double& v : x) v = rng.normal();
    for (auto _ : state) {
        benchmark::DoNotOptimize(apply_zero_phase(f, x));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ZeroPhase)->Arg(350)->Arg(5000);

void BM_FilterBankTrial(benchmark::State& state) {
    SynthConfig sc;
    sc.trials_per_class = 2;
    const Dataset ds = generate_synthetic(sc);
    const FilterBank bank = make_filter_bank(default_bands(), ds.fs_hz);
    for (auto _ : state) {
        benchmark::DoNotOptimize(split_subbands(ds.trials[0], bank));
    }
}
BENCHMARK(BM_FilterBankTrial);

// One test-sample solve against a 90-column, 9-band dictionary, as in
// 10-fold CV on the default synthetic set.
void BM_SgfbSolve(benchmark::State& state) {
    SynthConfig sc;
    const Dataset ds = generate_synthetic(sc);
    PipelineConfig cfg;
    const std::vector<PreparedTrial> trials = prepare_trials(ds, cfg);
    std::vector<std::size_t> train;
    for (std::size_t i = 10; i < trials.size(); ++i) train.push_back(i);
    const FoldModel model = train_fold(trials, train, cfg);
    SgfbHyperparams hp = cfg.solver;
    hp.lambda = static_cast<double>(state.range(0)) / 10.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(predict(model, trials[0], cfg, hp));
    }
}
BENCHMARK(BM_SgfbSolve)->Arg(1)->Arg(5)->Arg(9)->Unit(benchmark::kMicrosecond);

void BM_TrainFold(benchmark::State& state) {
    SynthConfig sc;
    const Dataset ds = generate_synthetic(sc);
    PipelineConfig cfg;
    const std::vector<PreparedTrial> trials = prepare_trials(ds, cfg);
    std::vector<std::size_t> train;
    for (std::size_t i = 10; i < trials.size(); ++i) train.push_back(i);
    for (auto _ : state) {
        benchmark::DoNotOptimize(train_fold(trials, train, cfg));
    }
}
BENCHMARK(BM_TrainFold)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

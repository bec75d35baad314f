#include <benchmark/benchmark.h>

#include <random>

#include "stamp/losses.hpp"
#include "stamp/metrics.hpp"
#include "stamp/mil_model.hpp"
#include "stamp/model.hpp"
#include "stamp/optimizer.hpp"
#include "stamp/synth.hpp"

using namespace stamp;

namespace {

ModelConfig bench_cfg(AttentionMode mode) {
    ModelConfig cfg;
    cfg.input_dim = 64;
    cfg.hidden_dim = 64;
    cfg.attn_dim = 64;
    cfg.heads = 8;
    cfg.patterns = 3;
    cfg.attention_mode = mode;
    return cfg;
}

MatF bench_bag(int n, int d) {
    Rng rng(1);
    return randn<float>(n, d, 1.0, rng);
}

} // namespace

static void BM_ForwardExact(benchmark::State& state) {
    const auto cfg = bench_cfg(AttentionMode::exact);
    auto params = init_model<float>(cfg, 0);
    const auto X = bench_bag(static_cast<int>(state.range(0)), cfg.input_dim);
    for (auto _ : state) {
        auto out = forward(X, params, cfg);
        benchmark::DoNotOptimize(out.pred.probs);
    }
}
BENCHMARK(BM_ForwardExact)->Arg(32)->Arg(128)->Arg(512);

static void BM_ForwardNystrom(benchmark::State& state) {
    auto cfg = bench_cfg(AttentionMode::nystrom);
    cfg.nystrom_landmarks = 64;
    auto params = init_model<float>(cfg, 0);
    const auto X = bench_bag(static_cast<int>(state.range(0)), cfg.input_dim);
    for (auto _ : state) {
        auto out = forward(X, params, cfg);
        benchmark::DoNotOptimize(out.pred.probs);
    }
}
BENCHMARK(BM_ForwardNystrom)->Arg(128)->Arg(512)->Arg(2048);

static void BM_TrainStep(benchmark::State& state) {
    const auto cfg = bench_cfg(AttentionMode::exact);
    StampModel model(cfg, 0);
    OptimizerOpts opts;
    RangerOptimizer<float> optimizer(model.tensors(), opts);
    const auto X = bench_bag(static_cast<int>(state.range(0)), cfg.input_dim);
    for (auto _ : state) {
        Tape<float> tape;
        const auto lg = model.build_loss(tape, X, 1, 0.9f, 1.0f);
        tape.backward(lg.total);
        std::vector<const MatF*> grads;
        for (const auto& [name, node] : lg.param_nodes) grads.push_back(&tape.grad(node));
        optimizer.step(1e-4, grads);
        benchmark::DoNotOptimize(grads);
    }
}
BENCHMARK(BM_TrainStep)->Arg(90);

static void BM_Auc(benchmark::State& state) {
    Rng rng(2);
    const auto n = static_cast<size_t>(state.range(0));
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    std::uniform_real_distribution<double> u(0, 1);
    for (size_t i = 0; i < n; ++i) {
        scores[i] = u(rng);
        labels[i] = i % 2;
    }
    for (auto _ : state) benchmark::DoNotOptimize(auc(scores, labels));
}
BENCHMARK(BM_Auc)->Arg(100)->Arg(10000);

static void BM_SimilarityLoss(benchmark::State& state) {
    Rng rng(3);
    const auto H = randn<double>(6, 512, 1.0, rng);
    for (auto _ : state) benchmark::DoNotOptimize(similarity_loss(H));
}
BENCHMARK(BM_SimilarityLoss);

static void BM_SynthDataset(benchmark::State& state) {
    SynthConfig cfg;
    cfg.train_bags_per_class = 10;
    cfg.val_bags_per_class = 2;
    cfg.test_bags_per_class = 2;
    for (auto _ : state) {
        auto ds = generate_synthetic_bags(cfg);
        benchmark::DoNotOptimize(ds.train.size());
    }
}
BENCHMARK(BM_SynthDataset);

BENCHMARK_MAIN();

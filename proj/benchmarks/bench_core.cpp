#include <benchmark/benchmark.h>

#include "scen/adam.hpp"
#include "scen/dataset.hpp"
#include "scen/evaluate.hpp"
#include "scen/model.hpp"
#include "scen/train.hpp"

namespace {

scen::Tensor random_matrix(std::size_t rows, std::size_t cols, scen::Rng& rng) {
    scen::Tensor t({rows, cols});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
    return t;
}

void bm_matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    scen::Rng rng(1);
    auto a = scen::constant(random_matrix(n, n, rng));
    auto b = scen::constant(random_matrix(n, n, rng));
    for (auto _ : state) {
        auto c = scen::matmul(a, b);
        benchmark::DoNotOptimize(c->value.data());
    }
    state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(bm_matmul)->Arg(64)->Arg(128)->Arg(256);

void bm_encode_forward_backward(benchmark::State& state) {
    const auto rows = static_cast<std::size_t>(state.range(0));
    scen::Rng rng(2);
    scen::ScenDims dims;
    dims.feature_dim = 32;
    dims.embed_dim = 32;
    dims.hidden = 64;
    dims.proto_dim = 32;
    dims.n_states = 8;
    dims.n_objects = 10;
    scen::ScenParams params = scen::init_scen(dims, rng);
    scen::Adam opt(params.parameters(), {});
    auto x = scen::constant(random_matrix(rows, 32, rng));
    std::vector<scen::CompositionLabel> labels(rows);
    for (auto& lab : labels) {
        lab.state = static_cast<int>(rng.uniform_index(8));
        lab.object = static_cast<int>(rng.uniform_index(10));
    }
    for (auto _ : state) {
        opt.zero_grad();
        scen::Prototypes protos = scen::encode_rows(params, x);
        scen::backward(scen::classification_loss(params, protos.h_s, protos.h_o, labels));
        benchmark::DoNotOptimize(params.fc.layers[0].weight->grad.data());
    }
    state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(bm_encode_forward_backward)->Arg(128)->Arg(512);

void bm_sample_batch(benchmark::State& state) {
    scen::DatasetBundle bundle = scen::generate_synthetic({});
    scen::TrainSampler sampler(bundle);
    scen::Rng rng(3);
    for (auto _ : state) {
        scen::TrainBatch batch = sampler.sample(128, 10, rng);
        benchmark::DoNotOptimize(batch.negatives.data());
    }
    state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(bm_sample_batch);

void bm_bias_sweep(benchmark::State& state) {
    const auto images = static_cast<std::size_t>(state.range(0));
    scen::Rng rng(4);
    scen::ScoreMatrix sm;
    for (int s = 0; s < 8; ++s)
        for (int o = 0; o < 10; ++o) {
            sm.candidate_pairs.push_back({s, o});
            sm.is_unseen_pair.push_back(o < 3 ? 1 : 0);
        }
    sm.scores = random_matrix(images, sm.candidate_pairs.size(), rng);
    for (std::size_t i = 0; i < images; ++i) {
        sm.truth.push_back(sm.candidate_pairs[rng.uniform_index(sm.candidate_pairs.size())]);
    }
    for (auto _ : state) {
        scen::EvalReport report = scen::bias_sweep(sm);
        benchmark::DoNotOptimize(report.auc);
    }
    state.SetItemsProcessed(state.iterations() * images);
}
BENCHMARK(bm_bias_sweep)->Arg(500)->Arg(2000);

void bm_train_epoch(benchmark::State& state) {
    scen::DatasetBundle bundle = scen::generate_synthetic(
        {.n_states = 6, .n_objects = 6, .seen_fraction = 0.8, .samples_per_pair = 20,
         .feature_dim = 32, .noise_sigma = 0.1, .seed = 5});
    scen::TrainConfig cfg;
    cfg.dims.embed_dim = 32;
    cfg.dims.hidden = 64;
    cfg.dims.proto_dim = 32;
    cfg.adam.lr = 5e-4;
    cfg.weights.beta = 0.1;
    cfg.epochs = 1;
    cfg.variant = scen::Variant::full;
    for (auto _ : state) {
        scen::TrainResult result = scen::train(cfg, bundle);
        benchmark::DoNotOptimize(result.best_val_auc);
    }
}
BENCHMARK(bm_train_epoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
